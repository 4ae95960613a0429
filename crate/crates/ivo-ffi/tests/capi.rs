//! Exercises the C ABI exactly as a foreign caller would: through the
//! exported symbols, raw pointers and status codes.

use std::ffi::CString;
use std::ptr;

use ivo_ffi::*;

#[test]
fn cone_value_matches_core() {
    let mut f = 0.0;
    let status = unsafe { ivo_cone_value(2.0, 0.0, -1.0, 0.0, 1.0, &mut f) };
    assert_eq!(status, IvoStatus::Ok);
    assert_eq!(f, 1.0);

    let expected =
        ivo::cone_value(ivo::Vec2::new(3.0, 4.0), ivo::Vec2::new(-1.0, 0.5), 0.7).unwrap();
    let status = unsafe { ivo_cone_value(3.0, 4.0, -1.0, 0.5, 0.7, &mut f) };
    assert_eq!(status, IvoStatus::Ok);
    assert_eq!(f, expected);
}

#[test]
fn cone_value_error_paths() {
    let mut f = 0.0;
    assert_eq!(
        unsafe { ivo_cone_value(2.0, 0.0, 0.0, 0.0, 1.0, &mut f) },
        IvoStatus::DegenerateVelocity
    );
    assert_eq!(
        unsafe { ivo_cone_value(2.0, 0.0, -1.0, 0.0, -1.0, &mut f) },
        IvoStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { ivo_cone_value(2.0, 0.0, -1.0, 0.0, 1.0, ptr::null_mut()) },
        IvoStatus::NullPointer
    );
    assert_eq!(
        unsafe { ivo_cone_value(f64::NAN, 0.0, -1.0, 0.0, 1.0, &mut f) },
        IvoStatus::InvalidArgument
    );
}

#[test]
fn estimator_and_predicate_roundtrip() {
    let (mut vx, mut vy) = (0.0, 0.0);
    let status =
        unsafe { ivo_estimate_relative_velocity(2.0, 2.0, 0.0, 1.5, 1.8, 0.1, &mut vx, &mut vy) };
    assert_eq!(status, IvoStatus::Ok);
    assert!((vx - -5.0).abs() < 1e-12);
    assert!((vy - -2.0).abs() < 1e-12);

    assert_eq!(
        unsafe { ivo_estimate_relative_velocity(0.0, 0.0, 0.0, 1.0, 0.0, 1e-9, &mut vx, &mut vy) },
        IvoStatus::DegenerateInterval
    );

    let mut hit = false;
    assert_eq!(
        unsafe { ivo_on_collision_course(2.0, 0.0, -1.0, 0.0, 1.0, &mut hit) },
        IvoStatus::Ok
    );
    assert!(hit);
    assert_eq!(
        unsafe { ivo_on_collision_course(2.0, 0.0, 1.0, 0.0, 1.0, &mut hit) },
        IvoStatus::Ok
    );
    assert!(!hit);
}

#[test]
fn coefficients_match_hand_values() {
    let mut c = IvoConeCoefficients {
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
        c4: 0.0,
        c5: 0.0,
        c6: 0.0,
    };
    let status = unsafe { ivo_cone_coefficients(2.0, 0.0, 0.0, 0.0, 1.0, &mut c) };
    assert_eq!(status, IvoStatus::Ok);
    assert_eq!(
        (c.c1, c.c2, c.c3, c.c4, c.c5, c.c6),
        (1.0, -3.0, 0.0, 0.0, 0.0, 0.0)
    );
}

#[test]
fn min_separation_head_on() {
    let (mut t, mut d) = (0.0, 0.0);
    let status = unsafe { ivo_min_separation(2.0, 0.0, -1.0, 0.0, 10.0, 1e-3, &mut t, &mut d) };
    assert_eq!(status, IvoStatus::Ok);
    assert!((t - 2.0).abs() <= 1e-3);
    assert!(d <= 1e-3);
}

#[test]
fn planner_lifecycle() {
    let mut params = IvoPlannerParams {
        lambda: 0.0,
        v_max: 0.0,
        u_max: 0.0,
        n_radial: 0,
        n_angular: 0,
        approaching_filter: false,
        infeasible_penalty: 0.0,
        grid_rotation: 0.0,
        radius_margin: 0.0,
    };
    assert_eq!(
        unsafe { ivo_planner_params_default(&mut params) },
        IvoStatus::Ok
    );
    params.v_max = 2.0;
    params.u_max = 5.0;
    params.lambda = 1.0;

    let planner = unsafe { ivo_planner_new(&params) };
    assert!(!planner.is_null());

    // No obstacles: the clamped unconstrained optimum.
    let mut d = IvoControlDecision {
        ux: 0.0,
        uy: 0.0,
        feasible: false,
        cost: 0.0,
        worst_violation: 0.0,
    };
    let status = unsafe { ivo_planner_plan(planner, 0.0, 0.0, 10.0, 0.0, 0.5, &mut d) };
    assert_eq!(status, IvoStatus::Ok);
    assert_eq!((d.ux, d.uy), (1.0, 0.0));
    assert!(d.feasible);

    // Head-on obstacle forces a lateral component.
    let status = unsafe { ivo_planner_add_track(planner, 42, 4.1, 0.0, 0.0, 4.0, 0.0, 0.1, 0.5) };
    assert_eq!(status, IvoStatus::Ok);
    let status = unsafe { ivo_planner_plan(planner, 0.0, 0.0, 10.0, 0.0, 0.5, &mut d) };
    assert_eq!(status, IvoStatus::Ok);
    assert!(d.feasible);
    assert!(d.uy != 0.0);

    unsafe { ivo_planner_clear_tracks(planner) };
    let status = unsafe { ivo_planner_plan(planner, 0.0, 0.0, 10.0, 0.0, 0.5, &mut d) };
    assert_eq!(status, IvoStatus::Ok);
    assert_eq!((d.ux, d.uy), (1.0, 0.0));

    unsafe { ivo_planner_free(planner) };
}

#[test]
fn planner_rejects_bad_params_and_null() {
    let mut params = IvoPlannerParams {
        lambda: 0.1,
        v_max: -1.0,
        u_max: 1.0,
        n_radial: 8,
        n_angular: 32,
        approaching_filter: true,
        infeasible_penalty: 1e3,
        grid_rotation: 0.0,
        radius_margin: 0.0,
    };
    assert!(unsafe { ivo_planner_new(&params) }.is_null());
    params.v_max = 1.0;
    params.n_angular = 2;
    assert!(unsafe { ivo_planner_new(&params) }.is_null());
    assert!(unsafe { ivo_planner_new(ptr::null()) }.is_null());

    let mut d = IvoControlDecision {
        ux: 0.0,
        uy: 0.0,
        feasible: false,
        cost: 0.0,
        worst_violation: 0.0,
    };
    assert_eq!(
        unsafe { ivo_planner_plan(ptr::null(), 0.0, 0.0, 1.0, 0.0, 0.5, &mut d) },
        IvoStatus::NullPointer
    );
}

#[test]
fn scenario_preset_runs_and_matches_core() {
    let name = CString::new("antipodal6").unwrap();
    let mut scenario: *mut IvoScenario = ptr::null_mut();
    assert_eq!(
        unsafe { ivo_scenario_preset(name.as_ptr(), &mut scenario) },
        IvoStatus::Ok
    );

    let mut agents = 0u32;
    assert_eq!(
        unsafe { ivo_scenario_agent_count(scenario, &mut agents) },
        IvoStatus::Ok
    );
    assert_eq!(agents, 6);

    let mut trace: *mut IvoTrace = ptr::null_mut();
    assert_eq!(
        unsafe { ivo_scenario_run(scenario, &mut trace) },
        IvoStatus::Ok
    );

    let mut metrics = IvoRunMetrics {
        all_arrived: false,
        collided: true,
        steps: 0,
        min_separation: 0.0,
        min_clearance: 0.0,
        mean_plan_time_us: 0.0,
        max_plan_time_us: 0.0,
    };
    assert_eq!(
        unsafe { ivo_trace_metrics(trace, &mut metrics) },
        IvoStatus::Ok
    );
    assert!(metrics.all_arrived);
    assert!(!metrics.collided);

    // Bit-identical to running the same preset through the Rust API.
    let reference = ivo::sim::run(&ivo::scenario::presets::antipodal6()).unwrap();
    assert_eq!(metrics.steps as usize, reference.len());
    assert_eq!(
        metrics.min_separation.to_bits(),
        reference.metrics.min_separation.to_bits()
    );
    assert_eq!(
        metrics.min_clearance.to_bits(),
        reference.metrics.min_clearance.to_bits()
    );

    let mut count = 0u32;
    assert_eq!(
        unsafe { ivo_trace_state_count(trace, &mut count) },
        IvoStatus::Ok
    );
    assert_eq!(count as usize, reference.len() + 1);

    let mut state = IvoAgentState {
        x: 0.0,
        y: 0.0,
        vx: 0.0,
        vy: 0.0,
        ux: 0.0,
        uy: 0.0,
        feasible: false,
    };
    assert_eq!(
        unsafe { ivo_trace_agent_state(trace, 0, 0, &mut state) },
        IvoStatus::Ok
    );
    assert_eq!(state.x, 10.0);
    assert_eq!(
        unsafe { ivo_trace_agent_state(trace, count, 0, &mut state) },
        IvoStatus::OutOfRange
    );
    assert_eq!(
        unsafe { ivo_trace_agent_state(trace, 0, agents, &mut state) },
        IvoStatus::OutOfRange
    );

    unsafe {
        ivo_trace_free(trace);
        ivo_scenario_free(scenario);
    }
}

#[test]
fn scenario_from_toml_validates() {
    let good = CString::new(ivo::scenario::emit_scenario(
        &ivo::scenario::presets::single5(),
    ))
    .unwrap();
    let mut scenario: *mut IvoScenario = ptr::null_mut();
    assert_eq!(
        unsafe { ivo_scenario_from_toml(good.as_ptr(), &mut scenario) },
        IvoStatus::Ok
    );
    unsafe { ivo_scenario_free(scenario) };

    let garbage = CString::new("not toml at all [").unwrap();
    assert_eq!(
        unsafe { ivo_scenario_from_toml(garbage.as_ptr(), &mut scenario) },
        IvoStatus::ParseError
    );

    let invalid = CString::new(
        ivo::scenario::emit_scenario(&ivo::scenario::presets::single5())
            .replace("dt = 0.1", "dt = 0.0"),
    )
    .unwrap();
    assert_eq!(
        unsafe { ivo_scenario_from_toml(invalid.as_ptr(), &mut scenario) },
        IvoStatus::ValidationError
    );

    let unknown = CString::new("nonexistent").unwrap();
    assert_eq!(
        unsafe { ivo_scenario_preset(unknown.as_ptr(), &mut scenario) },
        IvoStatus::ParseError
    );
}

#[test]
fn status_messages_are_static_strings() {
    for status in [
        IvoStatus::Ok,
        IvoStatus::NullPointer,
        IvoStatus::InvalidArgument,
        IvoStatus::DegenerateVelocity,
        IvoStatus::DegenerateInterval,
        IvoStatus::ParseError,
        IvoStatus::ValidationError,
        IvoStatus::OutOfRange,
    ] {
        let ptr = ivo_status_message(status);
        assert!(!ptr.is_null());
        let text = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
        assert!(!text.is_empty());
    }
}

#[test]
fn generated_header_is_current() {
    let header = include_str!("../include/ivo.h");
    for symbol in [
        "ivo_cone_value",
        "ivo_on_collision_course",
        "ivo_estimate_relative_velocity",
        "ivo_cone_coefficients",
        "ivo_min_separation",
        "ivo_planner_new",
        "ivo_planner_plan",
        "ivo_scenario_from_toml",
        "ivo_scenario_run",
        "ivo_trace_metrics",
        "IvoStatus",
        "IvoPlannerParams",
    ] {
        assert!(header.contains(symbol), "header is missing {symbol}");
    }
}
