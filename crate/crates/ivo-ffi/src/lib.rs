//! C ABI for the ivo collision avoidance toolkit.
//!
//! Everything stateful lives behind opaque handles ([`IvoPlanner`],
//! [`IvoScenario`], [`IvoTrace`]) created and destroyed by paired
//! `*_new`/`*_free` calls. Every fallible function returns an [`IvoStatus`];
//! results come back through out-pointers. The generated header lives at
//! `include/ivo.h`.

use std::ffi::{c_char, CStr};

use ivo::cone::{self, EgoObservation, ObstacleId, ObstacleTrack};
use ivo::geometry::Vec2;
use ivo::planner::{plan_control, PlannerParams};
use ivo::scenario::{parse_scenario_str, presets};
use ivo::sim::{self, ScenarioConfig, SimulationTrace};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvoStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was non-finite, out of range, or not valid UTF-8.
    InvalidArgument = 2,
    /// Relative speed below the degenerate threshold; the cone value is
    /// undefined there.
    DegenerateVelocity = 3,
    /// Observation spacing below the minimum interval.
    DegenerateInterval = 4,
    /// Scenario text could not be parsed, or no such preset exists.
    ParseError = 5,
    /// Scenario violated an invariant.
    ValidationError = 6,
    /// Index out of bounds.
    OutOfRange = 7,
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ivo_status_message(status: IvoStatus) -> *const c_char {
    let message: &'static CStr = match status {
        IvoStatus::Ok => c"ok",
        IvoStatus::NullPointer => c"null pointer argument",
        IvoStatus::InvalidArgument => c"invalid argument",
        IvoStatus::DegenerateVelocity => c"degenerate relative velocity",
        IvoStatus::DegenerateInterval => c"degenerate observation interval",
        IvoStatus::ParseError => c"parse error or unknown preset",
        IvoStatus::ValidationError => c"scenario validation error",
        IvoStatus::OutOfRange => c"index out of range",
    };
    message.as_ptr()
}

fn cone_status(e: &cone::ConeError) -> IvoStatus {
    match e {
        cone::ConeError::DegenerateVelocity { .. } => IvoStatus::DegenerateVelocity,
        cone::ConeError::DegenerateInterval { .. } => IvoStatus::DegenerateInterval,
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> IvoStatus {
    if out.is_null() {
        return IvoStatus::NullPointer;
    }
    unsafe { out.write(value) };
    IvoStatus::Ok
}

/// Collision cone value `f = (r.v)^2/|v|^2 - |r|^2 + R^2` for an obstacle at
/// ego position `(rx, ry)` with relative velocity `(vx, vy)`. `f >= 0` means
/// the relative-velocity ray's supporting line passes within the combined
/// radius.
///
/// # Safety
/// `out_f` must be a valid pointer to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn ivo_cone_value(
    rx: f64,
    ry: f64,
    vx: f64,
    vy: f64,
    combined_radius: f64,
    out_f: *mut f64,
) -> IvoStatus {
    if !(combined_radius > 0.0 && combined_radius.is_finite()) {
        return IvoStatus::InvalidArgument;
    }
    let (r, v) = (Vec2::new(rx, ry), Vec2::new(vx, vy));
    if !(r.is_finite() && v.is_finite()) {
        return IvoStatus::InvalidArgument;
    }
    match cone::cone_value(r, v, combined_radius) {
        Ok(f) => unsafe { write_out(out_f, f) },
        Err(e) => cone_status(&e),
    }
}

/// True iff the obstacle will come within the combined radius at some future
/// time, assuming held velocities. Degenerate relative velocity falls back
/// to the static overlap test.
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one `bool`.
#[no_mangle]
pub unsafe extern "C" fn ivo_on_collision_course(
    rx: f64,
    ry: f64,
    vx: f64,
    vy: f64,
    combined_radius: f64,
    out: *mut bool,
) -> IvoStatus {
    if !(combined_radius > 0.0 && combined_radius.is_finite()) {
        return IvoStatus::InvalidArgument;
    }
    let (r, v) = (Vec2::new(rx, ry), Vec2::new(vx, vy));
    if !(r.is_finite() && v.is_finite()) {
        return IvoStatus::InvalidArgument;
    }
    unsafe { write_out(out, cone::on_collision_course(r, v, combined_radius)) }
}

/// Finite-difference relative velocity from two consecutive ego observations.
///
/// # Safety
/// `out_vx` and `out_vy` must be valid pointers to writable `double`s.
#[no_mangle]
pub unsafe extern "C" fn ivo_estimate_relative_velocity(
    prev_x: f64,
    prev_y: f64,
    prev_t: f64,
    curr_x: f64,
    curr_y: f64,
    curr_t: f64,
    out_vx: *mut f64,
    out_vy: *mut f64,
) -> IvoStatus {
    if ![prev_x, prev_y, prev_t, curr_x, curr_y, curr_t]
        .iter()
        .all(|v| v.is_finite())
    {
        return IvoStatus::InvalidArgument;
    }
    let track = ObstacleTrack {
        id: ObstacleId(0),
        prev: EgoObservation::new(Vec2::new(prev_x, prev_y), prev_t),
        curr: EgoObservation::new(Vec2::new(curr_x, curr_y), curr_t),
        radius: 1.0,
    };
    match cone::estimate_relative_velocity(&track) {
        Ok(v) => {
            if out_vx.is_null() || out_vy.is_null() {
                return IvoStatus::NullPointer;
            }
            unsafe {
                out_vx.write(v.x);
                out_vy.write(v.y);
            }
            IvoStatus::Ok
        }
        Err(e) => cone_status(&e),
    }
}

/// Coefficients of the homogenized cone constraint as a quadratic in the
/// agent velocity: `F(v) = c1*vx^2 + c2*vy^2 + c3*vx*vy + c4*vx + c5*vy + c6`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvoConeCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

/// Quadratic-in-controls form of the cone constraint for an obstacle at ego
/// position `(rx, ry)` moving with velocity `(vox, voy)` in the ego axes.
/// `F(v_agent)` equals the cone value times `|v_obstacle - v_agent|^2`.
///
/// # Safety
/// `out` must be a valid pointer to a writable [`IvoConeCoefficients`].
#[no_mangle]
pub unsafe extern "C" fn ivo_cone_coefficients(
    rx: f64,
    ry: f64,
    vox: f64,
    voy: f64,
    combined_radius: f64,
    out: *mut IvoConeCoefficients,
) -> IvoStatus {
    if !(combined_radius > 0.0 && combined_radius.is_finite()) {
        return IvoStatus::InvalidArgument;
    }
    let (r, vo) = (Vec2::new(rx, ry), Vec2::new(vox, voy));
    if !(r.is_finite() && vo.is_finite()) {
        return IvoStatus::InvalidArgument;
    }
    let c = cone::cone_coefficients(r, vo, combined_radius);
    unsafe {
        write_out(
            out,
            IvoConeCoefficients {
                c1: c.c1,
                c2: c.c2,
                c3: c.c3,
                c4: c.c4,
                c5: c.c5,
                c6: c.c6,
            },
        )
    }
}

/// Brute-force closest approach of `p(t) = r + v t` to the origin over
/// `[0, horizon]` sampled at `dt`.
///
/// # Safety
/// `out_t_star` and `out_d_star` must be valid pointers to writable `double`s.
#[no_mangle]
pub unsafe extern "C" fn ivo_min_separation(
    rx: f64,
    ry: f64,
    vx: f64,
    vy: f64,
    horizon: f64,
    dt: f64,
    out_t_star: *mut f64,
    out_d_star: *mut f64,
) -> IvoStatus {
    let (r, v) = (Vec2::new(rx, ry), Vec2::new(vx, vy));
    if !(r.is_finite()
        && v.is_finite()
        && horizon > 0.0
        && dt > 0.0
        && horizon.is_finite()
        && dt.is_finite())
    {
        return IvoStatus::InvalidArgument;
    }
    let (t_star, d_star) = cone::min_separation(r, v, horizon, dt);
    if out_t_star.is_null() || out_d_star.is_null() {
        return IvoStatus::NullPointer;
    }
    unsafe {
        out_t_star.write(t_star);
        out_d_star.write(d_star);
    }
    IvoStatus::Ok
}

/// Planner tuning knobs; see `ivo_planner_params_default` for the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvoPlannerParams {
    pub lambda: f64,
    pub v_max: f64,
    pub u_max: f64,
    pub n_radial: u32,
    pub n_angular: u32,
    pub approaching_filter: bool,
    pub infeasible_penalty: f64,
    pub grid_rotation: f64,
    pub radius_margin: f64,
}

impl From<IvoPlannerParams> for PlannerParams {
    fn from(p: IvoPlannerParams) -> Self {
        PlannerParams {
            lambda: p.lambda,
            v_max: p.v_max,
            u_max: p.u_max,
            n_radial: p.n_radial,
            n_angular: p.n_angular,
            approaching_filter: p.approaching_filter,
            infeasible_penalty: p.infeasible_penalty,
            grid_rotation: p.grid_rotation,
            radius_margin: p.radius_margin,
        }
    }
}

/// Outcome of one planning call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvoControlDecision {
    pub ux: f64,
    pub uy: f64,
    pub feasible: bool,
    pub cost: f64,
    pub worst_violation: f64,
}

/// Opaque per-agent planner: parameters plus the current obstacle tracks.
pub struct IvoPlanner {
    params: PlannerParams,
    tracks: Vec<ObstacleTrack>,
}

/// Writes the default planner parameters.
///
/// # Safety
/// `out` must be a valid pointer to a writable [`IvoPlannerParams`].
#[no_mangle]
pub unsafe extern "C" fn ivo_planner_params_default(out: *mut IvoPlannerParams) -> IvoStatus {
    let d = PlannerParams::default();
    unsafe {
        write_out(
            out,
            IvoPlannerParams {
                lambda: d.lambda,
                v_max: d.v_max,
                u_max: d.u_max,
                n_radial: d.n_radial,
                n_angular: d.n_angular,
                approaching_filter: d.approaching_filter,
                infeasible_penalty: d.infeasible_penalty,
                grid_rotation: d.grid_rotation,
                radius_margin: d.radius_margin,
            },
        )
    }
}

/// Creates a planner. Returns null when `params` is null or invalid.
/// Free with `ivo_planner_free`.
///
/// # Safety
/// `params`, when non-null, must point to a readable [`IvoPlannerParams`].
#[no_mangle]
pub unsafe extern "C" fn ivo_planner_new(params: *const IvoPlannerParams) -> *mut IvoPlanner {
    if params.is_null() {
        return std::ptr::null_mut();
    }
    let params = PlannerParams::from(unsafe { params.read() });
    if params.validate().is_err() {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(IvoPlanner {
        params,
        tracks: Vec::new(),
    }))
}

/// Drops all tracks, keeping the parameters.
///
/// # Safety
/// `planner` must be a live pointer from `ivo_planner_new`, or null.
#[no_mangle]
pub unsafe extern "C" fn ivo_planner_clear_tracks(planner: *mut IvoPlanner) {
    if let Some(p) = unsafe { planner.as_mut() } {
        p.tracks.clear();
    }
}

/// Adds one obstacle track: two consecutive ego observations plus the
/// obstacle radius.
///
/// # Safety
/// `planner` must be a live pointer from `ivo_planner_new`.
#[no_mangle]
pub unsafe extern "C" fn ivo_planner_add_track(
    planner: *mut IvoPlanner,
    id: u64,
    prev_x: f64,
    prev_y: f64,
    prev_t: f64,
    curr_x: f64,
    curr_y: f64,
    curr_t: f64,
    radius: f64,
) -> IvoStatus {
    let Some(p) = (unsafe { planner.as_mut() }) else {
        return IvoStatus::NullPointer;
    };
    if ![prev_x, prev_y, prev_t, curr_x, curr_y, curr_t]
        .iter()
        .all(|v| v.is_finite())
        || !(radius > 0.0 && radius.is_finite())
    {
        return IvoStatus::InvalidArgument;
    }
    if curr_t - prev_t < cone::MIN_OBSERVATION_INTERVAL {
        return IvoStatus::DegenerateInterval;
    }
    p.tracks.push(ObstacleTrack {
        id: ObstacleId(id),
        prev: EgoObservation::new(Vec2::new(prev_x, prev_y), prev_t),
        curr: EgoObservation::new(Vec2::new(curr_x, curr_y), curr_t),
        radius,
    });
    IvoStatus::Ok
}

/// Solves the constrained control problem against the stored tracks.
/// `(vrx, vry)` is the agent's commanded velocity, `(goal_x, goal_y)` the
/// goal in the agent frame.
///
/// # Safety
/// `planner` must be a live pointer from `ivo_planner_new`; `out` must be a
/// valid pointer to a writable [`IvoControlDecision`].
#[no_mangle]
pub unsafe extern "C" fn ivo_planner_plan(
    planner: *const IvoPlanner,
    vrx: f64,
    vry: f64,
    goal_x: f64,
    goal_y: f64,
    agent_radius: f64,
    out: *mut IvoControlDecision,
) -> IvoStatus {
    let Some(p) = (unsafe { planner.as_ref() }) else {
        return IvoStatus::NullPointer;
    };
    let (v_r, goal) = (Vec2::new(vrx, vry), Vec2::new(goal_x, goal_y));
    if !(v_r.is_finite() && goal.is_finite() && agent_radius > 0.0 && agent_radius.is_finite()) {
        return IvoStatus::InvalidArgument;
    }
    let d = plan_control(v_r, goal, agent_radius, &p.tracks, &p.params);
    unsafe {
        write_out(
            out,
            IvoControlDecision {
                ux: d.u.x,
                uy: d.u.y,
                feasible: d.feasible,
                cost: d.cost,
                worst_violation: d.worst_violation,
            },
        )
    }
}

/// # Safety
/// `planner` must be a pointer from `ivo_planner_new` not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ivo_planner_free(planner: *mut IvoPlanner) {
    if !planner.is_null() {
        drop(unsafe { Box::from_raw(planner) });
    }
}

/// Opaque validated scenario.
pub struct IvoScenario(ScenarioConfig);

/// Opaque simulation trace.
pub struct IvoTrace {
    trace: SimulationTrace,
    agent_count: u32,
}

/// Parses and validates a scenario from TOML text.
/// Free with `ivo_scenario_free`.
///
/// # Safety
/// `toml_text` must be a valid nul-terminated C string; `out` must be a
/// valid pointer to a writable `IvoScenario*`.
#[no_mangle]
pub unsafe extern "C" fn ivo_scenario_from_toml(
    toml_text: *const c_char,
    out: *mut *mut IvoScenario,
) -> IvoStatus {
    if toml_text.is_null() || out.is_null() {
        return IvoStatus::NullPointer;
    }
    let Ok(text) = unsafe { CStr::from_ptr(toml_text) }.to_str() else {
        return IvoStatus::InvalidArgument;
    };
    match parse_scenario_str(text, "ffi") {
        Ok(config) => {
            unsafe { out.write(Box::into_raw(Box::new(IvoScenario(config)))) };
            IvoStatus::Ok
        }
        Err(ivo::scenario::ScenarioError::Invalid(_)) => IvoStatus::ValidationError,
        Err(_) => IvoStatus::ParseError,
    }
}

/// Loads a shipped preset by name (`single5`, `antipodal6`, `circle10`,
/// `circle50`). Free with `ivo_scenario_free`.
///
/// # Safety
/// `name` must be a valid nul-terminated C string; `out` must be a valid
/// pointer to a writable `IvoScenario*`.
#[no_mangle]
pub unsafe extern "C" fn ivo_scenario_preset(
    name: *const c_char,
    out: *mut *mut IvoScenario,
) -> IvoStatus {
    if name.is_null() || out.is_null() {
        return IvoStatus::NullPointer;
    }
    let Ok(name) = unsafe { CStr::from_ptr(name) }.to_str() else {
        return IvoStatus::InvalidArgument;
    };
    match presets::scenario(name) {
        Some(config) => {
            unsafe { out.write(Box::into_raw(Box::new(IvoScenario(config)))) };
            IvoStatus::Ok
        }
        None => IvoStatus::ParseError,
    }
}

/// Number of agents in the scenario.
///
/// # Safety
/// `scenario` must be a live pointer from a scenario constructor; `out` must
/// be a valid pointer to a writable `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn ivo_scenario_agent_count(
    scenario: *const IvoScenario,
    out: *mut u32,
) -> IvoStatus {
    let Some(s) = (unsafe { scenario.as_ref() }) else {
        return IvoStatus::NullPointer;
    };
    unsafe { write_out(out, s.0.agents.len() as u32) }
}

/// # Safety
/// `scenario` must be a pointer from a scenario constructor not yet freed,
/// or null.
#[no_mangle]
pub unsafe extern "C" fn ivo_scenario_free(scenario: *mut IvoScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Aggregate run metrics.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvoRunMetrics {
    pub all_arrived: bool,
    /// True iff some pair came closer than the sum of its radii.
    pub collided: bool,
    pub steps: u32,
    pub min_separation: f64,
    pub min_clearance: f64,
    pub mean_plan_time_us: f64,
    pub max_plan_time_us: f64,
}

/// State of one agent at one recorded step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvoAgentState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ux: f64,
    pub uy: f64,
    pub feasible: bool,
}

/// Runs the scenario to completion and returns the trace.
/// Free with `ivo_trace_free`.
///
/// # Safety
/// `scenario` must be a live pointer from a scenario constructor; `out` must
/// be a valid pointer to a writable `IvoTrace*`.
#[no_mangle]
pub unsafe extern "C" fn ivo_scenario_run(
    scenario: *const IvoScenario,
    out: *mut *mut IvoTrace,
) -> IvoStatus {
    let Some(s) = (unsafe { scenario.as_ref() }) else {
        return IvoStatus::NullPointer;
    };
    if out.is_null() {
        return IvoStatus::NullPointer;
    }
    match sim::run(&s.0) {
        Ok(trace) => {
            let agent_count = s.0.agents.len() as u32;
            unsafe { out.write(Box::into_raw(Box::new(IvoTrace { trace, agent_count }))) };
            IvoStatus::Ok
        }
        Err(_) => IvoStatus::ValidationError,
    }
}

/// Copies the run metrics out of a trace.
///
/// # Safety
/// `trace` must be a live pointer from `ivo_scenario_run`; `out` must be a
/// valid pointer to a writable [`IvoRunMetrics`].
#[no_mangle]
pub unsafe extern "C" fn ivo_trace_metrics(
    trace: *const IvoTrace,
    out: *mut IvoRunMetrics,
) -> IvoStatus {
    let Some(t) = (unsafe { trace.as_ref() }) else {
        return IvoStatus::NullPointer;
    };
    let m = &t.trace.metrics;
    unsafe {
        write_out(
            out,
            IvoRunMetrics {
                all_arrived: m.all_arrived,
                collided: m.min_clearance < 0.0,
                steps: t.trace.len() as u32,
                min_separation: m.min_separation,
                min_clearance: m.min_clearance,
                mean_plan_time_us: m.mean_plan_time_us,
                max_plan_time_us: m.max_plan_time_us,
            },
        )
    }
}

/// Number of recorded states in the trace, including the initial state.
///
/// # Safety
/// `trace` must be a live pointer from `ivo_scenario_run`; `out` must be a
/// valid pointer to a writable `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn ivo_trace_state_count(trace: *const IvoTrace, out: *mut u32) -> IvoStatus {
    let Some(t) = (unsafe { trace.as_ref() }) else {
        return IvoStatus::NullPointer;
    };
    unsafe { write_out(out, t.trace.len() as u32 + 1) }
}

/// Copies one agent's state at one recorded step. Step 0 is the initial
/// state; step `k` is the state after the k-th control cycle.
///
/// # Safety
/// `trace` must be a live pointer from `ivo_scenario_run`; `out` must be a
/// valid pointer to a writable [`IvoAgentState`].
#[no_mangle]
pub unsafe extern "C" fn ivo_trace_agent_state(
    trace: *const IvoTrace,
    step: u32,
    agent_index: u32,
    out: *mut IvoAgentState,
) -> IvoStatus {
    let Some(t) = (unsafe { trace.as_ref() }) else {
        return IvoStatus::NullPointer;
    };
    if agent_index >= t.agent_count {
        return IvoStatus::OutOfRange;
    }
    let state = if step == 0 {
        &t.trace.initial
    } else {
        match t.trace.steps.get(step as usize - 1) {
            Some(s) => s,
            None => return IvoStatus::OutOfRange,
        }
    };
    let a = &state.agents[agent_index as usize];
    unsafe {
        write_out(
            out,
            IvoAgentState {
                x: a.position.x,
                y: a.position.y,
                vx: a.velocity.x,
                vy: a.velocity.y,
                ux: a.control.x,
                uy: a.control.y,
                feasible: a.feasible,
            },
        )
    }
}

/// # Safety
/// `trace` must be a pointer from `ivo_scenario_run` not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ivo_trace_free(trace: *mut IvoTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}
