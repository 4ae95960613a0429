//! Ego-centric collision cones.
//!
//! An agent never needs its own pose or velocity: it observes an obstacle's
//! position in its own frame at two consecutive instants, finite-differences
//! them into a relative velocity, and tests whether that relative velocity
//! ray passes within the combined radius of the pair. The cone test is
//!
//! ```text
//! f = (r . v)^2 / |v|^2 - |r|^2 + R^2
//! ```
//!
//! with `r` the obstacle's ego position, `v` its relative velocity and `R`
//! the combined radius. `f >= 0` means the supporting line of the ray passes
//! within `R` of the agent.

use thiserror::Error;

use crate::geometry::Vec2;

/// Smallest observation spacing the estimator accepts, in seconds.
pub const MIN_OBSERVATION_INTERVAL: f64 = 1e-6;

/// Relative speeds below this are treated as degenerate: the cone value is
/// undefined (division by `|v|^2`) and callers fall back to a static overlap
/// test.
pub const DEGENERATE_SPEED: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    /// Observation spacing below [`MIN_OBSERVATION_INTERVAL`].
    #[error("observation interval {delta} s is below the {MIN_OBSERVATION_INTERVAL} s minimum")]
    DegenerateInterval { delta: f64 },
    /// Relative speed below [`DEGENERATE_SPEED`]; use a static overlap check.
    #[error("relative speed {speed} m/s is below the {DEGENERATE_SPEED} m/s minimum")]
    DegenerateVelocity { speed: f64 },
}

/// Identifies one obstacle across observations. The simulator keeps agent and
/// passive-obstacle identifiers in disjoint ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObstacleId(pub u64);

/// One timestamped ego-frame position fix of an obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoObservation {
    /// Obstacle position in the observing agent's frame (m).
    pub position: Vec2,
    /// Observation time (s).
    pub timestamp: f64,
}

impl EgoObservation {
    pub fn new(position: Vec2, timestamp: f64) -> Self {
        EgoObservation {
            position,
            timestamp,
        }
    }
}

/// Two consecutive ego observations of the same obstacle plus its radius.
/// This is everything the planner knows about an obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleTrack {
    pub id: ObstacleId,
    pub prev: EgoObservation,
    pub curr: EgoObservation,
    /// Obstacle radius (m), strictly positive.
    pub radius: f64,
}

/// Coefficients of the cone constraint written as a quadratic in the agent
/// velocity components: `F(v) = c1*vx^2 + c2*vy^2 + c3*vx*vy + c4*vx + c5*vy + c6`.
///
/// `F` is the homogenized form `(r.(vo-v))^2 - (|r|^2 - R^2)*|vo-v|^2`, i.e.
/// the cone value multiplied by `|vo-v|^2`, which makes it a true polynomial.
/// Its sign agrees with the cone value whenever the relative velocity is
/// nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl ConeCoefficients {
    /// Evaluates the quadratic at an agent velocity.
    pub fn eval(&self, v_agent: Vec2) -> f64 {
        let Vec2 { x, y } = v_agent;
        self.c1 * x * x + self.c2 * y * y + self.c3 * x * y + self.c4 * x + self.c5 * y + self.c6
    }
}

/// Finite-difference relative velocity from two consecutive ego observations:
/// `(curr - prev) / delta`. Uses no agent state whatsoever.
pub fn estimate_relative_velocity(track: &ObstacleTrack) -> Result<Vec2, ConeError> {
    let delta = track.curr.timestamp - track.prev.timestamp;
    if delta < MIN_OBSERVATION_INTERVAL || delta.is_nan() {
        return Err(ConeError::DegenerateInterval { delta });
    }
    Ok((track.curr.position - track.prev.position) / delta)
}

/// The collision cone value `f = (r.v)^2/|v|^2 - |r|^2 + R^2`.
///
/// `f >= 0` means the supporting line of the relative-velocity ray passes
/// within `combined_radius` of the agent; `f < 0` means clear. Fails with
/// [`ConeError::DegenerateVelocity`] when `|v|` is below [`DEGENERATE_SPEED`];
/// callers must then use a static overlap check instead.
pub fn cone_value(r: Vec2, v: Vec2, combined_radius: f64) -> Result<f64, ConeError> {
    debug_assert!(combined_radius > 0.0, "combined radius must be positive");
    let speed_sq = v.norm_squared();
    if speed_sq < DEGENERATE_SPEED * DEGENERATE_SPEED {
        return Err(ConeError::DegenerateVelocity {
            speed: speed_sq.sqrt(),
        });
    }
    let rv = r.dot(v);
    Ok(rv * rv / speed_sq - r.norm_squared() + combined_radius * combined_radius)
}

/// True iff the obstacle will come within `combined_radius` of the agent at
/// some future time, assuming both hold their current velocities.
///
/// This is the cone test plus the approaching condition `r.v < 0`: the bare
/// quadratic also flags receding obstacles whose backward ray extension
/// intersects the disc. A relatively stationary obstacle collides only if
/// already overlapping.
pub fn on_collision_course(r: Vec2, v: Vec2, combined_radius: f64) -> bool {
    match cone_value(r, v, combined_radius) {
        Ok(f) => f >= 0.0 && r.dot(v) < 0.0,
        Err(ConeError::DegenerateVelocity { .. }) => r.norm() <= combined_radius,
        Err(_) => unreachable!("cone_value only reports degenerate velocity"),
    }
}

/// Coefficients of the homogenized cone constraint as a quadratic in the
/// agent velocity, for an obstacle at ego position `r` moving with relative
/// (to ground, in the ego axes) velocity `v_obstacle`.
///
/// `eval(v_agent)` equals `cone_value(r, v_obstacle - v_agent, R) * |v_obstacle - v_agent|^2`.
pub fn cone_coefficients(r: Vec2, v_obstacle: Vec2, combined_radius: f64) -> ConeCoefficients {
    debug_assert!(combined_radius > 0.0, "combined radius must be positive");
    // F(v) = (r.(vo-v))^2 - k*|vo-v|^2 with k = |r|^2 - R^2, expanded in v.
    let k = r.norm_squared() - combined_radius * combined_radius;
    let a = r.dot(v_obstacle);
    ConeCoefficients {
        c1: r.x * r.x - k,
        c2: r.y * r.y - k,
        c3: 2.0 * r.x * r.y,
        c4: 2.0 * (k * v_obstacle.x - a * r.x),
        c5: 2.0 * (k * v_obstacle.y - a * r.y),
        c6: a * a - k * v_obstacle.norm_squared(),
    }
}

/// Brute-force closest approach of the point `p(t) = r + v t` to the origin
/// over `t in [0, horizon]`, sampled at step `dt`.
///
/// Test oracle for the cone test; deliberately does nothing smarter than
/// scanning.
pub fn min_separation(r: Vec2, v: Vec2, horizon: f64, dt: f64) -> (f64, f64) {
    debug_assert!(horizon > 0.0 && dt > 0.0);
    let mut best_t = 0.0;
    let mut best_d_sq = r.norm_squared();
    let mut k: u64 = 1;
    loop {
        let t = k as f64 * dt;
        if t > horizon {
            break;
        }
        let p = r + v * t;
        let d_sq = p.norm_squared();
        if d_sq < best_d_sq {
            best_d_sq = d_sq;
            best_t = t;
        }
        k += 1;
    }
    (best_t, best_d_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn track(prev: (f64, f64, f64), curr: (f64, f64, f64)) -> ObstacleTrack {
        ObstacleTrack {
            id: ObstacleId(0),
            prev: EgoObservation::new(Vec2::new(prev.0, prev.1), prev.2),
            curr: EgoObservation::new(Vec2::new(curr.0, curr.1), curr.2),
            radius: 0.5,
        }
    }

    #[test]
    fn estimate_finite_difference() {
        let t = track((2.0, 2.0, 0.0), (1.5, 1.8, 0.1));
        let v = estimate_relative_velocity(&t).unwrap();
        assert!((v.x - -5.0).abs() < 1e-12);
        assert!((v.y - -2.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_stationary_relative() {
        let t = track((1.0, 1.0, 0.0), (1.0, 1.0, 0.1));
        assert_eq!(estimate_relative_velocity(&t).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn estimate_rejects_degenerate_interval() {
        let t = track((0.0, 0.0, 0.0), (1.0, 0.0, 1e-7));
        assert!(matches!(
            estimate_relative_velocity(&t),
            Err(ConeError::DegenerateInterval { .. })
        ));
    }

    /// Ego observations built from a constant-velocity global world by a
    /// translation-only frame change must make the estimator recover
    /// `v_o - v_r` without access to either global state.
    #[test]
    fn estimate_recovers_relative_velocity_from_global_motion() {
        let (x_o, v_o) = (Vec2::new(5.0, 0.0), Vec2::new(-1.0, 0.0));
        let (x_r, v_r) = (Vec2::ZERO, Vec2::new(1.0, 0.0));
        let delta = 0.1;
        let ego_then = x_o - x_r;
        let ego_now = (x_o + v_o * delta) - (x_r + v_r * delta);
        let t = ObstacleTrack {
            id: ObstacleId(7),
            prev: EgoObservation::new(ego_then, 0.0),
            curr: EgoObservation::new(ego_now, delta),
            radius: 0.5,
        };
        let est = estimate_relative_velocity(&t).unwrap();
        let expected = v_o - v_r;
        assert!((est - expected).norm() <= 1e-12 * expected.norm());
    }

    #[test]
    fn cone_head_on_gives_radius_squared() {
        let f = cone_value(Vec2::new(2.0, 0.0), Vec2::new(-1.0, 0.0), 1.0).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn cone_perpendicular_is_clear() {
        let f = cone_value(Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0), 1.0).unwrap();
        assert_eq!(f, -3.0);
    }

    #[test]
    fn cone_radial_approach() {
        let f = cone_value(Vec2::new(3.0, 4.0), Vec2::new(-3.0, -4.0), 1.0).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cone_rejects_degenerate_velocity() {
        let r = Vec2::new(2.0, 0.0);
        assert!(matches!(
            cone_value(r, Vec2::new(1e-10, 0.0), 1.0),
            Err(ConeError::DegenerateVelocity { .. })
        ));
    }

    #[test]
    fn collision_course_head_on() {
        assert!(on_collision_course(
            Vec2::new(2.0, 0.0),
            Vec2::new(-1.0, 0.0),
            1.0
        ));
    }

    #[test]
    fn collision_course_receding_is_false() {
        // f = 1 >= 0 but r.v > 0: the obstacle is moving away.
        assert!(!on_collision_course(
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.0),
            1.0
        ));
    }

    #[test]
    fn collision_course_degenerate_falls_back_to_overlap() {
        let v = Vec2::ZERO;
        assert!(on_collision_course(Vec2::new(0.5, 0.0), v, 1.0));
        assert!(!on_collision_course(Vec2::new(2.0, 0.0), v, 1.0));
    }

    /// Frozen coefficients worked out by hand for r=(2,0), vo=0, R=1:
    /// F(v) = (-2 vx)^2 - 3 (vx^2 + vy^2) = vx^2 - 3 vy^2.
    #[test]
    fn coefficients_match_hand_expansion() {
        let c = cone_coefficients(Vec2::new(2.0, 0.0), Vec2::ZERO, 1.0);
        assert_eq!(c.c1, 1.0);
        assert_eq!(c.c2, -3.0);
        assert_eq!(c.c3, 0.0);
        assert_eq!(c.c4, 0.0);
        assert_eq!(c.c5, 0.0);
        assert_eq!(c.c6, 0.0);
    }

    #[test]
    fn coefficients_vanish_at_zero_relative_velocity() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let r = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let vo = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let radius = rng.gen_range(0.1..2.0);
            let f = cone_coefficients(r, vo, radius).eval(vo);
            let scale = (r.norm_squared() + radius * radius) * vo.norm_squared() + 1.0;
            assert!(f.abs() <= 1e-12 * scale, "F(vo) = {f} should vanish");
        }
    }

    /// Numeric cross-check: the quadratic must equal cone_value * |v|^2 at
    /// random agent velocities.
    #[test]
    fn coefficients_reproduce_homogenized_cone_value() {
        const REL_TOL: f64 = 1e-9;
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let r = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let vo = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let radius = rng.gen_range(0.1..2.0);
            let coeffs = cone_coefficients(r, vo, radius);
            for _ in 0..100 {
                let va = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let rel = vo - va;
                let Ok(f) = cone_value(r, rel, radius) else {
                    continue;
                };
                let expected = f * rel.norm_squared();
                let got = coeffs.eval(va);
                let scale = expected
                    .abs()
                    .max(r.norm_squared() * rel.norm_squared())
                    .max(1.0);
                assert!(
                    (got - expected).abs() <= REL_TOL * scale,
                    "quadratic {got} vs homogenized cone {expected}"
                );
            }
        }
    }

    #[test]
    fn min_separation_head_on_closes_to_zero() {
        let (t, d) = min_separation(Vec2::new(2.0, 0.0), Vec2::new(-1.0, 0.0), 10.0, 1e-3);
        assert!((t - 2.0).abs() <= 1e-3);
        assert!(d <= 1e-3);
    }

    #[test]
    fn min_separation_perpendicular_min_at_start() {
        let (t, d) = min_separation(Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0), 10.0, 1e-3);
        assert_eq!(t, 0.0);
        assert_eq!(d, 2.0);
    }

    /// Closed-form check: from (3,4) moving along -x, the closest approach
    /// to the origin is the perpendicular distance 4, reached at t = 3.
    #[test]
    fn min_separation_closed_form_perpendicular_distance() {
        let (t, d) = min_separation(Vec2::new(3.0, 4.0), Vec2::new(-1.0, 0.0), 20.0, 1e-3);
        assert!((t - 3.0).abs() <= 2e-3);
        assert!((d - 4.0).abs() <= 1e-6);
    }

    /// Oracle equivalence on random non-overlapping configurations: the cone
    /// predicate must agree with the brute-force closest-approach oracle
    /// outside the |f| <= 1e-6 boundary band.
    #[test]
    fn cone_sign_matches_closest_approach_oracle() {
        const BOUNDARY_BAND: f64 = 1e-6;
        let mut rng = StdRng::seed_from_u64(42);
        let mut checked = 0;
        for _ in 0..2_000 {
            let radius = rng.gen_range(0.2..1.5);
            let r = Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
                * rng.gen_range(radius + 0.05..4.0);
            let v = Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
                * rng.gen_range(0.5..2.0);
            let f = cone_value(r, v, radius).unwrap();
            if f.abs() <= BOUNDARY_BAND {
                continue;
            }
            let predicted = on_collision_course(r, v, radius);
            let (_, d_min) = min_separation(r, v, 10.0, 3e-4);
            assert_eq!(
                predicted,
                d_min <= radius,
                "disagreement at r={r:?} v={v:?} R={radius} f={f} d*={d_min}"
            );
            checked += 1;
        }
        assert!(checked > 1_800, "boundary band swallowed too many samples");
    }

    proptest! {
        /// cone_value(k r, k v, k R) = k^2 cone_value(r, v, R).
        #[test]
        fn cone_value_scale_covariance(
            rx in -5.0..5.0f64, ry in -5.0..5.0f64,
            vx in -3.0..3.0f64, vy in -3.0..3.0f64,
            radius in 0.1..2.0f64, k in 0.1..10.0f64,
        ) {
            let (r, v) = (Vec2::new(rx, ry), Vec2::new(vx, vy));
            prop_assume!(v.norm() >= 1e-3);
            let base = cone_value(r, v, radius).unwrap();
            let scaled = cone_value(r * k, v * k, radius * k).unwrap();
            let tol = 1e-9 * (base.abs().max(1.0)) * k * k;
            prop_assert!((scaled - k * k * base).abs() <= tol);
        }

        /// Rotating r and v together leaves the cone value unchanged.
        #[test]
        fn cone_value_rotation_invariance(
            rx in -5.0..5.0f64, ry in -5.0..5.0f64,
            vx in -3.0..3.0f64, vy in -3.0..3.0f64,
            radius in 0.1..2.0f64, theta in -10.0..10.0f64,
        ) {
            let (r, v) = (Vec2::new(rx, ry), Vec2::new(vx, vy));
            prop_assume!(v.norm() >= 1e-3);
            let base = cone_value(r, v, radius).unwrap();
            let rotated = cone_value(r.rotate(theta), v.rotate(theta), radius).unwrap();
            prop_assert!((rotated - base).abs() <= 1e-9 * base.abs().max(1.0));
        }

        /// Constant-velocity worlds reduce exactly through the ego frames.
        #[test]
        fn estimator_exact_for_constant_velocity_worlds(
            xox in -5.0..5.0f64, xoy in -5.0..5.0f64,
            xrx in -5.0..5.0f64, xry in -5.0..5.0f64,
            vrx in -2.0..2.0f64, vry in -2.0..2.0f64,
            relx in -3.0..3.0f64, rely in -3.0..3.0f64,
            delta in 0.1..1.0f64,
        ) {
            let rel = Vec2::new(relx, rely);
            prop_assume!(rel.norm() >= 0.5);
            let (x_o, x_r) = (Vec2::new(xox, xoy), Vec2::new(xrx, xry));
            let v_r = Vec2::new(vrx, vry);
            let v_o = v_r + rel;
            let t = ObstacleTrack {
                id: ObstacleId(1),
                prev: EgoObservation::new(x_o - x_r, 0.0),
                curr: EgoObservation::new((x_o + v_o * delta) - (x_r + v_r * delta), delta),
                radius: 0.5,
            };
            let est = estimate_relative_velocity(&t).unwrap();
            prop_assert!((est - rel).norm() <= 1e-12 * rel.norm());
        }
    }
}
