//! Per-agent control optimization.
//!
//! Each cycle the agent picks a velocity change `u` minimizing
//! `J = |v_desired - (v_r + u)|^2 + lambda |u|^2` subject to the collision
//! cone constraint `f <= 0` for every tracked obstacle, where the constraint
//! is evaluated at the relative velocity the obstacle would have after the
//! control is applied.
//!
//! The solver is deterministic candidate sampling: the null control, the
//! clamped unconstrained optimum, and a polar grid of `n_radial * n_angular`
//! points. The constraint is non-convex in `u`, so sampling keeps the cycle
//! cheap and the outcome reproducible, and degrades gracefully when no
//! candidate is feasible.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{cone_value, estimate_relative_velocity, ConeError, ObstacleTrack};
use crate::geometry::Vec2;

/// Goal distances below this (m) count as "at the goal": the desired
/// velocity direction is undefined and taken as zero.
pub const GOAL_DIRECTION_EPS: f64 = 1e-9;

/// Candidates whose selection keys differ by less than this relative amount
/// are treated as tied and resolved by the next key in the chain. Keeps the
/// right-hand preference meaningful on symmetric instances where mirrored
/// candidates differ only by rounding.
pub const TIE_REL_EPS: f64 = 1e-9;

/// Largest allowed control-grid dimension.
pub const MAX_GRID: u32 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid planner parameters: {0}")]
pub struct InvalidParams(pub String);

/// Tuning knobs of the per-agent optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Control smoothing weight (>= 0).
    pub lambda: f64,
    /// Maximum agent speed (m/s, > 0).
    pub v_max: f64,
    /// Maximum per-cycle velocity change (m/s, > 0).
    pub u_max: f64,
    /// Radial rings in the candidate grid (>= 1).
    pub n_radial: u32,
    /// Angular spokes in the candidate grid (>= 4).
    pub n_angular: u32,
    /// When set, a constraint is only active while the obstacle approaches
    /// (`r . v < 0` at the candidate's relative velocity).
    pub approaching_filter: bool,
    /// Weight on summed constraint violations when no candidate is feasible.
    pub infeasible_penalty: f64,
    /// Deterministic rotation of the candidate grid (rad). The simulator
    /// derives it from the agent id to break symmetric deadlocks.
    pub grid_rotation: f64,
    /// Extra inflation of the combined radius in the constraint (m).
    /// Boundary-riding trajectories plus simultaneous replanning erode the
    /// nominal clearance by millimeters; a small margin absorbs that.
    pub radius_margin: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            lambda: 0.1,
            v_max: 1.0,
            u_max: 1.0,
            n_radial: 8,
            n_angular: 32,
            approaching_filter: true,
            infeasible_penalty: 1e3,
            grid_rotation: 0.0,
            radius_margin: 0.0,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), InvalidParams> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(InvalidParams(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(InvalidParams(format!(
                "v_max must be > 0, got {}",
                self.v_max
            )));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(InvalidParams(format!(
                "u_max must be > 0, got {}",
                self.u_max
            )));
        }
        if self.n_radial < 1 || self.n_radial > MAX_GRID {
            return Err(InvalidParams(format!(
                "n_radial must be in [1, {MAX_GRID}], got {}",
                self.n_radial
            )));
        }
        if self.n_angular < 4 || self.n_angular > MAX_GRID {
            return Err(InvalidParams(format!(
                "n_angular must be in [4, {MAX_GRID}], got {}",
                self.n_angular
            )));
        }
        if !(self.infeasible_penalty > 0.0 && self.infeasible_penalty.is_finite()) {
            return Err(InvalidParams(format!(
                "infeasible_penalty must be > 0, got {}",
                self.infeasible_penalty
            )));
        }
        if !self.grid_rotation.is_finite() {
            return Err(InvalidParams("grid_rotation must be finite".into()));
        }
        if !(self.radius_margin >= 0.0 && self.radius_margin.is_finite()) {
            return Err(InvalidParams(format!(
                "radius_margin must be >= 0, got {}",
                self.radius_margin
            )));
        }
        Ok(())
    }
}

/// Outcome of one planning cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlDecision {
    /// Velocity change to apply this cycle (m/s).
    pub u: Vec2,
    /// True iff every active constraint is satisfied under `u`.
    pub feasible: bool,
    /// Goal-tracking cost `J` of the chosen candidate.
    pub cost: f64,
    /// Largest single constraint violation under `u`; zero when feasible.
    pub worst_violation: f64,
}

/// Full-speed velocity toward the ego-frame goal, or zero when already there.
pub fn desired_velocity(goal_ego: Vec2, v_max: f64) -> Vec2 {
    debug_assert!(v_max > 0.0);
    let dist = goal_ego.norm();
    if dist < GOAL_DIRECTION_EPS {
        Vec2::ZERO
    } else {
        goal_ego * (v_max / dist)
    }
}

/// Goal-tracking cost `J = |v_desired - (v_r + u)|^2 + lambda |u|^2`.
pub fn cost(u: Vec2, v_r: Vec2, v_desired: Vec2, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    (v_desired - (v_r + u)).norm_squared() + lambda * u.norm_squared()
}

/// One resolved obstacle constraint: ego position, estimated relative
/// velocity before any control, and the combined radius of the pair.
#[derive(Debug, Clone, Copy)]
struct Constraint {
    r: Vec2,
    v_est: Vec2,
    combined_radius: f64,
}

impl Constraint {
    /// Constraint value under control `u`: positive means violated.
    ///
    /// The relative velocity after the control is `v_est - u`. Degenerate
    /// relative velocity falls back to the static overlap test, and the
    /// approaching filter deactivates constraints for receding obstacles.
    fn violation(&self, u: Vec2, approaching_filter: bool) -> f64 {
        let v = self.v_est - u;
        match cone_value(self.r, v, self.combined_radius) {
            Ok(f) => {
                if approaching_filter && self.r.dot(v) >= 0.0 {
                    0.0
                } else {
                    f.max(0.0)
                }
            }
            Err(ConeError::DegenerateVelocity { .. }) => {
                (self.combined_radius * self.combined_radius - self.r.norm_squared()).max(0.0)
            }
            Err(_) => unreachable!("cone_value only reports degenerate velocity"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Evaluated {
    u: Vec2,
    cost: f64,
    sum_violation: f64,
    worst_violation: f64,
    u_norm: f64,
    /// Signed angle of `v_r + u` relative to the desired velocity; more
    /// negative = more clockwise.
    steer: f64,
}

/// Compares `a` against `b` on one key with a relative tie tolerance.
/// `None` means tied at this key.
fn key_less(a: f64, b: f64) -> Option<bool> {
    let tol = TIE_REL_EPS * (1.0 + a.abs().max(b.abs()));
    if (a - b).abs() <= tol {
        None
    } else {
        Some(a < b)
    }
}

/// Strict "is `a` a better choice than `b`" under the deterministic
/// tie-break chain: score, then smaller control, then most clockwise.
fn better(a_score: f64, a: &Evaluated, b_score: f64, b: &Evaluated) -> bool {
    match key_less(a_score, b_score) {
        Some(less) => less,
        None => match key_less(a.u_norm, b.u_norm) {
            Some(less) => less,
            None => a.steer < b.steer,
        },
    }
}

/// Solves the constrained control problem for one agent.
///
/// `v_r` is the agent's own commanded velocity (dead reckoning of issued
/// controls, never a sensor estimate), `goal_ego` the goal position in the
/// agent frame, and `tracks` the obstacle observations. Every candidate is
/// clamped so that `|u| <= u_max` and `|v_r + u| <= v_max`. If no candidate
/// satisfies all constraints the least-violating one (by
/// `J + infeasible_penalty * sum of violations`) is returned with
/// `feasible = false`.
pub fn plan_control(
    v_r: Vec2,
    goal_ego: Vec2,
    agent_radius: f64,
    tracks: &[ObstacleTrack],
    params: &PlannerParams,
) -> ControlDecision {
    debug_assert!(params.validate().is_ok());
    debug_assert!(agent_radius > 0.0);

    let v_desired = desired_velocity(goal_ego, params.v_max);

    // Tracks whose interval is too short to estimate a velocity cannot
    // constrain this cycle, same as first-contact obstacles in the world.
    let constraints: Vec<Constraint> = tracks
        .iter()
        .filter_map(|t| {
            let v_est = estimate_relative_velocity(t).ok()?;
            Some(Constraint {
                r: t.curr.position,
                v_est,
                combined_radius: agent_radius + t.radius + params.radius_margin,
            })
        })
        .collect();

    let evaluate = |u_raw: Vec2| -> Evaluated {
        // Clamp the resulting speed; the projection cannot grow |u| beyond
        // u_max because v_r lies inside the speed ball.
        let u = ((v_r + u_raw).clamp_norm(params.v_max)) - v_r;
        let mut sum_violation = 0.0;
        let mut worst_violation: f64 = 0.0;
        for c in &constraints {
            let v = c.violation(u, params.approaching_filter);
            sum_violation += v;
            worst_violation = worst_violation.max(v);
        }
        let j = cost(u, v_r, v_desired, params.lambda);
        let v_new = v_r + u;
        let steer = if v_desired == Vec2::ZERO {
            0.0
        } else {
            f64::atan2(v_desired.cross(v_new), v_desired.dot(v_new))
        };
        Evaluated {
            u,
            cost: j,
            sum_violation,
            worst_violation,
            u_norm: u.norm(),
            steer,
        }
    };

    let mut best_feasible: Option<Evaluated> = None;
    let mut best_any: Option<Evaluated> = None;
    let mut consider = |cand: Evaluated, penalty: f64| {
        if cand.sum_violation == 0.0 {
            let replace = match &best_feasible {
                None => true,
                Some(b) => better(cand.cost, &cand, b.cost, b),
            };
            if replace {
                best_feasible = Some(cand);
            }
        }
        let score = cand.cost + penalty * cand.sum_violation;
        let replace = match &best_any {
            None => true,
            Some(b) => better(score, &cand, b.cost + penalty * b.sum_violation, b),
        };
        if replace {
            best_any = Some(cand);
        }
    };

    let penalty = params.infeasible_penalty;
    consider(evaluate(Vec2::ZERO), penalty);
    let unconstrained = (v_desired - v_r) / (1.0 + params.lambda);
    consider(evaluate(unconstrained.clamp_norm(params.u_max)), penalty);
    for ring in 1..=params.n_radial {
        let radius = params.u_max * ring as f64 / params.n_radial as f64;
        for spoke in 0..params.n_angular {
            let angle = params.grid_rotation + TAU * spoke as f64 / params.n_angular as f64;
            consider(evaluate(Vec2::from_angle(angle) * radius), penalty);
        }
    }

    // The candidate set always contains the clamped null control, so both
    // options are populated here.
    match best_feasible {
        Some(c) => ControlDecision {
            u: c.u,
            feasible: true,
            cost: c.cost,
            worst_violation: 0.0,
        },
        None => {
            let c = best_any.expect("candidate set is never empty");
            ControlDecision {
                u: c.u,
                feasible: false,
                cost: c.cost,
                worst_violation: c.worst_violation,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{EgoObservation, ObstacleId};
    use proptest::prelude::*;

    fn track_with(r: Vec2, v_rel: Vec2, radius: f64, dt: f64) -> ObstacleTrack {
        ObstacleTrack {
            id: ObstacleId(0),
            prev: EgoObservation::new(r - v_rel * dt, 0.0),
            curr: EgoObservation::new(r, dt),
            radius,
        }
    }

    fn params() -> PlannerParams {
        PlannerParams {
            v_max: 2.0,
            u_max: 5.0,
            lambda: 1.0,
            ..PlannerParams::default()
        }
    }

    #[test]
    fn desired_velocity_scales_to_v_max() {
        assert_eq!(
            desired_velocity(Vec2::new(10.0, 0.0), 2.0),
            Vec2::new(2.0, 0.0)
        );
    }

    #[test]
    fn desired_velocity_preserves_direction() {
        assert_eq!(
            desired_velocity(Vec2::new(3.0, 4.0), 5.0),
            Vec2::new(3.0, 4.0)
        );
    }

    #[test]
    fn desired_velocity_zero_at_goal() {
        assert_eq!(desired_velocity(Vec2::ZERO, 2.0), Vec2::ZERO);
    }

    #[test]
    fn cost_zero_when_at_desired() {
        assert_eq!(
            cost(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), 1.0),
            0.0
        );
    }

    #[test]
    fn cost_zero_lambda_ignores_control_magnitude() {
        assert_eq!(
            cost(Vec2::new(1.0, 0.0), Vec2::ZERO, Vec2::new(1.0, 0.0), 0.0),
            0.0
        );
    }

    #[test]
    fn cost_unconstrained_minimizer() {
        // u* = (v_desired - v_r) / (1 + lambda)
        let (v_des, v_r, lambda) = (Vec2::new(2.0, 0.0), Vec2::ZERO, 1.0);
        let u_star = (v_des - v_r) / (1.0 + lambda);
        assert_eq!(u_star, Vec2::new(1.0, 0.0));
        assert_eq!(cost(u_star, v_r, v_des, lambda), 2.0);
        // Nudging off the minimizer can only increase the cost.
        for nudge in [
            Vec2::new(0.01, 0.0),
            Vec2::new(-0.01, 0.0),
            Vec2::new(0.0, 0.01),
        ] {
            assert!(cost(u_star + nudge, v_r, v_des, lambda) > 2.0);
        }
    }

    #[test]
    fn plan_without_obstacles_returns_clamped_optimum() {
        let decision = plan_control(Vec2::ZERO, Vec2::new(10.0, 0.0), 0.5, &[], &params());
        assert_eq!(decision.u, Vec2::new(1.0, 0.0));
        assert!(decision.feasible);
        assert_eq!(decision.worst_violation, 0.0);
    }

    #[test]
    fn plan_head_on_deflects_laterally() {
        let p = PlannerParams {
            v_max: 1.0,
            u_max: 1.0,
            lambda: 0.1,
            ..PlannerParams::default()
        };
        let track = track_with(Vec2::new(4.0, 0.0), Vec2::new(-1.0, 0.0), 0.5, 0.1);
        let decision = plan_control(Vec2::ZERO, Vec2::new(10.0, 0.0), 0.5, &[track], &p);
        assert!(decision.feasible, "head-on at 4 m must be avoidable");
        assert!(
            decision.u.y != 0.0,
            "expected lateral deflection, got {:?}",
            decision.u
        );
        // The constraint must hold under the returned control.
        let v = estimate_relative_velocity(&track).unwrap() - decision.u;
        assert!(cone_value(Vec2::new(4.0, 0.0), v, 1.0).unwrap() <= 0.0);
    }

    #[test]
    fn plan_head_on_choice_is_grid_optimal() {
        // Independent sweep over the same candidate construction: no feasible
        // candidate may beat the returned cost by more than the tie slack.
        let p = PlannerParams {
            v_max: 1.0,
            u_max: 1.0,
            lambda: 0.1,
            ..PlannerParams::default()
        };
        let track = track_with(Vec2::new(4.0, 0.0), Vec2::new(-1.0, 0.0), 0.5, 0.1);
        let (v_r, goal) = (Vec2::ZERO, Vec2::new(10.0, 0.0));
        let decision = plan_control(v_r, goal, 0.5, &[track], &p);
        assert!(decision.feasible);

        let v_des = desired_velocity(goal, p.v_max);
        let v_est = estimate_relative_velocity(&track).unwrap();
        let mut raw = vec![
            Vec2::ZERO,
            ((v_des - v_r) / (1.0 + p.lambda)).clamp_norm(p.u_max),
        ];
        for ring in 1..=p.n_radial {
            let radius = p.u_max * ring as f64 / p.n_radial as f64;
            for spoke in 0..p.n_angular {
                let angle = p.grid_rotation + TAU * spoke as f64 / p.n_angular as f64;
                raw.push(Vec2::from_angle(angle) * radius);
            }
        }
        for u_raw in raw {
            let u = (v_r + u_raw).clamp_norm(p.v_max) - v_r;
            let v = v_est - u;
            let feasible = match cone_value(Vec2::new(4.0, 0.0), v, 1.0) {
                Ok(f) => f <= 0.0 || Vec2::new(4.0, 0.0).dot(v) >= 0.0,
                Err(_) => true,
            };
            if feasible {
                let j = cost(u, v_r, v_des, p.lambda);
                assert!(
                    j >= decision.cost - TIE_REL_EPS * (1.0 + decision.cost.abs()),
                    "candidate {u:?} with J={j} beats returned J={}",
                    decision.cost
                );
            }
        }
    }

    #[test]
    fn plan_ignores_receding_obstacle_with_filter() {
        let p = params();
        let track = track_with(Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0), 0.5, 0.1);
        let with_obstacle = plan_control(Vec2::ZERO, Vec2::new(10.0, 0.0), 0.5, &[track], &p);
        let without = plan_control(Vec2::ZERO, Vec2::new(10.0, 0.0), 0.5, &[], &p);
        assert_eq!(with_obstacle.u, without.u);
        assert!(with_obstacle.feasible);
    }

    #[test]
    fn plan_is_bit_deterministic() {
        let p = PlannerParams {
            v_max: 1.0,
            u_max: 1.0,
            grid_rotation: 3e-4,
            ..PlannerParams::default()
        };
        let tracks = [
            track_with(Vec2::new(4.0, 0.2), Vec2::new(-1.0, 0.0), 0.5, 0.1),
            track_with(Vec2::new(2.0, -2.0), Vec2::new(0.0, 1.0), 0.4, 0.1),
        ];
        let a = plan_control(Vec2::new(0.5, 0.0), Vec2::new(8.0, 1.0), 0.5, &tracks, &p);
        let b = plan_control(Vec2::new(0.5, 0.0), Vec2::new(8.0, 1.0), 0.5, &tracks, &p);
        assert_eq!(a.u.x.to_bits(), b.u.x.to_bits());
        assert_eq!(a.u.y.to_bits(), b.u.y.to_bits());
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
    }

    #[test]
    fn lambda_shrinks_control() {
        let mut norms = Vec::new();
        for lambda in [0.0, 0.5, 2.0, 10.0] {
            let p = PlannerParams {
                lambda,
                v_max: 2.0,
                u_max: 5.0,
                ..PlannerParams::default()
            };
            let d = plan_control(Vec2::ZERO, Vec2::new(10.0, 0.0), 0.5, &[], &p);
            let expected =
                (desired_velocity(Vec2::new(10.0, 0.0), 2.0) / (1.0 + lambda)).clamp_norm(5.0);
            assert!((d.u - expected).norm() <= 1e-12);
            norms.push(d.u.norm());
        }
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
    }

    proptest! {
        /// Bound invariants: |u| <= u_max and |v_r + u| <= v_max.
        #[test]
        fn plan_respects_bounds(
            vrx in -1.0..1.0f64, vry in -1.0..1.0f64,
            gx in -10.0..10.0f64, gy in -10.0..10.0f64,
            ox in -6.0..6.0f64, oy in -6.0..6.0f64,
            relx in -2.0..2.0f64, rely in -2.0..2.0f64,
            u_max in 0.2..2.0f64,
        ) {
            let p = PlannerParams { v_max: 1.0, u_max, ..PlannerParams::default() };
            let v_r = Vec2::new(vrx, vry).clamp_norm(p.v_max);
            let r = Vec2::new(ox, oy);
            prop_assume!(r.norm() > 1.0);
            let track = track_with(r, Vec2::new(relx, rely), 0.5, 0.1);
            let d = plan_control(v_r, Vec2::new(gx, gy), 0.5, &[track], &p);
            prop_assert!(d.u.norm() <= p.u_max * (1.0 + 1e-9));
            prop_assert!((v_r + d.u).norm() <= p.v_max + 1e-9);
            // Monotone safety: a feasible decision satisfies every constraint.
            if d.feasible {
                let v = estimate_relative_velocity(&track).unwrap() - d.u;
                let ok = match cone_value(r, v, 1.0) {
                    Ok(f) => f <= 0.0 || r.dot(v) >= 0.0,
                    Err(_) => r.norm() > 1.0,
                };
                prop_assert!(ok);
                prop_assert_eq!(d.worst_violation, 0.0);
            }
        }
    }
}
