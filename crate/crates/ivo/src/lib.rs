//! Inverse velocity obstacles: ego-centric collision avoidance.
//!
//! A collision-avoidance toolkit built around one idea: instead of tracking
//! its own pose and velocity, an agent treats itself as stationary, observes
//! obstacle positions in its own frame at consecutive instants, and builds
//! collision cones from the finite-differenced relative velocities. No state
//! estimation of the agent ever enters the pipeline.
//!
//! Modules:
//! - [`geometry`]: 2D vectors.
//! - [`cone`]: the collision cone, the relative-velocity estimator, the
//!   quadratic coefficient form and a brute-force closest-approach oracle.
//! - [`planner`]: the per-agent constrained control optimizer.
//! - [`sim`]: the synchronous multi-agent world, traces and metrics.
//! - [`noise`]: classic velocity-obstacle reference and the Monte-Carlo
//!   noise-robustness comparison.
//! - [`scenario`]: TOML scenario files and shipped presets.
//! - [`cli`]: the commands behind the `ivo` binary.

pub mod cli;
pub mod cone;
pub mod geometry;
pub mod noise;
pub mod planner;
pub mod scenario;
pub mod sim;

pub use cone::{
    cone_coefficients, cone_value, estimate_relative_velocity, min_separation, on_collision_course,
    ConeCoefficients, ConeError, EgoObservation, ObstacleId, ObstacleTrack,
};
pub use geometry::Vec2;
pub use noise::{
    classic_vo_value, confidence_interval, monte_carlo_cone_error, DistributionSummary,
    MonteCarloComparison, NoiseError, NoiseModel, TruthPoint,
};
pub use planner::{cost, desired_velocity, plan_control, ControlDecision, PlannerParams};
pub use sim::{
    run, AgentConfig, ConfigError, PassiveObstacle, ScenarioConfig, SimulationTrace, WorldState,
};
