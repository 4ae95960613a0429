//! Scenario files and shipped presets.
//!
//! Scenarios are TOML with four sections:
//!
//! ```toml
//! [scenario]            # dt, max_steps, goal_tolerance, seed
//! [[agents]]            # id, start, goal, radius, v_max, u_max, lambda,
//!                       # sensor_range (+ optional planner overrides)
//! [[obstacles]]         # start, velocity, radius
//! [noise]               # per-axis Gaussian sigmas, all default 0
//! ```
//!
//! Parsing applies defaults, validates every invariant, and rejects unknown
//! keys. [`emit_scenario`] writes a config back out with all defaults
//! echoed, and `parse(emit(config)) == config` for every valid config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::noise::{NoiseModel, TruthPoint};
use crate::planner::PlannerParams;
use crate::sim::{grid_rotation_for, AgentConfig, ConfigError, PassiveObstacle, ScenarioConfig};

pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_N_RADIAL: u32 = 8;
pub const DEFAULT_N_ANGULAR: u32 = 32;
pub const DEFAULT_INFEASIBLE_PENALTY: f64 = 1e3;

/// Constraint-radius inflation used by the shipped presets (m).
pub const DEFAULT_RADIUS_MARGIN: f64 = 0.15;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: ScenarioSection,
    agents: Vec<AgentSection>,
    #[serde(default)]
    obstacles: Vec<ObstacleSection>,
    #[serde(default)]
    noise: NoiseModel,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    dt: f64,
    max_steps: u32,
    goal_tolerance: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentSection {
    id: u32,
    start: Vec2,
    goal: Vec2,
    radius: f64,
    v_max: f64,
    /// Defaults to `v_max`.
    #[serde(default)]
    u_max: Option<f64>,
    #[serde(default = "default_lambda")]
    lambda: f64,
    sensor_range: f64,
    #[serde(default = "default_n_radial")]
    n_radial: u32,
    #[serde(default = "default_n_angular")]
    n_angular: u32,
    #[serde(default = "default_true")]
    approaching_filter: bool,
    #[serde(default = "default_penalty")]
    infeasible_penalty: f64,
    #[serde(default)]
    radius_margin: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleSection {
    start: Vec2,
    velocity: Vec2,
    radius: f64,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_n_radial() -> u32 {
    DEFAULT_N_RADIAL
}
fn default_n_angular() -> u32 {
    DEFAULT_N_ANGULAR
}
fn default_true() -> bool {
    true
}
fn default_penalty() -> f64 {
    DEFAULT_INFEASIBLE_PENALTY
}

impl ScenarioFile {
    fn into_config(self) -> Result<ScenarioConfig, ConfigError> {
        let agents = self
            .agents
            .into_iter()
            .map(|a| AgentConfig {
                id: a.id,
                start: a.start,
                goal: a.goal,
                radius: a.radius,
                planner: PlannerParams {
                    lambda: a.lambda,
                    v_max: a.v_max,
                    u_max: a.u_max.unwrap_or(a.v_max),
                    n_radial: a.n_radial,
                    n_angular: a.n_angular,
                    approaching_filter: a.approaching_filter,
                    infeasible_penalty: a.infeasible_penalty,
                    grid_rotation: grid_rotation_for(a.id),
                    radius_margin: a.radius_margin,
                },
                sensor_range: a.sensor_range,
            })
            .collect();
        let config = ScenarioConfig {
            agents,
            passive_obstacles: self
                .obstacles
                .into_iter()
                .map(|o| PassiveObstacle {
                    start: o.start,
                    velocity: o.velocity,
                    radius: o.radius,
                })
                .collect(),
            dt: self.scenario.dt,
            max_steps: self.scenario.max_steps,
            goal_tolerance: self.scenario.goal_tolerance,
            noise: self.noise,
            seed: self.scenario.seed,
        };
        config.validate()?;
        Ok(config)
    }

    fn from_config(config: &ScenarioConfig) -> Self {
        ScenarioFile {
            scenario: ScenarioSection {
                dt: config.dt,
                max_steps: config.max_steps,
                goal_tolerance: config.goal_tolerance,
                seed: config.seed,
            },
            agents: config
                .agents
                .iter()
                .map(|a| AgentSection {
                    id: a.id,
                    start: a.start,
                    goal: a.goal,
                    radius: a.radius,
                    v_max: a.planner.v_max,
                    u_max: Some(a.planner.u_max),
                    lambda: a.planner.lambda,
                    sensor_range: a.sensor_range,
                    n_radial: a.planner.n_radial,
                    n_angular: a.planner.n_angular,
                    approaching_filter: a.planner.approaching_filter,
                    infeasible_penalty: a.planner.infeasible_penalty,
                    radius_margin: a.planner.radius_margin,
                })
                .collect(),
            obstacles: config
                .passive_obstacles
                .iter()
                .map(|o| ObstacleSection {
                    start: o.start,
                    velocity: o.velocity,
                    radius: o.radius,
                })
                .collect(),
            noise: config.noise,
        }
    }
}

/// Parses and validates a scenario from TOML text. `origin` only labels
/// error messages.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<ScenarioConfig, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        path: PathBuf::from(origin),
        message: e.to_string(),
    })?;
    Ok(file.into_config()?)
}

/// Loads, parses and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_str(&text, &path.display().to_string())
}

/// Serializes a scenario to TOML with every default echoed.
pub fn emit_scenario(config: &ScenarioConfig) -> String {
    toml::to_string_pretty(&ScenarioFile::from_config(config))
        .expect("scenario serialization cannot fail")
}

/// Configuration of one Monte-Carlo noise comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseStudyConfig {
    pub truth: TruthPoint,
    pub noise: NoiseModel,
    pub study: StudySection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Parses a noise-study config from TOML text.
pub fn parse_noise_study_str(text: &str, origin: &str) -> Result<NoiseStudyConfig, ScenarioError> {
    let config: NoiseStudyConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        path: PathBuf::from(origin),
        message: e.to_string(),
    })?;
    config
        .noise
        .validate()
        .map_err(|m| ScenarioError::Invalid(ConfigError(m)))?;
    if !(config.truth.delta > 0.0 && config.truth.delta.is_finite()) {
        return Err(ScenarioError::Invalid(ConfigError(format!(
            "delta > 0 required, got {}",
            config.truth.delta
        ))));
    }
    if !(config.truth.combined_radius > 0.0 && config.truth.combined_radius.is_finite()) {
        return Err(ScenarioError::Invalid(ConfigError(format!(
            "combined_radius > 0 required, got {}",
            config.truth.combined_radius
        ))));
    }
    Ok(config)
}

/// Loads a noise-study config file.
pub fn parse_noise_study(path: &Path) -> Result<NoiseStudyConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_noise_study_str(&text, &path.display().to_string())
}

pub fn emit_noise_study(config: &NoiseStudyConfig) -> String {
    toml::to_string_pretty(config).expect("study serialization cannot fail")
}

/// Shipped presets.
pub mod presets {
    use std::f64::consts::TAU;

    use super::*;

    pub const SCENARIO_NAMES: &[&str] = &["single5", "antipodal6", "circle10", "circle50"];
    pub const NOISE_STUDY_NAMES: &[&str] = &["matched-noise", "agent-noise-only"];

    fn agent(id: u32, start: Vec2, goal: Vec2, sensor_range: f64) -> AgentConfig {
        AgentConfig {
            id,
            start,
            goal,
            radius: 0.5,
            planner: PlannerParams {
                lambda: DEFAULT_LAMBDA,
                v_max: 1.0,
                u_max: 1.0,
                n_radial: DEFAULT_N_RADIAL,
                n_angular: DEFAULT_N_ANGULAR,
                approaching_filter: true,
                infeasible_penalty: DEFAULT_INFEASIBLE_PENALTY,
                grid_rotation: grid_rotation_for(id),
                radius_margin: DEFAULT_RADIUS_MARGIN,
            },
            sensor_range,
        }
    }

    /// `n` agents spread on a circle, each heading to the antipodal point.
    /// The circle grows with the agent count to keep the initial spacing
    /// workable.
    pub fn circle(n: u32, seed: u64) -> ScenarioConfig {
        let circle_radius = (0.3 * f64::from(n)).max(10.0);
        let agents = (0..n)
            .map(|i| {
                let angle = TAU * f64::from(i) / f64::from(n);
                let start = Vec2::from_angle(angle) * circle_radius;
                agent(i, start, -start, 8.0)
            })
            .collect();
        ScenarioConfig {
            agents,
            passive_obstacles: vec![],
            dt: 0.1,
            max_steps: (circle_radius * 60.0) as u32 + 600,
            goal_tolerance: 0.25,
            noise: NoiseModel::default(),
            seed,
        }
    }

    /// One agent crossing a field of five constant-velocity obstacles,
    /// including a head-on one.
    pub fn single5() -> ScenarioConfig {
        let obstacle = |start: (f64, f64), velocity: (f64, f64)| PassiveObstacle {
            start: Vec2::new(start.0, start.1),
            velocity: Vec2::new(velocity.0, velocity.1),
            radius: 0.5,
        };
        ScenarioConfig {
            agents: vec![agent(0, Vec2::ZERO, Vec2::new(14.0, 0.0), 8.0)],
            passive_obstacles: vec![
                obstacle((6.0, 4.0), (0.0, -0.5)),
                obstacle((4.0, -3.5), (0.0, 0.4)),
                obstacle((10.0, 3.0), (-0.3, -0.4)),
                obstacle((12.0, -4.0), (-0.4, 0.3)),
                obstacle((9.0, 0.0), (-0.5, 0.0)),
            ],
            dt: 0.1,
            max_steps: 600,
            goal_tolerance: 0.25,
            noise: NoiseModel::default(),
            seed: 1,
        }
    }

    pub fn antipodal6() -> ScenarioConfig {
        circle(6, 1)
    }

    pub fn circle10() -> ScenarioConfig {
        circle(10, 1)
    }

    /// Fifty agents crossing one tight region. Goals sit 25 degrees past the
    /// antipode, which gives the crowd a common passing side; a strictly
    /// antipodal ring of this size funnels every agent into the center at
    /// the same instant and cannot keep the discs separated.
    pub fn circle50() -> ScenarioConfig {
        let n = 50u32;
        let circle_radius = 20.0;
        let goal_rotation = 25.0f64.to_radians();
        let agents = (0..n)
            .map(|i| {
                let angle = TAU * f64::from(i) / f64::from(n);
                let start = Vec2::from_angle(angle) * circle_radius;
                let goal =
                    Vec2::from_angle(angle + std::f64::consts::PI + goal_rotation) * circle_radius;
                agent(i, start, goal, 8.0)
            })
            .collect();
        ScenarioConfig {
            agents,
            passive_obstacles: vec![],
            dt: 0.1,
            max_steps: 1500,
            goal_tolerance: 0.25,
            noise: NoiseModel::default(),
            seed: 1,
        }
    }

    pub fn scenario(name: &str) -> Option<ScenarioConfig> {
        match name {
            "single5" => Some(single5()),
            "antipodal6" => Some(antipodal6()),
            "circle10" => Some(circle10()),
            "circle50" => Some(circle50()),
            _ => None,
        }
    }

    /// Head-on approach with equally noisy obstacle position information on
    /// both paths. The classic path additionally carries agent pos/vel and
    /// obstacle velocity noise; velocity estimates are modelled as noisier
    /// than position fixes, which is what state estimators deliver.
    pub fn matched_noise() -> NoiseStudyConfig {
        NoiseStudyConfig {
            truth: TruthPoint {
                agent_pos: Vec2::ZERO,
                agent_vel: Vec2::new(1.0, 0.0),
                obstacle_pos: Vec2::new(4.0, 0.3),
                obstacle_vel: Vec2::new(-1.0, 0.0),
                combined_radius: 1.0,
                delta: 0.5,
            },
            noise: NoiseModel {
                sigma_agent_pos: 0.05,
                sigma_agent_vel: 0.3,
                sigma_obs_pos: 0.05,
                sigma_obs_vel: 0.3,
                sigma_ego_obs: 0.05,
            },
            study: StudySection {
                n_samples: 100_000,
                seed: 7,
            },
        }
    }

    /// Only the agent's own state is noisy; the ego path must be exact.
    pub fn agent_noise_only() -> NoiseStudyConfig {
        let mut config = matched_noise();
        config.noise = NoiseModel {
            sigma_agent_pos: 0.05,
            sigma_agent_vel: 0.3,
            ..NoiseModel::default()
        };
        config
    }

    pub fn noise_study(name: &str) -> Option<NoiseStudyConfig> {
        match name {
            "matched-noise" => Some(matched_noise()),
            "agent-noise-only" => Some(agent_noise_only()),
            _ => None,
        }
    }
}
