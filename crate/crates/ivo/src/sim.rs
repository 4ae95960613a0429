//! Synchronous multi-agent world.
//!
//! Each cycle every agent observes the obstacles in its sensor range as
//! ego-frame positions, plans a control from those observations and its own
//! dead-reckoned commanded velocity, and then all controls are applied
//! simultaneously. The world never hands an agent any global state: the ego
//! goal is `goal - position`, computed by the harness in the role of mission
//! logic, and obstacle knowledge enters only through [`ObstacleTrack`]s.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::cone::{EgoObservation, ObstacleId, ObstacleTrack, MIN_OBSERVATION_INTERVAL};
use crate::geometry::Vec2;
use crate::noise::NoiseModel;
use crate::planner::{plan_control, ControlDecision, PlannerParams};

/// Passive obstacle identifiers live above this base so they can never
/// collide with agent ids (which are `u32`).
pub const PASSIVE_ID_BASE: u64 = 1 << 32;

/// Grid rotation step applied per agent, in radians. Breaks perfectly
/// symmetric antipodal configurations deterministically.
pub const GRID_JITTER_STEP: f64 = 1e-4;

/// Deterministic per-agent candidate grid rotation: `(id mod 7) * 1e-4` rad.
pub fn grid_rotation_for(agent_id: u32) -> f64 {
    f64::from(agent_id % 7) * GRID_JITTER_STEP
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid scenario: {0}")]
pub struct ConfigError(pub String);

/// Static description of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub id: u32,
    /// Start position (m, global frame).
    pub start: Vec2,
    /// Goal position (m, global frame).
    pub goal: Vec2,
    /// Disc radius (m, > 0).
    pub radius: f64,
    pub planner: PlannerParams,
    /// Obstacles farther than this are invisible (m, > 0).
    pub sensor_range: f64,
}

/// A non-planning obstacle moving with constant velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveObstacle {
    pub start: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// Complete declarative input of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub agents: Vec<AgentConfig>,
    pub passive_obstacles: Vec<PassiveObstacle>,
    /// Control and observation interval (s).
    pub dt: f64,
    pub max_steps: u32,
    /// Arrival distance (m).
    pub goal_tolerance: f64,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.agents.is_empty() {
            return Err(ConfigError("agents must be non-empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.agents {
            if !seen.insert(a.id) {
                return Err(ConfigError(format!("duplicate agent id {}", a.id)));
            }
            if !(a.radius > 0.0 && a.radius.is_finite()) {
                return Err(ConfigError(format!("agent {}: radius > 0 required", a.id)));
            }
            if !(a.sensor_range > 0.0 && a.sensor_range.is_finite()) {
                return Err(ConfigError(format!(
                    "agent {}: sensor_range > 0 required",
                    a.id
                )));
            }
            if !(a.start.is_finite() && a.goal.is_finite()) {
                return Err(ConfigError(format!(
                    "agent {}: start/goal must be finite",
                    a.id
                )));
            }
            a.planner
                .validate()
                .map_err(|e| ConfigError(format!("agent {}: {e}", a.id)))?;
        }
        for (k, o) in self.passive_obstacles.iter().enumerate() {
            if !(o.radius > 0.0 && o.radius.is_finite()) {
                return Err(ConfigError(format!("obstacle {k}: radius > 0 required")));
            }
            if !(o.start.is_finite() && o.velocity.is_finite()) {
                return Err(ConfigError(format!(
                    "obstacle {k}: start/velocity must be finite"
                )));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError(format!("dt > 0 required, got {}", self.dt)));
        }
        if self.dt < MIN_OBSERVATION_INTERVAL {
            return Err(ConfigError(format!(
                "dt must be at least the minimum observation interval {MIN_OBSERVATION_INTERVAL}"
            )));
        }
        if self.max_steps < 1 {
            return Err(ConfigError("max_steps >= 1 required".into()));
        }
        if !(self.goal_tolerance > 0.0 && self.goal_tolerance.is_finite()) {
            return Err(ConfigError(format!(
                "goal_tolerance > 0 required, got {}",
                self.goal_tolerance
            )));
        }
        self.noise.validate().map_err(ConfigError)?;
        Ok(())
    }
}

/// Rolling buffer of the two most recent observations of one obstacle.
#[derive(Debug, Clone, Default, PartialEq)]
struct ObservationBuffer {
    prev: Option<EgoObservation>,
    curr: Option<EgoObservation>,
}

impl ObservationBuffer {
    fn push(&mut self, obs: EgoObservation) {
        debug_assert!(
            self.curr.is_none_or(|c| obs.timestamp > c.timestamp),
            "observation timestamps must be strictly increasing"
        );
        self.prev = self.curr.replace(obs);
    }

    fn track(&self, id: ObstacleId, radius: f64) -> Option<ObstacleTrack> {
        Some(ObstacleTrack {
            id,
            prev: self.prev?,
            curr: self.curr?,
            radius,
        })
    }
}

/// Mutable per-agent runtime state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    /// Commanded velocity: the running sum of issued controls, clamped to
    /// `v_max`. Never estimated from anything.
    pub velocity: Vec2,
    pub arrived: bool,
    buffers: BTreeMap<ObstacleId, ObservationBuffer>,
}

/// Snapshot of everything that moves.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub step_index: u32,
    pub agents: Vec<AgentState>,
    pub passive_positions: Vec<Vec2>,
}

/// The RNG stream feeding observation noise for one `(step, agent)` pair.
///
/// Streams are independent per pair, so the order in which agents are
/// processed within a step cannot change any draw.
pub fn observation_rng(seed: u64, step: u32, agent_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(step) << 24) ^ agent_index as u64);
    rng
}

/// Per-step planning results, aligned with the agent list.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub decisions: Vec<ControlDecision>,
    /// Wall-clock planning time for the agents that actually planned (s).
    pub plan_seconds: Vec<f64>,
}

impl WorldState {
    pub fn new(scenario: &ScenarioConfig) -> Self {
        let agents = scenario
            .agents
            .iter()
            .map(|a| AgentState {
                position: a.start,
                velocity: Vec2::ZERO,
                arrived: (a.start - a.goal).norm() <= scenario.goal_tolerance,
                buffers: BTreeMap::new(),
            })
            .collect();
        WorldState {
            step_index: 0,
            agents,
            passive_positions: scenario.passive_obstacles.iter().map(|o| o.start).collect(),
        }
    }

    pub fn all_arrived(&self) -> bool {
        self.agents.iter().all(|a| a.arrived)
    }

    /// Takes one ego-frame observation round for `observer` and returns the
    /// tracks that have two stamps.
    ///
    /// Every other agent and passive obstacle within sensor range is observed
    /// as `their position - observer position` plus per-axis Gaussian noise
    /// of `sigma_ego_obs`. Obstacles seen for the first time yield no track
    /// this cycle.
    pub fn observe(
        &mut self,
        observer: usize,
        scenario: &ScenarioConfig,
        rng: &mut ChaCha8Rng,
    ) -> Vec<ObstacleTrack> {
        let now = f64::from(self.step_index) * scenario.dt;
        let own_position = self.agents[observer].position;
        let sensor_range = scenario.agents[observer].sensor_range;
        let sigma = scenario.noise.sigma_ego_obs;

        let mut sightings: Vec<(ObstacleId, Vec2, f64)> = Vec::new();
        for (j, other) in self.agents.iter().enumerate() {
            if j == observer {
                continue;
            }
            let offset = other.position - own_position;
            if offset.norm() <= sensor_range {
                let id = ObstacleId(u64::from(scenario.agents[j].id));
                sightings.push((id, offset, scenario.agents[j].radius));
            }
        }
        for (k, position) in self.passive_positions.iter().enumerate() {
            let offset = *position - own_position;
            if offset.norm() <= sensor_range {
                let id = ObstacleId(PASSIVE_ID_BASE + k as u64);
                sightings.push((id, offset, scenario.passive_obstacles[k].radius));
            }
        }

        let buffers = &mut self.agents[observer].buffers;
        let mut tracks = Vec::with_capacity(sightings.len());
        for (id, mut ego, radius) in sightings {
            if sigma > 0.0 {
                let nx: f64 = StandardNormal.sample(rng);
                let ny: f64 = StandardNormal.sample(rng);
                ego += Vec2::new(sigma * nx, sigma * ny);
            }
            let buffer = buffers.entry(id).or_default();
            buffer.push(EgoObservation::new(ego, now));
            if let Some(track) = buffer.track(id, radius) {
                tracks.push(track);
            }
        }
        tracks
    }

    /// Advances the world by one control cycle.
    ///
    /// All plans are computed from the pre-step world, then every control is
    /// applied simultaneously: commanded velocity += u (clamped to `v_max`),
    /// positions += velocity * dt. Agents within `goal_tolerance` of their
    /// goal stop and hold zero velocity thereafter.
    pub fn step(&mut self, scenario: &ScenarioConfig) -> StepOutcome {
        let n = self.agents.len();
        let mut decisions = Vec::with_capacity(n);
        let mut plan_seconds = Vec::new();
        for i in 0..n {
            if self.agents[i].arrived {
                decisions.push(ControlDecision {
                    u: Vec2::ZERO,
                    feasible: true,
                    cost: 0.0,
                    worst_violation: 0.0,
                });
                continue;
            }
            let mut rng = observation_rng(scenario.seed, self.step_index, i);
            let tracks = self.observe(i, scenario, &mut rng);
            let cfg = &scenario.agents[i];
            let agent = &self.agents[i];
            let goal_ego = cfg.goal - agent.position;
            let started = Instant::now();
            let decision =
                plan_control(agent.velocity, goal_ego, cfg.radius, &tracks, &cfg.planner);
            plan_seconds.push(started.elapsed().as_secs_f64());
            decisions.push(decision);
        }

        for (i, decision) in decisions.iter().enumerate() {
            let cfg = &scenario.agents[i];
            let agent = &mut self.agents[i];
            if agent.arrived {
                continue;
            }
            agent.velocity = (agent.velocity + decision.u).clamp_norm(cfg.planner.v_max);
            agent.position += agent.velocity * scenario.dt;
            if (agent.position - cfg.goal).norm() <= scenario.goal_tolerance {
                agent.arrived = true;
                agent.velocity = Vec2::ZERO;
            }
        }
        for (k, o) in scenario.passive_obstacles.iter().enumerate() {
            self.passive_positions[k] += o.velocity * scenario.dt;
        }
        self.step_index += 1;
        StepOutcome {
            decisions,
            plan_seconds,
        }
    }
}

/// State of one agent at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentRecord {
    pub position: Vec2,
    pub velocity: Vec2,
    pub control: Vec2,
    pub feasible: bool,
}

/// Everything that moved, at one recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub agents: Vec<AgentRecord>,
    pub passive_positions: Vec<Vec2>,
}

/// Aggregate run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Minimum over all recorded states and pairs of
    /// `center distance - radius sum`; negative means a collision occurred.
    pub min_clearance: f64,
    /// Minimum center distance over the same pairs (m).
    pub min_separation: f64,
    /// Step after which each agent reached its goal; `None` = did not finish.
    pub arrival_steps: Vec<Option<u32>>,
    pub all_arrived: bool,
    pub mean_plan_time_us: f64,
    pub max_plan_time_us: f64,
}

/// Full record of one run: initial state, one entry per executed step, and
/// summary metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub initial: TraceStep,
    pub steps: Vec<TraceStep>,
    pub metrics: Metrics,
}

impl SimulationTrace {
    /// Number of executed steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Minimum clearance and separation across agent-agent and agent-obstacle
/// pairs for one state.
fn pair_stats(
    agent_positions: &[Vec2],
    passive_positions: &[Vec2],
    scenario: &ScenarioConfig,
) -> (f64, f64) {
    let mut min_clearance = f64::INFINITY;
    let mut min_separation = f64::INFINITY;
    for i in 0..agent_positions.len() {
        for j in (i + 1)..agent_positions.len() {
            let d = (agent_positions[i] - agent_positions[j]).norm();
            let c = d - (scenario.agents[i].radius + scenario.agents[j].radius);
            min_clearance = min_clearance.min(c);
            min_separation = min_separation.min(d);
        }
        for (k, p) in passive_positions.iter().enumerate() {
            let d = (agent_positions[i] - *p).norm();
            let c = d - (scenario.agents[i].radius + scenario.passive_obstacles[k].radius);
            min_clearance = min_clearance.min(c);
            min_separation = min_separation.min(d);
        }
    }
    (min_clearance, min_separation)
}

fn record_state(world: &WorldState, decisions: Option<&[ControlDecision]>) -> TraceStep {
    TraceStep {
        agents: world
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| AgentRecord {
                position: a.position,
                velocity: a.velocity,
                control: decisions.map_or(Vec2::ZERO, |d| d[i].u),
                feasible: decisions.is_none_or(|d| d[i].feasible),
            })
            .collect(),
        passive_positions: world.passive_positions.clone(),
    }
}

/// Runs a scenario to completion: until every agent has arrived or
/// `max_steps` cycles have executed. Deterministic given the scenario seed.
pub fn run(scenario: &ScenarioConfig) -> Result<SimulationTrace, ConfigError> {
    scenario.validate()?;
    let mut world = WorldState::new(scenario);
    let initial = record_state(&world, None);
    let (mut min_clearance, mut min_separation) = pair_stats(
        &collect_positions(&initial),
        &initial.passive_positions,
        scenario,
    );

    let mut arrival_steps: Vec<Option<u32>> = world
        .agents
        .iter()
        .map(|a| a.arrived.then_some(0))
        .collect();
    let mut steps = Vec::new();
    let mut plan_time_sum = 0.0;
    let mut plan_time_max = 0.0f64;
    let mut plan_count = 0usize;

    while world.step_index < scenario.max_steps && !world.all_arrived() {
        let outcome = world.step(scenario);
        for &t in &outcome.plan_seconds {
            plan_time_sum += t;
            plan_time_max = plan_time_max.max(t);
            plan_count += 1;
        }
        for (i, agent) in world.agents.iter().enumerate() {
            if agent.arrived && arrival_steps[i].is_none() {
                arrival_steps[i] = Some(world.step_index);
            }
        }
        let record = record_state(&world, Some(&outcome.decisions));
        let (c, s) = pair_stats(
            &collect_positions(&record),
            &record.passive_positions,
            scenario,
        );
        min_clearance = min_clearance.min(c);
        min_separation = min_separation.min(s);
        steps.push(record);
    }

    let all_arrived = world.all_arrived();
    let metrics = Metrics {
        min_clearance,
        min_separation,
        arrival_steps,
        all_arrived,
        mean_plan_time_us: if plan_count == 0 {
            0.0
        } else {
            plan_time_sum / plan_count as f64 * 1e6
        },
        max_plan_time_us: plan_time_max * 1e6,
    };
    Ok(SimulationTrace {
        initial,
        steps,
        metrics,
    })
}

fn collect_positions(step: &TraceStep) -> Vec<Vec2> {
    step.agents.iter().map(|a| a.position).collect()
}

/// Recomputes the separation metrics by an independent pass over the trace.
/// Must agree exactly with the online values in [`Metrics`].
pub fn recompute_separation(trace: &SimulationTrace, scenario: &ScenarioConfig) -> (f64, f64) {
    let mut min_clearance = f64::INFINITY;
    let mut min_separation = f64::INFINITY;
    for state in std::iter::once(&trace.initial).chain(trace.steps.iter()) {
        let positions = collect_positions(state);
        let (c, s) = pair_stats(&positions, &state.passive_positions, scenario);
        min_clearance = min_clearance.min(c);
        min_separation = min_separation.min(s);
    }
    (min_clearance, min_separation)
}
