//! Command implementations behind the `ivo` binary.
//!
//! Four commands: `simulate` runs a scenario and writes a trajectory table
//! plus a report, `noise-compare` runs the Monte-Carlo cone-error study,
//! `bench` measures planning cycle times over growing agent counts, and
//! `oracle-check` validates the cone predicate against the brute-force
//! closest-approach oracle.
//!
//! Exit codes: 0 success, 1 other errors (I/O, study errors, oracle
//! mismatches), 2 parse error, 3 validation error, 4 timeout, 5 collision.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cone::{cone_value, min_separation, on_collision_course};
use crate::geometry::Vec2;
use crate::noise::{monte_carlo_cone_error, DistributionSummary, NoiseError};
use crate::scenario::{
    emit_noise_study, emit_scenario, parse_noise_study, parse_scenario, presets, NoiseStudyConfig,
    ScenarioError,
};
use crate::sim::{self, ScenarioConfig, SimulationTrace, WorldState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_TIMEOUT: i32 = 4;
pub const EXIT_COLLISION: i32 = 5;

/// Cone values inside this band around zero count as boundary cases during
/// the oracle check, not mismatches.
pub const ORACLE_BOUNDARY_BAND: f64 = 1e-6;

/// Brute-force oracle resolution. At the sampled speeds this keeps the
/// discretization error of `f` well under the boundary band.
pub const ORACLE_DT: f64 = 3e-4;
pub const ORACLE_HORIZON: f64 = 10.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("{0}: not a shipped preset and not a readable file")]
    UnknownScenario(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(ScenarioError::Parse { .. }) => EXIT_PARSE,
            CliError::Scenario(ScenarioError::Invalid(_)) => EXIT_VALIDATION,
            CliError::Scenario(ScenarioError::Io { .. }) => EXIT_OTHER,
            CliError::UnknownScenario(_) => EXIT_PARSE,
            CliError::Noise(_) | CliError::Io { .. } => EXIT_OTHER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    AllArrived,
    Timeout,
    Collision,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::AllArrived => EXIT_OK,
            Outcome::Timeout => EXIT_TIMEOUT,
            Outcome::Collision => EXIT_COLLISION,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::AllArrived => "all-arrived",
            Outcome::Timeout => "timeout",
            Outcome::Collision => "collision",
        }
    }
}

/// Summary of one simulate invocation.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario_name: String,
    pub outcome: Outcome,
    pub steps: u32,
    pub min_separation: f64,
    pub min_clearance: f64,
    pub makespan_steps: Option<u32>,
    pub mean_plan_time_us: f64,
    pub max_plan_time_us: f64,
    pub output_files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulateOverrides {
    pub seed: Option<u64>,
    pub max_steps: Option<u32>,
}

/// Resolves a scenario reference: shipped preset name first, then file path.
pub fn resolve_scenario(reference: &str) -> Result<(String, ScenarioConfig), CliError> {
    if let Some(config) = presets::scenario(reference) {
        return Ok((reference.to_string(), config));
    }
    let path = Path::new(reference);
    if path.exists() {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        return Ok((name, parse_scenario(path)?));
    }
    Err(CliError::UnknownScenario(reference.to_string()))
}

fn resolve_noise_study(reference: &str) -> Result<(String, NoiseStudyConfig), CliError> {
    if let Some(config) = presets::noise_study(reference) {
        return Ok((reference.to_string(), config));
    }
    let path = Path::new(reference);
    if path.exists() {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "study".to_string());
        return Ok((name, parse_noise_study(path)?));
    }
    Err(CliError::UnknownScenario(reference.to_string()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Renders the trajectory table: one row per (step, agent), fixed column
/// order, default float formatting. Step 0 is the initial state.
pub fn trajectory_csv(trace: &SimulationTrace, scenario: &ScenarioConfig) -> String {
    let mut out = String::from("step,id,x,y,vx,vy,ux,uy,feasible\n");
    for (step, state) in std::iter::once(&trace.initial)
        .chain(trace.steps.iter())
        .enumerate()
    {
        for (i, a) in state.agents.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                step,
                scenario.agents[i].id,
                a.position.x,
                a.position.y,
                a.velocity.x,
                a.velocity.y,
                a.control.x,
                a.control.y,
                a.feasible
            );
        }
    }
    out
}

fn classify(trace: &SimulationTrace) -> Outcome {
    if trace.metrics.min_clearance < 0.0 {
        Outcome::Collision
    } else if trace.metrics.all_arrived {
        Outcome::AllArrived
    } else {
        Outcome::Timeout
    }
}

/// Deterministic part of the report: identical bytes for identical flags.
fn run_report_text(report: &RunReport, scenario: &ScenarioConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", report.scenario_name);
    let _ = writeln!(out, "agents: {}", scenario.agents.len());
    let _ = writeln!(out, "obstacles: {}", scenario.passive_obstacles.len());
    let _ = writeln!(out, "seed: {}", scenario.seed);
    let _ = writeln!(out, "outcome: {}", report.outcome.as_str());
    let _ = writeln!(out, "steps: {}", report.steps);
    let _ = writeln!(out, "min_separation_m: {}", report.min_separation);
    let _ = writeln!(out, "min_clearance_m: {}", report.min_clearance);
    match report.makespan_steps {
        Some(steps) => {
            let _ = writeln!(out, "makespan_steps: {steps}");
        }
        None => {
            let _ = writeln!(out, "makespan_steps: dnf");
        }
    }
    for file in &report.output_files {
        let _ = writeln!(out, "file: {}", file.display());
    }
    out
}

/// Wall-clock planning times, kept out of the deterministic report.
fn timing_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", report.scenario_name);
    let _ = writeln!(out, "mean_plan_time_us: {:.3}", report.mean_plan_time_us);
    let _ = writeln!(out, "max_plan_time_us: {:.3}", report.max_plan_time_us);
    out
}

/// Runs a scenario and writes the echoed config, the trajectory table and a
/// report under `out_dir`. Exit status is 0 only for an all-arrived outcome.
pub fn cmd_simulate(
    scenario_ref: &str,
    out_dir: &Path,
    overrides: SimulateOverrides,
    quiet: bool,
) -> Result<RunReport, CliError> {
    let (name, mut config) = resolve_scenario(scenario_ref)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(max_steps) = overrides.max_steps {
        config.max_steps = max_steps;
    }
    let trace = sim::run(&config).map_err(ScenarioError::Invalid)?;
    let outcome = classify(&trace);

    let scenario_path = out_dir.join(format!("{name}_scenario.toml"));
    let trajectory_path = out_dir.join(format!("{name}_trajectory.csv"));
    let report_path = out_dir.join(format!("{name}_report.txt"));
    let timing_path = out_dir.join(format!("{name}_timing.txt"));
    write_file(&scenario_path, &emit_scenario(&config))?;
    write_file(&trajectory_path, &trajectory_csv(&trace, &config))?;

    let metrics = &trace.metrics;
    let makespan = metrics
        .arrival_steps
        .iter()
        .copied()
        .collect::<Option<Vec<u32>>>()
        .map(|arrivals| arrivals.into_iter().max().unwrap_or(0));
    let report = RunReport {
        scenario_name: name,
        outcome,
        steps: trace.len() as u32,
        min_separation: metrics.min_separation,
        min_clearance: metrics.min_clearance,
        makespan_steps: makespan,
        mean_plan_time_us: metrics.mean_plan_time_us,
        max_plan_time_us: metrics.max_plan_time_us,
        output_files: vec![scenario_path, trajectory_path, report_path.clone()],
    };
    write_file(&report_path, &run_report_text(&report, &config))?;
    write_file(&timing_path, &timing_text(&report))?;
    if !quiet {
        print!("{}", run_report_text(&report, &config));
        print!("{}", timing_text(&report));
    }
    Ok(report)
}

/// Renders one distribution summary as a structured text table.
fn summary_text(label: &str, summary: &DistributionSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {label}");
    let _ = writeln!(out, "count: {}", summary.count);
    let _ = writeln!(out, "mean: {}", summary.mean);
    let _ = writeln!(out, "variance: {}", summary.variance);
    let _ = writeln!(
        out,
        "interval: level={} lo={} hi={} width={}",
        summary.interval.level,
        summary.interval.lo,
        summary.interval.hi,
        summary.interval.width()
    );
    let _ = writeln!(out, "histogram: bin_lo bin_hi count");
    let edges = &summary.histogram.edges;
    for (i, count) in summary.histogram.counts.iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", edges[i], edges[i + 1], count);
    }
    let _ = writeln!(out, "cdf: value fraction_below");
    for (value, fraction) in &summary.cdf {
        let _ = writeln!(out, "{value} {fraction}");
    }
    out
}

#[derive(Debug, Clone)]
pub struct NoiseCompareReport {
    pub study_name: String,
    pub vo_interval: (f64, f64),
    pub ivo_interval: (f64, f64),
    /// ego width / classic width; NaN when both widths are zero.
    pub width_ratio: f64,
    pub output_files: Vec<PathBuf>,
}

/// Runs the Monte-Carlo cone-error study and writes both distribution
/// summaries plus the interval width ratio.
pub fn cmd_noise_compare(
    study_ref: &str,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<NoiseCompareReport, CliError> {
    let (name, mut config) = resolve_noise_study(study_ref)?;
    if let Some(seed) = seed_override {
        config.study.seed = seed;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.study.seed);
    let cmp = monte_carlo_cone_error(
        &config.truth,
        &config.noise,
        config.study.n_samples,
        &mut rng,
    )?;

    let mut text = String::new();
    let _ = writeln!(text, "study: {name}");
    let _ = writeln!(text, "samples: {}", config.study.n_samples);
    let _ = writeln!(text, "seed: {}", config.study.seed);
    let _ = writeln!(
        text,
        "discarded: vo={} ivo={}",
        cmp.discarded_vo, cmp.discarded_ivo
    );
    let ratio = cmp.width_ratio();
    let _ = writeln!(
        text,
        "width_ratio_ivo_over_vo: {}",
        if ratio.is_nan() {
            "n/a (both widths zero)".to_string()
        } else {
            ratio.to_string()
        }
    );
    text.push('\n');
    text.push_str(&summary_text("velocity obstacle error", &cmp.vo));
    text.push('\n');
    text.push_str(&summary_text("inverse velocity obstacle error", &cmp.ivo));

    let config_path = out_dir.join(format!("{name}_study.toml"));
    let report_path = out_dir.join(format!("{name}_noise.txt"));
    write_file(&config_path, &emit_noise_study(&config))?;
    write_file(&report_path, &text)?;
    if !quiet {
        println!(
            "{name}: vo interval [{}, {}], ivo interval [{}, {}], width ratio {}",
            cmp.vo.interval.lo, cmp.vo.interval.hi, cmp.ivo.interval.lo, cmp.ivo.interval.hi, ratio
        );
    }
    Ok(NoiseCompareReport {
        study_name: name,
        vo_interval: (cmp.vo.interval.lo, cmp.vo.interval.hi),
        ivo_interval: (cmp.ivo.interval.lo, cmp.ivo.interval.hi),
        width_ratio: ratio,
        output_files: vec![config_path, report_path],
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BenchRow {
    pub agents: u32,
    pub cycles: usize,
    pub mean_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Mean per-agent-cycle planning time for a given agent count.
    pub fn mean_for(&self, agents: u32) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.agents == agents)
            .map(|r| r.mean_us)
    }

    pub fn table(&self) -> String {
        let mut out = String::from("agents cycles mean_us p99_us max_us\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{} {} {:.3} {:.3} {:.3}",
                r.agents, r.cycles, r.mean_us, r.p99_us, r.max_us
            );
        }
        out
    }
}

/// Measures per-agent planning wall time on antipodal circle scenarios of
/// growing size up to `max_agents`, `repeats` runs each.
pub fn cmd_bench(max_agents: u32, repeats: u32, seed: u64, quiet: bool) -> BenchReport {
    const BENCH_STEPS: u32 = 200;
    let mut counts: Vec<u32> = [1u32, 2, 4, 6, 10, 20, 30, 50, 75, 100]
        .into_iter()
        .filter(|&n| n < max_agents)
        .collect();
    counts.push(max_agents);

    let mut rows = Vec::new();
    for &n in &counts {
        let mut samples: Vec<f64> = Vec::new();
        for rep in 0..repeats.max(1) {
            let mut scenario = presets::circle(n, seed.wrapping_add(u64::from(rep)));
            scenario.max_steps = BENCH_STEPS;
            let mut world = WorldState::new(&scenario);
            while world.step_index < scenario.max_steps && !world.all_arrived() {
                let outcome = world.step(&scenario);
                samples.extend(outcome.plan_seconds.iter().map(|s| s * 1e6));
            }
        }
        samples.sort_by(f64::total_cmp);
        let cycles = samples.len();
        let mean = samples.iter().sum::<f64>() / cycles as f64;
        let p99 = samples[((cycles - 1) as f64 * 0.99).ceil() as usize];
        let max = *samples.last().unwrap();
        rows.push(BenchRow {
            agents: n,
            cycles,
            mean_us: mean,
            p99_us: p99,
            max_us: max,
        });
    }
    let report = BenchReport { rows };
    if !quiet {
        print!("{}", report.table());
    }
    report
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub samples: u32,
    pub boundary_skipped: u32,
    pub mismatches: u32,
    pub elapsed_s: f64,
}

/// Randomized cross-check of the cone predicate against the brute-force
/// closest-approach oracle. Non-overlapping starts, |f| within the boundary
/// band excluded. Exit status 0 only with zero mismatches.
pub fn cmd_oracle_check(samples: u32, seed: u64, quiet: bool) -> OracleReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boundary = 0u32;
    let mut mismatches = 0u32;
    for _ in 0..samples {
        let radius = rng.gen_range(0.2..1.5);
        let r = Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
            * rng.gen_range(radius + 0.05..4.0);
        let v =
            Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)) * rng.gen_range(0.5..2.0);
        let f = cone_value(r, v, radius).expect("sampled speeds are non-degenerate");
        if f.abs() <= ORACLE_BOUNDARY_BAND {
            boundary += 1;
            continue;
        }
        let predicted = on_collision_course(r, v, radius);
        let (_, d_min) = min_separation(r, v, ORACLE_HORIZON, ORACLE_DT);
        if predicted != (d_min <= radius) {
            mismatches += 1;
            if !quiet {
                eprintln!(
                    "mismatch: r=({}, {}) v=({}, {}) R={radius} f={f} d*={d_min}",
                    r.x, r.y, v.x, v.y
                );
            }
        }
    }
    let report = OracleReport {
        samples,
        boundary_skipped: boundary,
        mismatches,
        elapsed_s: started.elapsed().as_secs_f64(),
    };
    if !quiet {
        println!(
            "oracle-check: {} samples, {} boundary cases skipped, {} mismatches, {:.2} s",
            report.samples, report.boundary_skipped, report.mismatches, report.elapsed_s
        );
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn unknown_scenario_reference_fails_with_parse_code() {
        let err = resolve_scenario("no-such-preset").unwrap_err();
        assert_eq!(err.exit_code(), EXIT_PARSE);
    }

    #[test]
    fn simulate_timeout_has_nonzero_exit() {
        let dir = tempdir().unwrap();
        let report = cmd_simulate(
            "antipodal6",
            dir.path(),
            SimulateOverrides {
                seed: None,
                max_steps: Some(1),
            },
            true,
        )
        .unwrap();
        assert_eq!(report.outcome, Outcome::Timeout);
        assert_eq!(report.outcome.exit_code(), EXIT_TIMEOUT);
        assert!(report.makespan_steps.is_none());
    }

    #[test]
    fn simulate_writes_all_outputs() {
        let dir = tempdir().unwrap();
        let report =
            cmd_simulate("single5", dir.path(), SimulateOverrides::default(), true).unwrap();
        for file in &report.output_files {
            assert!(file.exists(), "missing output {file:?}");
        }
        let csv = std::fs::read_to_string(&report.output_files[1]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "step,id,x,y,vx,vy,ux,uy,feasible");
        let first = lines.next().unwrap();
        assert!(
            first.starts_with("0,0,0,0,"),
            "unexpected first row: {first}"
        );
    }

    #[test]
    fn simulate_is_byte_identical_across_runs() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let a = cmd_simulate("single5", dir_a.path(), SimulateOverrides::default(), true).unwrap();
        let b = cmd_simulate("single5", dir_b.path(), SimulateOverrides::default(), true).unwrap();
        let csv_a = std::fs::read(&a.output_files[1]).unwrap();
        let csv_b = std::fs::read(&b.output_files[1]).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn noise_compare_zero_noise_reports_degenerate_intervals() {
        let dir = tempdir().unwrap();
        let mut study = presets::matched_noise();
        study.noise = Default::default();
        study.study.n_samples = 500;
        let path = dir.path().join("zero.toml");
        std::fs::write(&path, emit_noise_study(&study)).unwrap();
        let report = cmd_noise_compare(path.to_str().unwrap(), dir.path(), None, true).unwrap();
        assert_eq!(report.vo_interval, (0.0, 0.0));
        assert_eq!(report.ivo_interval, (0.0, 0.0));
        assert!(report.width_ratio.is_nan());
    }

    #[test]
    fn noise_compare_agent_only_noise_gives_zero_ivo_width() {
        let dir = tempdir().unwrap();
        let mut study = presets::agent_noise_only();
        study.study.n_samples = 2_000;
        let path = dir.path().join("agent-only.toml");
        std::fs::write(&path, emit_noise_study(&study)).unwrap();
        let report = cmd_noise_compare(path.to_str().unwrap(), dir.path(), None, true).unwrap();
        assert_eq!(report.ivo_interval, (0.0, 0.0));
        assert!(report.vo_interval.1 > report.vo_interval.0);
        assert_eq!(report.width_ratio, 0.0);
    }

    #[test]
    fn oracle_check_small_run_is_clean() {
        let report = cmd_oracle_check(500, 1, true);
        assert_eq!(report.mismatches, 0);
    }

    #[test]
    fn bench_reports_requested_count() {
        let report = cmd_bench(2, 1, 1, true);
        assert!(report.mean_for(2).is_some());
        assert!(report.rows.iter().all(|r| r.cycles > 0));
    }
}
