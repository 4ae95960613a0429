//! Classic velocity-obstacle reference and Monte-Carlo noise comparison.
//!
//! The classic formulation builds the collision cone from global agent and
//! obstacle states, so uncertainty in all of them leaks into the cone value.
//! The ego-centric formulation consumes only two ego observations. This
//! module perturbs both pipelines with Gaussian noise and summarizes the
//! resulting cone-value error distributions, which is how the two methods'
//! robustness is compared.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{
    cone_value, estimate_relative_velocity, ConeError, EgoObservation, ObstacleId, ObstacleTrack,
};
use crate::geometry::Vec2;

/// Confidence level of the Monte-Carlo interval comparison.
pub const CONFIDENCE_LEVEL: f64 = 0.99;

/// A run aborts when more than this fraction of samples hits a degenerate
/// relative velocity.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.01;

/// Minimum sample count for a Monte-Carlo comparison.
pub const MIN_MONTE_CARLO_SAMPLES: usize = 100;

/// Minimum sample count for an empirical confidence interval.
pub const MIN_INTERVAL_SAMPLES: usize = 10;

/// Histogram bin count when the Freedman-Diaconis width degenerates.
pub const FALLBACK_BINS: usize = 50;

/// Upper bound on histogram resolution.
pub const MAX_BINS: usize = 1_000;

/// Per-axis Gaussian standard deviations (m or m/s) of every noise source.
///
/// The `agent_*` and `obs_*` fields perturb the global states consumed by
/// the classic formulation; `sigma_ego_obs` perturbs the ego observations
/// consumed by the ego-centric one (and is the only field the simulator
/// uses).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma_agent_pos: f64,
    pub sigma_agent_vel: f64,
    pub sigma_obs_pos: f64,
    pub sigma_obs_vel: f64,
    pub sigma_ego_obs: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("sigma_agent_pos", self.sigma_agent_pos),
            ("sigma_agent_vel", self.sigma_agent_vel),
            ("sigma_obs_pos", self.sigma_obs_pos),
            ("sigma_obs_vel", self.sigma_obs_vel),
            ("sigma_ego_obs", self.sigma_ego_obs),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(format!("{name} must be >= 0, got {value}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("confidence level must lie strictly between 0 and 1, got {level}")]
    InvalidLevel { level: f64 },
    #[error("truth point yields a degenerate relative velocity")]
    DegenerateTruth,
    #[error("{discarded} of {total} samples were degenerate (limit {MAX_DEGENERATE_FRACTION})")]
    TooManyDegenerateSamples { discarded: usize, total: usize },
}

/// The noiseless geometry a Monte-Carlo comparison is run around: global
/// states of one agent and one obstacle at the current instant, the combined
/// radius, and the observation spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthPoint {
    pub agent_pos: Vec2,
    pub agent_vel: Vec2,
    pub obstacle_pos: Vec2,
    pub obstacle_vel: Vec2,
    pub combined_radius: f64,
    pub delta: f64,
}

/// Histogram with explicit edges; bins are half-open except the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Summary of one empirical error distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub histogram: Histogram,
    /// Empirical CDF sampled at the histogram edges: fraction of samples
    /// strictly below each edge, so it runs from 0 at the minimum to 1 at
    /// the maximum.
    pub cdf: Vec<(f64, f64)>,
    pub interval: ConfidenceInterval,
}

/// Classic velocity-obstacle cone value computed from global states.
///
/// Algebraically identical to the ego-centric cone on the reduced relative
/// quantities; kept as the reference the ego-centric path is compared to.
pub fn classic_vo_value(
    agent_pos: Vec2,
    agent_vel: Vec2,
    obs_pos: Vec2,
    obs_vel: Vec2,
    combined_radius: f64,
) -> Result<f64, ConeError> {
    cone_value(obs_pos - agent_pos, obs_vel - agent_vel, combined_radius)
}

/// Linear-interpolation quantile of an ascending-sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

/// Central empirical confidence interval by linear interpolation of order
/// statistics: the `((1-level)/2, 1-(1-level)/2)` quantiles.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64), NoiseError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(NoiseError::InvalidLevel { level });
    }
    if samples.len() < MIN_INTERVAL_SAMPLES {
        return Err(NoiseError::InsufficientSamples {
            got: samples.len(),
            need: MIN_INTERVAL_SAMPLES,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((
        quantile_sorted(&sorted, alpha),
        quantile_sorted(&sorted, 1.0 - alpha),
    ))
}

fn build_histogram(sorted: &[f64]) -> Histogram {
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    if min == max {
        return Histogram {
            edges: vec![min, max],
            counts: vec![n as u64],
        };
    }
    // Freedman-Diaconis width, falling back to a fixed bin count when the
    // IQR collapses.
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let bins = if width > 0.0 && width.is_finite() {
        (((max - min) / width).ceil() as usize).clamp(1, MAX_BINS)
    } else {
        FALLBACK_BINS
    };
    let edges: Vec<f64> = (0..=bins)
        .map(|i| min + (max - min) * i as f64 / bins as f64)
        .collect();
    let mut counts = vec![0u64; bins];
    for &x in sorted {
        let idx = (((x - min) / (max - min)) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Histogram { edges, counts }
}

/// Summarizes a sample set: moments, histogram, empirical CDF and the
/// central confidence interval at `level`.
pub fn summarize(samples: &[f64], level: f64) -> Result<DistributionSummary, NoiseError> {
    let (lo, hi) = confidence_interval(samples, level)?;
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let histogram = build_histogram(&sorted);
    let total: u64 = histogram.counts.iter().sum();
    let mut cdf = Vec::with_capacity(histogram.edges.len());
    let mut below = 0u64;
    for (i, &edge) in histogram.edges.iter().enumerate() {
        cdf.push((edge, below as f64 / total as f64));
        if i < histogram.counts.len() {
            below += histogram.counts[i];
        }
    }
    Ok(DistributionSummary {
        count: n,
        mean,
        variance,
        histogram,
        cdf,
        interval: ConfidenceInterval { level, lo, hi },
    })
}

/// Result of one Monte-Carlo comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloComparison {
    pub vo: DistributionSummary,
    pub ivo: DistributionSummary,
    pub discarded_vo: usize,
    pub discarded_ivo: usize,
}

impl MonteCarloComparison {
    /// Ratio of the ego-centric interval width to the classic one.
    pub fn width_ratio(&self) -> f64 {
        self.ivo.interval.width() / self.vo.interval.width()
    }
}

/// Draws `n_samples` noisy evaluations of both cone pipelines around `truth`
/// and returns the two error distributions.
///
/// Classic path: the global agent/obstacle positions and velocities are
/// perturbed by their sigmas and fed to [`classic_vo_value`]. Ego path: the
/// two exact ego observations implied by `truth` over `delta` are perturbed
/// by `sigma_ego_obs`, then run through [`estimate_relative_velocity`] and
/// [`cone_value`]. Errors are relative to each path's own noiseless value.
/// Degenerate samples are discarded and counted; more than
/// [`MAX_DEGENERATE_FRACTION`] of them is an error.
pub fn monte_carlo_cone_error(
    truth: &TruthPoint,
    noise: &NoiseModel,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<MonteCarloComparison, NoiseError> {
    if n_samples < MIN_MONTE_CARLO_SAMPLES {
        return Err(NoiseError::InsufficientSamples {
            got: n_samples,
            need: MIN_MONTE_CARLO_SAMPLES,
        });
    }
    let radius = truth.combined_radius;
    let vo_baseline = classic_vo_value(
        truth.agent_pos,
        truth.agent_vel,
        truth.obstacle_pos,
        truth.obstacle_vel,
        radius,
    )
    .map_err(|_| NoiseError::DegenerateTruth)?;

    // Exact ego observations implied by the truth point: the current one at
    // time delta and the previous one reconstructed one interval back.
    let ego_prev = (truth.obstacle_pos - truth.obstacle_vel * truth.delta)
        - (truth.agent_pos - truth.agent_vel * truth.delta);
    let ego_curr = truth.obstacle_pos - truth.agent_pos;
    let exact_track = |prev: Vec2, curr: Vec2| ObstacleTrack {
        id: ObstacleId(0),
        prev: EgoObservation::new(prev, 0.0),
        curr: EgoObservation::new(curr, truth.delta),
        radius,
    };
    let ivo_eval = |prev: Vec2, curr: Vec2| -> Result<f64, ConeError> {
        let v = estimate_relative_velocity(&exact_track(prev, curr))?;
        cone_value(curr, v, radius)
    };
    let ivo_baseline = ivo_eval(ego_prev, ego_curr).map_err(|_| NoiseError::DegenerateTruth)?;

    let mut vo_errors = Vec::with_capacity(n_samples);
    let mut ivo_errors = Vec::with_capacity(n_samples);
    let mut discarded_vo = 0usize;
    let mut discarded_ivo = 0usize;

    for _ in 0..n_samples {
        // Fixed draw order keeps the stream layout independent of which
        // sigmas happen to be zero.
        let mut jitter = |sigma: f64| -> Vec2 {
            let nx: f64 = StandardNormal.sample(rng);
            let ny: f64 = StandardNormal.sample(rng);
            Vec2::new(sigma * nx, sigma * ny)
        };
        let agent_pos = truth.agent_pos + jitter(noise.sigma_agent_pos);
        let agent_vel = truth.agent_vel + jitter(noise.sigma_agent_vel);
        let obs_pos = truth.obstacle_pos + jitter(noise.sigma_obs_pos);
        let obs_vel = truth.obstacle_vel + jitter(noise.sigma_obs_vel);
        let prev = ego_prev + jitter(noise.sigma_ego_obs);
        let curr = ego_curr + jitter(noise.sigma_ego_obs);

        match classic_vo_value(agent_pos, agent_vel, obs_pos, obs_vel, radius) {
            Ok(f) => vo_errors.push(f - vo_baseline),
            Err(_) => discarded_vo += 1,
        }
        match ivo_eval(prev, curr) {
            Ok(f) => ivo_errors.push(f - ivo_baseline),
            Err(_) => discarded_ivo += 1,
        }
    }

    let limit = (n_samples as f64 * MAX_DEGENERATE_FRACTION) as usize;
    for discarded in [discarded_vo, discarded_ivo] {
        if discarded > limit {
            return Err(NoiseError::TooManyDegenerateSamples {
                discarded,
                total: n_samples,
            });
        }
    }

    Ok(MonteCarloComparison {
        vo: summarize(&vo_errors, CONFIDENCE_LEVEL)?,
        ivo: summarize(&ivo_errors, CONFIDENCE_LEVEL)?,
        discarded_vo,
        discarded_ivo,
    })
}
