//! Multi-start landscape statistics: seeded launches, histograms, peak
//! detection and robustness of optimized controls.
//!
//! Launches run on the current rayon pool; install a pool with the desired
//! thread count around [`run_landscape`] to limit workers. Every launch
//! writes into its own slot, so results never depend on scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ControlledSystem;
use crate::objectives::{evaluate, ObjectiveSpec};
use crate::optimizer::{init_random_controls, optimize, InitSpec, OptimizerConfig, RunResult, StopReason};
use crate::propagator::{PWCControls, TimeGrid};

pub const DEFAULT_GAP_FACTOR: f64 = 20.0;
/// Gaps at or below this are never split on, whatever the median gap.
pub const MIN_SPLIT_GAP: f64 = 1e-12;
/// Smallest share of the runs each side of a split must hold.
pub const MIN_CLUSTER_FRACTION: f64 = 0.05;

/// Seed of launch `index`: a splitmix64 finalizer applied to
/// `master + (index + 1)·0x9E3779B97F4A7C15` (wrapping).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeConfig {
    pub launches: usize,
    pub master_seed: u64,
    /// Amplitudes for initial controls; the seed field is replaced per launch.
    pub init: InitSpec,
    pub optimizer: OptimizerConfig,
    pub bins: usize,
    pub gap_factor: f64,
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.launches == 0 {
            return Err(Error::Domain("landscape needs at least one launch".into()));
        }
        if self.bins == 0 {
            return Err(Error::Domain("histogram needs at least one bin".into()));
        }
        if !(self.gap_factor > 0.0 && self.gap_factor.is_finite()) {
            return Err(Error::Domain(format!("gap_factor must be positive, got {}", self.gap_factor)));
        }
        self.optimizer.validate()
    }
}

/// Summary of one launch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchRecord {
    pub index: usize,
    pub seed: u64,
    pub final_value: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

impl LaunchRecord {
    pub fn from_run(index: usize, seed: u64, run: &RunResult) -> Self {
        Self { index, seed, final_value: run.final_value, iterations: run.iterations_used, stop: run.stop }
    }

    pub fn is_aborted(&self) -> bool {
        self.stop.is_aborted() || !self.final_value.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub mean: f64,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    /// Run indices in the landscape, or positions in the input list for
    /// [`detect_peaks`].
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LandscapeResult {
    /// One record per launch, in launch order.
    pub records: Vec<LaunchRecord>,
    /// Full optimization results, in launch order.
    pub runs: Vec<RunResult>,
    pub histogram: Histogram,
    pub clusters: Vec<Cluster>,
    pub aborted: usize,
}

impl LandscapeResult {
    /// `(run index, value)` for converged runs, ascending by value.
    pub fn sorted_values(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<_> = self.records.iter().filter(|r| !r.is_aborted()).map(|r| (r.index, r.final_value)).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }

    pub fn converged(&self) -> usize {
        self.records.len() - self.aborted
    }

    /// CSV `run_index,seed,final_value,iterations,flag`, in launch order.
    pub fn write_values_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["run_index", "seed", "final_value", "iterations", "flag"])?;
        for r in &self.records {
            out.write_record([
                r.index.to_string(),
                r.seed.to_string(),
                format!("{:e}", r.final_value),
                r.iterations.to_string(),
                r.stop.as_str().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV `bin_left,bin_right,count`.
    pub fn write_histogram_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["bin_left", "bin_right", "count"])?;
        for (i, c) in self.histogram.counts.iter().enumerate() {
            out.write_record([
                format!("{:e}", self.histogram.edges[i]),
                format!("{:e}", self.histogram.edges[i + 1]),
                c.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn clusters_json(&self) -> serde_json::Value {
        serde_json::json!({
            "launches": self.records.len(),
            "converged": self.converged(),
            "aborted": self.aborted,
            "clusters": self.clusters,
        })
    }
}

/// Runs `launches` independent jobs, job `i` receiving `derive_seed(master_seed, i)`,
/// and aggregates their outcomes. [`run_landscape`] is this harness with
/// random initial controls followed by [`optimize`].
pub fn run_launches<F>(
    launches: usize,
    master_seed: u64,
    bins: usize,
    gap_factor: f64,
    launch: F,
) -> Result<LandscapeResult>
where
    F: Fn(u64) -> Result<RunResult> + Sync,
{
    let runs: Vec<RunResult> = (0..launches)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master_seed, i as u64);
            launch(seed).map(|mut r| {
                r.seed = Some(seed);
                r
            })
        })
        .collect::<Result<_>>()?;
    let records: Vec<LaunchRecord> =
        runs.iter().enumerate().map(|(i, r)| LaunchRecord::from_run(i, r.seed.unwrap_or_default(), r)).collect();

    let (good_idx, good): (Vec<usize>, Vec<f64>) =
        records.iter().filter(|r| !r.is_aborted()).map(|r| (r.index, r.final_value)).unzip();
    let aborted = records.len() - good.len();
    let histogram = histogram(&good, bins);
    let clusters = detect_peaks_with(&good, gap_factor)
        .into_iter()
        .map(|mut c| {
            c.members = c.members.iter().map(|&p| good_idx[p]).collect();
            c
        })
        .collect();
    Ok(LandscapeResult { records, runs, histogram, clusters, aborted })
}

pub fn run_landscape(
    obj: &ObjectiveSpec,
    system: &ControlledSystem,
    grid: TimeGrid,
    config: &LandscapeConfig,
) -> Result<LandscapeResult> {
    config.validate()?;
    if obj.dim() != system.dim() {
        return Err(Error::Dimension(format!("objective dim {} vs system dim {}", obj.dim(), system.dim())));
    }
    run_launches(config.launches, config.master_seed, config.bins, config.gap_factor, |seed| {
        let controls = init_random_controls(system, grid, &InitSpec { seed, ..config.init })?;
        optimize(obj, system, &controls, &config.optimizer)
    })
}

/// Equal-width bins over `[min, max]` of the finite values; the last bin is
/// closed. A degenerate range puts everything in the first bin.
pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let mut counts = vec![0; bins];
    if finite.is_empty() {
        return Histogram { edges: vec![0.0; bins + 1], counts };
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
    for v in finite {
        let b = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

/// [`detect_peaks_with`] at the default gap factor.
pub fn detect_peaks(values: &[f64]) -> Vec<Cluster> {
    detect_peaks_with(values, DEFAULT_GAP_FACTOR)
}

/// Largest-gap clustering of a 1-D sample.
///
/// The sorted sample is split at its largest gap when that gap exceeds
/// `gap_factor` times the median consecutive gap and [`MIN_SPLIT_GAP`], and
/// both sides hold at least [`MIN_CLUSTER_FRACTION`] of the values. One side
/// may then be split once more by the same rule, so at most three clusters
/// come back, ordered by value. Non-finite values are ignored.
pub fn detect_peaks_with(values: &[f64], gap_factor: f64) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_finite()).collect();
    if order.is_empty() {
        return Vec::new();
    }
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let min_side = ((MIN_CLUSTER_FRACTION * sorted.len() as f64).ceil() as usize).max(1);

    #[allow(clippy::single_range_in_vec_init)]
    let mut ranges = vec![0..sorted.len()];
    if let Some((cut, _)) = best_split(&sorted, min_side, gap_factor) {
        let (left, right) = (0..cut, cut..sorted.len());
        let l = best_split(&sorted[left.clone()], min_side, gap_factor);
        let r = best_split(&sorted[right.clone()], min_side, gap_factor).map(|(c, g)| (c + cut, g));
        ranges = match (l, r) {
            (Some((lc, lg)), Some((_, rg))) if lg >= rg => vec![0..lc, lc..cut, right],
            (_, Some((rc, _))) => vec![left, cut..rc, rc..sorted.len()],
            (Some((lc, _)), None) => vec![0..lc, lc..cut, right],
            (None, None) => vec![left, right],
        };
    }
    ranges
        .into_iter()
        .map(|r| {
            let part = &sorted[r.clone()];
            Cluster {
                mean: part.iter().sum::<f64>() / part.len() as f64,
                count: part.len(),
                min: part[0],
                max: part[part.len() - 1],
                members: order[r].to_vec(),
            }
        })
        .collect()
}

/// Cut position and gap of an admissible split of a sorted slice.
fn best_split(sorted: &[f64], min_side: usize, gap_factor: f64) -> Option<(usize, f64)> {
    if sorted.len() < 2 {
        return None;
    }
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let mut by_size = gaps.clone();
    by_size.sort_by(f64::total_cmp);
    let n = by_size.len();
    let median = if n % 2 == 1 { by_size[n / 2] } else { 0.5 * (by_size[n / 2 - 1] + by_size[n / 2]) };
    // First occurrence of the largest gap keeps ties deterministic.
    let (at, &gap) =
        gaps.iter().enumerate().fold((0, &gaps[0]), |best, (i, g)| if *g > *best.1 { (i, g) } else { best });
    let cut = at + 1;
    let admissible =
        gap > gap_factor * median && gap > MIN_SPLIT_GAP && cut >= min_side && sorted.len() - cut >= min_side;
    admissible.then_some((cut, gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessLevel {
    pub epsilon: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub nominal: f64,
    pub samples: usize,
    pub levels: Vec<RobustnessLevel>,
}

impl RobustnessReport {
    /// CSV `epsilon,mean,std`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["epsilon", "mean", "std"])?;
        for l in &self.levels {
            out.write_record([format!("{:e}", l.epsilon), format!("{:e}", l.mean), format!("{:e}", l.std)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Objective statistics under relative noise: each entry of `u` and `w` is
/// multiplied by `1 + ε·ξ` with independent `ξ ~ U(−1, 1)`. Level `i` draws
/// from `derive_seed(seed, i)`. The reported spread is the population
/// standard deviation over the `samples` evaluations.
pub fn robustness_scan(
    obj: &ObjectiveSpec,
    system: &ControlledSystem,
    controls: &PWCControls,
    levels: &[f64],
    samples: usize,
    seed: u64,
) -> Result<RobustnessReport> {
    if samples == 0 {
        return Err(Error::Domain("robustness scan needs at least one sample per level".into()));
    }
    if let Some(e) = levels.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::Domain(format!("perturbation level must be nonnegative, got {e}")));
    }
    controls.check_system(system)?;
    let nominal = evaluate(obj, system, controls)?;
    let base = controls.to_params();
    let levels = levels
        .par_iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let (mut mean, mut m2) = (0.0, 0.0);
            for s in 0..samples {
                let perturbed: Vec<f64> =
                    base.iter().map(|x| x * (1.0 + epsilon * rng.random_range(-1.0..=1.0))).collect();
                let v = evaluate(obj, system, &controls.with_params(&perturbed)?)?;
                let delta = v - mean;
                mean += delta / (s + 1) as f64;
                m2 += delta * (v - mean);
            }
            Ok(RobustnessLevel { epsilon, mean, std: (m2 / samples as f64).sqrt() })
        })
        .collect::<Result<_>>()?;
    Ok(RobustnessReport { nominal, samples, levels })
}
