//! Trial execution and cross-trial aggregation.
//!
//! Ground truth is generated once per experiment; every trial reuses it
//! with its own derived seed, so trajectories are shared while
//! measurement noise and clutter are independent. Trials run in parallel
//! and are reduced in trial order, keeping all aggregates bit-stable.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use lrfs_core::filter::{
    dglmb_step, extract_dglmb_estimates, extract_estimates, lmb_estimates, lmb_step, mdglmb_step,
    FilterConfig, FilterKind, SensorModel,
};
use lrfs_core::metrics::{ospa, OspaConfig, OspaDistance};
use lrfs_core::rfs::{DGlmbDensity, LmbParams, MdGlmbDensity};
use lrfs_core::scenario::{generate_scan, generate_truth, GroundTruth, ScenarioConfig};
use lrfs_core::Label;

use crate::config::ExperimentConfig;
use crate::{Error, Result};

/// Seed for one trial, derived from the master seed by a counter-based
/// split (splitmix64 finalizer) so trials are decorrelated and
/// independent of execution order.
pub fn trial_seed(master: u64, trial: u32) -> u64 {
    let mut z = master.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One scan of one trial.
#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub scan: u32,
    pub true_n: usize,
    pub est_n: usize,
    pub ospa: OspaDistance,
    /// Hypothesis count after the full step (track count for the
    /// multi-Bernoulli filter).
    pub hyp_count: usize,
}

/// A completed trial: per-scan rows plus step-invariant accounting.
#[derive(Clone, Debug, Serialize)]
pub struct TrialOutcome {
    pub trial: u32,
    pub seed: u64,
    pub rows: Vec<ScanRow>,
    /// Scans where the merged hypothesis count exceeded the predicted
    /// count (must stay zero for the marginalized filter).
    pub bound_violations: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialFailure {
    pub trial: u32,
    pub seed: u64,
    pub message: String,
}

/// Per-scan statistics across the successful trials. The standard
/// deviation uses the n-1 (sample) normalization and is zero for a single
/// trial.
#[derive(Clone, Debug, Serialize)]
pub struct PerScanAggregate {
    pub scan: u32,
    pub true_n: usize,
    pub est_n_mean: f64,
    pub est_n_std: f64,
    pub ospa_mean: f64,
    pub ospa_loc_mean: f64,
    pub ospa_card_mean: f64,
    pub hyp_count_mean: f64,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub scenario: ScenarioConfig,
    pub filter_config: FilterConfig,
    pub truth: GroundTruth,
    pub trials: Vec<TrialOutcome>,
    pub failures: Vec<TrialFailure>,
    pub bound_violations: u64,
    pub per_scan: Vec<PerScanAggregate>,
    pub wall_seconds: f64,
}

impl ExperimentResult {
    /// Scan-averaged mean OSPA total, the headline comparison number.
    pub fn mean_ospa(&self) -> f64 {
        let n = self.per_scan.len().max(1) as f64;
        self.per_scan.iter().map(|r| r.ospa_mean).sum::<f64>() / n
    }
}

enum FilterState {
    Md(MdGlmbDensity),
    D(DGlmbDensity),
    Lmb(LmbParams),
}

fn planar(points: &[(Label, DVector<f64>)]) -> Vec<DVector<f64>> {
    points.iter().map(|(_, s)| DVector::from_column_slice(&[s[0], s[2]])).collect()
}

/// Run the selected filter once over every scan of the scenario,
/// measuring against the shared truth. Returns the per-scan rows and the
/// number of hypothesis-bound violations observed.
pub fn run_trial(
    scenario: &ScenarioConfig,
    kind: FilterKind,
    filter_config: &FilterConfig,
    ospa_config: &OspaConfig,
    truth: &GroundTruth,
    seed: u64,
) -> Result<(Vec<ScanRow>, u64)> {
    let motion = scenario.motion_model()?;
    let mut state = match kind {
        FilterKind::MdGlmb => FilterState::Md(MdGlmbDensity::empty()),
        FilterKind::DGlmb => FilterState::D(DGlmbDensity::empty()),
        FilterKind::Lmb => FilterState::Lmb(LmbParams { tracks: Vec::new() }),
    };
    let mut rows = Vec::with_capacity(scenario.scan_count as usize);
    let mut violations = 0u64;
    for scan in 0..scenario.scan_count {
        let measurements = generate_scan(truth, &scenario.sensors, scan, seed);
        let sensors: Vec<(SensorModel, Vec<DVector<f64>>)> =
            scenario.sensors.iter().cloned().zip(measurements).collect();
        let (estimates, hyp_count) = match &mut state {
            FilterState::Md(density) => {
                let (next, diag) =
                    mdglmb_step(density, scan, &motion, &scenario.birth, &sensors, filter_config)?;
                if diag.hypotheses_final > diag.hypotheses_after_predict {
                    violations += 1;
                }
                let est = extract_estimates(&next);
                let count = next.hypotheses.len();
                *density = next;
                (est, count)
            }
            FilterState::D(density) => {
                let (next, _) =
                    dglmb_step(density, scan, &motion, &scenario.birth, &sensors, filter_config)?;
                let est = extract_dglmb_estimates(&next);
                let count = next.hypotheses.len();
                *density = next;
                (est, count)
            }
            FilterState::Lmb(lmb) => {
                let (next, _) =
                    lmb_step(lmb, scan, &motion, &scenario.birth, &sensors, filter_config)?;
                let est = lmb_estimates(&next);
                let count = next.tracks.len();
                *lmb = next;
                (est, count)
            }
        };
        let est_positions = planar(&estimates);
        let true_positions = truth.positions_at(scan);
        let distance = ospa(&est_positions, &true_positions, ospa_config)?;
        rows.push(ScanRow {
            scan,
            true_n: true_positions.len(),
            est_n: est_positions.len(),
            ospa: distance,
            hyp_count,
        });
    }
    Ok((rows, violations))
}

fn aggregate(truth: &GroundTruth, scan_count: u32, trials: &[TrialOutcome]) -> Vec<PerScanAggregate> {
    let n = trials.len() as f64;
    (0..scan_count)
        .map(|scan| {
            let i = scan as usize;
            let est: Vec<f64> = trials.iter().map(|t| t.rows[i].est_n as f64).collect();
            let mean = est.iter().sum::<f64>() / n;
            let std = if trials.len() > 1 {
                (est.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            PerScanAggregate {
                scan,
                true_n: truth.cardinality(scan),
                est_n_mean: mean,
                est_n_std: std,
                ospa_mean: trials.iter().map(|t| t.rows[i].ospa.total).sum::<f64>() / n,
                ospa_loc_mean: trials.iter().map(|t| t.rows[i].ospa.localization).sum::<f64>() / n,
                ospa_card_mean: trials.iter().map(|t| t.rows[i].ospa.cardinality).sum::<f64>() / n,
                hyp_count_mean: trials.iter().map(|t| t.rows[i].hyp_count as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Run every trial of an experiment and aggregate. Individual trial
/// failures are recorded and excluded from the statistics; the experiment
/// fails only if no trial succeeds.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let scenario = config.scenario.resolve()?;
    let filter_config = config.filter_config();
    filter_config.validate()?;
    let truth = generate_truth(&scenario, config.seed)?;

    let start = Instant::now();
    let outcomes: Vec<(u32, u64, std::result::Result<(Vec<ScanRow>, u64), String>, f64)> =
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(config.seed, trial);
                let t = Instant::now();
                let result =
                    run_trial(&scenario, config.filter, &filter_config, &config.ospa, &truth, seed)
                        .map_err(|e| e.to_string());
                (trial, seed, result, t.elapsed().as_secs_f64())
            })
            .collect();

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    let mut bound_violations = 0;
    for (trial, seed, result, wall_seconds) in outcomes {
        match result {
            Ok((rows, violations)) => {
                bound_violations += violations;
                trials.push(TrialOutcome {
                    trial,
                    seed,
                    rows,
                    bound_violations: violations,
                    wall_seconds,
                });
            }
            Err(message) => failures.push(TrialFailure { trial, seed, message }),
        }
    }
    if trials.is_empty() {
        let first = failures.first().map(|f| f.message.clone()).unwrap_or_default();
        return Err(Error::Config(format!("every trial failed; first error: {first}")));
    }
    let per_scan = aggregate(&truth, scenario.scan_count, &trials);
    Ok(ExperimentResult {
        config: config.clone(),
        scenario,
        filter_config,
        truth,
        trials,
        failures,
        bound_violations,
        per_scan,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
