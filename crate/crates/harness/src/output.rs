//! Output files for one experiment: the aggregated per-scan CSV, an
//! optional CSV per trial, a JSON summary, and the shared ground truth as
//! JSON Lines. All CSV content is a pure function of (config, seed) so
//! repeated runs produce byte-identical files; wall-clock timings appear
//! only in the JSON summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use lrfs_core::filter::FilterConfig;

use crate::config::ExperimentConfig;
use crate::runner::{ExperimentResult, TrialFailure, TrialOutcome};
use crate::Result;

pub const PER_SCAN_HEADER: &str =
    "scan,true_n,est_n_mean,est_n_std,ospa_mean,ospa_loc_mean,ospa_card_mean,hyp_count_mean";
pub const TRIAL_HEADER: &str = "scan,true_n,est_n,ospa,ospa_loc,ospa_card,hyp_count";

#[derive(Serialize)]
struct TrialSummary {
    trial: u32,
    seed: u64,
    wall_seconds: f64,
    bound_violations: u64,
}

#[derive(Serialize)]
struct Aggregates {
    /// Scan-averaged mean OSPA total / localization / cardinality [m].
    mean_ospa: f64,
    mean_ospa_localization: f64,
    mean_ospa_cardinality: f64,
    mean_estimated_cardinality: f64,
    mean_true_cardinality: f64,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    config: &'a ExperimentConfig,
    filter_config: &'a FilterConfig,
    scan_count: usize,
    trials_succeeded: usize,
    trials_failed: usize,
    bound_violations: u64,
    aggregates: Aggregates,
    trials: Vec<TrialSummary>,
    failures: &'a [TrialFailure],
    wall_seconds: f64,
}

impl<'a> SummaryDoc<'a> {
    fn new(result: &'a ExperimentResult) -> Self {
        let scans = result.per_scan.len().max(1) as f64;
        let mean = |f: fn(&crate::runner::PerScanAggregate) -> f64| {
            result.per_scan.iter().map(f).sum::<f64>() / scans
        };
        Self {
            config: &result.config,
            filter_config: &result.filter_config,
            scan_count: result.per_scan.len(),
            trials_succeeded: result.trials.len(),
            trials_failed: result.failures.len(),
            bound_violations: result.bound_violations,
            aggregates: Aggregates {
                mean_ospa: mean(|r| r.ospa_mean),
                mean_ospa_localization: mean(|r| r.ospa_loc_mean),
                mean_ospa_cardinality: mean(|r| r.ospa_card_mean),
                mean_estimated_cardinality: mean(|r| r.est_n_mean),
                mean_true_cardinality: mean(|r| r.true_n as f64),
            },
            trials: result
                .trials
                .iter()
                .map(|t| TrialSummary {
                    trial: t.trial,
                    seed: t.seed,
                    wall_seconds: t.wall_seconds,
                    bound_violations: t.bound_violations,
                })
                .collect(),
            failures: &result.failures,
            wall_seconds: result.wall_seconds,
        }
    }
}

fn write_trial_csv(path: &Path, trial: &TrialOutcome) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{TRIAL_HEADER}")?;
    for r in &trial.rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6},{}",
            r.scan, r.true_n, r.est_n, r.ospa.total, r.ospa.localization, r.ospa.cardinality, r.hyp_count
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Write all experiment outputs into `dir` (created if missing) and
/// return the paths written: `per_scan.csv`, `summary.json`,
/// `truth.jsonl`, and `trial_<t>.csv` per successful trial when the
/// config keeps trials.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let per_scan = dir.join("per_scan.csv");
    {
        let mut w = BufWriter::new(File::create(&per_scan)?);
        writeln!(w, "{PER_SCAN_HEADER}")?;
        for r in &result.per_scan {
            writeln!(
                w,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.scan,
                r.true_n,
                r.est_n_mean,
                r.est_n_std,
                r.ospa_mean,
                r.ospa_loc_mean,
                r.ospa_card_mean,
                r.hyp_count_mean
            )?;
        }
        w.flush()?;
    }
    written.push(per_scan);

    let summary = dir.join("summary.json");
    {
        let mut w = BufWriter::new(File::create(&summary)?);
        serde_json::to_writer_pretty(&mut w, &SummaryDoc::new(result))?;
        writeln!(w)?;
        w.flush()?;
    }
    written.push(summary);

    let truth = dir.join("truth.jsonl");
    {
        let mut w = BufWriter::new(File::create(&truth)?);
        for track in &result.truth.tracks {
            serde_json::to_writer(&mut w, track)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    written.push(truth);

    if result.config.keep_trials {
        for trial in &result.trials {
            let path = dir.join(format!("trial_{}.csv", trial.trial));
            write_trial_csv(&path, trial)?;
            written.push(path);
        }
    }
    Ok(written)
}
