//! End-to-end sanity oracle: with perfect detection, zero clutter, and
//! near-zero measurement noise, every filter must report exactly the true
//! number of targets at every scan, allowing only a short confirmation lag
//! after each birth. Any ghost track, missed death, or lost target shows
//! up as a hard cardinality mismatch.
//!
//! The targets fly straight lines (velocity continuous through each
//! waypoint). With perfect detection there is no missed-detection branch,
//! which in the standard scenario is what carries a track across its
//! scripted velocity step; here that escape hatch must not be needed.

use nalgebra::DVector;

use lrfs_core::filter::{
    dglmb_step, extract_dglmb_estimates, extract_estimates, lmb_estimates, lmb_step, mdglmb_step,
    FilterConfig, FilterKind, SensorKind, SensorModel,
};
use lrfs_core::metrics::{ospa, OspaConfig};
use lrfs_core::rfs::{DGlmbDensity, LmbParams, MdGlmbDensity};
use lrfs_core::scenario::{generate_scan, generate_truth, GroundTruth, ScenarioConfig, TargetScript};

/// Scans granted to confirm a newborn target before its absence counts as
/// a failure.
const BIRTH_LAG: u32 = 3;

/// Constant-velocity flight plan: the waypoint lies on the straight line
/// from the birth site, so the velocity never changes.
fn straight_line(
    site: [f64; 2],
    birth_site: u32,
    birth_scan: u32,
    death_scan: u32,
    velocity: [f64; 2],
) -> TargetScript {
    let waypoint_scan = birth_scan + 50;
    let dt = 5.0 * f64::from(waypoint_scan - birth_scan);
    TargetScript {
        birth_site,
        birth_scan,
        death_scan,
        waypoint: [site[0] + velocity[0] * dt, site[1] + velocity[1] * dt],
        waypoint_scan,
        exit_velocity: velocity,
    }
}

fn near_ideal_scenario() -> ScenarioConfig {
    let mut scenario = ScenarioConfig::radar1();
    let sensor = &mut scenario.sensors[0];
    sensor.detection_probability = 1.0;
    sensor.clutter.rate = 0.0;
    // A tenth of the nominal noise: small enough that every association
    // is unambiguous, but not degenerate. Noise far below the per-scan
    // process diffusion would push the position/velocity gains onto the
    // marginal-stability boundary of the constant-velocity filter.
    if let SensorKind::Radar { sigma_bearing, sigma_range, .. } = &mut sensor.kind {
        *sigma_bearing = 0.1_f64.to_radians();
        *sigma_range = 10.0;
    }
    // Same staggered lifetimes as the standard scenario, but on straight,
    // well-separated lines that keep a few kilometers from the sensor.
    scenario.targets = vec![
        straight_line([0.0, 25000.0], 2, 0, 200, [40.0, 10.0]),
        straight_line([25000.0, 0.0], 5, 0, 200, [-15.0, 35.0]),
        straight_line([50000.0, 40000.0], 8, 20, 160, [-45.0, -20.0]),
        straight_line([0.0, 5000.0], 3, 30, 200, [40.0, 20.0]),
        straight_line([10000.0, 50000.0], 10, 40, 180, [25.0, -45.0]),
    ];
    scenario.validate().unwrap();
    scenario
}

/// Estimated (cardinality, positions) per scan from a single filtering
/// pass over noise-free-truth measurements.
fn run_filter(
    scenario: &ScenarioConfig,
    truth: &GroundTruth,
    kind: FilterKind,
    seed: u64,
) -> Vec<(usize, Vec<DVector<f64>>)> {
    let motion = scenario.motion_model().unwrap();
    let mut config = FilterConfig::for_kind(kind);
    // With perfect detection there is no miss branch, so a maneuver-scan
    // innovation outside the gate would leave a track with no feasible
    // explanation at all. The gate is a pruning heuristic, not part of the
    // model; the far-tail likelihood still dwarfs the death alternative.
    config.truncation.gate_probability = 1.0;
    let mut md = MdGlmbDensity::empty();
    let mut d = DGlmbDensity::empty();
    let mut lmb = LmbParams { tracks: Vec::new() };
    let mut out = Vec::with_capacity(scenario.scan_count as usize);
    for scan in 0..scenario.scan_count {
        let sensors: Vec<(SensorModel, Vec<DVector<f64>>)> = scenario
            .sensors
            .iter()
            .cloned()
            .zip(generate_scan(truth, &scenario.sensors, scan, seed))
            .collect();
        let estimates = match kind {
            FilterKind::MdGlmb => {
                let (next, _) =
                    mdglmb_step(&md, scan, &motion, &scenario.birth, &sensors, &config).unwrap();
                md = next;
                extract_estimates(&md)
            }
            FilterKind::DGlmb => {
                let (next, _) =
                    dglmb_step(&d, scan, &motion, &scenario.birth, &sensors, &config).unwrap();
                d = next;
                extract_dglmb_estimates(&d)
            }
            FilterKind::Lmb => {
                let (next, _) =
                    lmb_step(&lmb, scan, &motion, &scenario.birth, &sensors, &config).unwrap();
                lmb = next;
                lmb_estimates(&lmb)
            }
        };
        let positions = estimates
            .iter()
            .map(|(_, x)| DVector::from_column_slice(&[x[0], x[2]]))
            .collect();
        out.push((estimates.len(), positions));
    }
    out
}

#[test]
fn near_ideal_observation_locks_cardinality_to_truth() {
    let scenario = near_ideal_scenario();
    let truth = generate_truth(&scenario, 0).unwrap();

    // Scans inside a birth confirmation window are exempt from the exact
    // match; the windows are read off the true cardinality profile.
    let mut exempt = vec![false; scenario.scan_count as usize];
    for scan in 0..scenario.scan_count {
        let born = scan == 0 || truth.cardinality(scan) > truth.cardinality(scan - 1);
        if born {
            for s in scan..(scan + BIRTH_LAG).min(scenario.scan_count) {
                exempt[s as usize] = true;
            }
        }
    }

    let ospa_config = OspaConfig::default();
    for kind in [FilterKind::MdGlmb, FilterKind::DGlmb, FilterKind::Lmb] {
        let per_scan = run_filter(&scenario, &truth, kind, 7);
        for (scan, (est_n, positions)) in per_scan.iter().enumerate() {
            if exempt[scan] {
                continue;
            }
            let true_n = truth.cardinality(scan as u32);
            assert_eq!(
                *est_n, true_n,
                "{kind}: scan {scan} estimated {est_n} targets, truth has {true_n}"
            );
            // Steady-state errors are meters; the loose bound only rules
            // out a mismatched or drifting track, which would cost
            // hundreds of meters.
            let error = ospa(positions, &truth.positions_at(scan as u32), &ospa_config).unwrap();
            assert!(
                error.total < 100.0,
                "{kind}: scan {scan} OSPA {:.1} m despite matched cardinality",
                error.total
            );
        }
    }
}
