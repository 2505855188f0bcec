//! Surveillance scenario synthesis: scripted constant-velocity ground
//! truth, sensor measurement generation with detection gaps and Poisson
//! clutter, and the two standard experiment configurations (one
//! bearing/range radar; three range-only receivers).
//!
//! Truth trajectories are deterministic scripts: each target starts at a
//! birth-site mean, flies a constant-velocity leg to a shared waypoint,
//! switches to its exit velocity there, and continues until its death
//! scan. Randomness enters only through measurement synthesis, which is
//! reproducible per (trial seed, sensor, scan) via counter-addressed RNG
//! streams.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{
    BirthComponent, BirthModel, ClutterModel, MotionModel, SensorKind, SensorModel,
};
use crate::gaussian::{Gaussian, GaussianMixture, MeasurementModel};
use crate::Label;

/// Wrap an angle to the interval `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r <= -PI {
        r += two_pi;
    } else if r > PI {
        r -= two_pi;
    }
    r
}

/// Nearly-constant-velocity transition and process-noise matrices for the
/// state layout `(px, vx, py, vy)`, sampled every `sample_period` seconds
/// with white acceleration of standard deviation `sigma_accel`.
pub fn ncv_matrices(sample_period: f64, sigma_accel: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = sample_period;
    let f = DMatrix::from_row_slice(4, 4, &[
        1.0, t, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, t,
        0.0, 0.0, 0.0, 1.0,
    ]);
    let s = sigma_accel * sigma_accel;
    let (q11, q12, q22) = (s * t.powi(4) / 4.0, s * t.powi(3) / 2.0, s * t * t);
    let q = DMatrix::from_row_slice(4, 4, &[
        q11, q12, 0.0, 0.0,
        q12, q22, 0.0, 0.0,
        0.0, 0.0, q11, q12,
        0.0, 0.0, q12, q22,
    ]);
    (f, q)
}

/// Bearing and range of a state as seen from `sensor`; the bearing is
/// undefined at the sensor position itself.
pub fn radar_measurement(state: &DVector<f64>, sensor: [f64; 2]) -> Result<DVector<f64>> {
    let dx = state[0] - sensor[0];
    let dy = state[2] - sensor[1];
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::NumericalFailure("bearing undefined at the sensor position"));
    }
    Ok(DVector::from_column_slice(&[dy.atan2(dx), dx.hypot(dy)]))
}

/// Range of a state from `sensor` (time-of-arrival receiver); zero range
/// is rejected so downstream range gates stay well-conditioned.
pub fn toa_measurement(state: &DVector<f64>, sensor: [f64; 2]) -> Result<f64> {
    let dx = state[0] - sensor[0];
    let dy = state[2] - sensor[1];
    let r = dx.hypot(dy);
    if r == 0.0 {
        return Err(Error::NumericalFailure("target at the receiver position"));
    }
    Ok(r)
}

/// Deterministic flight plan of one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScript {
    /// Birth-model component index the target starts from (at its mean).
    pub birth_site: u32,
    pub birth_scan: u32,
    /// First scan at which the target no longer exists (alive on
    /// `[birth_scan, death_scan)`).
    pub death_scan: u32,
    /// Position reached exactly at `waypoint_scan`.
    pub waypoint: [f64; 2],
    pub waypoint_scan: u32,
    /// Velocity from the waypoint onward.
    pub exit_velocity: [f64; 2],
}

/// Complete experiment description: region, timing, dynamics, sensors,
/// birth model, and target scripts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Surveillance region bounds per position axis.
    pub region: Vec<(f64, f64)>,
    pub scan_count: u32,
    /// Seconds between scans.
    pub sample_period: f64,
    /// Process-noise acceleration standard deviation (m/s^2).
    pub sigma_accel: f64,
    pub survival_probability: f64,
    pub sensors: Vec<SensorModel>,
    pub birth: BirthModel,
    pub targets: Vec<TargetScript>,
}

/// Ten birth sites around the region boundary, each a multi-Bernoulli
/// component with existence 0.09 and a broad single-Gaussian density
/// centered at the site with zero velocity.
fn standard_birth() -> BirthModel {
    let sites: [(f64, f64); 10] = [
        (0.0, 40000.0),
        (0.0, 25000.0),
        (0.0, 5000.0),
        (5000.0, 0.0),
        (25000.0, 0.0),
        (36000.0, 0.0),
        (50000.0, 15000.0),
        (50000.0, 40000.0),
        (40000.0, 50000.0),
        (10000.0, 50000.0),
    ];
    let components = sites
        .iter()
        .enumerate()
        .map(|(i, &(px, py))| BirthComponent {
            index: (i + 1) as u32,
            existence: 0.09,
            density: GaussianMixture::single(Gaussian::new(
                DVector::from_column_slice(&[px, 0.0, py, 0.0]),
                DMatrix::from_diagonal(&DVector::from_column_slice(&[1e6, 1e4, 1e6, 1e4])),
            )),
        })
        .collect();
    BirthModel { components }
}

/// Five targets with staggered lifetimes that all pass through one
/// rendezvous waypoint near the region center.
fn standard_targets() -> Vec<TargetScript> {
    const WAYPOINT: [f64; 2] = [24000.0, 26000.0];
    vec![
        TargetScript {
            birth_site: 2,
            birth_scan: 0,
            death_scan: 200,
            waypoint: WAYPOINT,
            waypoint_scan: 90,
            exit_velocity: [36.0, 27.0],
        },
        TargetScript {
            birth_site: 5,
            birth_scan: 0,
            death_scan: 200,
            waypoint: WAYPOINT,
            waypoint_scan: 98,
            exit_velocity: [-29.0, 39.0],
        },
        TargetScript {
            birth_site: 8,
            birth_scan: 20,
            death_scan: 160,
            waypoint: WAYPOINT,
            waypoint_scan: 106,
            exit_velocity: [-40.0, -20.0],
        },
        TargetScript {
            birth_site: 3,
            birth_scan: 30,
            death_scan: 200,
            waypoint: WAYPOINT,
            waypoint_scan: 114,
            exit_velocity: [30.0, -35.0],
        },
        TargetScript {
            birth_site: 10,
            birth_scan: 40,
            death_scan: 180,
            waypoint: WAYPOINT,
            waypoint_scan: 122,
            exit_velocity: [-20.0, -50.0],
        },
    ]
}

impl ScenarioConfig {
    /// One bearing/range radar at the region center watching five
    /// crossing targets over 200 scans.
    pub fn radar1() -> Self {
        Self {
            region: vec![(0.0, 50000.0), (0.0, 50000.0)],
            scan_count: 200,
            sample_period: 5.0,
            sigma_accel: 5.0,
            survival_probability: 0.99,
            sensors: vec![SensorModel {
                kind: SensorKind::Radar {
                    position: [25000.0, 25000.0],
                    sigma_bearing: 1.0_f64.to_radians(),
                    sigma_range: 100.0,
                },
                detection_probability: 0.85,
                clutter: ClutterModel { rate: 15.0, region: vec![(-PI, PI), (0.0, 40000.0)] },
            }],
            birth: standard_birth(),
            targets: standard_targets(),
        }
    }

    /// Three time-of-arrival (range-only) receivers at the region corners
    /// and the north edge, updated sequentially each scan; same truth as
    /// the radar experiment.
    pub fn toa3() -> Self {
        let toa = |position: [f64; 2]| SensorModel {
            kind: SensorKind::Toa { position, sigma_range: 100.0 },
            detection_probability: 0.85,
            clutter: ClutterModel { rate: 15.0, region: vec![(0.0, 75000.0)] },
        };
        Self {
            sensors: vec![toa([0.0, 0.0]), toa([50000.0, 0.0]), toa([25000.0, 50000.0])],
            ..Self::radar1()
        }
    }

    pub fn motion_model(&self) -> Result<MotionModel> {
        let (f, q) = ncv_matrices(self.sample_period, self.sigma_accel);
        MotionModel::new(f, q, self.survival_probability)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scan_count == 0 {
            return Err(Error::InvalidParameter("scan_count must be positive".into()));
        }
        if !(self.sample_period > 0.0) || !self.sample_period.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample_period must be positive, got {}",
                self.sample_period
            )));
        }
        if !(self.sigma_accel >= 0.0) || !self.sigma_accel.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_accel must be nonnegative, got {}",
                self.sigma_accel
            )));
        }
        if !(0.0..=1.0).contains(&self.survival_probability) {
            return Err(Error::InvalidParameter(format!(
                "survival probability {} outside [0, 1]",
                self.survival_probability
            )));
        }
        if self.region.len() != 2 || self.region.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidParameter(
                "region must give two axes with low < high".into(),
            ));
        }
        if self.sensors.is_empty() {
            return Err(Error::InvalidParameter("at least one sensor required".into()));
        }
        for s in &self.sensors {
            s.validate()?;
        }
        self.birth.validate()?;
        let mut labels = Vec::new();
        for t in &self.targets {
            if !self.birth.components.iter().any(|c| c.index == t.birth_site) {
                return Err(Error::InvalidParameter(format!(
                    "target birth site {} has no birth component",
                    t.birth_site
                )));
            }
            if !(t.birth_scan < t.waypoint_scan && t.waypoint_scan < t.death_scan) {
                return Err(Error::InvalidParameter(format!(
                    "target scans must satisfy birth {} < waypoint {} < death {}",
                    t.birth_scan, t.waypoint_scan, t.death_scan
                )));
            }
            if t.death_scan > self.scan_count {
                return Err(Error::InvalidParameter(format!(
                    "target death scan {} exceeds scan count {}",
                    t.death_scan, self.scan_count
                )));
            }
            labels.push(Label::new(t.birth_scan, t.birth_site));
        }
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "two targets share a birth scan and birth site".into(),
            ));
        }
        Ok(())
    }
}

/// One target's realized trajectory; `states[i]` is the state at scan
/// `birth_scan + i`, layout `(px, vx, py, vy)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTrack {
    pub label: Label,
    pub birth_scan: u32,
    pub death_scan: u32,
    #[serde(with = "state_rows")]
    pub states: Vec<DVector<f64>>,
}

impl TruthTrack {
    pub fn alive_at(&self, scan: u32) -> bool {
        scan >= self.birth_scan && scan < self.death_scan
    }

    pub fn state_at(&self, scan: u32) -> Option<&DVector<f64>> {
        self.alive_at(scan).then(|| &self.states[(scan - self.birth_scan) as usize])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tracks: Vec<TruthTrack>,
}

impl GroundTruth {
    pub fn cardinality(&self, scan: u32) -> usize {
        self.tracks.iter().filter(|t| t.alive_at(scan)).count()
    }

    /// Labels and full states of the targets alive at a scan, in label
    /// order.
    pub fn states_at(&self, scan: u32) -> Vec<(Label, &DVector<f64>)> {
        self.tracks.iter().filter_map(|t| t.state_at(scan).map(|s| (t.label, s))).collect()
    }

    /// Planar positions of the targets alive at a scan (for OSPA against
    /// position estimates).
    pub fn positions_at(&self, scan: u32) -> Vec<DVector<f64>> {
        self.states_at(scan)
            .into_iter()
            .map(|(_, s)| DVector::from_column_slice(&[s[0], s[2]]))
            .collect()
    }
}

/// Realize the scripted trajectories. The result is fully deterministic;
/// the seed parameter is accepted so randomized truth variants can slot
/// in behind the same signature.
pub fn generate_truth(config: &ScenarioConfig, _seed: u64) -> Result<GroundTruth> {
    config.validate()?;
    let (f, _) = ncv_matrices(config.sample_period, config.sigma_accel);
    let mut tracks = Vec::new();
    for script in &config.targets {
        let site = config
            .birth
            .components
            .iter()
            .find(|c| c.index == script.birth_site)
            .expect("birth site checked by validate");
        let mean = site.density.mean();
        let leg_seconds =
            (script.waypoint_scan - script.birth_scan) as f64 * config.sample_period;
        let mut state = DVector::from_column_slice(&[
            mean[0],
            (script.waypoint[0] - mean[0]) / leg_seconds,
            mean[2],
            (script.waypoint[1] - mean[2]) / leg_seconds,
        ]);
        let mut states = Vec::with_capacity((script.death_scan - script.birth_scan) as usize);
        for scan in script.birth_scan..script.death_scan {
            if scan == script.waypoint_scan {
                // The approach leg lands on the waypoint here; pin the
                // position and turn onto the exit velocity.
                state[0] = script.waypoint[0];
                state[2] = script.waypoint[1];
                state[1] = script.exit_velocity[0];
                state[3] = script.exit_velocity[1];
            }
            states.push(state.clone());
            state = &f * &state;
        }
        tracks.push(TruthTrack {
            label: Label::new(script.birth_scan, script.birth_site),
            birth_scan: script.birth_scan,
            death_scan: script.death_scan,
            states,
        });
    }
    tracks.sort_by_key(|t| t.label);
    Ok(GroundTruth { tracks })
}

/// One sensor's measurement set for one scan: per live target a
/// Bernoulli detection of `h(state)` plus sensor noise (bearings wrapped),
/// then Poisson clutter uniform over the sensor's clutter region.
///
/// The generator is addressed by `(trial_seed, sensor_index, scan)`, so
/// any scan of any sensor can be regenerated independently and the output
/// never depends on evaluation order.
pub fn generate_measurements(
    truth: &GroundTruth,
    sensor: &SensorModel,
    sensor_index: usize,
    scan: u32,
    trial_seed: u64,
) -> Vec<DVector<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(trial_seed);
    rng.set_stream(((sensor_index as u64) << 32) | scan as u64);
    let mut out = Vec::new();
    for (_, state) in truth.states_at(scan) {
        if !rng.gen_bool(sensor.detection_probability) {
            continue;
        }
        let mut z = sensor.kind.measure(state);
        match sensor.kind {
            SensorKind::Radar { sigma_bearing, sigma_range, .. } => {
                let nb: f64 = rng.sample(StandardNormal);
                let nr: f64 = rng.sample(StandardNormal);
                z[0] = wrap_angle(z[0] + sigma_bearing * nb);
                z[1] += sigma_range * nr;
            }
            SensorKind::Toa { sigma_range, .. } => {
                let n: f64 = rng.sample(StandardNormal);
                z[0] += sigma_range * n;
            }
            SensorKind::Position { sigma } => {
                for i in 0..z.len() {
                    let n: f64 = rng.sample(StandardNormal);
                    z[i] += sigma * n;
                }
            }
        }
        out.push(z);
    }
    if sensor.clutter.rate > 0.0 {
        let count = Poisson::new(sensor.clutter.rate)
            .map(|d| d.sample(&mut rng) as usize)
            .unwrap_or(0);
        for _ in 0..count {
            out.push(DVector::from_iterator(
                sensor.clutter.region.len(),
                sensor.clutter.region.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)),
            ));
        }
    }
    out
}

/// All sensors' measurement sets for one scan.
pub fn generate_scan(
    truth: &GroundTruth,
    sensors: &[SensorModel],
    scan: u32,
    trial_seed: u64,
) -> Vec<Vec<DVector<f64>>> {
    sensors
        .iter()
        .enumerate()
        .map(|(i, s)| generate_measurements(truth, s, i, scan, trial_seed))
        .collect()
}

/// JSON-friendly snapshot of one scan's measurements across sensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFrame {
    pub scan: u32,
    /// `sensors[s][i]` is the i-th measurement of sensor s.
    pub sensors: Vec<Vec<Vec<f64>>>,
}

impl MeasurementFrame {
    pub fn from_vectors(scan: u32, sensors: &[Vec<DVector<f64>>]) -> Self {
        Self {
            scan,
            sensors: sensors
                .iter()
                .map(|zs| zs.iter().map(|z| z.iter().copied().collect()).collect())
                .collect(),
        }
    }

    pub fn to_vectors(&self) -> Vec<Vec<DVector<f64>>> {
        self.sensors
            .iter()
            .map(|zs| zs.iter().map(|z| DVector::from_column_slice(z)).collect())
            .collect()
    }
}

mod state_rows {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(states: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = states.iter().map(|v| v.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(DVector::from_vec).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_hits_half_open_interval() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(2.5 * PI) - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn ncv_matrix_entries() {
        let (f, q) = ncv_matrices(5.0, 5.0);
        assert_eq!(f[(0, 1)], 5.0);
        assert_eq!(f[(2, 3)], 5.0);
        assert_eq!(f[(0, 0)], 1.0);
        assert_eq!(f[(1, 0)], 0.0);
        assert!((q[(0, 0)] - 3906.25).abs() < 1e-9);
        assert!((q[(0, 1)] - 1562.5).abs() < 1e-9);
        assert!((q[(1, 1)] - 625.0).abs() < 1e-9);
        assert_eq!(q[(0, 2)], 0.0);
        let (_, q0) = ncv_matrices(5.0, 0.0);
        assert!(q0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn checked_measurement_functions() {
        let east = DVector::from_column_slice(&[1000.0, 0.0, 0.0, 0.0]);
        let z = radar_measurement(&east, [0.0, 0.0]).unwrap();
        assert!((z[0] - 0.0).abs() < 1e-12);
        assert!((z[1] - 1000.0).abs() < 1e-12);

        let north = DVector::from_column_slice(&[0.0, 0.0, 500.0, 0.0]);
        let z = radar_measurement(&north, [0.0, 0.0]).unwrap();
        assert!((z[0] - PI / 2.0).abs() < 1e-12);

        let far = DVector::from_column_slice(&[5000.0, 0.0, 4000.0, 0.0]);
        let r = toa_measurement(&far, [0.0, 0.0]).unwrap();
        assert!((r - 6403.124237432849).abs() < 1e-9);

        let at_sensor = DVector::from_column_slice(&[25000.0, 0.0, 25000.0, 0.0]);
        assert!(radar_measurement(&at_sensor, [25000.0, 25000.0]).is_err());
        assert!(toa_measurement(&at_sensor, [25000.0, 25000.0]).is_err());
    }

    #[test]
    fn standard_configs_validate() {
        ScenarioConfig::radar1().validate().unwrap();
        ScenarioConfig::toa3().validate().unwrap();
        assert_eq!(ScenarioConfig::toa3().sensors.len(), 3);
        ScenarioConfig::radar1().motion_model().unwrap();
    }

    #[test]
    fn validation_rejects_bad_scripts() {
        let mut c = ScenarioConfig::radar1();
        c.targets[0].birth_site = 99;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::radar1();
        c.targets[0].waypoint_scan = c.targets[0].death_scan;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::radar1();
        c.sensors.clear();
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::radar1();
        c.targets[1].birth_scan = c.targets[0].birth_scan;
        c.targets[1].birth_site = c.targets[0].birth_site;
        assert!(c.validate().is_err());
    }

    #[test]
    fn truth_is_deterministic_and_starts_at_birth_sites() {
        let config = ScenarioConfig::radar1();
        let a = generate_truth(&config, 42).unwrap();
        let b = generate_truth(&config, 42).unwrap();
        assert_eq!(a, b);

        for track in &a.tracks {
            let site = config
                .birth
                .components
                .iter()
                .find(|c| c.index == track.label.index)
                .unwrap();
            let mean = site.density.mean();
            let start = &track.states[0];
            assert_eq!(start[0], mean[0], "birth x at site mean");
            assert_eq!(start[2], mean[2], "birth y at site mean");
            assert_eq!(track.label.birth_scan, track.birth_scan);
        }
    }

    #[test]
    fn truth_turns_at_waypoint_and_stays_in_region() {
        let config = ScenarioConfig::radar1();
        let truth = generate_truth(&config, 0).unwrap();
        assert_eq!(truth.tracks.len(), 5);
        for (track, script) in truth.tracks.iter().zip(sorted_scripts(&config)) {
            let at_wp = track.state_at(script.waypoint_scan).unwrap();
            assert!((at_wp[0] - script.waypoint[0]).abs() < 1e-6);
            assert!((at_wp[2] - script.waypoint[1]).abs() < 1e-6);
            assert_eq!(at_wp[1], script.exit_velocity[0]);
            assert_eq!(at_wp[3], script.exit_velocity[1]);
            for s in &track.states {
                assert!(s[0] >= -1e-6 && s[0] <= 50000.0 + 1e-6, "x within region: {}", s[0]);
                assert!(s[2] >= -1e-6 && s[2] <= 50000.0 + 1e-6, "y within region: {}", s[2]);
            }
        }
    }

    fn sorted_scripts(config: &ScenarioConfig) -> Vec<TargetScript> {
        let mut scripts = config.targets.clone();
        scripts.sort_by_key(|s| Label::new(s.birth_scan, s.birth_site));
        scripts
    }

    #[test]
    fn cardinality_profile_steps_with_births_and_deaths() {
        let truth = generate_truth(&ScenarioConfig::radar1(), 0).unwrap();
        let expect = [(0, 2), (19, 2), (20, 3), (30, 4), (40, 5), (159, 5), (160, 4), (180, 3), (199, 3)];
        for (scan, n) in expect {
            assert_eq!(truth.cardinality(scan), n, "cardinality at scan {scan}");
        }
        assert_eq!(truth.cardinality(200), 0, "everything dead past the horizon");
    }

    #[test]
    fn measurements_reproducible_and_stream_separated() {
        let config = ScenarioConfig::radar1();
        let truth = generate_truth(&config, 0).unwrap();
        let s = &config.sensors[0];
        let a = generate_measurements(&truth, s, 0, 100, 7);
        let b = generate_measurements(&truth, s, 0, 100, 7);
        assert_eq!(a, b);
        let other_scan = generate_measurements(&truth, s, 0, 101, 7);
        let other_sensor = generate_measurements(&truth, s, 1, 100, 7);
        let other_trial = generate_measurements(&truth, s, 0, 100, 8);
        assert_ne!(a, other_scan);
        assert_ne!(a, other_sensor);
        assert_ne!(a, other_trial);
    }

    #[test]
    fn degenerate_sensor_settings() {
        let config = ScenarioConfig::radar1();
        let truth = generate_truth(&config, 0).unwrap();

        let mut blind = config.sensors[0].clone();
        blind.detection_probability = 0.0;
        blind.clutter.rate = 0.0;
        for scan in [0, 50, 150] {
            assert!(generate_measurements(&truth, &blind, 0, scan, 3).is_empty());
        }

        let mut perfect = config.sensors[0].clone();
        perfect.detection_probability = 1.0;
        perfect.clutter.rate = 0.0;
        if let SensorKind::Radar { sigma_bearing, sigma_range, .. } = &mut perfect.kind {
            *sigma_bearing = 0.0;
            *sigma_range = 0.0;
        }
        let zs = generate_measurements(&truth, &perfect, 0, 100, 3);
        let live = truth.states_at(100);
        assert_eq!(zs.len(), live.len());
        for (z, (_, state)) in zs.iter().zip(&live) {
            let want = perfect.kind.measure(state);
            assert!((z - want).norm() < 1e-12, "noiseless detection equals h(x)");
        }
    }

    #[test]
    fn clutter_count_matches_rate_on_average() {
        let config = ScenarioConfig::radar1();
        let truth = generate_truth(&config, 0).unwrap();
        let mut clutter_only = config.sensors[0].clone();
        clutter_only.detection_probability = 0.0;
        let scans = 300u32;
        let total: usize = (0..scans)
            .map(|scan| generate_measurements(&truth, &clutter_only, 0, scan % 200, scan as u64).len())
            .sum();
        let mean = total as f64 / scans as f64;
        assert!((mean - 15.0).abs() < 1.5, "observed clutter mean {mean}");
        // Clutter points live inside the declared region.
        let zs = generate_measurements(&truth, &clutter_only, 0, 0, 1);
        for z in zs {
            assert!(z[0] > -PI && z[0] <= PI);
            assert!((0.0..=40000.0).contains(&z[1]));
        }
    }

    #[test]
    fn detection_count_bounded_by_live_targets() {
        let config = ScenarioConfig::radar1();
        let truth = generate_truth(&config, 0).unwrap();
        let mut no_clutter = config.sensors[0].clone();
        no_clutter.clutter.rate = 0.0;
        for scan in 0..200 {
            let zs = generate_measurements(&truth, &no_clutter, 0, scan, 11);
            assert!(zs.len() <= truth.cardinality(scan));
        }
    }

    #[test]
    fn frames_and_truth_round_trip_through_json() {
        let config = ScenarioConfig::toa3();
        let truth = generate_truth(&config, 0).unwrap();
        let per_sensor = generate_scan(&truth, &config.sensors, 75, 5);
        assert_eq!(per_sensor.len(), 3);
        let frame = MeasurementFrame::from_vectors(75, &per_sensor);
        let json = serde_json::to_string(&frame).unwrap();
        let back: MeasurementFrame = serde_json::from_str(&json).unwrap();
        assert_eq!(back, frame);
        assert_eq!(back.to_vectors(), per_sensor);

        let json = serde_json::to_string(&truth.tracks[0]).unwrap();
        let back: TruthTrack = serde_json::from_str(&json).unwrap();
        assert_eq!(back, truth.tracks[0]);
    }
}
