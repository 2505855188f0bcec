//! Filtering recursions over labeled densities.
//!
//! The pipeline per scan is predict -> (per sensor) update -> collapse,
//! with three variants:
//!
//! * [`dglmb_step`]: full delta-GLMB recursion; every kept association map
//!   becomes a new hypothesis with its own history id.
//! * [`mdglmb_step`]: after each sensor update the density is collapsed
//!   back to one hypothesis per label set ([`crate::rfs::marginalize`]),
//!   so the hypothesis count never exceeds the count after prediction.
//! * [`lmb_step`]: the density is further collapsed to independent
//!   existence/density pairs after every sensor.
//!
//! Association costs are negative log likelihoods: detection entries
//! `-(ln P_D + ln q(z) - ln kappa)` with `q` the unscented mixture
//! likelihood and `kappa` the clutter intensity, miss entries
//! `-ln(1 - P_D)`. Ranked assignment ([`crate::assignment::murty_kbest`])
//! enumerates the best association maps per hypothesis under a
//! weight-proportional budget, and hypothesis weights are normalized in
//! the log domain.
//!
//! Models assume the planar tracking state layout `(px, vx, py, vy)`.

mod pooled;
mod predict;
mod steps;
mod update;

pub use predict::{dglmb_predict, predict};
pub use steps::{
    dglmb_step, extract_dglmb_estimates, extract_estimates, lmb_estimates, lmb_step, mdglmb_step,
    truncate_dglmb_hypotheses, truncate_hypotheses, StepDiagnostics,
};
pub use update::{
    update_single_sensor, update_single_sensor_with_maps, AssociationMap, AssociationRecord,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, GmReduction, MeasurementModel, UnscentedConfig};
use crate::rfs::{LmbParams, LmbTrack};
use crate::scenario::wrap_angle;
use crate::Label;

/// Linear-Gaussian motion: transition `F`, process noise `Q`, and a
/// state-independent survival probability.
#[derive(Clone, Debug)]
pub struct MotionModel {
    pub transition: DMatrix<f64>,
    pub process_noise: DMatrix<f64>,
    pub survival_probability: f64,
}

impl MotionModel {
    pub fn new(transition: DMatrix<f64>, process_noise: DMatrix<f64>, survival_probability: f64) -> Result<Self> {
        if transition.nrows() != transition.ncols()
            || process_noise.nrows() != process_noise.ncols()
            || transition.nrows() != process_noise.nrows()
        {
            return Err(Error::InvalidParameter(
                "transition and process noise must be square matrices of equal size".into(),
            ));
        }
        if !(0.0..=1.0).contains(&survival_probability) {
            return Err(Error::InvalidParameter(format!(
                "survival probability {survival_probability} outside [0, 1]"
            )));
        }
        Ok(Self { transition, process_noise, survival_probability })
    }
}

/// One multi-Bernoulli birth component; instantiated each scan with the
/// label `(scan, index)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BirthComponent {
    pub index: u32,
    pub existence: f64,
    pub density: GaussianMixture,
}

/// The multi-Bernoulli birth process injected at every prediction.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BirthModel {
    pub components: Vec<BirthComponent>,
}

impl BirthModel {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            if !(0.0..=1.0).contains(&c.existence) || !c.existence.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "birth existence {} of component {} outside [0, 1]",
                    c.existence, c.index
                )));
            }
            if c.density.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "birth component {} has an empty density",
                    c.index
                )));
            }
        }
        Ok(())
    }

    /// The birth density for scan `scan` as an LMB over labels
    /// `(scan, index)`.
    pub fn instantiate(&self, scan: u32) -> LmbParams {
        let tracks = self
            .components
            .iter()
            .map(|c| LmbTrack {
                label: Label::new(scan, c.index),
                existence: c.existence,
                density: c.density.clone(),
            })
            .collect();
        LmbParams { tracks }
    }
}

/// Poisson clutter, uniform over an axis-aligned box in measurement space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClutterModel {
    /// Expected number of clutter returns per scan.
    pub rate: f64,
    /// Per-dimension `(min, max)` bounds of the clutter region.
    pub region: Vec<(f64, f64)>,
}

impl ClutterModel {
    pub fn new(rate: f64, region: Vec<(f64, f64)>) -> Result<Self> {
        let model = Self { rate, region };
        model.validate()?;
        Ok(model)
    }

    /// Clutter-free model over the given region.
    pub fn none(region: Vec<(f64, f64)>) -> Self {
        Self { rate: 0.0, region }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidParameter(format!("clutter rate {} must be nonnegative", self.rate)));
        }
        if self.region.is_empty() || self.region.iter().any(|(lo, hi)| !(hi > lo)) {
            return Err(Error::InvalidParameter("clutter region bounds must satisfy max > min per dimension".into()));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.region.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Uniform clutter intensity `kappa = rate / volume`.
    pub fn intensity(&self) -> f64 {
        self.rate / self.volume()
    }
}

/// Measurement geometry of a sensor. All kinds read positions from state
/// components 0 (`px`) and 2 (`py`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SensorKind {
    /// Bearing/range sensor: `h(x) = (atan2(py - y_s, px - x_s), hypot)`.
    Radar { position: [f64; 2], sigma_bearing: f64, sigma_range: f64 },
    /// Range-only sensor: `h(x) = hypot(px - x_s, py - y_s)`.
    Toa { position: [f64; 2], sigma_range: f64 },
    /// Direct position sensor `h(x) = (px, py)`; linear, so the unscented
    /// update is exact — the reference case for oracles.
    Position { sigma: f64 },
}

impl SensorKind {
    pub fn noise_cov(&self) -> DMatrix<f64> {
        match self {
            Self::Radar { sigma_bearing, sigma_range, .. } => {
                DMatrix::from_diagonal(&DVector::from_column_slice(&[
                    sigma_bearing * sigma_bearing,
                    sigma_range * sigma_range,
                ]))
            }
            Self::Toa { sigma_range, .. } => DMatrix::from_element(1, 1, sigma_range * sigma_range),
            Self::Position { sigma } => {
                DMatrix::from_diagonal(&DVector::from_column_slice(&[sigma * sigma, sigma * sigma]))
            }
        }
    }
}

impl MeasurementModel for SensorKind {
    fn measurement_dim(&self) -> usize {
        match self {
            Self::Radar { .. } | Self::Position { .. } => 2,
            Self::Toa { .. } => 1,
        }
    }

    fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Radar { position, .. } => {
                let dx = x[0] - position[0];
                let dy = x[2] - position[1];
                DVector::from_column_slice(&[dy.atan2(dx), dx.hypot(dy)])
            }
            Self::Toa { position, .. } => {
                let dx = x[0] - position[0];
                let dy = x[2] - position[1];
                DVector::from_column_slice(&[dx.hypot(dy)])
            }
            Self::Position { .. } => DVector::from_column_slice(&[x[0], x[2]]),
        }
    }

    fn wrap_residual(&self, residual: &mut DVector<f64>) {
        if let Self::Radar { .. } = self {
            residual[0] = wrap_angle(residual[0]);
        }
    }
}

/// A sensor: measurement geometry, detection probability, clutter model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SensorModel {
    pub kind: SensorKind,
    pub detection_probability: f64,
    pub clutter: ClutterModel,
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.detection_probability) {
            return Err(Error::InvalidParameter(format!(
                "detection probability {} outside [0, 1]",
                self.detection_probability
            )));
        }
        self.clutter.validate()
    }
}

/// Hypothesis bookkeeping limits for one filtering step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    /// Cap on the number of hypotheses kept after any truncation point.
    pub max_hypotheses: usize,
    /// Hypotheses below this normalized weight are dropped (the heaviest
    /// one is always kept).
    pub hypothesis_weight_floor: f64,
    /// Total ranked-assignment budget per update: hypothesis `h` requests
    /// `max(1, round(budget * weight_h))` association maps.
    pub k_best_per_hypothesis: usize,
    /// Chi-square gate probability on unscented innovations; values `>= 1`
    /// disable gating.
    pub gate_probability: f64,
}

impl TruncationConfig {
    pub fn mdglmb() -> Self {
        Self { max_hypotheses: 300, hypothesis_weight_floor: 1e-6, k_best_per_hypothesis: 300, gate_probability: 0.999 }
    }

    pub fn dglmb() -> Self {
        Self { max_hypotheses: 1000, hypothesis_weight_floor: 1e-6, k_best_per_hypothesis: 1000, gate_probability: 0.999 }
    }

    pub fn lmb() -> Self {
        Self { max_hypotheses: 300, hypothesis_weight_floor: 1e-6, k_best_per_hypothesis: 300, gate_probability: 0.999 }
    }

    /// No truncation, no gating: every hypothesis and association map is
    /// kept. Exactness-test configuration; unusable beyond toy sizes.
    pub fn exhaustive() -> Self {
        Self {
            max_hypotheses: 1 << 30,
            hypothesis_weight_floor: 0.0,
            k_best_per_hypothesis: 1 << 30,
            gate_probability: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_hypotheses == 0 || self.k_best_per_hypothesis == 0 {
            return Err(Error::InvalidParameter("hypothesis cap and assignment budget must be positive".into()));
        }
        if !(self.hypothesis_weight_floor >= 0.0) || self.hypothesis_weight_floor >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "hypothesis weight floor {} outside [0, 1)",
                self.hypothesis_weight_floor
            )));
        }
        if !(self.gate_probability > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gate probability {} must be positive",
                self.gate_probability
            )));
        }
        Ok(())
    }

    pub fn gating_enabled(&self) -> bool {
        self.gate_probability < 1.0
    }
}

/// Which filter variant a step runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    MdGlmb,
    DGlmb,
    Lmb,
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mdglmb" => Ok(Self::MdGlmb),
            "dglmb" => Ok(Self::DGlmb),
            "lmb" => Ok(Self::Lmb),
            other => Err(Error::InvalidParameter(format!(
                "unknown filter '{other}' (expected mdglmb, dglmb, or lmb)"
            ))),
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::MdGlmb => "mdglmb",
            Self::DGlmb => "dglmb",
            Self::Lmb => "lmb",
        };
        f.write_str(s)
    }
}

/// Step-level numerical knobs: truncation, per-track mixture reduction,
/// and unscented-transform parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub truncation: TruncationConfig,
    pub reduction: GmReduction,
    pub unscented: UnscentedConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::for_kind(FilterKind::MdGlmb)
    }
}

impl FilterConfig {
    pub fn for_kind(kind: FilterKind) -> Self {
        let truncation = match kind {
            FilterKind::MdGlmb => TruncationConfig::mdglmb(),
            FilterKind::DGlmb => TruncationConfig::dglmb(),
            FilterKind::Lmb => TruncationConfig::lmb(),
        };
        Self { truncation, reduction: GmReduction::default(), unscented: UnscentedConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.truncation.validate()
    }
}
