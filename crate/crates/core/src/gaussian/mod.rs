//! Gaussian mixtures and the linear-Gaussian prediction step.
//!
//! Single-track densities everywhere in the crate are weighted Gaussian
//! mixtures. Prediction through a linear motion model is exact
//! (`m -> F m`, `P -> F P F' + Q` per component, weights untouched);
//! measurement updates live in [`unscented`], mixture hygiene in
//! [`reduction`].

pub mod reduction;
pub mod unscented;

pub use reduction::{gm_cap, gm_merge, gm_prune, GmReduction};
pub use unscented::{ukf_update, LinearMeasurement, MeasurementModel, UnscentedConfig, UnscentedUpdate};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single Gaussian component `N(mean, cov)`.
///
/// The covariance is symmetrized on construction; positive definiteness is
/// enforced lazily at the first factorization with a single jitter retry
/// (see [`cholesky_with_jitter`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        assert_eq!(cov.nrows(), mean.len(), "covariance/mean dimension mismatch");
        assert_eq!(cov.ncols(), mean.len(), "covariance must be square");
        let cov = symmetrize(cov);
        Self { mean, cov }
    }

    /// Convenience constructor from plain slices (row-major covariance).
    pub fn from_rows(mean: &[f64], cov_rows: &[&[f64]]) -> Self {
        let n = mean.len();
        let mut cov = DMatrix::zeros(n, n);
        for (i, row) in cov_rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                cov[(i, j)] = *v;
            }
        }
        Self::new(DVector::from_column_slice(mean), cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Log of the density at `x`.
    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        let chol = cholesky_with_jitter(&self.cov)?;
        let diff = x - &self.mean;
        let maha_sq = chol.solve(&diff).dot(&diff);
        Ok(gaussian_log_norm(&chol) - 0.5 * maha_sq)
    }

    pub fn density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }
}

/// `-0.5 (d ln 2pi + ln det S)` for a Cholesky-factored covariance `S`.
pub(crate) fn gaussian_log_norm(chol: &Cholesky<f64, Dyn>) -> f64 {
    let d = chol.l_dirty().nrows() as f64;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det)
}

/// Cholesky factorization with one jitter retry.
///
/// On failure, `1e-9 * trace / dim` is added to the diagonal once; a second
/// failure is reported as a numerical error rather than retried further.
pub(crate) fn cholesky_with_jitter(mat: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(mat.clone()) {
        return Ok(c);
    }
    let dim = mat.nrows() as f64;
    let jitter = 1e-9 * mat.trace().abs().max(f64::MIN_POSITIVE) / dim;
    let mut bumped = mat.clone();
    for i in 0..mat.nrows() {
        bumped[(i, i)] += jitter;
    }
    Cholesky::new(bumped).ok_or(Error::NumericalFailure(
        "covariance not positive definite after jitter retry",
    ))
}

pub(crate) fn symmetrize(mat: DMatrix<f64>) -> DMatrix<f64> {
    let t = mat.transpose();
    (mat + t) * 0.5
}

/// Weighted Gaussian mixture. Weights are nonnegative and, for a density,
/// sum to one; intermediate (unnormalized) mixtures are permitted and are
/// normalized explicitly where the math requires it.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GaussianMixture {
    pub components: Vec<(f64, Gaussian)>,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, Gaussian)>) -> Self {
        Self { components }
    }

    pub fn single(g: Gaussian) -> Self {
        Self { components: vec![(1.0, g)] }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |(_, g)| g.dim())
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    /// Scale all weights so they sum to one.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.weight_sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateDensity("mixture weight sum not positive"));
        }
        for (w, _) in &mut self.components {
            *w /= total;
        }
        Ok(())
    }

    /// Mixture mean `sum_i w_i m_i / sum_i w_i`.
    pub fn mean(&self) -> DVector<f64> {
        let dim = self.dim();
        let mut acc = DVector::zeros(dim);
        let total = self.weight_sum();
        for (w, g) in &self.components {
            acc += &g.mean * (*w / total);
        }
        acc
    }

    pub fn density(&self, x: &DVector<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (w, g) in &self.components {
            acc += w * g.density(x)?;
        }
        Ok(acc)
    }

    /// Multiply every weight by `factor`.
    pub fn scale_weights(&mut self, factor: f64) {
        for (w, _) in &mut self.components {
            *w *= factor;
        }
    }
}

/// Predict a mixture through linear dynamics: each component maps to
/// `N(F m, F P F' + Q)`; weights are unchanged.
pub fn kf_predict(gm: &GaussianMixture, transition: &DMatrix<f64>, process_noise: &DMatrix<f64>) -> GaussianMixture {
    let components = gm
        .components
        .iter()
        .map(|(w, g)| {
            let mean = transition * &g.mean;
            let cov = symmetrize(transition * &g.cov * transition.transpose() + process_noise);
            (*w, Gaussian { mean, cov })
        })
        .collect();
    GaussianMixture { components }
}

// Serde representations keep matrices row-major so JSON dumps read naturally.

#[derive(Serialize, Deserialize)]
struct GaussianDto {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl Serialize for Gaussian {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let cov = (0..n)
            .map(|i| (0..n).map(|j| self.cov[(i, j)]).collect())
            .collect();
        GaussianDto { mean: self.mean.iter().cloned().collect(), cov }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Gaussian {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dto = GaussianDto::deserialize(deserializer)?;
        let n = dto.mean.len();
        let mut cov = DMatrix::zeros(n, n);
        for (i, row) in dto.cov.iter().enumerate() {
            if row.len() != n || dto.cov.len() != n {
                return Err(serde::de::Error::custom("covariance shape mismatch"));
            }
            for (j, v) in row.iter().enumerate() {
                cov[(i, j)] = *v;
            }
        }
        Ok(Gaussian::new(DVector::from_vec(dto.mean), cov))
    }
}

#[derive(Serialize, Deserialize)]
struct MixtureDto {
    weights: Vec<f64>,
    components: Vec<Gaussian>,
}

impl Serialize for GaussianMixture {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MixtureDto {
            weights: self.components.iter().map(|(w, _)| *w).collect(),
            components: self.components.iter().map(|(_, g)| g.clone()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GaussianMixture {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dto = MixtureDto::deserialize(deserializer)?;
        if dto.weights.len() != dto.components.len() {
            return Err(serde::de::Error::custom("weight/component count mismatch"));
        }
        Ok(GaussianMixture::new(dto.weights.into_iter().zip(dto.components).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(mean: f64, var: f64) -> Gaussian {
        Gaussian::from_rows(&[mean], &[&[var]])
    }

    #[test]
    fn standard_normal_density_at_zero() {
        let g = scalar(0.0, 1.0);
        let x = DVector::from_column_slice(&[0.0]);
        let expected = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((g.density(&x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn kf_predict_identity_with_zero_noise_is_noop() {
        let gm = GaussianMixture::single(scalar(1.5, 2.0));
        let f = DMatrix::identity(1, 1);
        let q = DMatrix::zeros(1, 1);
        let out = kf_predict(&gm, &f, &q);
        assert_eq!(out, gm);
    }

    #[test]
    fn kf_predict_constant_velocity_moves_mean() {
        // State [position, velocity], one step of unit dt.
        let g = Gaussian::from_rows(&[0.0, 1.0], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let gm = GaussianMixture::single(g);
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 0.0, 1.0]);
        let q = DMatrix::zeros(2, 2);
        let out = kf_predict(&gm, &f, &q);
        let m = &out.components[0].1.mean;
        assert!((m[0] - 5.0).abs() < 1e-12);
        assert!((m[1] - 1.0).abs() < 1e-12);
        // F P F' for P = I: [[1+25, 5], [5, 1]].
        let p = &out.components[0].1.cov;
        assert!((p[(0, 0)] - 26.0).abs() < 1e-12);
        assert!((p[(0, 1)] - 5.0).abs() < 1e-12);
        assert!((p[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kf_predict_preserves_weights_and_count() {
        let gm = GaussianMixture::new(vec![(0.3, scalar(0.0, 1.0)), (0.7, scalar(4.0, 2.0))]);
        let f = DMatrix::from_row_slice(1, 1, &[2.0]);
        let q = DMatrix::from_row_slice(1, 1, &[0.5]);
        let out = kf_predict(&gm, &f, &q);
        assert_eq!(out.len(), 2);
        assert!((out.components[0].0 - 0.3).abs() < 1e-15);
        assert!((out.components[1].0 - 0.7).abs() < 1e-15);
        assert!((out.components[1].1.cov[(0, 0)] - (4.0 * 2.0 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn normalize_rejects_zero_total() {
        let mut gm = GaussianMixture::new(vec![(0.0, scalar(0.0, 1.0))]);
        assert!(gm.normalize().is_err());
    }

    #[test]
    fn jitter_recovers_semidefinite_covariance() {
        // Rank-deficient covariance: jitter retry must succeed.
        let g = Gaussian::from_rows(&[0.0, 0.0], &[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(cholesky_with_jitter(&g.cov).is_ok());
    }

    #[test]
    fn mixture_mean_weights_components() {
        let gm = GaussianMixture::new(vec![(0.25, scalar(0.0, 1.0)), (0.75, scalar(4.0, 1.0))]);
        assert!((gm.mean()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn serde_round_trip_preserves_mixture() {
        let gm = GaussianMixture::new(vec![
            (0.4, Gaussian::from_rows(&[1.0, 2.0], &[&[2.0, 0.5], &[0.5, 3.0]])),
            (0.6, Gaussian::from_rows(&[-1.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]])),
        ]);
        let json = serde_json::to_string(&gm).unwrap();
        let back: GaussianMixture = serde_json::from_str(&json).unwrap();
        assert_eq!(gm, back);
        // Row-major covariance layout in the JSON document.
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["components"][0]["cov"][0][1], serde_json::json!(0.5));
    }
}
