//! Unscented measurement updates for Gaussian mixtures.
//!
//! Each component is pushed through the measurement function with the
//! standard scaled sigma-point set: `lambda = alpha^2 (n + kappa) - n`,
//! points `m` and `m +/- sqrt(n + lambda) * chol(P)` columns, mean weights
//! `lambda/(n+lambda)` and `1/(2(n+lambda))`, and the covariance center
//! weight carrying the extra `1 - alpha^2 + beta` term. The transformed
//! moments give per-component innovation pairs `(z_pred, S)`; the Kalman
//! gain, posterior covariance, and innovation factorization depend only on
//! the predicted density, so they are computed once per track in
//! [`UnscentedUpdate`] and reused across every candidate measurement. That
//! prep/query split is what keeps the association cost matrices cheap.
//!
//! Angular measurement components are handled through
//! [`MeasurementModel::wrap_residual`]: sigma-point images are folded into
//! the chart of the central point before averaging, and innovations are
//! wrapped again before the gain is applied, so a predicted bearing of
//! -179 degrees and a measurement of +179 degrees differ by 2 degrees, not
//! 358.

use nalgebra::{DMatrix, DVector};

use super::{cholesky_with_jitter, gaussian_log_norm, symmetrize, Gaussian, GaussianMixture};
use crate::error::{Error, Result};
use crate::util::logsumexp;

/// Sigma-point spread parameters. The defaults (`alpha = 1`, `beta = 2`,
/// `kappa = 0`) reproduce the unit-spread Gaussian-optimal set.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnscentedConfig {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UnscentedConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 2.0, kappa: 0.0 }
    }
}

/// A measurement function `h` from state space to measurement space, plus
/// the residual convention of its measurement space.
pub trait MeasurementModel {
    fn measurement_dim(&self) -> usize;
    fn measure(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Fold a measurement-space residual into its canonical chart, e.g.
    /// wrap bearing components to `(-pi, pi]`. Identity by default.
    fn wrap_residual(&self, _residual: &mut DVector<f64>) {}
}

/// Linear measurement `h(x) = H x`, mainly for exactness tests: the
/// unscented transform reproduces the Kalman update for linear models.
#[derive(Clone, Debug)]
pub struct LinearMeasurement {
    pub matrix: DMatrix<f64>,
}

impl MeasurementModel for LinearMeasurement {
    fn measurement_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }
}

struct ComponentUpdate {
    weight: f64,
    prior_mean: DVector<f64>,
    z_pred: DVector<f64>,
    innov_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    gain: DMatrix<f64>,
    posterior_cov: DMatrix<f64>,
    /// `-0.5 (d ln 2pi + ln det S)` of the innovation covariance.
    log_norm: f64,
}

/// Measurement-independent part of an unscented update of one mixture.
pub struct UnscentedUpdate {
    comps: Vec<ComponentUpdate>,
}

impl UnscentedUpdate {
    /// Run the unscented transform of every component through `model` with
    /// measurement noise `noise` and factor the innovation covariances.
    pub fn new(
        gm: &GaussianMixture,
        model: &dyn MeasurementModel,
        noise: &DMatrix<f64>,
        cfg: &UnscentedConfig,
    ) -> Result<Self> {
        if gm.is_empty() {
            return Err(Error::DegenerateDensity("empty mixture in measurement update"));
        }
        let n = gm.dim() as f64;
        let lambda = cfg.alpha * cfg.alpha * (n + cfg.kappa) - n;
        let scale = n + lambda;
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "unscented scaling n + lambda = {scale} must be positive"
            )));
        }
        let wm0 = lambda / scale;
        let wc0 = wm0 + 1.0 - cfg.alpha * cfg.alpha + cfg.beta;
        let wi = 0.5 / scale;

        let mut comps = Vec::with_capacity(gm.len());
        for (weight, g) in &gm.components {
            let dim = g.dim();
            let zdim = model.measurement_dim();
            let chol_p = cholesky_with_jitter(&g.cov)?;
            let sqrt_p = chol_p.l() * scale.sqrt();

            // Sigma points: center, then +/- columns of sqrt((n+lambda) P).
            let mut points = Vec::with_capacity(2 * dim + 1);
            points.push(g.mean.clone());
            for j in 0..dim {
                let col = sqrt_p.column(j);
                points.push(&g.mean + col);
                points.push(&g.mean - col);
            }

            // Images folded into the chart of the central image so that
            // angular components average consistently.
            let z0 = model.measure(&points[0]);
            let mut images = Vec::with_capacity(points.len());
            images.push(z0.clone());
            for p in points.iter().skip(1) {
                let mut r = model.measure(p) - &z0;
                model.wrap_residual(&mut r);
                images.push(&z0 + r);
            }

            let mut z_pred = DVector::zeros(zdim);
            for (idx, zi) in images.iter().enumerate() {
                let w = if idx == 0 { wm0 } else { wi };
                z_pred += zi * w;
            }

            let mut innov_cov = noise.clone();
            let mut cross_cov = DMatrix::zeros(dim, zdim);
            for (idx, (p, zi)) in points.iter().zip(images.iter()).enumerate() {
                let w = if idx == 0 { wc0 } else { wi };
                let dz = zi - &z_pred;
                let dx = p - &g.mean;
                innov_cov += &dz * dz.transpose() * w;
                cross_cov += dx * dz.transpose() * w;
            }
            let innov_cov = symmetrize(innov_cov);

            let innov_chol = cholesky_with_jitter(&innov_cov)?;
            // K = C S^-1, computed as (S^-1 C')'.
            let gain = innov_chol.solve(&cross_cov.transpose()).transpose();
            let posterior_cov = symmetrize(&g.cov - &gain * innov_cov * gain.transpose());
            let log_norm = gaussian_log_norm(&innov_chol);

            comps.push(ComponentUpdate {
                weight: *weight,
                prior_mean: g.mean.clone(),
                z_pred,
                innov_chol,
                gain,
                posterior_cov,
                log_norm,
            });
        }
        Ok(Self { comps })
    }

    fn wrapped_innovation(
        &self,
        comp: &ComponentUpdate,
        z: &DVector<f64>,
        model: &dyn MeasurementModel,
    ) -> DVector<f64> {
        let mut innov = z - &comp.z_pred;
        model.wrap_residual(&mut innov);
        innov
    }

    /// `ln sum_i w_i N(z; z_pred_i, S_i)`.
    pub fn log_likelihood(&self, z: &DVector<f64>, model: &dyn MeasurementModel) -> f64 {
        let terms: Vec<f64> = self
            .comps
            .iter()
            .map(|c| {
                let innov = self.wrapped_innovation(c, z, model);
                let maha_sq = c.innov_chol.solve(&innov).dot(&innov);
                c.weight.ln() + c.log_norm - 0.5 * maha_sq
            })
            .collect();
        logsumexp(&terms)
    }

    /// Smallest squared Mahalanobis innovation distance over components;
    /// used for chi-square gating.
    pub fn min_mahalanobis_sq(&self, z: &DVector<f64>, model: &dyn MeasurementModel) -> f64 {
        self.comps
            .iter()
            .map(|c| {
                let innov = self.wrapped_innovation(c, z, model);
                c.innov_chol.solve(&innov).dot(&innov)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Single-pass gate-and-likelihood query: the smallest per-component
    /// squared Mahalanobis innovation distance together with
    /// `ln sum_i w_i N(z; z_pred_i, S_i)`.
    pub fn gated_log_likelihood(&self, z: &DVector<f64>, model: &dyn MeasurementModel) -> (f64, f64) {
        let mut min_maha = f64::INFINITY;
        let mut terms = Vec::with_capacity(self.comps.len());
        for c in &self.comps {
            let innov = self.wrapped_innovation(c, z, model);
            let maha_sq = c.innov_chol.solve(&innov).dot(&innov);
            min_maha = min_maha.min(maha_sq);
            terms.push(c.weight.ln() + c.log_norm - 0.5 * maha_sq);
        }
        (min_maha, logsumexp(&terms))
    }

    /// Posterior mixture for measurement `z` together with the total
    /// mixture likelihood `sum_i w_i N(z; z_pred_i, S_i)`.
    ///
    /// Posterior weights are the normalized products `w_i N(z; ...)`; means
    /// and covariances follow the per-component Kalman gain step.
    pub fn posterior(&self, z: &DVector<f64>, model: &dyn MeasurementModel) -> Result<(GaussianMixture, f64)> {
        let mut log_terms = Vec::with_capacity(self.comps.len());
        let mut posterior = Vec::with_capacity(self.comps.len());
        for c in &self.comps {
            let innov = self.wrapped_innovation(c, z, model);
            let maha_sq = c.innov_chol.solve(&innov).dot(&innov);
            log_terms.push(c.weight.ln() + c.log_norm - 0.5 * maha_sq);
            let mean = &c.prior_mean + &c.gain * innov;
            posterior.push(Gaussian { mean, cov: c.posterior_cov.clone() });
        }
        let log_total = logsumexp(&log_terms);
        if !log_total.is_finite() {
            return Err(Error::DegenerateDensity("zero measurement likelihood across mixture"));
        }
        let components = log_terms
            .iter()
            .zip(posterior)
            .map(|(lt, g)| ((lt - log_total).exp(), g))
            .collect();
        Ok((GaussianMixture { components }, log_total.exp()))
    }
}

/// One-shot unscented update: posterior mixture and total likelihood of `z`.
pub fn ukf_update(
    gm: &GaussianMixture,
    model: &dyn MeasurementModel,
    noise: &DMatrix<f64>,
    z: &DVector<f64>,
    cfg: &UnscentedConfig,
) -> Result<(GaussianMixture, f64)> {
    UnscentedUpdate::new(gm, model, noise, cfg)?.posterior(z, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form Kalman update used as the independent oracle for the
    /// linear case: posterior moments and marginal likelihood N(z; Hm, S).
    fn kalman_oracle(
        g: &Gaussian,
        h: &DMatrix<f64>,
        r: &DMatrix<f64>,
        z: &DVector<f64>,
    ) -> (DVector<f64>, DMatrix<f64>, f64) {
        let z_pred = h * &g.mean;
        let s = h * &g.cov * h.transpose() + r;
        let s_inv = s.clone().try_inverse().unwrap();
        let k = &g.cov * h.transpose() * &s_inv;
        let innov = z - &z_pred;
        let mean = &g.mean + &k * &innov;
        let cov = &g.cov - &k * &s * k.transpose();
        let d = z.len() as f64;
        let lik = (-0.5 * (innov.transpose() * &s_inv * &innov)[(0, 0)]).exp()
            / ((2.0 * std::f64::consts::PI).powf(d / 2.0) * s.determinant().sqrt());
        (mean, cov, lik)
    }

    #[test]
    fn linear_update_matches_kalman() {
        let g = Gaussian::from_rows(
            &[1.0, -2.0, 0.5, 3.0],
            &[
                &[4.0, 0.5, 0.0, 0.0],
                &[0.5, 2.0, 0.0, 0.0],
                &[0.0, 0.0, 3.0, 0.2],
                &[0.0, 0.0, 0.2, 1.0],
            ],
        );
        let h = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let r = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.8]);
        let z = DVector::from_column_slice(&[2.0, -0.5]);
        let model = LinearMeasurement { matrix: h.clone() };

        let (post, lik) = ukf_update(
            &GaussianMixture::single(g.clone()),
            &model,
            &r,
            &z,
            &UnscentedConfig::default(),
        )
        .unwrap();

        let (mean, cov, lik_exact) = kalman_oracle(&g, &h, &r, &z);
        let got = &post.components[0].1;
        assert!((&got.mean - &mean).amax() < 1e-8, "mean mismatch");
        assert!((&got.cov - &cov).amax() < 1e-8, "covariance mismatch");
        assert!((lik - lik_exact).abs() / lik_exact < 1e-8, "likelihood mismatch");
    }

    #[test]
    fn mixture_likelihood_is_weighted_sum() {
        let g1 = Gaussian::from_rows(&[0.0], &[&[1.0]]);
        let g2 = Gaussian::from_rows(&[5.0], &[&[2.0]]);
        let gm = GaussianMixture::new(vec![(0.3, g1.clone()), (0.7, g2.clone())]);
        let h = DMatrix::identity(1, 1);
        let r = DMatrix::from_row_slice(1, 1, &[0.5]);
        let z = DVector::from_column_slice(&[1.0]);
        let model = LinearMeasurement { matrix: h.clone() };

        let (_, lik) = ukf_update(&gm, &model, &r, &z, &UnscentedConfig::default()).unwrap();
        let e1 = kalman_oracle(&g1, &h, &r, &z).2;
        let e2 = kalman_oracle(&g2, &h, &r, &z).2;
        assert!((lik - (0.3 * e1 + 0.7 * e2)).abs() < 1e-10);
    }

    #[test]
    fn bearing_innovation_wraps_across_cut() {
        // Angle-only sensor reading the direction of a unit planar state.
        struct AngleSensor;
        impl MeasurementModel for AngleSensor {
            fn measurement_dim(&self) -> usize {
                1
            }
            fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
                DVector::from_column_slice(&[x[1].atan2(x[0])])
            }
            fn wrap_residual(&self, r: &mut DVector<f64>) {
                r[0] = crate::scenario::wrap_angle(r[0]);
            }
        }

        let deg = std::f64::consts::PI / 180.0;
        // Prior mean points at -179 degrees; measurement at +179 degrees.
        let theta = -179.0 * deg;
        let g = Gaussian::from_rows(
            &[theta.cos(), theta.sin()],
            &[&[1e-4, 0.0], &[0.0, 1e-4]],
        );
        let r = DMatrix::from_row_slice(1, 1, &[(1.0 * deg).powi(2)]);
        let z = DVector::from_column_slice(&[179.0 * deg]);
        let prep = UnscentedUpdate::new(
            &GaussianMixture::single(g),
            &AngleSensor,
            &r,
            &UnscentedConfig::default(),
        )
        .unwrap();
        // A 2-degree innovation is a couple of sigma; 358 degrees would be
        // astronomically unlikely.
        let maha = prep.min_mahalanobis_sq(&z, &AngleSensor);
        assert!(maha < 25.0, "wrapped innovation should be small, got {maha}");
        let (post, _) = prep.posterior(&z, &AngleSensor).unwrap();
        let post_angle = post.components[0].1.mean[1].atan2(post.components[0].1.mean[0]);
        // Posterior direction stays near the cut instead of swinging to 0.
        assert!(post_angle.abs() > 170.0 * deg);
    }

    #[test]
    fn huge_noise_leaves_prior_untouched() {
        let g = Gaussian::from_rows(&[1.0, 2.0], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let model = LinearMeasurement { matrix: DMatrix::identity(2, 2) };
        let r = DMatrix::identity(2, 2) * 1e12;
        let z = DVector::from_column_slice(&[100.0, -50.0]);
        let (post, _) =
            ukf_update(&GaussianMixture::single(g.clone()), &model, &r, &z, &UnscentedConfig::default()).unwrap();
        assert!((&post.components[0].1.mean - &g.mean).amax() < 1e-6);
        assert!((&post.components[0].1.cov - &g.cov).amax() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_scaling() {
        let g = Gaussian::from_rows(&[0.0], &[&[1.0]]);
        let cfg = UnscentedConfig { alpha: 1.0, beta: 2.0, kappa: -2.0 };
        let model = LinearMeasurement { matrix: DMatrix::identity(1, 1) };
        let r = DMatrix::identity(1, 1);
        let err = UnscentedUpdate::new(&GaussianMixture::single(g), &model, &r, &cfg);
        assert!(err.is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_spd(dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
            proptest::collection::vec(-2.0..2.0f64, dim * dim).prop_map(move |vals| {
                let a = DMatrix::from_vec(dim, dim, vals);
                &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn unscented_equals_kalman_for_linear_models(
                p in arb_spd(3),
                r in arb_spd(2),
                mean in proptest::collection::vec(-5.0..5.0f64, 3),
                hvals in proptest::collection::vec(-2.0..2.0f64, 6),
                zvals in proptest::collection::vec(-5.0..5.0f64, 2),
            ) {
                let g = Gaussian::new(DVector::from_vec(mean), p);
                let h = DMatrix::from_vec(2, 3, hvals);
                let z = DVector::from_vec(zvals);
                let model = LinearMeasurement { matrix: h.clone() };
                let (post, lik) = ukf_update(
                    &GaussianMixture::single(g.clone()), &model, &r, &z, &UnscentedConfig::default(),
                ).unwrap();
                let (mean_e, cov_e, lik_e) = kalman_oracle(&g, &h, &r, &z);
                prop_assert!((&post.components[0].1.mean - &mean_e).amax() < 1e-8);
                prop_assert!((&post.components[0].1.cov - &cov_e).amax() < 1e-8);
                prop_assert!((lik - lik_e).abs() <= 1e-8 * lik_e.max(1e-30));
            }
        }
    }
}
