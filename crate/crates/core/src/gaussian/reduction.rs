//! Mixture reduction: pruning, moment-matched merging, and capping.
//!
//! Reduction keeps per-track mixtures bounded after marginalization mixes
//! association-conditioned posteriors together. Merging is moment matching,
//! so the mixture mean is preserved exactly and the matched covariance picks
//! up the spread-of-means term.

use nalgebra::DMatrix;

use super::{cholesky_with_jitter, symmetrize, Gaussian, GaussianMixture};

/// Reduction thresholds applied as prune, then merge, then cap.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GmReduction {
    /// Components with normalized weight below this are dropped.
    pub prune_threshold: f64,
    /// Pairs closer than this Mahalanobis distance (not squared) merge.
    pub merge_threshold: f64,
    /// Hard cap on surviving component count.
    pub max_components: usize,
}

impl Default for GmReduction {
    fn default() -> Self {
        Self { prune_threshold: 1e-5, merge_threshold: 4.0, max_components: 10 }
    }
}

impl GmReduction {
    pub fn apply(&self, gm: GaussianMixture) -> GaussianMixture {
        gm_cap(gm_merge(gm_prune(gm, self.prune_threshold), self.merge_threshold), self.max_components)
    }
}

/// Drop components whose share of the total weight is below `threshold`,
/// then renormalize to the original total. If everything falls below the
/// threshold the single heaviest component is kept.
pub fn gm_prune(gm: GaussianMixture, threshold: f64) -> GaussianMixture {
    let total = gm.weight_sum();
    if !(total > 0.0) {
        return gm;
    }
    let mut kept: Vec<(f64, Gaussian)> = gm
        .components
        .iter()
        .filter(|(w, _)| *w / total >= threshold)
        .cloned()
        .collect();
    if kept.is_empty() {
        let best = gm
            .components
            .into_iter()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("non-empty mixture");
        kept = vec![best];
    }
    rescale_to(kept, total)
}

/// Greedy moment-matched merging: repeatedly take the heaviest remaining
/// component as pivot and absorb every component within `threshold`
/// Mahalanobis distance of it (measured in the pivot's covariance).
pub fn gm_merge(gm: GaussianMixture, threshold: f64) -> GaussianMixture {
    let total = gm.weight_sum();
    let mut remaining = gm.components;
    let mut merged = Vec::new();
    let thresh_sq = threshold * threshold;
    while !remaining.is_empty() {
        let pivot_idx = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .map(|(i, _)| i)
            .expect("non-empty");
        let pivot = remaining.swap_remove(pivot_idx);
        let pivot_chol = match cholesky_with_jitter(&pivot.1.cov) {
            Ok(c) => c,
            Err(_) => {
                // Unusable pivot covariance: pass the component through
                // unmerged rather than guessing a metric.
                merged.push(pivot);
                continue;
            }
        };
        let mut cluster = vec![pivot];
        let mut rest = Vec::with_capacity(remaining.len());
        for comp in remaining {
            let diff = &comp.1.mean - &cluster[0].1.mean;
            let maha_sq = pivot_chol.solve(&diff).dot(&diff);
            if maha_sq <= thresh_sq {
                cluster.push(comp);
            } else {
                rest.push(comp);
            }
        }
        remaining = rest;
        merged.push(moment_match(&cluster));
    }
    // Heaviest-first output order keeps capping deterministic.
    merged.sort_by(|a, b| b.0.total_cmp(&a.0));
    rescale_to(merged, total)
}

/// Keep the `max_components` heaviest components and renormalize to the
/// original total weight.
pub fn gm_cap(gm: GaussianMixture, max_components: usize) -> GaussianMixture {
    if gm.len() <= max_components {
        return gm;
    }
    let total = gm.weight_sum();
    let mut comps = gm.components;
    comps.sort_by(|a, b| b.0.total_cmp(&a.0));
    comps.truncate(max_components.max(1));
    rescale_to(comps, total)
}

fn rescale_to(mut comps: Vec<(f64, Gaussian)>, total: f64) -> GaussianMixture {
    let kept: f64 = comps.iter().map(|(w, _)| w).sum();
    if kept > 0.0 && total > 0.0 {
        let scale = total / kept;
        for (w, _) in &mut comps {
            *w *= scale;
        }
    }
    GaussianMixture { components: comps }
}

/// Weight-preserving moment match of a cluster of components.
fn moment_match(cluster: &[(f64, Gaussian)]) -> (f64, Gaussian) {
    let w_total: f64 = cluster.iter().map(|(w, _)| w).sum();
    let dim = cluster[0].1.dim();
    let mut mean = nalgebra::DVector::zeros(dim);
    for (w, g) in cluster {
        mean += &g.mean * (*w / w_total);
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (w, g) in cluster {
        let d = &g.mean - &mean;
        cov += (&g.cov + &d * d.transpose()) * (*w / w_total);
    }
    (w_total, Gaussian { mean, cov: symmetrize(cov) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn scalar(w: f64, mean: f64, var: f64) -> (f64, Gaussian) {
        (w, Gaussian::from_rows(&[mean], &[&[var]]))
    }

    #[test]
    fn merging_equal_unit_gaussians_moment_matches() {
        // 0.5 N(0,1) + 0.5 N(2,1) collapses to N(1,2).
        let gm = GaussianMixture::new(vec![scalar(0.5, 0.0, 1.0), scalar(0.5, 2.0, 1.0)]);
        let out = gm_merge(gm, 4.0);
        assert_eq!(out.len(), 1);
        let (w, g) = &out.components[0];
        assert!((w - 1.0).abs() < 1e-12);
        assert!((g.mean[0] - 1.0).abs() < 1e-12);
        assert!((g.cov[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn distant_components_do_not_merge() {
        let gm = GaussianMixture::new(vec![scalar(0.5, 0.0, 1.0), scalar(0.5, 100.0, 1.0)]);
        let out = gm_merge(gm, 4.0);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn merge_preserves_mixture_mean_exactly() {
        let gm = GaussianMixture::new(vec![
            scalar(0.2, -1.0, 0.5),
            scalar(0.3, 0.5, 1.0),
            scalar(0.5, 1.0, 2.0),
        ]);
        let before = gm.mean()[0];
        let out = gm_merge(gm, 10.0);
        assert_eq!(out.len(), 1);
        assert!((out.mean()[0] - before).abs() < 1e-12);
    }

    #[test]
    fn merge_never_shrinks_matched_covariance_trace() {
        let gm = GaussianMixture::new(vec![scalar(0.5, 0.0, 1.0), scalar(0.5, 3.0, 1.0)]);
        let avg_trace = 1.0;
        let out = gm_merge(gm, 10.0);
        assert!(out.components[0].1.cov[(0, 0)] >= avg_trace);
    }

    #[test]
    fn prune_drops_light_components_and_renormalizes() {
        let gm = GaussianMixture::new(vec![scalar(0.999, 0.0, 1.0), scalar(1e-6, 5.0, 1.0), scalar(1e-3 - 1e-6, 9.0, 1.0)]);
        let out = gm_prune(gm, 1e-5);
        assert_eq!(out.len(), 2);
        assert!((out.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prune_keeps_best_when_all_below_threshold() {
        let gm = GaussianMixture::new(vec![scalar(0.5, 0.0, 1.0), scalar(0.5, 1.0, 1.0)]);
        let out = gm_prune(gm, 0.9);
        assert_eq!(out.len(), 1);
        assert!((out.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cap_keeps_heaviest() {
        let gm = GaussianMixture::new(vec![scalar(0.1, 0.0, 1.0), scalar(0.6, 1.0, 1.0), scalar(0.3, 2.0, 1.0)]);
        let out = gm_cap(gm, 2);
        assert_eq!(out.len(), 2);
        assert!((out.components[0].1.mean[0] - 1.0).abs() < 1e-12);
        assert!((out.components[1].1.mean[0] - 2.0).abs() < 1e-12);
        assert!((out.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_preserves_total_weight_of_unnormalized_mixture() {
        // Mixtures mid-pipeline carry unnormalized weights; reduction must
        // keep the total intact.
        let gm = GaussianMixture::new(vec![scalar(0.3, 0.0, 1.0), scalar(0.0003, 0.1, 1.0), scalar(0.2, 8.0, 1.0)]);
        let total = gm.weight_sum();
        let out = GmReduction::default().apply(gm);
        assert!((out.weight_sum() - total).abs() < 1e-12);
    }

    #[test]
    fn vector_merge_adds_spread_term() {
        let g1 = Gaussian::new(DVector::from_column_slice(&[0.0, 0.0]), DMatrix::identity(2, 2));
        let g2 = Gaussian::new(DVector::from_column_slice(&[2.0, 0.0]), DMatrix::identity(2, 2));
        let gm = GaussianMixture::new(vec![(0.5, g1), (0.5, g2)]);
        let out = gm_merge(gm, 10.0);
        let g = &out.components[0].1;
        assert!((g.mean[0] - 1.0).abs() < 1e-12);
        assert!((g.cov[(0, 0)] - 2.0).abs() < 1e-12, "x variance gains (mean spread)^2");
        assert!((g.cov[(1, 1)] - 1.0).abs() < 1e-12, "y variance untouched");
    }
}
