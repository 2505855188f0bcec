//! Shared-track-pool density form used internally by the filter steps.
//!
//! Within one step the same physical track density is referenced by many
//! hypotheses: birth components appear in every birth subset, children of
//! a common parent share its predicted tracks, and LMB expansion reuses
//! one density per label across all label subsets. The pooled form stores
//! each distinct density once and lets hypotheses reference pool slots,
//! so per-track work (unscented preparation, measurement likelihoods,
//! posterior conditioning) runs once per density rather than once per
//! (hypothesis, track) pair.
//!
//! All grouping folds through ordered maps and ties break on canonical
//! label-set order, keeping every operation deterministic.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, GmReduction};
use crate::rfs::{
    k_best_subsets, DGlmbDensity, DGlmbHypothesis, LmbParams, LmbTrack, MdGlmbDensity,
    MdGlmbHypothesis,
};
use crate::Label;

use super::TruncationConfig;

/// One hypothesis referencing pool slots instead of owning densities.
#[derive(Clone, Debug)]
pub(super) struct PoolHyp {
    pub weight: f64,
    /// Pool slot per track, ordered by the slots' labels.
    pub tracks: Vec<usize>,
    pub history_id: u64,
}

/// A labeled density with hypothesis-shared track storage.
pub(super) struct PooledGlmb {
    pub pool: Vec<(Label, GaussianMixture)>,
    pub hyps: Vec<PoolHyp>,
}

/// Borrowed view of one hypothesis, the common entry format for pooled
/// operations over both marginalized and delta-GLMB priors.
pub(super) struct HypView<'a> {
    pub weight: f64,
    pub tracks: Vec<(Label, &'a GaussianMixture)>,
    pub history_id: u64,
}

pub(super) fn views_from_md(d: &MdGlmbDensity) -> Vec<HypView<'_>> {
    d.hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| HypView {
            weight: h.weight,
            tracks: h.tracks.iter().map(|(l, m)| (*l, m)).collect(),
            history_id: i as u64,
        })
        .collect()
}

pub(super) fn views_from_dglmb(d: &DGlmbDensity) -> Vec<HypView<'_>> {
    d.hypotheses
        .iter()
        .map(|h| HypView {
            weight: h.weight,
            tracks: h.tracks.iter().map(|(l, m)| (*l, m)).collect(),
            history_id: h.history_id,
        })
        .collect()
}

impl PooledGlmb {
    /// Pool one slot per (hypothesis, track); no sharing.
    pub fn from_views(views: &[HypView<'_>]) -> Self {
        let mut pool = Vec::new();
        let hyps = views
            .iter()
            .map(|v| {
                let tracks = v
                    .tracks
                    .iter()
                    .map(|(l, m)| {
                        pool.push((*l, (*m).clone()));
                        pool.len() - 1
                    })
                    .collect();
                PoolHyp { weight: v.weight, tracks, history_id: v.history_id }
            })
            .collect();
        Self { pool, hyps }
    }

    /// Expand an LMB into ranked label-subset hypotheses sharing one pool
    /// slot per track. Mirrors [`crate::rfs::glmb_from_lmb`] without
    /// cloning densities per hypothesis.
    pub fn from_lmb(lmb: LmbParams, max_components: usize) -> Result<Self> {
        for t in &lmb.tracks {
            if !(0.0..=1.0).contains(&t.existence) || !t.existence.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "existence probability {} of track {} outside [0, 1]",
                    t.existence, t.label
                )));
            }
        }
        if max_components == 0 {
            return Err(Error::InvalidParameter("max_components must be positive".into()));
        }
        let probs: Vec<f64> = lmb.tracks.iter().map(|t| t.existence).collect();
        let subsets = k_best_subsets(&probs, max_components);
        let pool: Vec<(Label, GaussianMixture)> =
            lmb.tracks.into_iter().map(|t| (t.label, t.density)).collect();
        let hyps = subsets
            .into_iter()
            .enumerate()
            .map(|(i, (mask, weight))| PoolHyp {
                weight,
                tracks: mask
                    .iter()
                    .enumerate()
                    .filter(|(_, &inc)| inc)
                    .map(|(slot, _)| slot)
                    .collect(),
                history_id: i as u64,
            })
            .collect();
        let mut out = Self { pool, hyps };
        out.normalize_in_place()?;
        Ok(out)
    }

    pub fn labels_of(&self, hyp: &PoolHyp) -> Vec<Label> {
        hyp.tracks.iter().map(|&s| self.pool[s].0).collect()
    }

    pub fn weight_sum(&self) -> f64 {
        self.hyps.iter().map(|h| h.weight).sum()
    }

    pub fn normalize_in_place(&mut self) -> Result<()> {
        let total = self.weight_sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateDensity("hypothesis weight sum not positive"));
        }
        for h in &mut self.hyps {
            h.weight /= total;
        }
        Ok(())
    }

    /// Normalize, drop hypotheses below the weight floor (keeping at least
    /// the single best), cap the count, and renormalize. Ordering after
    /// truncation: weight descending, ties by canonical label-set order
    /// then history id.
    pub fn truncate_in_place(&mut self, trunc: &TruncationConfig) -> Result<()> {
        self.normalize_in_place()?;
        let mut order: Vec<usize> = (0..self.hyps.len()).collect();
        let keys: Vec<Vec<Label>> = self.hyps.iter().map(|h| self.labels_of(h)).collect();
        order.sort_by(|&a, &b| {
            self.hyps[b]
                .weight
                .total_cmp(&self.hyps[a].weight)
                .then_with(|| keys[a].cmp(&keys[b]))
                .then_with(|| self.hyps[a].history_id.cmp(&self.hyps[b].history_id))
        });
        let floor = trunc.hypothesis_weight_floor;
        let mut kept: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| self.hyps[i].weight >= floor)
            .take(trunc.max_hypotheses)
            .collect();
        if kept.is_empty() {
            kept.push(order[0]);
        }
        let mut hyps = Vec::with_capacity(kept.len());
        for &i in &kept {
            hyps.push(self.hyps[i].clone());
        }
        self.hyps = hyps;
        self.normalize_in_place()
    }

    /// Collapse to one hypothesis per label set: weights add and track
    /// densities mix in proportion. Slots shared by every group member
    /// pass through unchanged; mixed tracks get fresh pool slots.
    pub fn marginalized(mut self) -> Self {
        let mut groups: BTreeMap<Vec<Label>, Vec<usize>> = BTreeMap::new();
        for (i, h) in self.hyps.iter().enumerate() {
            groups.entry(self.labels_of(h)).or_default().push(i);
        }
        let mut new_hyps = Vec::with_capacity(groups.len());
        for (history, (labels, members)) in groups.into_iter().enumerate() {
            let total: f64 = members.iter().map(|&i| self.hyps[i].weight).sum();
            if !(total > 0.0) {
                continue;
            }
            let tracks = if members.len() == 1 {
                self.hyps[members[0]].tracks.clone()
            } else {
                let mut tracks = Vec::with_capacity(labels.len());
                for p in 0..labels.len() {
                    let first = self.hyps[members[0]].tracks[p];
                    if members.iter().all(|&i| self.hyps[i].tracks[p] == first) {
                        tracks.push(first);
                        continue;
                    }
                    let mut components = Vec::new();
                    for &i in &members {
                        let share = self.hyps[i].weight / total;
                        let slot = self.hyps[i].tracks[p];
                        for (w, g) in &self.pool[slot].1.components {
                            components.push((w * share, g.clone()));
                        }
                    }
                    self.pool.push((labels[p], GaussianMixture { components }));
                    tracks.push(self.pool.len() - 1);
                }
                tracks
            };
            new_hyps.push(PoolHyp { weight: total, tracks, history_id: history as u64 });
        }
        Self { pool: self.pool, hyps: new_hyps }
    }

    /// Existence/density pairs matching membership weight and the labeled
    /// first moment, as in [`crate::rfs::extract_lmb`].
    pub fn extract_lmb(&self) -> LmbParams {
        let mut acc: BTreeMap<Label, (f64, BTreeMap<usize, f64>)> = BTreeMap::new();
        for h in &self.hyps {
            for &slot in &h.tracks {
                let entry = acc.entry(self.pool[slot].0).or_default();
                entry.0 += h.weight;
                *entry.1.entry(slot).or_insert(0.0) += h.weight;
            }
        }
        let tracks = acc
            .into_iter()
            .filter(|(_, (r, _))| *r > 0.0)
            .map(|(label, (r, slots))| {
                let mut components = Vec::new();
                for (slot, coeff) in slots {
                    for (w, g) in &self.pool[slot].1.components {
                        components.push((w * coeff / r, g.clone()));
                    }
                }
                LmbTrack { label, existence: r.min(1.0), density: GaussianMixture { components } }
            })
            .collect();
        LmbParams { tracks }
    }

    /// Apply mixture reduction to every pool slot referenced by a
    /// hypothesis.
    pub fn reduce_tracks(&mut self, reduction: &GmReduction) {
        let mut referenced = vec![false; self.pool.len()];
        for h in &self.hyps {
            for &slot in &h.tracks {
                referenced[slot] = true;
            }
        }
        for (slot, used) in referenced.iter().enumerate() {
            if *used {
                let mixture = std::mem::take(&mut self.pool[slot].1);
                self.pool[slot].1 = reduction.apply(mixture);
            }
        }
    }

    /// Materialize as a marginalized density, hypotheses in canonical
    /// label-set order. Uniquely referenced slots are moved, shared slots
    /// cloned.
    pub fn into_mdglmb(self) -> MdGlmbDensity {
        let (mut pool, hyps, refcount) = self.prepare_materialize();
        let hypotheses = hyps
            .into_iter()
            .map(|h| MdGlmbHypothesis {
                weight: h.weight,
                tracks: h
                    .tracks
                    .iter()
                    .map(|&s| take_or_clone(&mut pool, &refcount, s))
                    .collect(),
            })
            .collect();
        MdGlmbDensity { hypotheses }
    }

    /// Materialize as a delta-GLMB, hypotheses ordered by (label set,
    /// history id).
    pub fn into_dglmb(self) -> DGlmbDensity {
        let (mut pool, hyps, refcount) = self.prepare_materialize();
        let hypotheses = hyps
            .into_iter()
            .map(|h| DGlmbHypothesis {
                weight: h.weight,
                history_id: h.history_id,
                tracks: h
                    .tracks
                    .iter()
                    .map(|&s| take_or_clone(&mut pool, &refcount, s))
                    .collect(),
            })
            .collect();
        DGlmbDensity { hypotheses }
    }

    fn prepare_materialize(self) -> (Vec<(Label, GaussianMixture)>, Vec<PoolHyp>, Vec<u32>) {
        let mut refcount = vec![0u32; self.pool.len()];
        for h in &self.hyps {
            for &slot in &h.tracks {
                refcount[slot] += 1;
            }
        }
        let mut order: Vec<usize> = (0..self.hyps.len()).collect();
        let keys: Vec<Vec<Label>> = self.hyps.iter().map(|h| self.labels_of(h)).collect();
        order.sort_by(|&a, &b| {
            keys[a]
                .cmp(&keys[b])
                .then_with(|| self.hyps[a].history_id.cmp(&self.hyps[b].history_id))
        });
        let hyps = order.into_iter().map(|i| self.hyps[i].clone()).collect();
        (self.pool, hyps, refcount)
    }
}

fn take_or_clone(
    pool: &mut [(Label, GaussianMixture)],
    refcount: &[u32],
    slot: usize,
) -> (Label, GaussianMixture) {
    let label = pool[slot].0;
    let mixture = if refcount[slot] == 1 {
        std::mem::take(&mut pool[slot].1)
    } else {
        pool[slot].1.clone()
    };
    (label, mixture)
}
