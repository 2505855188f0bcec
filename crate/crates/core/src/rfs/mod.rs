//! Labeled multi-object densities and the exact operations between them.
//!
//! Three density families describe a random finite set of labeled tracks:
//!
//! * [`DGlmbDensity`]: mixture over pairs (label set `I`, history id); each
//!   component carries one Gaussian mixture per label. This is the full
//!   filter representation in which every surviving measurement-association
//!   history stays distinct.
//! * [`MdGlmbDensity`]: at most one hypothesis per label set `I`.
//!   [`marginalize`] collapses a delta-GLMB onto this family by summing
//!   weights over histories, `w(I) = sum_h w(I, h)`, and mixing the track
//!   densities in proportion, `p_I = sum_h w(I, h) p_h / w(I)`. The
//!   collapse preserves both the cardinality distribution and the labeled
//!   first moment exactly; only correlations between histories are lost.
//! * [`LmbParams`]: one `(existence r, density p)` pair per track, the
//!   fully factorized family. [`extract_lmb`] matches `r(l)` to the total
//!   weight of hypotheses containing `l` and `p(l)` to the normalized
//!   labeled first moment; [`glmb_from_lmb`] expands back to explicit
//!   label-set hypotheses, ranked by weight so truncation needs no full
//!   `2^n` enumeration.
//!
//! Weights are plain probabilities (normalization is explicit), label sets
//! are kept sorted, and every grouping operation folds through ordered maps
//! so results are deterministic.

mod subsets;

pub(crate) use subsets::k_best_subsets;

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianMixture;
use crate::label::Label;

/// One hypothesis of a marginalized density: a label set, its weight, and
/// one normalized track density per label.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdGlmbHypothesis {
    pub weight: f64,
    /// Track densities sorted by label; the key set is the hypothesis'
    /// label set.
    pub tracks: Vec<(Label, GaussianMixture)>,
}

/// One hypothesis of a delta-GLMB density: additionally tagged with an
/// opaque history id so distinct association histories over the same label
/// set stay distinct.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DGlmbHypothesis {
    pub weight: f64,
    pub history_id: u64,
    pub tracks: Vec<(Label, GaussianMixture)>,
}

impl MdGlmbHypothesis {
    /// Build a hypothesis; tracks are sorted by label and must be unique.
    pub fn new(weight: f64, mut tracks: Vec<(Label, GaussianMixture)>) -> Self {
        tracks.sort_by_key(|(l, _)| *l);
        assert!(
            tracks.windows(2).all(|w| w[0].0 != w[1].0),
            "duplicate label in hypothesis"
        );
        Self { weight, tracks }
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.tracks.iter().map(|(l, _)| *l)
    }

    pub fn label_set(&self) -> Vec<Label> {
        self.labels().collect()
    }

    pub fn cardinality(&self) -> usize {
        self.tracks.len()
    }

    pub fn density(&self, label: Label) -> Option<&GaussianMixture> {
        self.tracks
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| &self.tracks[i].1)
    }
}

impl DGlmbHypothesis {
    pub fn new(weight: f64, history_id: u64, mut tracks: Vec<(Label, GaussianMixture)>) -> Self {
        tracks.sort_by_key(|(l, _)| *l);
        assert!(
            tracks.windows(2).all(|w| w[0].0 != w[1].0),
            "duplicate label in hypothesis"
        );
        Self { weight, history_id, tracks }
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.tracks.iter().map(|(l, _)| *l)
    }

    pub fn label_set(&self) -> Vec<Label> {
        self.labels().collect()
    }

    pub fn cardinality(&self) -> usize {
        self.tracks.len()
    }

    pub fn density(&self, label: Label) -> Option<&GaussianMixture> {
        self.tracks
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| &self.tracks[i].1)
    }
}

/// Marginalized density: hypotheses keyed by label set, sorted canonically.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MdGlmbDensity {
    pub hypotheses: Vec<MdGlmbHypothesis>,
}

/// Delta-GLMB density: hypotheses keyed by (label set, history id).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DGlmbDensity {
    pub hypotheses: Vec<DGlmbHypothesis>,
}

/// Cardinality probability mass function `rho(0..=n_max)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardinalityDistribution {
    pub probabilities: Vec<f64>,
}

impl CardinalityDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Most probable cardinality; ties resolve to the smallest count.
    pub fn map_n(&self) -> usize {
        let mut best = 0;
        for (n, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = n;
            }
        }
        best
    }
}

/// Existence-probability/density pairs of an LMB density, sorted by label.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LmbParams {
    pub tracks: Vec<LmbTrack>,
}

impl LmbParams {
    /// Expected number of objects: the sum of existence probabilities.
    pub fn expected_cardinality(&self) -> f64 {
        self.tracks.iter().map(|t| t.existence).sum()
    }

    /// Distribution of the number of existing objects under independent
    /// Bernoulli existence (Poisson-binomial), built by convolving one
    /// track at a time.
    pub fn cardinality_distribution(&self) -> CardinalityDistribution {
        let mut probabilities = vec![1.0];
        for t in &self.tracks {
            let r = t.existence;
            let mut next = vec![0.0; probabilities.len() + 1];
            for (k, p) in probabilities.iter().enumerate() {
                next[k] += p * (1.0 - r);
                next[k + 1] += p * r;
            }
            probabilities = next;
        }
        CardinalityDistribution { probabilities }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LmbTrack {
    pub label: Label,
    pub existence: f64,
    pub density: GaussianMixture,
}

/// Accumulates weighted contributions to one merged hypothesis.
struct HypothesisAccumulator {
    weight: f64,
    /// Per-label mixtures with absolute (weight-scaled) component weights,
    /// aligned with the sorted label set of the group.
    tracks: Vec<(Label, GaussianMixture)>,
    contributions: usize,
}

impl HypothesisAccumulator {
    fn new(labels: &[Label]) -> Self {
        Self {
            weight: 0.0,
            tracks: labels.iter().map(|l| (*l, GaussianMixture::default())).collect(),
            contributions: 0,
        }
    }

    fn add(&mut self, weight: f64, tracks: &[(Label, GaussianMixture)]) {
        self.weight += weight;
        self.contributions += 1;
        for ((_, acc), (_, mixture)) in self.tracks.iter_mut().zip(tracks) {
            for (w, g) in &mixture.components {
                acc.components.push((w * weight, g.clone()));
            }
        }
    }

    /// Renormalize the accumulated mixtures by the summed weight. With a
    /// single contribution the original mixture is recovered exactly.
    fn finish(mut self, source: Option<&[(Label, GaussianMixture)]>) -> Option<(f64, Vec<(Label, GaussianMixture)>)> {
        if !(self.weight > 0.0) {
            return None;
        }
        if self.contributions == 1 {
            if let Some(src) = source {
                return Some((self.weight, src.to_vec()));
            }
        }
        for (_, mixture) in &mut self.tracks {
            mixture.scale_weights(1.0 / self.weight);
        }
        Some((self.weight, self.tracks))
    }
}

impl MdGlmbDensity {
    /// Point mass on the empty label set.
    pub fn empty() -> Self {
        Self { hypotheses: vec![MdGlmbHypothesis::new(1.0, Vec::new())] }
    }

    /// Build a density from hypotheses, merging any that share a label set:
    /// weights add and track densities mix in proportion. Zero-weight
    /// groups are dropped. The result is *not* normalized.
    pub fn from_hypotheses(hyps: Vec<MdGlmbHypothesis>) -> Self {
        let mut groups: BTreeMap<Vec<Label>, (HypothesisAccumulator, usize)> = BTreeMap::new();
        for (idx, h) in hyps.iter().enumerate() {
            let key = h.label_set();
            let entry = groups
                .entry(key)
                .or_insert_with_key(|k| (HypothesisAccumulator::new(k), idx));
            entry.0.add(h.weight, &h.tracks);
        }
        let hypotheses = groups
            .into_values()
            .filter_map(|(acc, first_idx)| {
                let single_source = (acc.contributions == 1).then(|| hyps[first_idx].tracks.as_slice());
                let (weight, tracks) = acc.finish(single_source)?;
                Some(MdGlmbHypothesis { weight, tracks })
            })
            .collect();
        Self { hypotheses }
    }

    pub fn weight_sum(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight).sum()
    }

    /// Scale hypothesis weights to sum to one.
    pub fn normalize(&mut self) -> Result<()> {
        normalize_weights(self.hypotheses.iter_mut().map(|h| &mut h.weight))
    }

    /// `rho(n) = sum of weights of hypotheses with |I| = n`, up to the
    /// largest label-set size present.
    pub fn cardinality_distribution(&self) -> CardinalityDistribution {
        let n_max = self.hypotheses.iter().map(|h| h.cardinality()).max().unwrap_or(0);
        let mut probabilities = vec![0.0; n_max + 1];
        for h in &self.hypotheses {
            probabilities[h.cardinality()] += h.weight;
        }
        CardinalityDistribution { probabilities }
    }

    pub fn expected_cardinality(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight * h.cardinality() as f64).sum()
    }

    /// Labeled first moment at `(x, label)`:
    /// `sum over hypotheses containing label of w * p(x, label)`.
    pub fn phd(&self, label: Label, x: &DVector<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for h in &self.hypotheses {
            if let Some(p) = h.density(label) {
                acc += h.weight * p.density(x)?;
            }
        }
        Ok(acc)
    }
}

impl DGlmbDensity {
    /// Point mass on the empty label set.
    pub fn empty() -> Self {
        Self { hypotheses: vec![DGlmbHypothesis::new(1.0, 0, Vec::new())] }
    }

    /// View a marginalized density as a delta-GLMB with one distinct
    /// history per hypothesis.
    pub fn from_mdglmb(md: &MdGlmbDensity) -> Self {
        let hypotheses = md
            .hypotheses
            .iter()
            .enumerate()
            .map(|(i, h)| DGlmbHypothesis {
                weight: h.weight,
                history_id: i as u64,
                tracks: h.tracks.clone(),
            })
            .collect();
        Self { hypotheses }
    }

    /// Build a density from hypotheses, merging any that share both label
    /// set and history id. The result is *not* normalized.
    pub fn from_hypotheses(hyps: Vec<DGlmbHypothesis>) -> Self {
        let mut groups: BTreeMap<(Vec<Label>, u64), (HypothesisAccumulator, usize)> = BTreeMap::new();
        for (idx, h) in hyps.iter().enumerate() {
            let key = (h.label_set(), h.history_id);
            let entry = groups
                .entry(key)
                .or_insert_with_key(|k| (HypothesisAccumulator::new(&k.0), idx));
            entry.0.add(h.weight, &h.tracks);
        }
        let hypotheses = groups
            .into_iter()
            .filter_map(|((_, history_id), (acc, first_idx))| {
                let single_source = (acc.contributions == 1).then(|| hyps[first_idx].tracks.as_slice());
                let (weight, tracks) = acc.finish(single_source)?;
                Some(DGlmbHypothesis { weight, history_id, tracks })
            })
            .collect();
        Self { hypotheses }
    }

    pub fn weight_sum(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        normalize_weights(self.hypotheses.iter_mut().map(|h| &mut h.weight))
    }

    pub fn cardinality_distribution(&self) -> CardinalityDistribution {
        let n_max = self.hypotheses.iter().map(|h| h.cardinality()).max().unwrap_or(0);
        let mut probabilities = vec![0.0; n_max + 1];
        for h in &self.hypotheses {
            probabilities[h.cardinality()] += h.weight;
        }
        CardinalityDistribution { probabilities }
    }

    pub fn expected_cardinality(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight * h.cardinality() as f64).sum()
    }

    pub fn phd(&self, label: Label, x: &DVector<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for h in &self.hypotheses {
            if let Some(p) = h.density(label) {
                acc += h.weight * p.density(x)?;
            }
        }
        Ok(acc)
    }
}

fn normalize_weights<'a>(weights: impl Iterator<Item = &'a mut f64>) -> Result<()> {
    let mut refs: Vec<&mut f64> = weights.collect();
    let total: f64 = refs.iter().map(|w| **w).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateDensity("hypothesis weight sum not positive"));
    }
    for w in &mut refs {
        **w /= total;
    }
    Ok(())
}

/// Collapse a delta-GLMB onto one hypothesis per label set.
///
/// Weights over shared label sets add; track densities mix in proportion to
/// the collapsed weights. The cardinality distribution and the labeled
/// first moment of the input are preserved exactly.
pub fn marginalize(density: &DGlmbDensity) -> MdGlmbDensity {
    let hyps = density
        .hypotheses
        .iter()
        .map(|h| MdGlmbHypothesis { weight: h.weight, tracks: h.tracks.clone() })
        .collect();
    MdGlmbDensity::from_hypotheses(hyps)
}

/// Match an LMB density to `density`: existence `r(l)` is the total weight
/// of hypotheses containing `l`, and the track density is the normalized
/// labeled first moment. Labels with zero existence are omitted; float
/// drift above one is clamped.
pub fn extract_lmb(density: &MdGlmbDensity) -> LmbParams {
    let mut acc: BTreeMap<Label, (f64, GaussianMixture)> = BTreeMap::new();
    for h in &density.hypotheses {
        for (label, mixture) in &h.tracks {
            let entry = acc.entry(*label).or_insert_with(|| (0.0, GaussianMixture::default()));
            entry.0 += h.weight;
            for (w, g) in &mixture.components {
                entry.1.components.push((w * h.weight, g.clone()));
            }
        }
    }
    let tracks = acc
        .into_iter()
        .filter(|(_, (r, _))| *r > 0.0)
        .map(|(label, (r, mut density))| {
            density.scale_weights(1.0 / r);
            LmbTrack { label, existence: r.min(1.0), density }
        })
        .collect();
    LmbParams { tracks }
}

/// Expand an LMB density into explicit label-set hypotheses.
///
/// Hypothesis weights are `prod_{l in I} r(l) * prod_{l not in I} (1-r(l))`.
/// Only the `max_components` heaviest label subsets are instantiated
/// (ranked enumeration, no full `2^n` sweep) and their weights are
/// renormalized. Existence probabilities outside `[0, 1]` are rejected.
pub fn glmb_from_lmb(lmb: &LmbParams, max_components: usize) -> Result<MdGlmbDensity> {
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
    let hypotheses = subsets
        .into_iter()
        .map(|(mask, weight)| {
            let tracks = lmb
                .tracks
                .iter()
                .zip(&mask)
                .filter(|(_, &inc)| inc)
                .map(|(t, _)| (t.label, t.density.clone()))
                .collect();
            MdGlmbHypothesis { weight, tracks }
        })
        .collect();
    let mut density = MdGlmbDensity { hypotheses };
    density.normalize()?;
    Ok(density)
}
