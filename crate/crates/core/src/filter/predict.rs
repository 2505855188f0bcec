//! Prediction: survival thinning of existing tracks plus multi-Bernoulli
//! birth.
//!
//! For each prior hypothesis with label set `J`, every survivor subset
//! `L ⊆ J` carries weight `P_S^|L| (1-P_S)^(|J|-L|)` and every birth
//! subset `B` carries `∏_B r ∏_∉B (1-r)`; the child hypothesis over
//! `L ∪ B` multiplies the three factors. Survivor densities are pushed
//! through the linear-Gaussian motion model; birth densities enter as-is
//! with fresh `(scan, index)` labels.
//!
//! Subset pairs are enumerated best-first per prior hypothesis (exact for
//! small label sets, ranked truncation beyond [`SUBSET_CAP`]), so the
//! full cross product is never materialized.

use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::gaussian::kf_predict;
use crate::rfs::{k_best_subsets, DGlmbDensity, MdGlmbDensity};
use crate::Label;

use super::pooled::{views_from_dglmb, views_from_md, HypView, PoolHyp, PooledGlmb};
use super::{BirthModel, MotionModel, TruncationConfig};

/// Exhaustive subset enumeration is used up to 12 items (4096 subsets);
/// larger sets keep only this many best subsets by weight.
const SUBSET_CAP: usize = 1 << 12;

fn subset_budget(n: usize) -> usize {
    if n <= 12 {
        1usize << n
    } else {
        SUBSET_CAP
    }
}

/// How many (survivor subset, birth subset) pairs one prior hypothesis of
/// this weight may emit before merging and truncation.
fn product_budget(trunc: &TruncationConfig, weight: f64, total_pairs: usize) -> usize {
    let cap = (trunc.max_hypotheses as f64).min(1e7);
    let budget = (8.0 * cap * weight).ceil().max(4.0);
    (budget as usize).min(total_pairs)
}

/// Ranked-product frontier entry; ordered by weight, ties preferring the
/// lexicographically smaller index pair for determinism.
struct PairCand {
    weight: f64,
    i: usize,
    j: usize,
}

impl PartialEq for PairCand {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for PairCand {}
impl PartialOrd for PairCand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PairCand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| other.i.cmp(&self.i))
            .then_with(|| other.j.cmp(&self.j))
    }
}

struct Group {
    weight: f64,
    members: Vec<(f64, Vec<usize>)>,
}

pub(super) fn predict_pooled(
    views: &[HypView<'_>],
    scan: u32,
    motion: &MotionModel,
    birth: &BirthModel,
    trunc: &TruncationConfig,
    merge_label_sets: bool,
) -> Result<PooledGlmb> {
    trunc.validate()?;
    birth.validate()?;
    let ps = motion.survival_probability;
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::InvalidParameter(format!("survival probability {ps} outside [0, 1]")));
    }

    let mut pool = Vec::new();

    // Birth tracks and their ranked subsets are shared by every prior
    // hypothesis.
    let mut birth_tracks = birth.instantiate(scan).tracks;
    birth_tracks.sort_by_key(|t| t.label);
    if birth_tracks.windows(2).any(|w| w[0].label == w[1].label) {
        return Err(Error::InvalidParameter("duplicate birth component index".into()));
    }
    let birth_probs: Vec<f64> = birth_tracks.iter().map(|t| t.existence).collect();
    let birth_labeled_slots: Vec<(Label, usize)> = birth_tracks
        .into_iter()
        .map(|t| {
            pool.push((t.label, t.density));
            (t.label, pool.len() - 1)
        })
        .collect();
    let birth_subsets = k_best_subsets(&birth_probs, subset_budget(birth_probs.len()));

    let mut groups: BTreeMap<(Vec<Label>, u64), Group> = BTreeMap::new();

    for view in views {
        if !(view.weight > 0.0) {
            continue;
        }
        let n = view.tracks.len();
        let survivor_slots: Vec<(Label, usize)> = view
            .tracks
            .iter()
            .map(|(l, m)| {
                pool.push((*l, kf_predict(m, &motion.transition, &motion.process_noise)));
                (*l, pool.len() - 1)
            })
            .collect();
        let survival_subsets = k_best_subsets(&vec![ps; n], subset_budget(n));

        let total_pairs = survival_subsets.len() * birth_subsets.len();
        let budget = product_budget(trunc, view.weight, total_pairs);
        let history = if merge_label_sets { 0 } else { view.history_id };

        let mut emit = |i: usize, j: usize| -> Result<()> {
            let (surv_mask, surv_w) = &survival_subsets[i];
            let (birth_mask, birth_w) = &birth_subsets[j];
            let weight = view.weight * surv_w * birth_w;
            let (labels, slots) =
                merge_tracks(&survivor_slots, surv_mask, &birth_labeled_slots, birth_mask)?;
            let group = groups
                .entry((labels, history))
                .or_insert_with(|| Group { weight: 0.0, members: Vec::new() });
            group.weight += weight;
            group.members.push((weight, slots));
            Ok(())
        };

        if budget >= total_pairs {
            for i in 0..survival_subsets.len() {
                for j in 0..birth_subsets.len() {
                    emit(i, j)?;
                }
            }
        } else {
            // Best-first walk of the product grid: weights are
            // non-increasing along both axes, so expanding right always
            // and down only from the first column visits each pair once
            // in weight order.
            let mut heap = BinaryHeap::new();
            heap.push(PairCand { weight: survival_subsets[0].1 * birth_subsets[0].1, i: 0, j: 0 });
            let mut emitted = 0;
            while emitted < budget {
                let Some(c) = heap.pop() else { break };
                emit(c.i, c.j)?;
                emitted += 1;
                if c.j + 1 < birth_subsets.len() {
                    heap.push(PairCand {
                        weight: survival_subsets[c.i].1 * birth_subsets[c.j + 1].1,
                        i: c.i,
                        j: c.j + 1,
                    });
                }
                if c.j == 0 && c.i + 1 < survival_subsets.len() {
                    heap.push(PairCand {
                        weight: survival_subsets[c.i + 1].1 * birth_subsets[0].1,
                        i: c.i + 1,
                        j: 0,
                    });
                }
            }
        }
    }

    if groups.is_empty() {
        return Err(Error::DegenerateDensity("prediction produced no hypotheses"));
    }

    let mut hyps = Vec::with_capacity(groups.len());
    for (idx, ((labels, history), group)) in groups.into_iter().enumerate() {
        if !(group.weight > 0.0) {
            continue;
        }
        let history_id = if merge_label_sets { idx as u64 } else { history };
        let tracks = if group.members.len() == 1 {
            group.members.into_iter().next().unwrap().1
        } else {
            // Mix member densities per label in proportion to member
            // weights; members sharing one slot keep it.
            let mut tracks = Vec::with_capacity(labels.len());
            for p in 0..labels.len() {
                let first = group.members[0].1[p];
                if group.members.iter().all(|(_, slots)| slots[p] == first) {
                    tracks.push(first);
                    continue;
                }
                let mut components = Vec::new();
                for (w, slots) in &group.members {
                    let share = w / group.weight;
                    for (cw, g) in &pool[slots[p]].1.components {
                        components.push((cw * share, g.clone()));
                    }
                }
                pool.push((labels[p], crate::gaussian::GaussianMixture { components }));
                tracks.push(pool.len() - 1);
            }
            tracks
        };
        hyps.push(PoolHyp { weight: group.weight, tracks, history_id });
    }

    let mut out = PooledGlmb { pool, hyps };
    out.truncate_in_place(trunc)?;
    Ok(out)
}

/// Merge masked survivor and birth tracks into one label-sorted slot list.
fn merge_tracks(
    survivors: &[(Label, usize)],
    surv_mask: &[bool],
    births: &[(Label, usize)],
    birth_mask: &[bool],
) -> Result<(Vec<Label>, Vec<usize>)> {
    let mut picked: Vec<(Label, usize)> = survivors
        .iter()
        .zip(surv_mask)
        .filter(|(_, &keep)| keep)
        .map(|((l, s), _)| (*l, *s))
        .collect();
    picked.extend(
        births
            .iter()
            .zip(birth_mask)
            .filter(|(_, &keep)| keep)
            .map(|((l, s), _)| (*l, *s)),
    );
    picked.sort_by_key(|(l, _)| *l);
    if picked.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidParameter(
            "birth label collides with a surviving label; advance the scan index".into(),
        ));
    }
    Ok(picked.into_iter().unzip())
}

/// Predict a marginalized density one scan ahead: children with identical
/// label sets merge by weight addition and proportional density mixing.
/// Output is truncated per `trunc` and normalized; birth labels carry
/// `scan`.
pub fn predict(
    prior: &MdGlmbDensity,
    scan: u32,
    motion: &MotionModel,
    birth: &BirthModel,
    trunc: &TruncationConfig,
) -> Result<MdGlmbDensity> {
    let views = views_from_md(prior);
    Ok(predict_pooled(&views, scan, motion, birth, trunc, true)?.into_mdglmb())
}

/// Predict a delta-GLMB one scan ahead. Children keep their parent's
/// history id, so hypotheses of distinct histories stay distinct.
pub fn dglmb_predict(
    prior: &DGlmbDensity,
    scan: u32,
    motion: &MotionModel,
    birth: &BirthModel,
    trunc: &TruncationConfig,
) -> Result<DGlmbDensity> {
    let views = views_from_dglmb(prior);
    Ok(predict_pooled(&views, scan, motion, birth, trunc, false)?.into_dglmb())
}
