//! Ranked enumeration of independent-Bernoulli subsets.
//!
//! Given per-item inclusion probabilities `p_i`, the weight of a subset `S`
//! is `prod_{i in S} p_i * prod_{i not in S} (1 - p_i)`. The heaviest
//! subset takes every item with `p_i > 1/2`; every other subset differs
//! from it by a set of toggles, each costing a factor
//! `min(p_i, 1-p_i) / max(p_i, 1-p_i) <= 1`. Enumerating toggle sets in
//! order of that product with a frontier heap yields the K heaviest
//! subsets without touching the other `2^n`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct Candidate {
    weight: f64,
    /// Indices into the ratio-sorted toggle list, strictly increasing.
    toggles: Vec<u32>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on weight; toggle-set order keeps ties deterministic.
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| other.toggles.cmp(&self.toggles))
    }
}

/// The `k` heaviest subsets, heaviest first, as membership masks over the
/// original item order plus their exact weights. Zero-weight subsets
/// (forced by `p = 0` or `p = 1` items) are never produced.
pub(crate) fn k_best_subsets(probs: &[f64], k: usize) -> Vec<(Vec<bool>, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let n = probs.len();
    let base: Vec<bool> = probs.iter().map(|&p| p > 0.5).collect();

    // Toggleable items sorted by cost ratio, cheapest toggles first.
    let mut togglable: Vec<(f64, usize)> = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0 && p < 1.0)
        .map(|(i, &p)| {
            let hi = p.max(1.0 - p);
            let lo = p.min(1.0 - p);
            (lo / hi, i)
        })
        .collect();
    togglable.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let base_weight: f64 = probs.iter().map(|&p| p.max(1.0 - p)).product();
    let exact_weight = |mask: &[bool]| -> f64 {
        probs
            .iter()
            .zip(mask)
            .map(|(&p, &inc)| if inc { p } else { 1.0 - p })
            .product()
    };
    let materialize = |toggles: &[u32]| -> Vec<bool> {
        let mut mask = base.clone();
        for &t in toggles {
            let item = togglable[t as usize].1;
            mask[item] = !mask[item];
        }
        mask
    };

    let mut out = Vec::with_capacity(k.min(1024));
    let mut heap = BinaryHeap::new();
    heap.push(Candidate { weight: base_weight, toggles: Vec::new() });
    while let Some(cand) = heap.pop() {
        if cand.weight <= 0.0 {
            break;
        }
        let mask = materialize(&cand.toggles);
        out.push((mask, 0.0));
        let idx = out.len() - 1;
        out[idx].1 = exact_weight(&out[idx].0);
        if out.len() == k {
            break;
        }
        // Frontier expansion: extend the toggle set by the next item, or
        // advance its last toggle. Every toggle set is reached once.
        let next = cand.toggles.last().map_or(0, |&t| t + 1);
        if (next as usize) < togglable.len() {
            let mut grown = cand.toggles.clone();
            grown.push(next);
            heap.push(Candidate { weight: cand.weight * togglable[next as usize].0, toggles: grown });
            if let Some(&last) = cand.toggles.last() {
                let mut advanced = cand.toggles.clone();
                *advanced.last_mut().expect("non-empty") = next;
                let ratio = togglable[next as usize].0 / togglable[last as usize].0;
                heap.push(Candidate { weight: cand.weight * ratio, toggles: advanced });
            }
        }
        let _ = n;
    }
    out
}
