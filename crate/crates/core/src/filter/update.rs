//! Measurement update: per-hypothesis ranked association enumeration.
//!
//! Each predicted hypothesis spawns one child per kept association map.
//! A map assigns every track either a measurement (cost
//! `-(ln P_D + ln q(z) - ln kappa)` with `q` the unscented mixture
//! likelihood of the track, `kappa` the clutter intensity) or a missed
//! detection (cost `-ln(1 - P_D)`); maps are enumerated best-first by
//! [`crate::assignment::murty_kbest`] under a weight-proportional budget.
//! Child weights are the prior weight times the product of the chosen
//! per-track terms, normalized across all children in the log domain.
//!
//! Detected tracks are conditioned on their measurement via the unscented
//! Kalman step; missed tracks keep their predicted density (detection
//! probability is state-independent, so the miss factor cancels).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::assignment::{murty_kbest, CostMatrix};
use crate::error::{Error, Result};
use crate::gaussian::{MeasurementModel, UnscentedConfig, UnscentedUpdate};
use crate::rfs::{DGlmbDensity, MdGlmbDensity};
use crate::util::logsumexp;
use crate::Label;

use super::pooled::{views_from_md, PoolHyp, PooledGlmb};
use super::{SensorModel, TruncationConfig};

/// Clutter intensity is floored at this value in log ratios so that
/// clutter-free models (rate 0) stay numerically well-defined.
const KAPPA_FLOOR: f64 = 1e-100;

/// One association map: per label, either a measurement or a miss.
///
/// Values follow the convention `0` = missed detection and `j >= 1` =
/// measurement `j - 1` of the update's measurement slice; positive values
/// are unique across labels (a measurement explains at most one track).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMap {
    /// `(label, value)` pairs sorted by label.
    pub assignments: Vec<(Label, usize)>,
}

impl AssociationMap {
    pub fn new(mut assignments: Vec<(Label, usize)>) -> Result<Self> {
        assignments.sort_by_key(|(l, _)| *l);
        if assignments.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate label in association map".into()));
        }
        let mut positives: Vec<usize> =
            assignments.iter().map(|(_, v)| *v).filter(|&v| v > 0).collect();
        positives.sort_unstable();
        if positives.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "association map assigns one measurement to multiple labels".into(),
            ));
        }
        Ok(Self { assignments })
    }

    /// Raw value for a label: `Some(0)` is a miss, `Some(j)` means
    /// measurement `j - 1`, `None` means the label is not in the map.
    pub fn value(&self, label: Label) -> Option<usize> {
        self.assignments
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| self.assignments[i].1)
    }

    /// Zero-based measurement index for a detected label.
    pub fn measurement_index(&self, label: Label) -> Option<usize> {
        match self.value(label) {
            Some(v) if v > 0 => Some(v - 1),
            _ => None,
        }
    }
}

/// Which predicted hypothesis a posterior hypothesis came from, and via
/// which association map.
#[derive(Clone, Debug)]
pub struct AssociationRecord {
    pub parent: usize,
    pub map: AssociationMap,
}

fn chi_square_quantile(dof: usize, p: f64) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64)
        .map_err(|_| Error::InvalidParameter(format!("invalid chi-square dof {dof}")))?;
    Ok(dist.inverse_cdf(p))
}

struct Child {
    log_weight: f64,
    assoc: Vec<usize>,
    parent: usize,
}

pub(super) fn update_pooled(
    pred: PooledGlmb,
    sensor: &SensorModel,
    measurements: &[DVector<f64>],
    trunc: &TruncationConfig,
    unscented: &UnscentedConfig,
) -> Result<(PooledGlmb, Vec<AssociationRecord>)> {
    sensor.validate()?;
    trunc.validate()?;
    let kind = &sensor.kind;
    let zdim = kind.measurement_dim();
    for z in measurements {
        if z.len() != zdim {
            return Err(Error::InvalidParameter(format!(
                "measurement dimension {} does not match sensor dimension {zdim}",
                z.len()
            )));
        }
    }

    let p_d = sensor.detection_probability;
    let ln_pd = p_d.ln();
    let ln_miss = (1.0 - p_d).ln();
    let ln_kappa = sensor.clutter.intensity().max(KAPPA_FLOOR).ln();
    let gate_sq = if trunc.gating_enabled() {
        chi_square_quantile(zdim, trunc.gate_probability)?
    } else {
        f64::INFINITY
    };

    // Unscented preparation and per-measurement detection log terms, once
    // per referenced pool slot; hypotheses sharing a slot share the work.
    let noise = kind.noise_cov();
    let mut referenced = vec![false; pred.pool.len()];
    for h in &pred.hyps {
        for &slot in &h.tracks {
            referenced[slot] = true;
        }
    }
    let mut preps: Vec<Option<UnscentedUpdate>> = (0..pred.pool.len()).map(|_| None).collect();
    let mut det_terms: Vec<Vec<f64>> = vec![Vec::new(); pred.pool.len()];
    for (slot, used) in referenced.iter().enumerate() {
        if !used {
            continue;
        }
        let prep = UnscentedUpdate::new(&pred.pool[slot].1, kind, &noise, unscented)?;
        det_terms[slot] = measurements
            .iter()
            .map(|z| {
                let (maha_sq, log_lik) = prep.gated_log_likelihood(z, kind);
                if maha_sq <= gate_sq && log_lik.is_finite() {
                    ln_pd + log_lik - ln_kappa
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        preps[slot] = Some(prep);
    }

    // Ranked association maps per hypothesis.
    let budget = trunc.k_best_per_hypothesis as f64;
    let mut children = Vec::new();
    for (pi, h) in pred.hyps.iter().enumerate() {
        if !(h.weight > 0.0) {
            continue;
        }
        let n = h.tracks.len();
        let k_h = ((budget * h.weight).round() as usize).max(1);
        let mut det = DMatrix::from_element(n, measurements.len(), f64::INFINITY);
        for (i, &slot) in h.tracks.iter().enumerate() {
            for (j, &term) in det_terms[slot].iter().enumerate() {
                det[(i, j)] = -term;
            }
        }
        let miss = vec![-ln_miss; n];
        let cm = CostMatrix::new(det, &miss);
        for a in murty_kbest(cm.matrix(), k_h) {
            let assoc = cm.association(&a.row_to_col);
            // Recompute the log weight from the stored terms in row order
            // (bitwise stable regardless of solver internals).
            let mut log_weight = h.weight.ln();
            for (i, &slot) in h.tracks.iter().enumerate() {
                log_weight += match assoc[i] {
                    0 => ln_miss,
                    v => det_terms[slot][v - 1],
                };
            }
            children.push(Child { log_weight, assoc, parent: pi });
        }
    }
    if children.is_empty() {
        return Err(Error::DegenerateDensity("no feasible association map in update"));
    }

    let log_weights: Vec<f64> = children.iter().map(|c| c.log_weight).collect();
    let log_total = logsumexp(&log_weights);
    if !log_total.is_finite() {
        return Err(Error::DegenerateDensity("all association maps carry zero likelihood"));
    }

    // Materialize posterior densities, one per (slot, measurement) pair.
    let PooledGlmb { mut pool, hyps: pred_hyps } = pred;
    let mut memo: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut out_hyps = Vec::with_capacity(children.len());
    let mut records = Vec::with_capacity(children.len());
    for (ci, child) in children.into_iter().enumerate() {
        let parent = &pred_hyps[child.parent];
        let mut tracks = Vec::with_capacity(parent.tracks.len());
        let mut pairs = Vec::with_capacity(parent.tracks.len());
        for (i, &slot) in parent.tracks.iter().enumerate() {
            let value = child.assoc[i];
            pairs.push((pool[slot].0, value));
            if value == 0 {
                tracks.push(slot);
                continue;
            }
            let key = (slot, value - 1);
            let new_slot = match memo.get(&key) {
                Some(&s) => s,
                None => {
                    let (mixture, _) = preps[slot]
                        .as_ref()
                        .expect("referenced slot prepared")
                        .posterior(&measurements[value - 1], kind)?;
                    let label = pool[slot].0;
                    pool.push((label, mixture));
                    let s = pool.len() - 1;
                    memo.insert(key, s);
                    s
                }
            };
            tracks.push(new_slot);
        }
        records.push(AssociationRecord { parent: child.parent, map: AssociationMap::new(pairs)? });
        out_hyps.push(PoolHyp {
            weight: (child.log_weight - log_total).exp(),
            tracks,
            history_id: ci as u64,
        });
    }
    Ok((PooledGlmb { pool, hyps: out_hyps }, records))
}

/// Update a predicted marginalized density with one sensor's measurement
/// set. The output is a normalized delta-GLMB with one hypothesis per
/// kept association map; an empty measurement slice yields the all-missed
/// map per hypothesis. Uses default unscented parameters.
pub fn update_single_sensor(
    pred: &MdGlmbDensity,
    sensor: &SensorModel,
    measurements: &[DVector<f64>],
    trunc: &TruncationConfig,
) -> Result<DGlmbDensity> {
    let views = views_from_md(pred);
    let pooled = PooledGlmb::from_views(&views);
    let (out, _) = update_pooled(pooled, sensor, measurements, trunc, &UnscentedConfig::default())?;
    Ok(out.into_dglmb())
}

/// [`update_single_sensor`] plus the association record behind every
/// output hypothesis: hypothesis `h` corresponds to
/// `records[h.history_id as usize]`, whose `parent` indexes `pred`.
pub fn update_single_sensor_with_maps(
    pred: &MdGlmbDensity,
    sensor: &SensorModel,
    measurements: &[DVector<f64>],
    trunc: &TruncationConfig,
) -> Result<(DGlmbDensity, Vec<AssociationRecord>)> {
    let views = views_from_md(pred);
    let pooled = PooledGlmb::from_views(&views);
    let (out, records) =
        update_pooled(pooled, sensor, measurements, trunc, &UnscentedConfig::default())?;
    Ok((out.into_dglmb(), records))
}
