//! Full per-scan recursions, hypothesis truncation, and state extraction.
//!
//! A step is predict, then for each sensor in order an update followed by
//! the filter's own consolidation: the marginalized filter merges
//! hypotheses that share a label set, the unmarginalized one keeps the
//! association lineage, and the multi-Bernoulli filter collapses to
//! per-track existence probabilities. Mixture reduction and hypothesis
//! truncation run between stages to bound growth.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gaussian::kf_predict;
use crate::rfs::{DGlmbDensity, LmbParams, LmbTrack, MdGlmbDensity};
use crate::Label;

use super::pooled::{views_from_dglmb, views_from_md, PooledGlmb};
use super::predict::predict_pooled;
use super::update::update_pooled;
use super::{BirthModel, FilterConfig, MotionModel, SensorModel, TruncationConfig};

/// Tracks whose existence probability falls below this after an update are
/// dropped from the multi-Bernoulli posterior.
const TRACK_EXISTENCE_FLOOR: f64 = 1e-3;

/// Hypothesis counts recorded while running one scan.
///
/// For the marginalized filter, `hypotheses_final <=
/// hypotheses_after_predict` always holds: an update never introduces a
/// label set that prediction did not already carry, so merging by label
/// set cannot exceed the predicted count. For the multi-Bernoulli filter
/// both fields count tracks instead of hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepDiagnostics {
    pub hypotheses_after_predict: usize,
    pub hypotheses_final: usize,
}

/// One scan of the marginalized filter: predict, then per sensor update,
/// merge hypotheses by label set, reduce track mixtures, and truncate.
pub fn mdglmb_step(
    prior: &MdGlmbDensity,
    scan: u32,
    motion: &MotionModel,
    birth: &BirthModel,
    sensors: &[(SensorModel, Vec<DVector<f64>>)],
    config: &FilterConfig,
) -> Result<(MdGlmbDensity, StepDiagnostics)> {
    config.validate()?;
    let views = views_from_md(prior);
    let mut pooled = predict_pooled(&views, scan, motion, birth, &config.truncation, true)?;
    pooled.reduce_tracks(&config.reduction);
    let hypotheses_after_predict = pooled.hyps.len();
    for (sensor, measurements) in sensors {
        let (updated, _) =
            update_pooled(pooled, sensor, measurements, &config.truncation, &config.unscented)?;
        pooled = updated.marginalized();
        pooled.reduce_tracks(&config.reduction);
        pooled.truncate_in_place(&config.truncation)?;
    }
    assert_normalized(pooled.weight_sum())?;
    let hypotheses_final = pooled.hyps.len();
    Ok((pooled.into_mdglmb(), StepDiagnostics { hypotheses_after_predict, hypotheses_final }))
}

/// One scan of the unmarginalized filter: identical pipeline but
/// hypotheses keep distinct association histories instead of being merged
/// by label set.
pub fn dglmb_step(
    prior: &DGlmbDensity,
    scan: u32,
    motion: &MotionModel,
    birth: &BirthModel,
    sensors: &[(SensorModel, Vec<DVector<f64>>)],
    config: &FilterConfig,
) -> Result<(DGlmbDensity, StepDiagnostics)> {
    config.validate()?;
    let views = views_from_dglmb(prior);
    let mut pooled = predict_pooled(&views, scan, motion, birth, &config.truncation, false)?;
    pooled.reduce_tracks(&config.reduction);
    let hypotheses_after_predict = pooled.hyps.len();
    for (sensor, measurements) in sensors {
        let (updated, _) =
            update_pooled(pooled, sensor, measurements, &config.truncation, &config.unscented)?;
        pooled = updated;
        pooled.reduce_tracks(&config.reduction);
        pooled.truncate_in_place(&config.truncation)?;
    }
    assert_normalized(pooled.weight_sum())?;
    let hypotheses_final = pooled.hyps.len();
    Ok((pooled.into_dglmb(), StepDiagnostics { hypotheses_after_predict, hypotheses_final }))
}

/// One scan of the labeled multi-Bernoulli filter.
///
/// Prediction is closed form: survivor existence scales by the survival
/// probability and densities advance through the motion model; birth
/// tracks are appended with labels for the current scan. Each sensor
/// update expands the multi-Bernoulli into its best hypotheses, runs the
/// shared update machinery, and collapses back to per-track existence.
pub fn lmb_step(
    prior: &LmbParams,
    scan: u32,
    motion: &MotionModel,
    birth: &BirthModel,
    sensors: &[(SensorModel, Vec<DVector<f64>>)],
    config: &FilterConfig,
) -> Result<(LmbParams, StepDiagnostics)> {
    config.validate()?;
    birth.validate()?;
    let ps = motion.survival_probability;
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::InvalidParameter(format!("survival probability {ps} outside [0, 1]")));
    }

    let mut tracks: Vec<LmbTrack> = prior
        .tracks
        .iter()
        .map(|t| LmbTrack {
            label: t.label,
            existence: t.existence * ps,
            density: kf_predict(&t.density, &motion.transition, &motion.process_noise),
        })
        .collect();
    tracks.extend(birth.instantiate(scan).tracks);
    tracks.sort_by_key(|t| t.label);
    if tracks.windows(2).any(|w| w[0].label == w[1].label) {
        return Err(Error::InvalidParameter(
            "birth label collides with a surviving track".into(),
        ));
    }
    let mut lmb = LmbParams { tracks };
    let hypotheses_after_predict = lmb.tracks.len();

    for (sensor, measurements) in sensors {
        let pooled = PooledGlmb::from_lmb(lmb, config.truncation.max_hypotheses)?;
        let (updated, _) =
            update_pooled(pooled, sensor, measurements, &config.truncation, &config.unscented)?;
        lmb = updated.extract_lmb();
        for t in &mut lmb.tracks {
            t.density = config.reduction.apply(std::mem::take(&mut t.density));
        }
        lmb.tracks.retain(|t| t.existence >= TRACK_EXISTENCE_FLOOR);
    }
    let hypotheses_final = lmb.tracks.len();
    Ok((lmb, StepDiagnostics { hypotheses_after_predict, hypotheses_final }))
}

/// Drop hypotheses below the weight floor, keep the heaviest
/// `max_hypotheses` (ties broken by canonical label-set order), and
/// renormalize. If every hypothesis falls below the floor the single best
/// one is kept.
pub fn truncate_hypotheses(
    density: &MdGlmbDensity,
    trunc: &TruncationConfig,
) -> Result<MdGlmbDensity> {
    let views = views_from_md(density);
    let mut pooled = PooledGlmb::from_views(&views);
    pooled.truncate_in_place(trunc)?;
    Ok(pooled.into_mdglmb())
}

/// [`truncate_hypotheses`] for densities with association histories.
pub fn truncate_dglmb_hypotheses(
    density: &DGlmbDensity,
    trunc: &TruncationConfig,
) -> Result<DGlmbDensity> {
    let views = views_from_dglmb(density);
    let mut pooled = PooledGlmb::from_views(&views);
    pooled.truncate_in_place(trunc)?;
    Ok(pooled.into_dglmb())
}

fn estimates_from<'a, I>(hypotheses: I, map_n: usize) -> Vec<(Label, DVector<f64>)>
where
    I: Iterator<Item = (f64, &'a [(Label, crate::gaussian::GaussianMixture)])>,
{
    let mut best: Option<(f64, &[(Label, crate::gaussian::GaussianMixture)])> = None;
    for (weight, tracks) in hypotheses {
        if tracks.len() != map_n {
            continue;
        }
        // Strictly heavier wins; on ties the earlier hypothesis (canonical
        // storage order) is kept.
        if best.map_or(true, |(bw, _)| weight > bw) {
            best = Some((weight, tracks));
        }
    }
    best.map_or_else(Vec::new, |(_, tracks)| {
        tracks.iter().map(|(label, density)| (*label, density.mean())).collect()
    })
}

/// Multi-object estimate: the MAP cardinality n* (smallest n on ties),
/// then the track means of the heaviest hypothesis with exactly n* labels.
pub fn extract_estimates(density: &MdGlmbDensity) -> Vec<(Label, DVector<f64>)> {
    let map_n = density.cardinality_distribution().map_n();
    estimates_from(
        density.hypotheses.iter().map(|h| (h.weight, h.tracks.as_slice())),
        map_n,
    )
}

/// [`extract_estimates`] for densities with association histories.
pub fn extract_dglmb_estimates(density: &DGlmbDensity) -> Vec<(Label, DVector<f64>)> {
    let map_n = density.cardinality_distribution().map_n();
    estimates_from(
        density.hypotheses.iter().map(|h| (h.weight, h.tracks.as_slice())),
        map_n,
    )
}

/// Multi-Bernoulli estimate: MAP cardinality n* of the independent-track
/// (Poisson-binomial) cardinality distribution, then the n* tracks with
/// the highest existence probability (ties favor the smaller label).
pub fn lmb_estimates(lmb: &LmbParams) -> Vec<(Label, DVector<f64>)> {
    let map_n = lmb.cardinality_distribution().map_n();
    let mut order: Vec<usize> = (0..lmb.tracks.len()).collect();
    order.sort_by(|&a, &b| {
        lmb.tracks[b]
            .existence
            .total_cmp(&lmb.tracks[a].existence)
            .then_with(|| lmb.tracks[a].label.cmp(&lmb.tracks[b].label))
    });
    let mut picked: Vec<&LmbTrack> = order[..map_n].iter().map(|&i| &lmb.tracks[i]).collect();
    picked.sort_by_key(|t| t.label);
    picked.iter().map(|t| (t.label, t.density.mean())).collect()
}

/// Final guard in the step pipelines: truncation renormalizes, so the
/// posterior weights must sum to one.
fn assert_normalized(weight_sum: f64) -> Result<()> {
    if (weight_sum - 1.0).abs() > 1e-9 {
        return Err(Error::NumericalFailure("density weights drifted from one"));
    }
    Ok(())
}
