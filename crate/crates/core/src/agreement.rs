//! Detection agreement (DA): how consistently a model perceives two versions
//! of the same frames, e.g. real camera images and their neural renderings.
//!
//! Each detection set is scored as predictions against the other set acting
//! as ground truth with a single 2 m matching threshold. The two directional
//! NDS values are averaged and reported on a 0–100 scale. Map agreement does
//! the same with map mAP.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::det_eval::{default_class_ranges, evaluate_detections, DetEvalConfig, TpAveraging};
use crate::error::{Error, Result};
use crate::map_eval::{evaluate_map, MapEvalConfig};
use crate::model::{DetectionClass, FrameBoxes, FramePolylines};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgreementConfig {
    pub da_threshold: f64,
    pub pseudo_gt_score_min: f64,
    pub range_fractions: Vec<f64>,
    pub class_ranges: BTreeMap<String, f64>,
    pub tp_averaging: TpAveraging,
    pub map_eval: MapEvalConfig,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        AgreementConfig {
            da_threshold: 2.0,
            pseudo_gt_score_min: 0.0,
            range_fractions: (1..=10).map(|i| i as f64 / 10.0).collect(),
            class_ranges: default_class_ranges(),
            tp_averaging: TpAveraging::Simple,
            map_eval: MapEvalConfig::default(),
        }
    }
}

impl AgreementConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.range_fractions;
        if !f.iter().all(|v| *v > 0.0 && *v <= 1.0) || f.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                "agreement config",
                format!("range fractions {f:?} must lie in (0, 1] and ascend"),
            ));
        }
        if !(self.da_threshold.is_finite() && self.da_threshold > 0.0) {
            return Err(Error::validation(
                "agreement config",
                format!("da_threshold {} must be positive", self.da_threshold),
            ));
        }
        self.det_config().validate()
    }

    /// Single-threshold detection config used for each direction.
    pub fn det_config(&self) -> DetEvalConfig {
        DetEvalConfig {
            class_ranges: self.class_ranges.clone(),
            tp_averaging: self.tp_averaging,
            ..DetEvalConfig::single_threshold(self.da_threshold)
        }
    }
}

/// Symmetric agreement plus both directional scores, all on a 0–100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub da: f64,
    pub da_ab: f64,
    pub da_ba: f64,
}

impl AgreementResult {
    fn from_directions(ab: f64, ba: f64) -> Self {
        AgreementResult {
            da: 100.0 * 0.5 * (ab + ba),
            da_ab: 100.0 * ab,
            da_ba: 100.0 * ba,
        }
    }
}

fn check_frames<T>(a: &BTreeMap<String, T>, b: &BTreeMap<String, T>) -> Result<()> {
    if let Some(k) = a.keys().find(|k| !b.contains_key(*k)) {
        return Err(Error::FrameMismatch(format!("frame `{k}` only in the first set")));
    }
    if let Some(k) = b.keys().find(|k| !a.contains_key(*k)) {
        return Err(Error::FrameMismatch(format!("frame `{k}` only in the second set")));
    }
    Ok(())
}

/// Turns detections into ground truth: drops low scores and resets the rest to 1.
fn pseudo_gt(dets: &FrameBoxes, score_min: f64) -> FrameBoxes {
    dets.iter()
        .map(|(f, boxes)| {
            let kept = boxes
                .iter()
                .filter(|b| b.score >= score_min)
                .map(|b| {
                    let mut b = b.clone();
                    b.score = 1.0;
                    b
                })
                .collect();
            (f.clone(), kept)
        })
        .collect()
}

fn in_range_count(frames: &FrameBoxes, config: &DetEvalConfig) -> Result<usize> {
    let mut n = 0;
    for b in frames.values().flatten() {
        let class: DetectionClass = b.class()?;
        if b.bev_range() < config.range_for(class) {
            n += 1;
        }
    }
    Ok(n)
}

fn directional_nds(preds: &FrameBoxes, gts: &FrameBoxes, config: &DetEvalConfig) -> Result<f64> {
    let n_pred = in_range_count(preds, config)?;
    let n_gt = in_range_count(gts, config)?;
    match (n_pred, n_gt) {
        (0, 0) => Ok(1.0),
        (0, _) | (_, 0) => Ok(0.0),
        _ => Ok(evaluate_detections(preds, gts, config)?.nds),
    }
}

fn agreement_with(
    a: &FrameBoxes,
    b: &FrameBoxes,
    det: &DetEvalConfig,
    score_min: f64,
) -> Result<AgreementResult> {
    let (ab, ba) = rayon::join(
        || directional_nds(a, &pseudo_gt(b, score_min), det),
        || directional_nds(b, &pseudo_gt(a, score_min), det),
    );
    Ok(AgreementResult::from_directions(ab?, ba?))
}

/// Detection agreement between two detection sets over the same frames.
pub fn detection_agreement(
    dets_a: &FrameBoxes,
    dets_b: &FrameBoxes,
    config: &AgreementConfig,
) -> Result<AgreementResult> {
    config.validate()?;
    check_frames(dets_a, dets_b)?;
    agreement_with(dets_a, dets_b, &config.det_config(), config.pseudo_gt_score_min)
}

/// DA recomputed with every class range scaled by each configured fraction.
pub fn agreement_range_curve(
    dets_a: &FrameBoxes,
    dets_b: &FrameBoxes,
    config: &AgreementConfig,
) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    check_frames(dets_a, dets_b)?;
    let base = config.det_config();
    config
        .range_fractions
        .par_iter()
        .map(|&f| {
            let det = if f == 1.0 { base.clone() } else { base.scaled_ranges(f) };
            agreement_with(dets_a, dets_b, &det, config.pseudo_gt_score_min).map(|r| (f, r.da))
        })
        .collect()
}

/// `fraction,da` CSV with a header line.
pub fn curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("fraction,da\n");
    for (f, da) in curve {
        out.push_str(&format!("{f},{da}\n"));
    }
    out
}

fn map_pseudo_gt(lines: &FramePolylines, score_min: f64) -> FramePolylines {
    lines
        .iter()
        .map(|(f, ls)| {
            let kept = ls
                .iter()
                .filter(|l| l.score >= score_min)
                .map(|l| l.clone().with_score(1.0))
                .collect();
            (f.clone(), kept)
        })
        .collect()
}

fn directional_map(preds: &FramePolylines, gts: &FramePolylines, config: &MapEvalConfig) -> Result<f64> {
    let report = evaluate_map(preds, gts, config)?;
    Ok(match (report.n_pred, report.n_gt) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => report.map_score,
    })
}

/// Map agreement: map mAP in both directions, averaged, on a 0–100 scale.
pub fn map_agreement(
    maps_a: &FramePolylines,
    maps_b: &FramePolylines,
    config: &AgreementConfig,
) -> Result<AgreementResult> {
    config.map_eval.validate()?;
    check_frames(maps_a, maps_b)?;
    let min = config.pseudo_gt_score_min;
    let (ab, ba) = rayon::join(
        || directional_map(maps_a, &map_pseudo_gt(maps_b, min), &config.map_eval),
        || directional_map(maps_b, &map_pseudo_gt(maps_a, min), &config.map_eval),
    );
    Ok(AgreementResult::from_directions(ab?, ba?))
}
