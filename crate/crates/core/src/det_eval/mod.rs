//! nuScenes-protocol 3D detection evaluation: greedy center-distance matching,
//! clipped 101-point AP, true-positive errors and NDS.

mod ap;
mod matching;
mod tp;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DetectionBox3D, DetectionClass, FrameBoxes};

pub use ap::{average_precision, interpolated_ap, interpolated_precision, ApClipping, RECALL_POINTS};
pub(crate) use matching::greedy_match;
pub use matching::{match_class, Match};
pub use tp::{
    nds, scale_error, tp_error_metrics, tp_error_metrics_recall_weighted, yaw_error, TPErrors,
    TpAveraging,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetEvalConfig {
    pub dist_thresholds: Vec<f64>,
    pub class_ranges: BTreeMap<String, f64>,
    pub min_recall: f64,
    pub min_precision: f64,
    pub tp_threshold: f64,
    pub tp_averaging: TpAveraging,
}

impl Default for DetEvalConfig {
    fn default() -> Self {
        DetEvalConfig {
            dist_thresholds: vec![0.5, 1.0, 2.0, 4.0],
            class_ranges: default_class_ranges(),
            min_recall: 0.1,
            min_precision: 0.1,
            tp_threshold: 2.0,
            tp_averaging: TpAveraging::Simple,
        }
    }
}

pub fn default_class_ranges() -> BTreeMap<String, f64> {
    DetectionClass::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), c.default_range()))
        .collect()
}

impl DetEvalConfig {
    /// Single-threshold configuration used for agreement scoring.
    pub fn single_threshold(threshold: f64) -> Self {
        DetEvalConfig {
            dist_thresholds: vec![threshold],
            tp_threshold: threshold,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::validation("det-eval config", reason));
        if self.dist_thresholds.is_empty() {
            return bad("no distance thresholds".into());
        }
        if !self.dist_thresholds.iter().all(|t| t.is_finite() && *t > 0.0)
            || self.dist_thresholds.windows(2).any(|w| w[0] >= w[1])
        {
            return bad(format!(
                "thresholds {:?} must be positive and strictly increasing",
                self.dist_thresholds
            ));
        }
        for (name, r) in &self.class_ranges {
            name.parse::<DetectionClass>()?;
            if !(r.is_finite() && *r > 0.0) {
                return bad(format!("range {r} for {name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.min_recall) || !(0.0..1.0).contains(&self.min_precision) {
            return bad("min_recall and min_precision must lie in [0, 1)".into());
        }
        if !(self.tp_threshold.is_finite() && self.tp_threshold > 0.0) {
            return bad(format!("tp_threshold {} must be positive", self.tp_threshold));
        }
        Ok(())
    }

    pub fn range_for(&self, class: DetectionClass) -> f64 {
        self.class_ranges
            .get(class.as_str())
            .copied()
            .unwrap_or_else(|| class.default_range())
    }

    /// Same configuration with every class range multiplied by `fraction`.
    pub fn scaled_ranges(&self, fraction: f64) -> Self {
        let mut out = self.clone();
        out.class_ranges = DetectionClass::ALL
            .iter()
            .map(|c| (c.as_str().to_string(), self.range_for(*c) * fraction))
            .collect();
        out
    }

    fn clipping(&self) -> ApClipping {
        ApClipping {
            min_recall: self.min_recall,
            min_precision: self.min_precision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class_name: String,
    pub threshold: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetEvalReport {
    /// AP per (class, threshold), for classes with ground truth in range.
    pub per_class_ap: Vec<ClassAp>,
    pub per_class_tp: BTreeMap<String, TPErrors>,
    /// Class-averaged TP errors entering NDS.
    pub mean_tp: TPErrors,
    pub map_score: f64,
    pub nds: f64,
    pub n_gt: usize,
    pub n_pred: usize,
}

impl DetEvalReport {
    pub fn classes_evaluated(&self) -> Vec<&str> {
        self.per_class_tp.keys().map(String::as_str).collect()
    }

    /// Markdown table row `| label | mAP | NDS | DA | gap % |`, metrics in percent.
    pub fn markdown_row(&self, label: &str, da: Option<f64>, gap: Option<f64>) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
        format!(
            "| {label} | {:.1} | {:.1} | {} | {} |",
            100.0 * self.map_score,
            100.0 * self.nds,
            opt(da),
            opt(gap)
        )
    }
}

/// Keeps boxes of `class` strictly inside its BEV range; keys are frame ids.
pub(crate) fn class_boxes(
    frames: &FrameBoxes,
    class: DetectionClass,
    range: f64,
) -> Vec<(String, DetectionBox3D)> {
    frames
        .iter()
        .flat_map(|(f, boxes)| boxes.iter().map(move |b| (f, b)))
        .filter(|(_, b)| b.class_name == class.as_str() && b.bev_range() < range)
        .map(|(f, b)| (f.clone(), b.clone()))
        .collect()
}

pub(crate) fn check_classes(frames: &FrameBoxes) -> Result<()> {
    for b in frames.values().flatten() {
        b.class()?;
    }
    Ok(())
}

struct ClassResult {
    class: DetectionClass,
    aps: Vec<f64>,
    tp: TPErrors,
}

fn evaluate_class(
    preds: &FrameBoxes,
    gts: &FrameBoxes,
    class: DetectionClass,
    config: &DetEvalConfig,
) -> Option<ClassResult> {
    let range = config.range_for(class);
    let gt = class_boxes(gts, class, range);
    if gt.is_empty() {
        return None;
    }
    let pred = class_boxes(preds, class, range);
    let aps = config
        .dist_thresholds
        .iter()
        .map(|&t| {
            let m = match_class(&pred, &gt, t);
            interpolated_ap(&m, gt.len(), Some(config.clipping())).unwrap_or(0.0)
        })
        .collect();

    let matches = match_class(&pred, &gt, config.tp_threshold);
    let pairs: Vec<(&DetectionBox3D, &DetectionBox3D)> = matches
        .iter()
        .filter_map(|m| m.gt_idx.map(|g| (&pred[m.pred_idx].1, &gt[g].1)))
        .collect();
    let tp = match config.tp_averaging {
        TpAveraging::Simple => tp_error_metrics(&pairs, class),
        TpAveraging::RecallWeighted => {
            tp_error_metrics_recall_weighted(&pairs, gt.len(), class, config.min_recall)
        }
    };
    Some(ClassResult { class, aps, tp })
}

fn mean_tp(results: &[ClassResult]) -> TPErrors {
    let mean = |get: &dyn Fn(&TPErrors) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = results.iter().filter_map(|r| get(&r.tp)).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    TPErrors {
        ate: mean(&|t| Some(t.ate)).unwrap_or(1.0),
        ase: mean(&|t| Some(t.ase)).unwrap_or(1.0),
        aoe: mean(&|t| Some(t.aoe)).unwrap_or(1.0),
        ave: mean(&|t| t.ave),
        aae: mean(&|t| t.aae),
    }
}

/// Full detection evaluation of `preds` against `gts`, both keyed by frame.
///
/// mAP averages AP over classes that have ground truth within range and over
/// all thresholds. If no class has ground truth, mAP and NDS are 0.
pub fn evaluate_detections(
    preds: &FrameBoxes,
    gts: &FrameBoxes,
    config: &DetEvalConfig,
) -> Result<DetEvalReport> {
    config.validate()?;
    check_classes(preds)?;
    check_classes(gts)?;
    let extra: BTreeSet<&String> = preds.keys().filter(|k| !gts.contains_key(*k)).collect();
    if let Some(first) = extra.iter().next() {
        return Err(Error::FrameMismatch(format!(
            "{} prediction frame(s) without ground truth, e.g. `{first}`",
            extra.len()
        )));
    }

    let results: Vec<ClassResult> = DetectionClass::ALL
        .par_iter()
        .filter_map(|&c| evaluate_class(preds, gts, c, config))
        .collect();

    let mut per_class_ap = Vec::new();
    for r in &results {
        for (t, ap) in config.dist_thresholds.iter().zip(&r.aps) {
            per_class_ap.push(ClassAp {
                class_name: r.class.as_str().to_string(),
                threshold: *t,
                ap: *ap,
            });
        }
    }
    let (map_score, nds_score, mtp) = if results.is_empty() {
        (0.0, 0.0, TPErrors::sentinel(DetectionClass::Car))
    } else {
        let map = per_class_ap.iter().map(|c| c.ap).sum::<f64>() / per_class_ap.len() as f64;
        let mtp = mean_tp(&results);
        (map, nds(map, &mtp), mtp)
    };

    Ok(DetEvalReport {
        per_class_ap,
        per_class_tp: results
            .iter()
            .map(|r| (r.class.as_str().to_string(), r.tp))
            .collect(),
        mean_tp: mtp,
        map_score,
        nds: nds_score,
        n_gt: gts.values().map(Vec::len).sum(),
        n_pred: preds.values().map(Vec::len).sum(),
    })
}

/// Relative drop of `sim_metric` against `real_metric`, in percent.
pub fn gap_percent(real_metric: f64, sim_metric: f64) -> Result<f64> {
    if !(real_metric > 0.0) {
        return Err(Error::Domain(format!(
            "real metric {real_metric} must be positive"
        )));
    }
    Ok(100.0 * (real_metric - sim_metric) / real_metric)
}
