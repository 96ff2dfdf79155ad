use serde::{Deserialize, Serialize};

use super::ap::RECALL_POINTS;
use super::matching::center_distance;
use crate::model::{DetectionBox3D, DetectionClass};

/// True-positive error terms. `ave` and `aae` are `None` where they are not
/// defined (static classes, or no pair carries the needed field).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TPErrors {
    pub ate: f64,
    pub ase: f64,
    pub aoe: f64,
    pub ave: Option<f64>,
    pub aae: Option<f64>,
}

impl TPErrors {
    /// Worst-case errors reported when a class has no true positives.
    pub fn sentinel(class: DetectionClass) -> Self {
        let dynamic = (!class.is_static()).then_some(1.0);
        TPErrors {
            ate: 1.0,
            ase: 1.0,
            aoe: 1.0,
            ave: dynamic,
            aae: dynamic,
        }
    }

    /// The defined terms in `[ate, ase, aoe, ave, aae]` order.
    pub fn terms(&self) -> impl Iterator<Item = f64> {
        [Some(self.ate), Some(self.ase), Some(self.aoe), self.ave, self.aae]
            .into_iter()
            .flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TpAveraging {
    /// Plain mean over every match at the TP threshold.
    #[default]
    Simple,
    /// Cumulative means sampled on the recall grid above `min_recall`.
    RecallWeighted,
}

/// Errors of a single matched pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairErrors {
    ate: f64,
    ase: f64,
    aoe: f64,
    ave: Option<f64>,
    aae: Option<f64>,
}

/// 1 − IoU of the two boxes after aligning centers and heading.
pub fn scale_error(pred: &DetectionBox3D, gt: &DetectionBox3D) -> f64 {
    let vol = |s: &[f64; 3]| s[0] * s[1] * s[2];
    let inter: f64 = (0..3).map(|i| pred.size[i].min(gt.size[i])).product();
    1.0 - inter / (vol(&pred.size) + vol(&gt.size) - inter)
}

/// Smallest absolute heading difference modulo `period`.
pub fn yaw_error(pred_yaw: f64, gt_yaw: f64, period: f64) -> f64 {
    let d = (pred_yaw - gt_yaw).rem_euclid(period);
    d.min(period - d)
}

pub(crate) fn pair_errors(pred: &DetectionBox3D, gt: &DetectionBox3D, class: DetectionClass) -> PairErrors {
    let (ave, aae) = if class.is_static() {
        (None, None)
    } else {
        let ave = match (pred.velocity, gt.velocity) {
            (Some(p), Some(g)) => Some((p[0] - g[0]).hypot(p[1] - g[1])),
            _ => None,
        };
        let aae = gt
            .attribute
            .as_ref()
            .map(|a| if pred.attribute.as_ref() == Some(a) { 0.0 } else { 1.0 });
        (ave, aae)
    };
    PairErrors {
        ate: center_distance(pred, gt),
        ase: scale_error(pred, gt),
        aoe: yaw_error(pred.yaw, gt.yaw, class.yaw_period()),
        ave,
        aae,
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean TP errors over matched `(pred, gt)` pairs of one class.
///
/// An empty input yields [`TPErrors::sentinel`]. Velocity error skips pairs
/// missing a velocity; attribute error skips pairs whose ground truth has no
/// attribute. A term with no usable pair is `None` and drops out of NDS.
pub fn tp_error_metrics(pairs: &[(&DetectionBox3D, &DetectionBox3D)], class: DetectionClass) -> TPErrors {
    if pairs.is_empty() {
        return TPErrors::sentinel(class);
    }
    let errs: Vec<PairErrors> = pairs.iter().map(|(p, g)| pair_errors(p, g, class)).collect();
    TPErrors {
        ate: mean_of(errs.iter().map(|e| e.ate)).unwrap(),
        ase: mean_of(errs.iter().map(|e| e.ase)).unwrap(),
        aoe: mean_of(errs.iter().map(|e| e.aoe)).unwrap(),
        ave: mean_of(errs.iter().filter_map(|e| e.ave)),
        aae: mean_of(errs.iter().filter_map(|e| e.aae)),
    }
}

/// Recall-weighted TP errors.
///
/// `pairs` are the true positives in score order. For every recall sample
/// strictly above `min_recall` and reachable by the matches, the error is the
/// running mean over the fewest leading true positives that reach it.
pub fn tp_error_metrics_recall_weighted(
    pairs: &[(&DetectionBox3D, &DetectionBox3D)],
    n_gt: usize,
    class: DetectionClass,
    min_recall: f64,
) -> TPErrors {
    let sentinel = TPErrors::sentinel(class);
    if pairs.is_empty() || n_gt == 0 {
        return sentinel;
    }
    let errs: Vec<PairErrors> = pairs.iter().map(|(p, g)| pair_errors(p, g, class)).collect();

    // samples[i] = number of leading TPs needed to reach recall i/100
    let mut samples = Vec::new();
    for i in 0..RECALL_POINTS {
        let r = i as f64 / (RECALL_POINTS - 1) as f64;
        if r <= min_recall {
            continue;
        }
        let needed = (1..=errs.len()).find(|&j| j as f64 / n_gt as f64 >= r);
        match needed {
            Some(j) => samples.push(j),
            None => break,
        }
    }
    if samples.is_empty() {
        return sentinel;
    }

    let running = |get: &dyn Fn(&PairErrors) -> Option<f64>| -> Option<f64> {
        let mut prefix = Vec::with_capacity(errs.len());
        let (mut sum, mut n) = (0.0, 0usize);
        for e in &errs {
            if let Some(v) = get(e) {
                sum += v;
                n += 1;
            }
            prefix.push((n > 0).then(|| sum / n as f64));
        }
        mean_of(samples.iter().filter_map(|&j| prefix[j - 1]))
    };

    TPErrors {
        ate: running(&|e| Some(e.ate)).unwrap_or(1.0),
        ase: running(&|e| Some(e.ase)).unwrap_or(1.0),
        aoe: running(&|e| Some(e.aoe)).unwrap_or(1.0),
        ave: running(&|e| e.ave),
        aae: running(&|e| e.aae),
    }
}

/// nuScenes detection score.
///
/// `(5·mAP + Σ max(1 − mTP, 0)) / (5 + k)` over the `k` defined TP terms; with
/// all five terms defined this is the usual `/ 10` form.
pub fn nds(map_score: f64, mean_tp: &TPErrors) -> f64 {
    let (sum, k) = mean_tp
        .terms()
        .fold((0.0, 0usize), |(s, k), e| (s + (1.0 - e).max(0.0), k + 1));
    (5.0 * map_score + sum) / (5.0 + k as f64)
}
