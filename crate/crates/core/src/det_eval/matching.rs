use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::DetectionBox3D;

/// Outcome for one prediction, listed in processing (score-descending) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub pred_idx: usize,
    pub gt_idx: Option<usize>,
    pub tp: bool,
    pub score: f64,
}

/// Prediction indices by descending score; ties keep input order.
pub(crate) fn score_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    order
}

/// Greedy score-ordered assignment shared by box and polyline matching.
///
/// Each prediction takes the nearest still-unmatched ground truth of the same
/// frame whose distance passes `accept`; equal distances go to the lower index.
pub(crate) fn greedy_match<D, A>(
    pred_frames: &[&str],
    pred_scores: &[f64],
    gt_frames: &[&str],
    distance: D,
    accept: A,
) -> Vec<Match>
where
    D: Fn(usize, usize) -> f64,
    A: Fn(f64) -> bool,
{
    let mut by_frame: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, f) in gt_frames.iter().enumerate() {
        by_frame.entry(f).or_default().push(i);
    }
    let mut taken = vec![false; gt_frames.len()];

    score_order(pred_scores)
        .into_iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for &g in by_frame.get(pred_frames[p]).map(Vec::as_slice).unwrap_or(&[]) {
                if taken[g] {
                    continue;
                }
                let d = distance(p, g);
                if !accept(d) {
                    continue;
                }
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((g, d));
                }
            }
            if let Some((g, _)) = best {
                taken[g] = true;
            }
            Match {
                pred_idx: p,
                gt_idx: best.map(|(g, _)| g),
                tp: best.is_some(),
                score: pred_scores[p],
            }
        })
        .collect()
}

pub(crate) fn center_distance(a: &DetectionBox3D, b: &DetectionBox3D) -> f64 {
    (a.center[0] - b.center[0]).hypot(a.center[1] - b.center[1])
}

/// Greedy nuScenes-style matching of one class's boxes by BEV center distance.
///
/// A prediction matches when the distance is at most `threshold`.
pub fn match_class(
    preds: &[(String, DetectionBox3D)],
    gts: &[(String, DetectionBox3D)],
    threshold: f64,
) -> Vec<Match> {
    let pred_frames: Vec<&str> = preds.iter().map(|(f, _)| f.as_str()).collect();
    let scores: Vec<f64> = preds.iter().map(|(_, b)| b.score).collect();
    let gt_frames: Vec<&str> = gts.iter().map(|(f, _)| f.as_str()).collect();
    greedy_match(
        &pred_frames,
        &scores,
        &gt_frames,
        |p, g| center_distance(&preds[p].1, &gts[g].1),
        |d| d <= threshold,
    )
}
