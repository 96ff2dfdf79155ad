use serde::{Deserialize, Serialize};

use super::matching::Match;

/// Number of evenly spaced recall samples in `[0, 1]`.
pub const RECALL_POINTS: usize = 101;

/// Low-recall / low-precision clipping applied by the detection protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApClipping {
    pub min_recall: f64,
    pub min_precision: f64,
}

/// Precision envelope sampled at recall `i / 100` for `i = 0..=100`.
///
/// Each sample is the best precision achieved at any recall at or above the
/// sample point, or zero if that recall is never reached. `matches` must be in
/// score order.
pub fn interpolated_precision(matches: &[Match], n_gt: usize) -> [f64; RECALL_POINTS] {
    let mut out = [0.0; RECALL_POINTS];
    if n_gt == 0 || matches.is_empty() {
        return out;
    }
    let mut tp = 0usize;
    let mut curve = Vec::with_capacity(matches.len());
    for (k, m) in matches.iter().enumerate() {
        if m.tp {
            tp += 1;
        }
        curve.push((tp as f64 / n_gt as f64, tp as f64 / (k + 1) as f64));
    }
    // suffix maximum turns the raw curve into a monotone envelope
    let mut best = 0.0f64;
    for p in curve.iter_mut().rev() {
        best = best.max(p.1);
        p.1 = best;
    }
    let mut k = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let r = i as f64 / (RECALL_POINTS - 1) as f64;
        while k < curve.len() && curve[k].0 < r {
            k += 1;
        }
        if k == curve.len() {
            break;
        }
        *slot = curve[k].1;
    }
    out
}

/// Interpolated average precision, `None` when there is no ground truth.
///
/// With clipping, only recall samples strictly above `min_recall` count and
/// each precision is rescaled as `max(p - min_precision, 0) / (1 - min_precision)`.
/// Without clipping, all 101 samples are averaged.
pub fn interpolated_ap(matches: &[Match], n_gt: usize, clipping: Option<ApClipping>) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let prec = interpolated_precision(matches, n_gt);
    match clipping {
        None => Some(prec.iter().sum::<f64>() / RECALL_POINTS as f64),
        Some(ApClipping {
            min_recall,
            min_precision,
        }) => {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (i, p) in prec.iter().enumerate() {
                let r = i as f64 / (RECALL_POINTS - 1) as f64;
                if r > min_recall {
                    sum += (p - min_precision).max(0.0) / (1.0 - min_precision);
                    count += 1;
                }
            }
            Some(if count == 0 { 0.0 } else { sum / count as f64 })
        }
    }
}

/// Detection-protocol AP with `min_recall` / `min_precision` clipping.
pub fn average_precision(
    matches: &[Match],
    n_gt: usize,
    min_recall: f64,
    min_precision: f64,
) -> Option<f64> {
    interpolated_ap(
        matches,
        n_gt,
        Some(ApClipping {
            min_recall,
            min_precision,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(flags: &[bool]) -> Vec<Match> {
        flags
            .iter()
            .enumerate()
            .map(|(i, &tp)| Match {
                pred_idx: i,
                gt_idx: tp.then_some(i),
                tp,
                score: 1.0 - i as f64 * 0.01,
            })
            .collect()
    }

    #[test]
    fn perfect_detections() {
        assert_eq!(average_precision(&seq(&[true, true, true]), 3, 0.1, 0.1), Some(1.0));
        assert_eq!(interpolated_ap(&seq(&[true, true]), 2, None), Some(1.0));
    }

    #[test]
    fn no_predictions_and_no_gt() {
        assert_eq!(average_precision(&[], 4, 0.1, 0.1), Some(0.0));
        assert_eq!(average_precision(&seq(&[false]), 0, 0.1, 0.1), None);
    }

    #[test]
    fn fp_at_rank_one_hand_value() {
        // precision envelope is 2/3 at every recall sample
        let ap = average_precision(&seq(&[false, true, true]), 2, 0.1, 0.1).unwrap();
        assert!((ap - 17.0 / 27.0).abs() < 1e-12, "{ap}");
        let raw = interpolated_ap(&seq(&[false, true, true]), 2, None).unwrap();
        assert!((raw - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn partial_recall_zero_beyond() {
        // one of two GT found at precision 1: samples 0..=50 are 1, the rest 0
        let p = interpolated_precision(&seq(&[true]), 2);
        assert!(p[..=50].iter().all(|&v| v == 1.0));
        assert!(p[51..].iter().all(|&v| v == 0.0));
        let ap = average_precision(&seq(&[true]), 2, 0.1, 0.1).unwrap();
        assert!((ap - 40.0 / 90.0).abs() < 1e-12);
    }
}
