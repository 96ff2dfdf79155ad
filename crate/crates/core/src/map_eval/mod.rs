//! Online-mapping evaluation: arc-length resampling, Chamfer matching and
//! map mAP over dividers, boundaries and crossings.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::det_eval::{greedy_match, interpolated_ap, ClassAp, Match};
use crate::error::{Error, Result};
use crate::model::{FramePolylines, MapClass, MapPolyline};

/// Half extents of the ego-frame crop box, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BevRange {
    pub x_half: f64,
    pub y_half: f64,
}

impl BevRange {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0].abs() <= self.x_half && p[1].abs() <= self.y_half
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapEvalConfig {
    pub chamfer_thresholds: Vec<f64>,
    pub resample_points: usize,
    pub bev_range: BevRange,
}

impl Default for MapEvalConfig {
    fn default() -> Self {
        MapEvalConfig {
            chamfer_thresholds: vec![0.5, 1.0, 1.5],
            resample_points: 100,
            bev_range: BevRange {
                x_half: 15.0,
                y_half: 30.0,
            },
        }
    }
}

impl MapEvalConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.chamfer_thresholds;
        if t.is_empty()
            || !t.iter().all(|v| v.is_finite() && *v > 0.0)
            || t.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::validation(
                "map-eval config",
                format!("thresholds {t:?} must be positive and strictly increasing"),
            ));
        }
        if self.resample_points < 2 {
            return Err(Error::validation("map-eval config", "resample_points must be >= 2"));
        }
        if !(self.bev_range.x_half > 0.0 && self.bev_range.y_half > 0.0) {
            return Err(Error::validation("map-eval config", "bev_range must be positive"));
        }
        Ok(())
    }
}

/// Resamples `line` to `n` points evenly spaced by arc length.
///
/// The first and last input points are kept bit-exact.
pub fn resample_polyline(line: &MapPolyline, n: usize) -> Result<MapPolyline> {
    if line.points.len() < 2 {
        return Err(Error::Degenerate("polyline has fewer than 2 points".into()));
    }
    if n < 2 {
        return Err(Error::Degenerate(format!("cannot resample to {n} points")));
    }
    let pts = &line.points;
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::Degenerate("polyline has zero arc length".into()));
    }

    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let mut seg = 0;
    for k in 1..n - 1 {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let (a, b) = (pts[seg], pts[seg + 1]);
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out.push(*pts.last().unwrap());

    Ok(MapPolyline {
        class_name: line.class_name.clone(),
        points: out,
        score: line.score,
    })
}

fn mean_nearest(from: &[[f64; 2]], to: &[[f64; 2]]) -> f64 {
    let sum: f64 = from
        .iter()
        .map(|p| {
            to.iter()
                .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    sum / from.len() as f64
}

/// Symmetric Chamfer distance between two resampled polylines.
pub fn chamfer_distance(a: &MapPolyline, b: &MapPolyline) -> f64 {
    0.5 * (mean_nearest(&a.points, &b.points) + mean_nearest(&b.points, &a.points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEvalReport {
    /// AP per (class, Chamfer threshold) for classes with ground truth.
    pub per_class_ap: Vec<ClassAp>,
    pub map_score: f64,
    pub n_gt: usize,
    pub n_pred: usize,
}

impl MapEvalReport {
    pub fn class_mean_ap(&self, class: MapClass) -> Option<f64> {
        let aps: Vec<f64> = self
            .per_class_ap
            .iter()
            .filter(|c| c.class_name == class.as_str())
            .map(|c| c.ap)
            .collect();
        (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
    }

    /// Markdown row `| label | divider | boundary | crossing | mAP |`, in percent.
    pub fn markdown_row(&self, label: &str) -> String {
        let mut row = format!("| {label} |");
        for c in MapClass::ALL {
            match self.class_mean_ap(c) {
                Some(v) => row.push_str(&format!(" {:.1} |", 100.0 * v)),
                None => row.push_str(" - |"),
            }
        }
        row.push_str(&format!(" {:.1} |", 100.0 * self.map_score));
        row
    }
}

/// Validates, resamples and crops every polyline; output is `(frame, line)`.
pub(crate) fn prepare(
    frames: &FramePolylines,
    config: &MapEvalConfig,
) -> Result<Vec<(String, MapPolyline)>> {
    let flat: Vec<(&String, &MapPolyline)> = frames
        .iter()
        .flat_map(|(f, lines)| lines.iter().map(move |l| (f, l)))
        .collect();
    let prepared: Vec<Option<(String, MapPolyline)>> = flat
        .par_iter()
        .map(|(f, l)| {
            l.class()?;
            let mut line = (*l).clone();
            line.validate(&format!("frame {f}"))?;
            let r = resample_polyline(&line, config.resample_points)?;
            Ok(r.points
                .iter()
                .any(|p| config.bev_range.contains(*p))
                .then(|| ((*f).clone(), r)))
        })
        .collect::<Result<_>>()?;
    Ok(prepared.into_iter().flatten().collect())
}

/// Greedy Chamfer matching of one class: a prediction matches when its
/// distance is strictly below `threshold`.
pub fn match_polylines(
    preds: &[(String, MapPolyline)],
    gts: &[(String, MapPolyline)],
    threshold: f64,
) -> Vec<Match> {
    let pred_frames: Vec<&str> = preds.iter().map(|(f, _)| f.as_str()).collect();
    let scores: Vec<f64> = preds.iter().map(|(_, l)| l.score).collect();
    let gt_frames: Vec<&str> = gts.iter().map(|(f, _)| f.as_str()).collect();
    greedy_match(
        &pred_frames,
        &scores,
        &gt_frames,
        |p, g| chamfer_distance(&preds[p].1, &gts[g].1),
        |d| d < threshold,
    )
}

pub fn evaluate_map(
    preds: &FramePolylines,
    gts: &FramePolylines,
    config: &MapEvalConfig,
) -> Result<MapEvalReport> {
    config.validate()?;
    let extra: BTreeSet<&String> = preds.keys().filter(|k| !gts.contains_key(*k)).collect();
    if let Some(first) = extra.iter().next() {
        return Err(Error::FrameMismatch(format!(
            "{} prediction frame(s) without ground truth, e.g. `{first}`",
            extra.len()
        )));
    }
    let pred = prepare(preds, config)?;
    let gt = prepare(gts, config)?;

    let per_class: Vec<Vec<ClassAp>> = MapClass::ALL
        .par_iter()
        .map(|&class| {
            let of_class = |v: &[(String, MapPolyline)]| -> Vec<(String, MapPolyline)> {
                v.iter()
                    .filter(|(_, l)| l.class_name == class.as_str())
                    .cloned()
                    .collect()
            };
            let (p, g) = (of_class(&pred), of_class(&gt));
            if g.is_empty() {
                return Vec::new();
            }
            config
                .chamfer_thresholds
                .iter()
                .map(|&t| ClassAp {
                    class_name: class.as_str().to_string(),
                    threshold: t,
                    ap: interpolated_ap(&match_polylines(&p, &g, t), g.len(), None).unwrap_or(0.0),
                })
                .collect()
        })
        .collect();
    let per_class_ap: Vec<ClassAp> = per_class.into_iter().flatten().collect();
    let map_score = if per_class_ap.is_empty() {
        0.0
    } else {
        per_class_ap.iter().map(|c| c.ap).sum::<f64>() / per_class_ap.len() as f64
    };
    Ok(MapEvalReport {
        per_class_ap,
        map_score,
        n_gt: gt.len(),
        n_pred: pred.len(),
    })
}
