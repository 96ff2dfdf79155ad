//! Brute-force detection evaluator written without any of the library's
//! matching, AP or TP code. Recall thresholds are compared in integers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use r2s_core::model::{DetectionBox3D, FrameBoxes};

pub const CLASSES: [&str; 10] = [
    "car",
    "truck",
    "bus",
    "trailer",
    "construction_vehicle",
    "pedestrian",
    "motorcycle",
    "bicycle",
    "traffic_cone",
    "barrier",
];

pub fn class_range(class: &str) -> f64 {
    match class {
        "car" | "truck" | "bus" | "trailer" | "construction_vehicle" => 50.0,
        "pedestrian" | "motorcycle" | "bicycle" => 40.0,
        "traffic_cone" | "barrier" => 30.0,
        _ => unreachable!("{class}"),
    }
}

fn is_static(class: &str) -> bool {
    class == "traffic_cone" || class == "barrier"
}

#[derive(Debug, Clone, Default)]
pub struct OracleTp {
    pub ate: f64,
    pub ase: f64,
    pub aoe: f64,
    pub ave: Option<f64>,
    pub aae: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    /// `(class, threshold) -> AP`
    pub ap: BTreeMap<(String, u64), f64>,
    pub tp: BTreeMap<String, OracleTp>,
    pub mean_tp: OracleTp,
    pub map: f64,
    pub nds: f64,
}

pub struct OracleConfig {
    pub thresholds: Vec<f64>,
    pub tp_threshold: f64,
    /// Range scale applied to every class.
    pub range_scale: f64,
    pub recall_weighted: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            thresholds: vec![0.5, 1.0, 2.0, 4.0],
            tp_threshold: 2.0,
            range_scale: 1.0,
            recall_weighted: false,
        }
    }
}

/// Stable key for a threshold in the AP map.
pub fn tkey(t: f64) -> u64 {
    t.to_bits()
}

struct Item<'a> {
    frame: &'a str,
    rank: usize,
    b: &'a DetectionBox3D,
}

fn collect<'a>(frames: &'a FrameBoxes, class: &str, range: f64) -> Vec<Item<'a>> {
    let mut out = Vec::new();
    let mut rank = 0;
    for (f, boxes) in frames {
        for b in boxes {
            if b.class_name == class && (b.center[0] * b.center[0] + b.center[1] * b.center[1]).sqrt() < range {
                out.push(Item { frame: f, rank, b });
                rank += 1;
            }
        }
    }
    out
}

fn dist(a: &DetectionBox3D, b: &DetectionBox3D) -> f64 {
    let dx = a.center[0] - b.center[0];
    let dy = a.center[1] - b.center[1];
    (dx * dx + dy * dy).sqrt()
}

/// Returns, in processing order, `(pred position, Some(gt position))` pairs.
fn assign(preds: &[Item], gts: &[Item], threshold: f64) -> Vec<(usize, Option<usize>)> {
    // processing order: score descending, then collection rank
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b].b.score.partial_cmp(&preds[a].b.score).unwrap().then(preds[a].rank.cmp(&preds[b].rank))
    });
    // every admissible pair, sorted by (processing position, distance, gt rank)
    let mut cand: Vec<(usize, f64, usize)> = Vec::new();
    for (pos, &p) in order.iter().enumerate() {
        for (g, gt) in gts.iter().enumerate() {
            if gt.frame == preds[p].frame {
                let d = dist(preds[p].b, gt.b);
                if d <= threshold {
                    cand.push((pos, d, g));
                }
            }
        }
    }
    cand.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()).then(a.2.cmp(&b.2)));
    let mut used = vec![false; gts.len()];
    let mut result: Vec<(usize, Option<usize>)> = order.iter().map(|&p| (p, None)).collect();
    for (pos, _, g) in cand {
        if result[pos].1.is_none() && !used[g] {
            used[g] = true;
            result[pos].1 = Some(g);
        }
    }
    result
}

/// Mean over recall samples i = 11..=100 of the clipped envelope precision.
fn ap_of(flags: &[bool], n_gt: usize) -> f64 {
    let mut tps = Vec::with_capacity(flags.len());
    let mut tp = 0usize;
    for &f in flags {
        tp += f as usize;
        tps.push(tp);
    }
    let mut total = 0.0;
    for i in 11..=100usize {
        let mut best = 0.0f64;
        for (k, &t) in tps.iter().enumerate() {
            if t * 100 >= i * n_gt {
                best = best.max(t as f64 / (k + 1) as f64);
            }
        }
        total += ((best - 0.1).max(0.0)) / 0.9;
    }
    total / 90.0
}

fn size_error(p: &DetectionBox3D, g: &DetectionBox3D) -> f64 {
    let inter = p.size[0].min(g.size[0]) * p.size[1].min(g.size[1]) * p.size[2].min(g.size[2]);
    let vp = p.size[0] * p.size[1] * p.size[2];
    let vg = g.size[0] * g.size[1] * g.size[2];
    1.0 - inter / (vp + vg - inter)
}

fn orientation_error(p: f64, g: f64, class: &str) -> f64 {
    let d = p - g;
    if class == "barrier" {
        (2.0 * d).sin().atan2((2.0 * d).cos()).abs() / 2.0
    } else {
        d.sin().atan2(d.cos()).abs()
    }
}

struct PairErr {
    ate: f64,
    ase: f64,
    aoe: f64,
    ave: Option<f64>,
    aae: Option<f64>,
}

fn pair_err(p: &DetectionBox3D, g: &DetectionBox3D, class: &str) -> PairErr {
    let (ave, aae) = if is_static(class) {
        (None, None)
    } else {
        let ave = match (p.velocity, g.velocity) {
            (Some(a), Some(b)) => Some(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()),
            _ => None,
        };
        let aae = g.attribute.as_ref().map(|ga| if p.attribute.as_deref() == Some(ga.as_str()) { 0.0 } else { 1.0 });
        (ave, aae)
    };
    PairErr {
        ate: dist(p, g),
        ase: size_error(p, g),
        aoe: orientation_error(p.yaw, g.yaw, class),
        ave,
        aae,
    }
}

fn avg(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn worst(class: &str) -> OracleTp {
    let dynamic = if is_static(class) { None } else { Some(1.0) };
    OracleTp { ate: 1.0, ase: 1.0, aoe: 1.0, ave: dynamic, aae: dynamic }
}

fn simple_tp(errs: &[PairErr], class: &str) -> OracleTp {
    if errs.is_empty() {
        return worst(class);
    }
    let col = |f: &dyn Fn(&PairErr) -> Option<f64>| -> Vec<f64> { errs.iter().filter_map(f).collect() };
    OracleTp {
        ate: avg(&col(&|e| Some(e.ate))).unwrap(),
        ase: avg(&col(&|e| Some(e.ase))).unwrap(),
        aoe: avg(&col(&|e| Some(e.aoe))).unwrap(),
        ave: avg(&col(&|e| e.ave)),
        aae: avg(&col(&|e| e.aae)),
    }
}

/// For each recall sample i > 10 reachable by the TPs, the running mean over the
/// first ceil(i·n_gt/100) true positives; samples then averaged.
fn recall_weighted_tp(errs: &[PairErr], n_gt: usize, class: &str) -> OracleTp {
    if errs.is_empty() {
        return worst(class);
    }
    let mut needed = Vec::new();
    for i in 11..=100usize {
        let j = (i * n_gt).div_ceil(100);
        if j > errs.len() {
            break;
        }
        needed.push(j.max(1));
    }
    if needed.is_empty() {
        return worst(class);
    }
    let field = |f: &dyn Fn(&PairErr) -> Option<f64>| -> Option<f64> {
        let mut vals = Vec::new();
        for &j in &needed {
            let seen: Vec<f64> = errs[..j].iter().filter_map(f).collect();
            if let Some(m) = avg(&seen) {
                vals.push(m);
            }
        }
        avg(&vals)
    };
    OracleTp {
        ate: field(&|e| Some(e.ate)).unwrap_or(1.0),
        ase: field(&|e| Some(e.ase)).unwrap_or(1.0),
        aoe: field(&|e| Some(e.aoe)).unwrap_or(1.0),
        ave: field(&|e| e.ave),
        aae: field(&|e| e.aae),
    }
}

pub fn evaluate(preds: &FrameBoxes, gts: &FrameBoxes, cfg: &OracleConfig) -> OracleReport {
    let mut ap = BTreeMap::new();
    let mut tp = BTreeMap::new();
    for class in CLASSES {
        let range = class_range(class) * cfg.range_scale;
        let g = collect(gts, class, range);
        if g.is_empty() {
            continue;
        }
        let p = collect(preds, class, range);
        for &t in &cfg.thresholds {
            let flags: Vec<bool> = assign(&p, &g, t).iter().map(|(_, m)| m.is_some()).collect();
            ap.insert((class.to_string(), tkey(t)), ap_of(&flags, g.len()));
        }
        let errs: Vec<PairErr> = assign(&p, &g, cfg.tp_threshold)
            .into_iter()
            .filter_map(|(pi, gi)| gi.map(|gi| pair_err(p[pi].b, g[gi].b, class)))
            .collect();
        let e = if cfg.recall_weighted { recall_weighted_tp(&errs, g.len(), class) } else { simple_tp(&errs, class) };
        tp.insert(class.to_string(), e);
    }
    if tp.is_empty() {
        return OracleReport { ap, tp, mean_tp: worst("car"), map: 0.0, nds: 0.0 };
    }
    let map = ap.values().sum::<f64>() / ap.len() as f64;
    let classes: Vec<&OracleTp> = tp.values().collect();
    let mean_opt = |f: &dyn Fn(&OracleTp) -> Option<f64>| avg(&classes.iter().filter_map(|t| f(t)).collect::<Vec<_>>());
    let mean_tp = OracleTp {
        ate: mean_opt(&|t| Some(t.ate)).unwrap(),
        ase: mean_opt(&|t| Some(t.ase)).unwrap(),
        aoe: mean_opt(&|t| Some(t.aoe)).unwrap(),
        ave: mean_opt(&|t| t.ave),
        aae: mean_opt(&|t| t.aae),
    };
    let terms: Vec<f64> = [Some(mean_tp.ate), Some(mean_tp.ase), Some(mean_tp.aoe), mean_tp.ave, mean_tp.aae]
        .into_iter()
        .flatten()
        .collect();
    let nds = (5.0 * map + terms.iter().map(|e| (1.0 - e).max(0.0)).sum::<f64>()) / (5.0 + terms.len() as f64);
    OracleReport { ap, tp, mean_tp, map, nds }
}

/// DA composed from two oracle evaluations at a single 2 m threshold.
pub fn agreement(a: &FrameBoxes, b: &FrameBoxes) -> f64 {
    let cfg = OracleConfig { thresholds: vec![2.0], tp_threshold: 2.0, ..Default::default() };
    let as_gt = |x: &FrameBoxes| -> FrameBoxes {
        x.iter()
            .map(|(f, bs)| (f.clone(), bs.iter().map(|b| DetectionBox3D { score: 1.0, ..b.clone() }).collect()))
            .collect()
    };
    let in_range = |x: &FrameBoxes| {
        x.values().flatten().filter(|b| (b.center[0].powi(2) + b.center[1].powi(2)).sqrt() < class_range(&b.class_name)).count()
    };
    let dir = |p: &FrameBoxes, g: &FrameBoxes| match (in_range(p), in_range(g)) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => evaluate(p, &as_gt(g), &cfg).nds,
    };
    100.0 * 0.5 * (dir(a, b) + dir(b, a))
}

pub const TWO_PI: f64 = 2.0 * PI;
