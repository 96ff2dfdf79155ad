#![allow(dead_code)]

pub mod oracle;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use r2s_core::model::{DetectionBox3D, DetectionClass, FrameBoxes};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ATTRIBUTES: [&str; 3] = ["moving", "parked", "stopped"];

pub fn random_box<R: Rng>(r: &mut R, class: DetectionClass, reach: f64) -> DetectionBox3D {
    let mut b = DetectionBox3D::new(
        class,
        [r.random_range(-reach..reach), r.random_range(-reach..reach), r.random_range(-1.0..2.0)],
        [r.random_range(0.3..3.0), r.random_range(0.3..8.0), r.random_range(0.5..3.5)],
        r.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
    .with_score(r.random_range(0.0..1.0));
    if r.random_bool(0.8) {
        b = b.with_velocity([r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)]);
    }
    if r.random_bool(0.7) {
        b = b.with_attribute(*ATTRIBUTES.choose(r).unwrap());
    }
    b
}

/// Random detection set: `frames` frames, between `min_boxes` and `max_boxes`
/// boxes in total, mixed classes.
pub fn random_set<R: Rng>(r: &mut R, frames: usize, min_boxes: usize, max_boxes: usize) -> FrameBoxes {
    let n = r.random_range(min_boxes..=max_boxes);
    let mut out: FrameBoxes = (0..frames).map(|f| (format!("scene/f{f}"), Vec::new())).collect();
    for _ in 0..n {
        let class = *DetectionClass::ALL.choose(r).unwrap();
        let f = r.random_range(0..frames);
        out.get_mut(&format!("scene/f{f}")).unwrap().push(random_box(r, class, 55.0));
    }
    out
}

/// Ground truth plus noisy, partly missing predictions with extra false
/// positives; at most `per_class` ground-truth boxes per class and frame,
/// over one or two frames.
pub fn random_instance<R: Rng>(r: &mut R, per_class: usize) -> (FrameBoxes, FrameBoxes) {
    let frames = r.random_range(1..=2);
    let k = r.random_range(1..=5);
    let classes: Vec<DetectionClass> = DetectionClass::ALL.choose_multiple(r, k).copied().collect();
    let mut gt = FrameBoxes::new();
    let mut pred = FrameBoxes::new();
    // coarse score grid so ties occur
    let score_grid = r.random_bool(0.3);
    for f in 0..frames {
        let key = format!("scene/f{f}");
        let mut g = Vec::new();
        let mut p = Vec::new();
        for &class in &classes {
            for _ in 0..r.random_range(0..=per_class) {
                let mut b = random_box(r, class, 45.0);
                b.score = 1.0;
                if r.random_bool(0.85) {
                    let mut q = b.clone();
                    let noise = r.random_range(0.0..2.5);
                    q.center[0] += r.random_range(-noise..=noise);
                    q.center[1] += r.random_range(-noise..=noise);
                    q.size = q.size.map(|s| s * r.random_range(0.7..1.3));
                    q.yaw = r2s_core::model::normalize_angle(q.yaw + r.random_range(-1.0..1.0));
                    q.velocity = q.velocity.map(|v| [v[0] + r.random_range(-1.0..1.0), v[1]]);
                    if r.random_bool(0.3) {
                        q.attribute = Some(ATTRIBUTES.choose(r).unwrap().to_string());
                    }
                    q.score = if score_grid { (r.random_range(1..=5) as f64) / 5.0 } else { r.random_range(0.0..1.0) };
                    p.push(q);
                }
                g.push(b);
            }
            for _ in 0..r.random_range(0..=1) {
                let mut fp = random_box(r, class, 45.0);
                if score_grid {
                    fp.score = (r.random_range(1..=5) as f64) / 5.0;
                }
                p.push(fp);
            }
        }
        gt.insert(key.clone(), g);
        pred.insert(key, p);
    }
    (pred, gt)
}
