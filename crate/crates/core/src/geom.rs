//! Ego-pose perturbations for extrapolated-view evaluation and the matching
//! frame change of labels, detections and map polylines.
//!
//! Perturbing the ego pose by `P` moves every ego-frame quantity by `P⁻¹`.
//! Lateral offsets are along +y (left); rotations are about the ego z axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    deg_to_rad, normalize_angle, normalize_degrees, DetectionBox3D, MapPolyline, Pose, SceneManifest,
    Variant,
};

/// Lateral offsets outside this magnitude trigger a warning.
pub const LATERAL_SOFT_LIMIT_M: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EgoPerturbation {
    Lateral { offset_m: f64 },
    Rotation { angle_deg: f64 },
}

impl EgoPerturbation {
    pub fn lateral(offset_m: f64) -> Self {
        EgoPerturbation::Lateral { offset_m }
    }

    /// Rotation with the angle wrapped to (−180, 180].
    pub fn rotation(angle_deg: f64) -> Self {
        EgoPerturbation::Rotation {
            angle_deg: normalize_degrees(angle_deg),
        }
    }

    pub fn inverse(self) -> Self {
        match self {
            EgoPerturbation::Lateral { offset_m } => EgoPerturbation::lateral(-offset_m),
            EgoPerturbation::Rotation { angle_deg } => EgoPerturbation::rotation(-angle_deg),
        }
    }

    /// Soft protocol warnings; never fatal.
    pub fn warnings(&self) -> Vec<String> {
        match *self {
            EgoPerturbation::Lateral { offset_m } if offset_m.abs() > LATERAL_SOFT_LIMIT_M => {
                vec![format!(
                    "lateral offset {offset_m} m is outside ±{LATERAL_SOFT_LIMIT_M} m"
                )]
            }
            _ => Vec::new(),
        }
    }

    /// The perturbation as an ego-frame transform.
    pub fn as_pose(&self) -> Pose {
        match *self {
            EgoPerturbation::Lateral { offset_m } => Pose::from_translation([0.0, offset_m, 0.0]),
            EgoPerturbation::Rotation { angle_deg } => Pose::from_yaw(deg_to_rad(angle_deg)),
        }
    }

    pub fn variant(&self) -> Variant {
        match *self {
            EgoPerturbation::Lateral { offset_m } => Variant::Shifted { offset_m },
            EgoPerturbation::Rotation { angle_deg } => Variant::Rotated { angle_deg },
        }
    }

    /// Maps an ego-frame ground point into the perturbed ego frame.
    fn map_point(&self, p: [f64; 2]) -> [f64; 2] {
        match *self {
            EgoPerturbation::Lateral { offset_m } => [p[0], p[1] - offset_m],
            EgoPerturbation::Rotation { angle_deg } => rotate(p, -deg_to_rad(angle_deg)),
        }
    }

    fn map_vector(&self, v: [f64; 2]) -> [f64; 2] {
        match *self {
            EgoPerturbation::Lateral { .. } => v,
            EgoPerturbation::Rotation { angle_deg } => rotate(v, -deg_to_rad(angle_deg)),
        }
    }

    fn yaw_shift(&self) -> f64 {
        match *self {
            EgoPerturbation::Lateral { .. } => 0.0,
            EgoPerturbation::Rotation { angle_deg } => deg_to_rad(angle_deg),
        }
    }
}

fn rotate(p: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

impl fmt::Display for EgoPerturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EgoPerturbation::Lateral { offset_m } => write!(f, "lateral:{offset_m:+}"),
            EgoPerturbation::Rotation { angle_deg } => write!(f, "rot:{angle_deg:+}"),
        }
    }
}

/// Parses `lateral:+2.0` or `rot:-30`.
impl FromStr for EgoPerturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::parse("perturbation", format!("`{s}` is not lateral:<m> or rot:<deg>"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        if !value.is_finite() {
            return Err(bad());
        }
        match kind.trim() {
            "lateral" => Ok(EgoPerturbation::lateral(value)),
            "rot" | "rotation" => Ok(EgoPerturbation::rotation(value)),
            _ => Err(bad()),
        }
    }
}

/// `pose ∘ perturbation`.
pub fn perturb_pose(pose: &Pose, pert: EgoPerturbation) -> Pose {
    pose.compose(&pert.as_pose())
}

pub fn transform_box(b: &DetectionBox3D, pert: EgoPerturbation) -> DetectionBox3D {
    let [x, y] = pert.map_point([b.center[0], b.center[1]]);
    DetectionBox3D {
        center: [x, y, b.center[2]],
        yaw: normalize_angle(b.yaw - pert.yaw_shift()),
        velocity: b.velocity.map(|v| pert.map_vector(v)),
        ..b.clone()
    }
}

pub fn transform_boxes(boxes: &[DetectionBox3D], pert: EgoPerturbation) -> Vec<DetectionBox3D> {
    boxes.iter().map(|b| transform_box(b, pert)).collect()
}

pub fn transform_polylines(lines: &[MapPolyline], pert: EgoPerturbation) -> Vec<MapPolyline> {
    lines
        .iter()
        .map(|l| MapPolyline {
            points: l.points.iter().map(|p| pert.map_point(*p)).collect(),
            ..l.clone()
        })
        .collect()
}

/// Ego vehicle footprint `(width, length)` used for feasibility checks.
pub const DEFAULT_EGO_FOOTPRINT: [f64; 2] = [1.73, 4.08];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityWarning {
    pub frame_id: String,
    pub box_index: usize,
    pub class_name: String,
}

fn footprint_corners(center: [f64; 2], width: f64, length: f64, yaw: f64) -> [[f64; 2]; 4] {
    let (hl, hw) = (0.5 * length, 0.5 * width);
    [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]].map(|c| {
        let r = rotate(c, yaw);
        [center[0] + r[0], center[1] + r[1]]
    })
}

/// Separating-axis test for two convex quadrilaterals.
fn quads_overlap(a: &[[f64; 2]; 4], b: &[[f64; 2]; 4]) -> bool {
    for poly in [a, b] {
        for i in 0..4 {
            let (p, q) = (poly[i], poly[(i + 1) % 4]);
            let axis = [q[1] - p[1], p[0] - q[0]];
            let project = |pts: &[[f64; 2]; 4]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    let d = v[0] * axis[0] + v[1] * axis[1];
                    (lo.min(d), hi.max(d))
                })
            };
            let (a_lo, a_hi) = project(a);
            let (b_lo, b_hi) = project(b);
            if a_hi < b_lo || b_hi < a_lo {
                return false;
            }
        }
    }
    true
}

/// Boxes whose ground footprint overlaps the ego footprint after the perturbation.
pub fn feasibility_warnings(
    manifest: &SceneManifest,
    pert: EgoPerturbation,
    ego_footprint: [f64; 2],
) -> Vec<FeasibilityWarning> {
    let ego = footprint_corners([0.0, 0.0], ego_footprint[0], ego_footprint[1], 0.0);
    let mut out = Vec::new();
    for frame in &manifest.frames {
        for (i, b) in frame.boxes.iter().enumerate() {
            let t = transform_box(b, pert);
            let quad = footprint_corners([t.center[0], t.center[1]], t.size[0], t.size[1], t.yaw);
            if quads_overlap(&ego, &quad) {
                out.push(FeasibilityWarning {
                    frame_id: frame.frame_id.clone(),
                    box_index: i,
                    class_name: b.class_name.clone(),
                });
            }
        }
    }
    out
}

/// Applies the perturbation to every frame and records it in the variant tag.
pub fn transform_manifest(manifest: &SceneManifest, pert: EgoPerturbation) -> SceneManifest {
    SceneManifest {
        scene_id: manifest.scene_id.clone(),
        variant: pert.variant(),
        frames: manifest
            .frames
            .iter()
            .map(|f| {
                let mut f = f.clone();
                f.ego_pose = perturb_pose(&f.ego_pose, pert);
                f.boxes = transform_boxes(&f.boxes, pert);
                f.polylines = transform_polylines(&f.polylines, pert);
                f
            })
            .collect(),
    }
}
