use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use super::objects::{DetectionBox3D, MapPolyline};
use super::pose::Pose;
use crate::error::{Error, Result};

/// Which data a scene's frames come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Real,
    Sim,
    Shifted { offset_m: f64 },
    Rotated { angle_deg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: String,
    /// Microseconds.
    pub timestamp: i64,
    pub ego_pose: Pose,
    #[serde(default, deserialize_with = "unique_keys")]
    pub images: BTreeMap<String, String>,
    #[serde(default)]
    pub boxes: Vec<DetectionBox3D>,
    #[serde(default)]
    pub polylines: Vec<MapPolyline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub scene_id: String,
    pub variant: Variant,
    pub frames: Vec<FrameRecord>,
}

/// Per-frame box lists keyed by `"{scene_id}/{frame_id}"`.
pub type FrameBoxes = BTreeMap<String, Vec<DetectionBox3D>>;
/// Per-frame polyline lists keyed by `"{scene_id}/{frame_id}"`.
pub type FramePolylines = BTreeMap<String, Vec<MapPolyline>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifestLimits {
    pub max_boxes_per_frame: usize,
}

impl Default for ManifestLimits {
    fn default() -> Self {
        ManifestLimits {
            max_boxes_per_frame: 500,
        }
    }
}

impl SceneManifest {
    /// Checks every invariant, normalizing yaw and closing crossings along the way.
    pub fn validated(mut self, limits: &ManifestLimits) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut last_ts = i64::MIN;
        for frame in &mut self.frames {
            let rec = format!("scene {} frame {}", self.scene_id, frame.frame_id);
            if !seen.insert(frame.frame_id.clone()) {
                return Err(Error::validation(rec, "duplicate frame_id"));
            }
            if frame.timestamp < last_ts {
                return Err(Error::validation(rec, "timestamp decreases"));
            }
            last_ts = frame.timestamp;
            frame
                .ego_pose
                .check()
                .map_err(|e| Error::validation(&rec, e.to_string()))?;
            if frame.boxes.len() > limits.max_boxes_per_frame {
                return Err(Error::validation(
                    rec,
                    format!(
                        "{} boxes exceed the per-frame cap of {}",
                        frame.boxes.len(),
                        limits.max_boxes_per_frame
                    ),
                ));
            }
            for (i, b) in frame.boxes.iter_mut().enumerate() {
                b.validate(&format!("{rec} box {i}"))?;
            }
            for (i, l) in frame.polylines.iter_mut().enumerate() {
                l.validate(&format!("{rec} polyline {i}"))?;
            }
        }
        Ok(self)
    }

    pub fn frame_key(&self, frame: &FrameRecord) -> String {
        format!("{}/{}", self.scene_id, frame.frame_id)
    }

    pub fn frame_boxes(&self) -> FrameBoxes {
        self.frames
            .iter()
            .map(|f| (self.frame_key(f), f.boxes.clone()))
            .collect()
    }

    pub fn frame_polylines(&self) -> FramePolylines {
        self.frames
            .iter()
            .map(|f| (self.frame_key(f), f.polylines.clone()))
            .collect()
    }

    /// Canonical pretty-printed JSON form.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn parse_manifest(text: &str, context: &str, limits: &ManifestLimits) -> Result<SceneManifest> {
    let raw: SceneManifest = serde_json::from_str(text).map_err(|e| Error::parse(context, e))?;
    raw.validated(limits)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<SceneManifest> {
    load_manifest_with(path, &ManifestLimits::default())
}

pub fn load_manifest_with(path: impl AsRef<Path>, limits: &ManifestLimits) -> Result<SceneManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, &path.display().to_string(), limits)
}

pub fn save_manifest(path: impl AsRef<Path>, manifest: &SceneManifest) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, manifest.to_canonical_json()).map_err(|e| Error::io(path, e))
}

/// Merges several manifests' boxes into one frame map.
pub fn merge_boxes<'a>(manifests: impl IntoIterator<Item = &'a SceneManifest>) -> FrameBoxes {
    manifests.into_iter().flat_map(|m| m.frame_boxes()).collect()
}

pub fn merge_polylines<'a>(manifests: impl IntoIterator<Item = &'a SceneManifest>) -> FramePolylines {
    manifests
        .into_iter()
        .flat_map(|m| m.frame_polylines())
        .collect()
}

fn unique_keys<'de, D>(deserializer: D) -> std::result::Result<BTreeMap<String, String>, D::Error>
where
    D: Deserializer<'de>,
{
    struct UniqueVisitor;

    impl<'de> Visitor<'de> for UniqueVisitor {
        type Value = BTreeMap<String, String>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map of camera_id to image path")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((k, v)) = access.next_entry::<String, String>()? {
                if out.contains_key(&k) {
                    return Err(serde::de::Error::custom(format!("duplicate camera_id `{k}`")));
                }
                out.insert(k, v);
            }
            Ok(out)
        }
    }

    deserializer.deserialize_map(UniqueVisitor)
}
