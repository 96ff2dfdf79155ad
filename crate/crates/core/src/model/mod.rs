//! Domain types shared by every evaluator, plus manifest and feature-file I/O.

mod features;
mod manifest;
mod objects;
mod pose;

pub use features::{
    decode_fvec, encode_fvec, ids_sidecar_path, load_feature_set, save_feature_set, FeatureSet,
    FVEC_HEADER_LEN, FVEC_MAGIC, FVEC_VERSION,
};
pub use manifest::{
    load_manifest, load_manifest_with, merge_boxes, merge_polylines, parse_manifest, save_manifest,
    FrameBoxes, FramePolylines, FrameRecord, ManifestLimits, SceneManifest, Variant,
};
pub use objects::{DetectionBox3D, DetectionClass, MapClass, MapPolyline};
pub use pose::{deg_to_rad, normalize_angle, normalize_degrees, Pose, QUATERNION_NORM_TOLERANCE};
