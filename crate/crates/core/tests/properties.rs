mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use r2s_core::agreement::{detection_agreement, AgreementConfig};
use r2s_core::analysis::pearson;
use r2s_core::det_eval::{evaluate_detections, DetEvalConfig};
use r2s_core::geom::{transform_box, transform_polylines, EgoPerturbation};
use r2s_core::map_eval::chamfer_distance;
use r2s_core::model::{
    normalize_angle, parse_manifest, DetectionBox3D, DetectionClass, FrameRecord, ManifestLimits, MapClass,
    MapPolyline, Pose, SceneManifest, Variant,
};

fn class() -> impl Strategy<Value = DetectionClass> {
    prop::sample::select(DetectionClass::ALL.to_vec())
}

fn detection_box() -> impl Strategy<Value = DetectionBox3D> {
    (
        class(),
        prop::array::uniform3(-60.0..60.0f64),
        prop::array::uniform3(0.2..10.0f64),
        -3.14..3.14f64,
        0.0..=1.0f64,
        prop::option::of(prop::array::uniform2(-20.0..20.0f64)),
        prop::option::of(prop::sample::select(vec!["moving", "parked"])),
    )
        .prop_map(|(c, center, size, yaw, score, vel, attr)| {
            let mut b = DetectionBox3D::new(c, center, size, yaw).with_score(score);
            b.velocity = vel;
            b.attribute = attr.map(str::to_string);
            b
        })
}

fn polyline() -> impl Strategy<Value = MapPolyline> {
    (
        prop::sample::select(vec![MapClass::Divider, MapClass::Boundary]),
        prop::collection::vec(prop::array::uniform2(-40.0..40.0f64), 2..8),
    )
        .prop_map(|(c, pts)| MapPolyline::new(c, pts))
}

fn pose() -> impl Strategy<Value = Pose> {
    (prop::array::uniform3(-100.0..100.0f64), prop::array::uniform4(-1.0..1.0f64))
        .prop_filter("non-degenerate quaternion", |(_, q)| q.iter().map(|c| c * c).sum::<f64>() > 0.01)
        .prop_map(|(t, q)| {
            let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            Pose::new(t, q.map(|c| c / n)).unwrap()
        })
}

fn perturbation() -> impl Strategy<Value = EgoPerturbation> {
    prop_oneof![
        (-8.0..8.0f64).prop_map(EgoPerturbation::lateral),
        (-180.0..180.0f64).prop_map(EgoPerturbation::rotation),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifest_round_trips(boxes in prop::collection::vec(detection_box(), 0..12), lines in prop::collection::vec(polyline(), 0..4), p in pose()) {
        let manifest = SceneManifest {
            scene_id: "scene-1".into(),
            variant: Variant::Sim,
            frames: vec![FrameRecord {
                frame_id: "f0".into(),
                timestamp: 1_000_000,
                ego_pose: p,
                images: [("CAM_FRONT".to_string(), "f0.jpg".to_string())].into(),
                boxes,
                polylines: lines,
            }],
        };
        let limits = ManifestLimits::default();
        let once = parse_manifest(&manifest.to_canonical_json(), "a", &limits).unwrap();
        let twice = parse_manifest(&once.to_canonical_json(), "b", &limits).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.to_canonical_json(), twice.to_canonical_json());
        prop_assert_eq!(once.frames[0].boxes.len(), manifest.frames[0].boxes.len());
    }

    #[test]
    fn pose_composition_is_associative(a in pose(), b in pose(), c in pose()) {
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        prop_assert!(left.approx_eq(&right, 1e-9), "{left:?} vs {right:?}");
        prop_assert!(a.compose(&a.inverse()).approx_eq(&Pose::IDENTITY, 1e-9));
    }

    #[test]
    fn halving_scores_keeps_ap(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (pred, gt) = common::random_instance(&mut r, 6);
        let mut halved = pred.clone();
        halved.values_mut().flatten().for_each(|b| b.score *= 0.5);
        let config = DetEvalConfig::default();
        let a = evaluate_detections(&pred, &gt, &config).unwrap();
        let b = evaluate_detections(&halved, &gt, &config).unwrap();
        prop_assert_eq!(a.per_class_ap, b.per_class_ap);
        prop_assert_eq!(a.nds, b.nds);
    }

    #[test]
    fn agreement_is_symmetric(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_set(&mut r, 2, 0, 30);
        let b = common::random_set(&mut r, 2, 0, 30);
        let config = AgreementConfig::default();
        let ab = detection_agreement(&a, &b, &config).unwrap();
        let ba = detection_agreement(&b, &a, &config).unwrap();
        prop_assert_eq!(ab.da, ba.da);
        prop_assert!((0.0..=100.0).contains(&ab.da));
    }

    #[test]
    fn box_perturbation_round_trips(b in detection_box(), pert in perturbation()) {
        let back = transform_box(&transform_box(&b, pert), pert.inverse());
        for k in 0..3 {
            prop_assert!((back.center[k] - b.center[k]).abs() < 1e-9);
        }
        prop_assert!(normalize_angle(back.yaw - b.yaw).abs() < 1e-9);
        prop_assert_eq!(back.size, b.size);
    }

    #[test]
    fn polyline_perturbation_round_trips(line in polyline(), pert in perturbation()) {
        let back = transform_polylines(&transform_polylines(std::slice::from_ref(&line), pert), pert.inverse());
        for (p, q) in line.points.iter().zip(&back[0].points) {
            prop_assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn chamfer_is_symmetric_and_zero_on_self(a in polyline(), b in polyline()) {
        prop_assert_eq!(chamfer_distance(&a, &b), chamfer_distance(&b, &a));
        prop_assert!(chamfer_distance(&a, &a).abs() < 1e-9);
    }

    #[test]
    fn pearson_is_affine_invariant(
        pts in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 3..40),
        scale in 0.1..10.0f64,
        shift in -100.0..100.0f64,
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        if let Ok(r) = pearson(&x, &y) {
            let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let flipped: Vec<f64> = x.iter().map(|v| -scale * v + shift).collect();
            prop_assert!((pearson(&moved, &y).unwrap() - r).abs() < 1e-9);
            prop_assert!((pearson(&flipped, &y).unwrap() + r).abs() < 1e-9);
        }
    }
}
