use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use r2s_core::agreement::{agreement_range_curve, curve_csv, detection_agreement, map_agreement, AgreementConfig};
use r2s_core::analysis::{correlate as correlate_points, scatter_svg, CorrelationResult, ScatterPoint};
use r2s_core::augment::{augment_image_epoch, mixing_plan_jsonl, plan_mixing, AugmentConfig, TrainSample};
use r2s_core::det_eval::{evaluate_detections, DetEvalConfig};
use r2s_core::geom::{feasibility_warnings, transform_manifest, DEFAULT_EGO_FOOTPRINT};
use r2s_core::img_metrics::{
    aggregate_scene, attach_lpips, frechet_distance, load_lpips_csv, load_rgb, load_scene_metrics_csv,
    pair_metrics_from_files, save_rgb, scene_metrics_csv, SceneMetrics, DEFAULT_FRECHET_EPS,
};
use r2s_core::map_eval::{evaluate_map, MapEvalConfig};
use r2s_core::model::{load_feature_set, load_manifest, merge_boxes, merge_polylines, save_manifest};
use r2s_core::{Error, Result};
use rayon::prelude::*;

use crate::io::{emit, io_err, load_manifests, read_config, read_json, to_json, write_file};
use crate::{
    AgreementArgs, AugmentArgs, CorrelateArgs, EvalArgs, FrechetArgs, ImgMetricsArgs, MixPlanArgs, RangeCurveArgs,
    TransformArgs,
};

pub fn eval_det(args: EvalArgs) -> Result<()> {
    let config: DetEvalConfig = read_config(args.config.as_deref())?;
    let gt = load_manifests(&args.gt)?;
    let pred = load_manifests(&args.pred)?;
    let report = evaluate_detections(&merge_boxes(&pred), &merge_boxes(&gt), &config)?;
    log::info!("mAP {:.4} NDS {:.4}", report.map_score, report.nds);
    emit(args.out.as_deref(), &to_json(&report))
}

pub fn eval_map(args: EvalArgs) -> Result<()> {
    let config: MapEvalConfig = read_config(args.config.as_deref())?;
    let gt = load_manifests(&args.gt)?;
    let pred = load_manifests(&args.pred)?;
    let report = evaluate_map(&merge_polylines(&pred), &merge_polylines(&gt), &config)?;
    emit(args.out.as_deref(), &to_json(&report))
}

pub fn agreement(args: AgreementArgs) -> Result<()> {
    let config: AgreementConfig = read_config(args.config.as_deref())?;
    let a = load_manifests(&args.a)?;
    let b = load_manifests(&args.b)?;
    let result = if args.map {
        map_agreement(&merge_polylines(&a), &merge_polylines(&b), &config)?
    } else {
        detection_agreement(&merge_boxes(&a), &merge_boxes(&b), &config)?
    };
    emit(args.out.as_deref(), &format!("{}\n", serde_json::to_string(&result).expect("result serializes")))
}

pub fn range_curve(args: RangeCurveArgs) -> Result<()> {
    let mut config: AgreementConfig = read_config(args.config.as_deref())?;
    if let Some(f) = args.fractions {
        config.range_fractions = f;
    }
    let a = load_manifests(&args.a)?;
    let b = load_manifests(&args.b)?;
    let curve = agreement_range_curve(&merge_boxes(&a), &merge_boxes(&b), &config)?;
    emit(args.out.as_deref(), &curve_csv(&curve))
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

/// Image files of a folder in name order, or the file itself.
fn image_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| io_err(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn augment(args: AugmentArgs) -> Result<()> {
    let config: AugmentConfig = read_config(args.config.as_deref())?;
    config.validate()?;
    let files = image_files(&args.input)?;
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    files.par_iter().try_for_each(|path| {
        let id = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let img = augment_image_epoch(&load_rgb(path)?, &config, args.seed, &id, args.epoch)?;
        save_rgb(args.out.join(format!("{}.png", stem(path))), &img)
    })?;
    log::info!("augmented {} images", files.len());
    Ok(())
}

pub fn mix_plan(args: MixPlanArgs) -> Result<()> {
    let samples: Vec<TrainSample> = read_json(&args.input)?;
    let rendered: BTreeMap<String, String> = read_json(&args.rendered)?;
    let plans = plan_mixing(&samples, &rendered, args.p, args.seed, args.epochs)?;
    emit(args.out.as_deref(), &mixing_plan_jsonl(&plans))
}

pub fn transform(args: TransformArgs) -> Result<()> {
    let manifest = load_manifest(&args.input)?;
    for w in args.pert.warnings() {
        log::warn!("{w}");
    }
    let footprint = match args.footprint.as_deref() {
        Some([w, l]) => [*w, *l],
        _ => DEFAULT_EGO_FOOTPRINT,
    };
    for w in feasibility_warnings(&manifest, args.pert, footprint) {
        log::warn!(
            "frame {}: box {} ({}) overlaps the ego vehicle after {}",
            w.frame_id,
            w.box_index,
            w.class_name,
            args.pert
        );
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    save_manifest(&args.out, &transform_manifest(&manifest, args.pert))
}

fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for p in image_files(dir)? {
        if let Some(prev) = out.insert(stem(&p), p.clone()) {
            return Err(Error::Validation {
                record: dir.display().to_string(),
                reason: format!("{} and {} share an image id", prev.display(), p.display()),
            });
        }
    }
    Ok(out)
}

pub fn img_metrics(args: ImgMetricsArgs) -> Result<()> {
    let real = images_by_stem(&args.real)?;
    let sim = images_by_stem(&args.sim)?;
    let mut pairs = Vec::with_capacity(real.len());
    for (id, path) in &real {
        let rendered = sim.get(id).ok_or_else(|| Error::Validation {
            record: format!("image {id}"),
            reason: format!("no rendered counterpart in {}", args.sim.display()),
        })?;
        pairs.push((id.clone(), path.clone(), rendered.clone()));
    }
    let mut metrics = pair_metrics_from_files(&pairs)?;
    if let Some(path) = &args.lpips {
        attach_lpips(&mut metrics, &load_lpips_csv(path)?);
    }
    let feats = match (&args.feats_real, &args.feats_sim) {
        (Some(a), Some(b)) => Some((load_feature_set(a)?, load_feature_set(b)?)),
        (None, None) => None,
        _ => {
            return Err(Error::Validation {
                record: "img-metrics".into(),
                reason: "--feats-real and --feats-sim go together".into(),
            })
        }
    };
    let scene = aggregate_scene(&args.scene, &metrics, feats.as_ref().map(|(a, b)| (a, b)), args.da)?;
    if let Some(path) = &args.pairs_out {
        write_file(path, &to_json(&metrics))?;
    }
    emit(args.out.as_deref(), &scene_metrics_csv(&[scene]))
}

pub fn frechet(args: FrechetArgs) -> Result<()> {
    let a = load_feature_set(&args.a)?;
    let b = load_feature_set(&args.b)?;
    let eps = if args.eps.is_finite() && args.eps >= 0.0 { args.eps } else { DEFAULT_FRECHET_EPS };
    println!("{}", frechet_distance(&a, &b, eps)?);
    Ok(())
}

fn metric_value(s: &SceneMetrics, metric: &str) -> Result<Option<f64>> {
    Ok(match metric {
        "psnr" => Some(s.mean_psnr),
        "ssim" => Some(s.mean_ssim),
        "lpips" => s.mean_lpips,
        "fid" => s.fid,
        other => {
            return Err(Error::Validation {
                record: "correlate".into(),
                reason: format!("unknown metric `{other}`"),
            })
        }
    })
}

fn split_group(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((g, p)) => (g.to_string(), PathBuf::from(p)),
        None => {
            let p = PathBuf::from(arg);
            (stem(&p), p)
        }
    }
}

pub fn correlate(args: CorrelateArgs) -> Result<()> {
    let mut groups: BTreeMap<String, Vec<SceneMetrics>> = BTreeMap::new();
    for arg in &args.input {
        let (group, path) = split_group(arg);
        groups.entry(group).or_default().extend(load_scene_metrics_csv(&path)?);
    }

    let mut results: Vec<CorrelationResult> = Vec::new();
    for metric in &args.metrics {
        let mut scatter = Vec::new();
        let mut per_group: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for (group, scenes) in &groups {
            let mut points = Vec::new();
            for s in scenes {
                if let (Some(v), Some(da)) = (metric_value(s, metric)?, s.da) {
                    points.push((v, da));
                }
            }
            scatter.extend(points.iter().map(|&(x, y)| ScatterPoint { x, y, group: group.clone() }));
            per_group.push((group.clone(), points));
        }
        if scatter.is_empty() {
            log::warn!("no scene has both {metric} and da; skipped");
            continue;
        }
        for (group, points) in &per_group {
            results.push(correlate_points(metric, Some(group), points)?);
        }
        if args.pool {
            let all: Vec<(f64, f64)> = scatter.iter().map(|p| (p.x, p.y)).collect();
            results.push(correlate_points(metric, None, &all)?);
        }
        if let Some(dir) = &args.svg_dir {
            let svg = scatter_svg(&scatter, &metric.to_uppercase(), "DA")?;
            write_file(&dir.join(format!("{metric}.svg")), &svg)?;
        }
    }
    emit(args.out.as_deref(), &to_json(&results))
}
