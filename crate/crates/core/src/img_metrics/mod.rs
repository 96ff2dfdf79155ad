//! Image reconstruction metrics and their per-scene aggregation.
//!
//! PSNR and SSIM are computed here. LPIPS comes from an external helper as a
//! CSV with header `image_id,lpips`. Feature-space Fréchet distance works on
//! [`FeatureSet`](crate::model::FeatureSet)s loaded from FVEC files.

mod frechet;
mod quality;

use std::collections::BTreeMap;
use std::path::Path;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureSet;

pub use frechet::{frechet_distance, mean_and_covariance, sqrtm_psd, DEFAULT_FRECHET_EPS};
pub use quality::{
    load_rgb, mse, psnr, psnr_capped, save_rgb, ssim, ssim_with, SsimParams, PSNR_IDENTICAL_DB, SSIM_SIGMA, SSIM_WINDOW,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePairMetrics {
    pub image_id: String,
    /// `f64::INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
    pub lpips: Option<f64>,
}

/// PSNR and SSIM for one real/rendered pair.
pub fn pair_metrics(image_id: &str, real: &RgbImage, rendered: &RgbImage) -> Result<ImagePairMetrics> {
    Ok(ImagePairMetrics {
        image_id: image_id.to_string(),
        psnr: psnr(real, rendered)?,
        ssim: ssim(real, rendered)?,
        lpips: None,
    })
}

/// Loads and scores image pairs in parallel. Output order follows input order.
pub fn pair_metrics_from_files<P: AsRef<Path> + Sync>(pairs: &[(String, P, P)]) -> Result<Vec<ImagePairMetrics>> {
    pairs
        .par_iter()
        .map(|(id, real, rendered)| pair_metrics(id, &load_rgb(real)?, &load_rgb(rendered)?))
        .collect()
}

#[derive(Debug, Deserialize)]
struct LpipsRow {
    image_id: String,
    lpips: f64,
}

pub fn parse_lpips_csv(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse("lpips csv", e))?;
    if headers.iter().collect::<Vec<_>>() != ["image_id", "lpips"] {
        return Err(Error::parse("lpips csv", format!("unexpected header {headers:?}")));
    }
    let mut out = BTreeMap::new();
    for (i, row) in reader.deserialize::<LpipsRow>().enumerate() {
        let row = row.map_err(|e| Error::parse("lpips csv", e))?;
        if !(row.lpips.is_finite() && row.lpips >= 0.0) {
            return Err(Error::validation(format!("lpips row {}", i + 1), format!("value {} is not >= 0", row.lpips)));
        }
        if out.insert(row.image_id.clone(), row.lpips).is_some() {
            return Err(Error::validation(format!("lpips row {}", i + 1), format!("duplicate image_id {}", row.image_id)));
        }
    }
    Ok(out)
}

pub fn load_lpips_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lpips_csv(&text)
}

/// Fills `lpips` on every pair that has a CSV entry.
pub fn attach_lpips(pairs: &mut [ImagePairMetrics], lpips: &BTreeMap<String, f64>) {
    for p in pairs {
        p.lpips = lpips.get(&p.image_id).copied();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub scene_id: String,
    /// Identical pairs count as [`PSNR_IDENTICAL_DB`].
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    /// Present only when every pair carries an LPIPS value.
    pub mean_lpips: Option<f64>,
    pub fid: Option<f64>,
    pub da: Option<f64>,
}

/// Order-independent mean: values are sorted before summation.
fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Averages per-pair metrics of one scene and attaches FID and DA.
pub fn aggregate_scene(
    scene_id: &str,
    pairs: &[ImagePairMetrics],
    features: Option<(&FeatureSet, &FeatureSet)>,
    da: Option<f64>,
) -> Result<SceneMetrics> {
    if pairs.is_empty() {
        return Err(Error::EmptyScene(scene_id.to_string()));
    }
    let capped = |v: f64| if v.is_infinite() { PSNR_IDENTICAL_DB } else { v };
    let mean_lpips = pairs
        .iter()
        .map(|p| p.lpips)
        .collect::<Option<Vec<f64>>>()
        .map(|v| mean(v.into_iter()));
    let fid = features
        .map(|(real, sim)| frechet_distance(real, sim, DEFAULT_FRECHET_EPS))
        .transpose()?;
    Ok(SceneMetrics {
        scene_id: scene_id.to_string(),
        mean_psnr: mean(pairs.iter().map(|p| capped(p.psnr))),
        mean_ssim: mean(pairs.iter().map(|p| p.ssim)),
        mean_lpips,
        fid,
        da,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneRow {
    scene_id: String,
    psnr: f64,
    ssim: f64,
    lpips: Option<f64>,
    fid: Option<f64>,
    da: Option<f64>,
}

pub const SCENE_CSV_HEADER: &str = "scene_id,psnr,ssim,lpips,fid,da";

/// CSV with header `scene_id,psnr,ssim,lpips,fid,da`; missing values are empty.
pub fn scene_metrics_csv(scenes: &[SceneMetrics]) -> String {
    // serialize() writes the header with the first row only
    if scenes.is_empty() {
        return format!("{SCENE_CSV_HEADER}\n");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in scenes {
        w.serialize(SceneRow {
            scene_id: s.scene_id.clone(),
            psnr: s.mean_psnr,
            ssim: s.mean_ssim,
            lpips: s.mean_lpips,
            fid: s.fid,
            da: s.da,
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn parse_scene_metrics_csv(text: &str) -> Result<Vec<SceneMetrics>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    reader
        .deserialize::<SceneRow>()
        .map(|row| {
            let r = row.map_err(|e| Error::parse("scene metrics csv", e))?;
            Ok(SceneMetrics {
                scene_id: r.scene_id,
                mean_psnr: r.psnr,
                mean_ssim: r.ssim,
                mean_lpips: r.lpips,
                fid: r.fid,
                da: r.da,
            })
        })
        .collect()
}

pub fn load_scene_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<SceneMetrics>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene_metrics_csv(&text)
}
