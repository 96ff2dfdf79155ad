//! Augmentations that imitate neural-rendering artifacts, and the planner that
//! mixes rendered images into a training set.
//!
//! Stages run in a fixed order: Gaussian noise, Gaussian blur, photometric
//! distortion (brightness, contrast, saturation, hue), then bilinear
//! down- and upsampling. Each stage fires with its own probability and the
//! image is rounded and clamped to 8 bits after every stage.

mod mixing;
pub mod rng;
mod stages;

use image::RgbImage;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mixing::{mixing_plan_jsonl, plan_mixing, MixingEntry, MixingPlan, Source, TrainSample};
pub use stages::{gaussian_blur, gaussian_kernel, hsv_to_rgb, resize_bilinear, rgb_to_hsv, Planes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMethod {
    #[default]
    Bilinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub p_noise: f64,
    /// Standard deviation in 8-bit intensity units.
    pub noise_sigma: f64,
    pub p_blur: f64,
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub p_downup: f64,
    pub downup_factor: f64,
    pub downup_method: ResampleMethod,
    /// Probability of each photometric sub-operation.
    pub p_photometric: f64,
    pub brightness_delta: [f64; 2],
    pub contrast_mult: [f64; 2],
    pub saturation_mult: [f64; 2],
    pub hue_delta_deg: [f64; 2],
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p_noise: 0.5,
            noise_sigma: 10.0,
            p_blur: 0.5,
            blur_kernel: 5,
            blur_sigma: 1.1,
            p_downup: 0.5,
            downup_factor: 10.0,
            downup_method: ResampleMethod::Bilinear,
            p_photometric: 0.5,
            brightness_delta: [-32.0, 32.0],
            contrast_mult: [0.5, 1.5],
            saturation_mult: [0.5, 1.5],
            hue_delta_deg: [-18.0, 18.0],
        }
    }
}

impl AugmentConfig {
    /// Every stage disabled.
    pub fn disabled() -> Self {
        AugmentConfig {
            p_noise: 0.0,
            p_blur: 0.0,
            p_downup: 0.0,
            p_photometric: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::validation("augment config", reason));
        for (name, p) in [
            ("p_noise", self.p_noise),
            ("p_blur", self.p_blur),
            ("p_downup", self.p_downup),
            ("p_photometric", self.p_photometric),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.downup_factor >= 1.0) {
            return bad(format!("downup_factor {} must be >= 1", self.downup_factor));
        }
        if self.blur_kernel < 3 || self.blur_kernel % 2 == 0 {
            return bad(format!("blur_kernel {} must be odd and >= 3", self.blur_kernel));
        }
        if !(self.blur_sigma > 0.0) || !(self.noise_sigma >= 0.0) {
            return bad("sigmas must be positive".into());
        }
        for (name, [lo, hi]) in [
            ("brightness_delta", self.brightness_delta),
            ("contrast_mult", self.contrast_mult),
            ("saturation_mult", self.saturation_mult),
            ("hue_delta_deg", self.hue_delta_deg),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("{name} range [{lo}, {hi}] is invalid"));
            }
        }
        Ok(())
    }
}

const STAGE_NOISE: &str = "noise";
const STAGE_BLUR: &str = "blur";
const STAGE_PHOTOMETRIC: &str = "photometric";
const STAGE_DOWNUP: &str = "downup";

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn fires<R: Rng>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

fn photometric<R: Rng>(img: &RgbImage, config: &AugmentConfig, rng: &mut R) -> Option<RgbImage> {
    // every draw happens whether or not its sub-op fires, so the stream layout is fixed
    let mut draw = |range: [f64; 2]| {
        let on = fires(rng, config.p_photometric);
        let value = uniform(rng, range);
        on.then_some(value)
    };
    let brightness = draw(config.brightness_delta);
    let contrast = draw(config.contrast_mult);
    let saturation = draw(config.saturation_mult);
    let hue = draw(config.hue_delta_deg);
    if brightness.is_none() && contrast.is_none() && saturation.is_none() && hue.is_none() {
        return None;
    }

    let mut p = Planes::from_rgb(img);
    if let Some(delta) = brightness {
        p.data.iter_mut().for_each(|v| *v += delta);
        stages::clamp_unit_range(&mut p);
    }
    if let Some(alpha) = contrast {
        p.data.iter_mut().for_each(|v| *v *= alpha);
        stages::clamp_unit_range(&mut p);
    }
    if let Some(alpha) = saturation {
        stages::map_hsv(&mut p, |[h, s, v]| [h, (s * alpha).clamp(0.0, 1.0), v]);
    }
    if let Some(delta) = hue {
        stages::map_hsv(&mut p, |[h, s, v]| [(h + delta).rem_euclid(360.0), s, v]);
    }
    Some(p.quantize())
}

fn down_up(img: &RgbImage, factor: f64) -> RgbImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let sw = ((w as f64 / factor).round() as usize).max(1);
    let sh = ((h as f64 / factor).round() as usize).max(1);
    let small = resize_bilinear(&Planes::from_rgb(img), sw, sh).quantize();
    resize_bilinear(&Planes::from_rgb(&small), w, h).quantize()
}

/// Augments one image for epoch 0. See [`augment_image_epoch`].
pub fn augment_image(img: &RgbImage, config: &AugmentConfig, global_seed: u64, image_id: &str) -> Result<RgbImage> {
    augment_image_epoch(img, config, global_seed, image_id, 0)
}

/// Runs the stage pipeline with randomness drawn only from streams keyed by
/// `(global_seed, image_id, epoch, stage)`.
pub fn augment_image_epoch(
    img: &RgbImage,
    config: &AugmentConfig,
    global_seed: u64,
    image_id: &str,
    epoch: u64,
) -> Result<RgbImage> {
    config.validate()?;
    let min = config.blur_kernel as u32;
    if img.width() < min || img.height() < min {
        return Err(Error::Size {
            width: img.width(),
            height: img.height(),
            min,
        });
    }
    let mut out = img.clone();

    let mut r = rng::stream(global_seed, image_id, epoch, STAGE_NOISE);
    if fires(&mut r, config.p_noise) {
        let mut p = Planes::from_rgb(&out);
        stages::add_gaussian_noise(&mut p, config.noise_sigma, &mut r);
        out = p.quantize();
    }

    let mut r = rng::stream(global_seed, image_id, epoch, STAGE_BLUR);
    if fires(&mut r, config.p_blur) {
        out = gaussian_blur(&Planes::from_rgb(&out), config.blur_kernel, config.blur_sigma).quantize();
    }

    let mut r = rng::stream(global_seed, image_id, epoch, STAGE_PHOTOMETRIC);
    if let Some(img) = photometric(&out, config, &mut r) {
        out = img;
    }

    let mut r = rng::stream(global_seed, image_id, epoch, STAGE_DOWNUP);
    if fires(&mut r, config.p_downup) {
        out = down_up(&out, config.downup_factor);
    }
    Ok(out)
}

/// Augments a batch in parallel; output order follows input order.
pub fn augment_batch(
    images: &[(String, RgbImage)],
    config: &AugmentConfig,
    global_seed: u64,
) -> Result<Vec<RgbImage>> {
    images
        .par_iter()
        .map(|(id, img)| augment_image(img, config, global_seed, id))
        .collect()
}
