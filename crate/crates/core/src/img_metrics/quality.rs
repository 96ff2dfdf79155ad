use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::augment::gaussian_kernel;
use crate::error::{Error, Result};

/// Value used for identical images when PSNR enters an average.
pub const PSNR_IDENTICAL_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const DYNAMIC_RANGE: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: SSIM_WINDOW,
            sigma: SSIM_SIGMA,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    image::open(path)
        .map(|img| img.to_rgb8())
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Writes an image; the format follows the file extension.
pub fn save_rgb(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    img.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn same_shape(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.dimensions(),
            b.dimensions()
        )));
    }
    Ok(())
}

pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_shape(a, b)?;
    let n = a.as_raw().len();
    if n == 0 {
        return Err(Error::ShapeMismatch("empty images".into()));
    }
    let sum: f64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / m).log10())
}

/// PSNR with the identical-image sentinel replaced by [`PSNR_IDENTICAL_DB`].
pub fn psnr_capped(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    psnr(a, b).map(|v| if v.is_infinite() { PSNR_IDENTICAL_DB } else { v })
}

/// Valid-region separable filtering of one channel.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

fn channel(img: &RgbImage, c: usize) -> Vec<f64> {
    img.as_raw().iter().skip(c).step_by(3).map(|&v| v as f64).collect()
}

/// Mean SSIM with an 11×11 Gaussian window (σ = 1.5) over valid positions,
/// computed per channel and averaged.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    ssim_with(a, b, &SsimParams::default())
}

pub fn ssim_with(a: &RgbImage, b: &RgbImage, params: &SsimParams) -> Result<f64> {
    same_shape(a, b)?;
    if params.window == 0 || params.window % 2 == 0 || !(params.sigma > 0.0) {
        return Err(Error::validation("ssim params", "window must be odd and sigma positive"));
    }
    let (w, h) = (a.width() as usize, a.height() as usize);
    let side = w.min(h);
    if side < params.window {
        return Err(Error::TooSmall {
            side: side as u32,
            min: params.window as u32,
        });
    }
    let taps = gaussian_kernel(params.window, params.sigma);
    let c1 = (params.k1 * DYNAMIC_RANGE).powi(2);
    let c2 = (params.k2 * DYNAMIC_RANGE).powi(2);

    let mut total = 0.0;
    for c in 0..3 {
        let x = channel(a, c);
        let y = channel(b, c);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let (mx, ..) = filter_valid(&x, w, h, &taps);
        let (my, ..) = filter_valid(&y, w, h, &taps);
        let (sxx, ..) = filter_valid(&xx, w, h, &taps);
        let (syy, ..) = filter_valid(&yy, w, h, &taps);
        let (sxy, ..) = filter_valid(&xy, w, h, &taps);

        let mut sum = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            let num = (2.0 * (ux * uy) + c1) * (2.0 * cov + c2);
            let den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
            sum += num / den;
        }
        total += sum / mx.len() as f64;
    }
    Ok(total / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| image::Rgb([((x * 13 + y * 7) % 256) as u8, ((x * y) % 256) as u8, (200 - (x % 50)) as u8]))
    }

    #[test]
    fn psnr_identity_and_offset() {
        let a = RgbImage::from_pixel(20, 10, image::Rgb([100, 100, 100]));
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(psnr_capped(&a, &a).unwrap(), 100.0);
        let b = RgbImage::from_pixel(20, 10, image::Rgb([116, 116, 116]));
        let expected = 20.0 * (255.0f64 / 16.0).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 24.05).abs() < 0.01);
    }

    #[test]
    fn ssim_identity_symmetry_and_shift() {
        let a = pattern(32, 24);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let mut b = a.clone();
        b.pixels_mut().for_each(|p| p.0 = p.0.map(|v| v.saturating_add(30)));
        let s = ssim(&a, &b).unwrap();
        assert!(s < 1.0);
        assert_eq!(s, ssim(&b, &a).unwrap());
    }

    #[test]
    fn shape_errors() {
        let a = pattern(32, 24);
        let b = pattern(24, 32);
        assert_eq!(psnr(&a, &b).unwrap_err().kind(), "ShapeMismatchError");
        assert_eq!(ssim(&a, &b).unwrap_err().kind(), "ShapeMismatchError");
        let small = pattern(10, 40);
        assert_eq!(ssim(&small, &small).unwrap_err().kind(), "TooSmallError");
    }
}
