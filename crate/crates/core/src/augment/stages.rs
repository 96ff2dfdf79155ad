//! Image operations behind the augmentation stages. They work on
//! interleaved RGB planes held as `f64` and leave quantization to the caller.

use rand::Rng;
use rand_distr::StandardNormal;

/// Interleaved `height × width × 3` buffer of real-valued intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Planes {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Planes {
    pub fn from_rgb(img: &image::RgbImage) -> Self {
        Planes {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.as_raw().iter().map(|&v| v as f64).collect(),
        }
    }

    /// Rounds to nearest and clamps into `[0, 255]`.
    pub fn quantize(&self) -> image::RgbImage {
        let raw = self.data.iter().map(|&v| quantize(v)).collect();
        image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer matches dimensions")
    }

    fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * 3 + c]
    }
}

pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub fn add_gaussian_noise<R: Rng>(planes: &mut Planes, sigma: f64, rng: &mut R) {
    for v in planes.data.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += sigma * z;
    }
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Mirror index without repeating the edge sample (`dcb|abcd|cba`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - m }) as usize
}

/// Separable Gaussian blur with reflected borders.
pub fn gaussian_blur(src: &Planes, kernel: usize, sigma: f64) -> Planes {
    let taps = gaussian_kernel(kernel, sigma);
    let r = (kernel / 2) as isize;
    let (w, h) = (src.width, src.height);

    let mut tmp = vec![0.0; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (k, t) in taps.iter().enumerate() {
                    let xx = reflect(x as isize + k as isize - r, w);
                    acc += t * src.at(y, xx, c);
                }
                tmp[(y * w + x) * 3 + c] = acc;
            }
        }
    }
    let mut out = vec![0.0; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (k, t) in taps.iter().enumerate() {
                    let yy = reflect(y as isize + k as isize - r, h);
                    acc += t * tmp[(yy * w + x) * 3 + c];
                }
                out[(y * w + x) * 3 + c] = acc;
            }
        }
    }
    Planes {
        width: w,
        height: h,
        data: out,
    }
}

/// Bilinear resize with pixel-center alignment and clamped borders.
pub fn resize_bilinear(src: &Planes, width: usize, height: usize) -> Planes {
    let sx = src.width as f64 / width as f64;
    let sy = src.height as f64 / height as f64;
    let sample_axis = |dst: usize, scale: f64, n: usize| -> (usize, usize, f64) {
        let f = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = f.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, f - i0 as f64)
    };
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        let (y0, y1, wy) = sample_axis(y, sy, src.height);
        for x in 0..width {
            let (x0, x1, wx) = sample_axis(x, sx, src.width);
            for c in 0..3 {
                let top = src.at(y0, x0, c) * (1.0 - wx) + src.at(y0, x1, c) * wx;
                let bottom = src.at(y1, x0, c) * (1.0 - wx) + src.at(y1, x1, c) * wx;
                data.push(top * (1.0 - wy) + bottom * wy);
            }
        }
    }
    Planes {
        width,
        height,
        data,
    }
}

/// RGB in `[0, 255]` to HSV with hue in degrees `[0, 360)` and s, v in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| c / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    [h.rem_euclid(360.0), s, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

/// Applies `f` to every pixel in HSV space.
pub fn map_hsv(planes: &mut Planes, f: impl Fn([f64; 3]) -> [f64; 3]) {
    for px in planes.data.chunks_exact_mut(3) {
        let hsv = f(rgb_to_hsv([px[0], px[1], px[2]]));
        px.copy_from_slice(&hsv_to_rgb(hsv));
    }
}

pub fn clamp_unit_range(planes: &mut Planes) {
    planes.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 255.0));
}
