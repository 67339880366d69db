//! Resizing, cropping and standardization.

use crate::data::pgm::Image;
use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Bilinear resampling with half-pixel centers: output pixel `o` samples the
/// source at `(o + 0.5)·in/out − 0.5`, clamped to the image, and rounds to
/// the nearest integer.
pub fn resize_bilinear(image: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Geometry(format!(
            "resize target {out_w}x{out_h} has a zero side"
        )));
    }
    let (in_w, in_h) = (image.width(), image.height());
    let taps = |out: usize, input: usize| -> Vec<(usize, usize, f64)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(input - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = taps(out_w, in_w);
    let ys = taps(out_h, in_h);
    let maxval = image.maxval() as f64;
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p = |x, y| image.get(x, y) as f64;
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            pixels.push(v.round().clamp(0.0, maxval) as u8);
        }
    }
    Image::with_maxval(out_w, out_h, image.maxval(), pixels)
}

/// Centered `w×h` window; odd margins leave the extra pixel on the right/bottom.
pub fn center_crop(image: &Image, w: usize, h: usize) -> Result<Image> {
    if w == 0 || h == 0 || w > image.width() || h > image.height() {
        return Err(Error::Geometry(format!(
            "cannot crop {w}x{h} from {}x{}",
            image.width(),
            image.height()
        )));
    }
    let x0 = (image.width() - w) / 2;
    let y0 = (image.height() - h) / 2;
    let mut pixels = Vec::with_capacity(w * h);
    for y in y0..y0 + h {
        let row = y * image.width();
        pixels.extend_from_slice(&image.pixels()[row + x0..row + x0 + w]);
    }
    Image::with_maxval(w, h, image.maxval(), pixels)
}

/// Scale so the shorter side equals `side`, then center-crop to `side×side`.
pub fn fit_square(image: &Image, side: usize) -> Result<Image> {
    if image.width() == side && image.height() == side {
        return Ok(image.clone());
    }
    let (w, h) = (image.width() as f64, image.height() as f64);
    let scale = side as f64 / w.min(h);
    let nw = ((w * scale).round() as usize).max(side);
    let nh = ((h * scale).round() as usize).max(side);
    center_crop(&resize_bilinear(image, nw, nh)?, side, side)
}

/// Dataset-level standardization constants over `pixel / 255`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
    /// Set when the measured deviation was zero and 1 was substituted.
    pub degenerate: bool,
}

impl NormStats {
    pub fn new(mean: f64, std: f64) -> Self {
        if std == 0.0 {
            log::warn!("normalization std is 0; using 1");
            Self {
                mean,
                std: 1.0,
                degenerate: true,
            }
        } else {
            Self {
                mean,
                std,
                degenerate: false,
            }
        }
    }

    /// Population mean and standard deviation over every pixel of `images`.
    pub fn from_images<'a>(images: impl IntoIterator<Item = &'a Image>) -> Result<Self> {
        let images: Vec<&Image> = images.into_iter().collect();
        let n: usize = images.iter().map(|i| i.pixels().len()).sum();
        if n == 0 {
            return Err(Error::Config(
                "cannot compute normalization statistics of no images".into(),
            ));
        }
        // exact integer moments, so a constant set has std exactly 0
        let (sum, sum_sq) = images
            .iter()
            .flat_map(|i| i.pixels())
            .fold((0u128, 0u128), |(s, q), &p| {
                (s + p as u128, q + (p as u128) * (p as u128))
            });
        let n128 = n as u128;
        let mean = sum as f64 / n as f64 / 255.0;
        let var = (n128 * sum_sq - sum * sum) as f64 / (n as f64 * n as f64) / (255.0 * 255.0);
        Ok(Self::new(mean, var.sqrt()))
    }
}

/// `(pixel/255 − μ)/σ` as a `[1, H, W]` tensor.
pub fn normalize<T: Element>(image: &Image, stats: &NormStats) -> Tensor<T> {
    let data = image
        .pixels()
        .iter()
        .map(|&p| T::from_f64((p as f64 / 255.0 - stats.mean) / stats.std))
        .collect();
    Tensor::from_data(&[1, image.height(), image.width()], data).expect("image dims are positive")
}
