use serde::{Deserialize, Serialize};

use super::{Depth, ImageBuffer, Samples};
use crate::{Error, Result};

/// Pulls the green plane out of an RGB image.
pub fn extract_green(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.channels() != 3 {
        return Err(Error::contract(format!(
            "green extraction needs a 3-channel image, got {} channel(s)",
            img.channels()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let samples = match img.samples() {
        Samples::U8(v) => Samples::U8(v.chunks_exact(3).map(|px| px[1]).collect()),
        Samples::F32(v) => Samples::F32(v.chunks_exact(3).map(|px| px[1]).collect()),
    };
    ImageBuffer::new(w, h, 1, samples)
}

/// Copies a single plane into R, G and B.
pub fn replicate_to_rgb(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.channels() != 1 {
        return Err(Error::contract(format!(
            "replication needs a 1-channel image, got {} channels",
            img.channels()
        )));
    }
    let samples = match img.samples() {
        Samples::U8(v) => Samples::U8(v.iter().flat_map(|&s| [s, s, s]).collect()),
        Samples::F32(v) => Samples::F32(v.iter().flat_map(|&s| [s, s, s]).collect()),
    };
    ImageBuffer::new(img.width(), img.height(), 3, samples)
}

fn reorder(img: &ImageBuffer, src_pixel: impl Fn(usize, usize) -> (usize, usize)) -> ImageBuffer {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    fn gather<T: Copy>(
        v: &[T],
        w: usize,
        h: usize,
        ch: usize,
        src: &dyn Fn(usize, usize) -> (usize, usize),
    ) -> Vec<T> {
        let mut out = Vec::with_capacity(v.len());
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = src(x, y);
                let base = (sy * w + sx) * ch;
                out.extend_from_slice(&v[base..base + ch]);
            }
        }
        out
    }
    let samples = match img.samples() {
        Samples::U8(v) => Samples::U8(gather(v, w, h, ch, &src_pixel)),
        Samples::F32(v) => Samples::F32(gather(v, w, h, ch, &src_pixel)),
    };
    ImageBuffer {
        width: w,
        height: h,
        channels: ch,
        samples,
    }
}

/// Mirrors columns.
pub fn flip_horizontal(img: &ImageBuffer) -> ImageBuffer {
    let w = img.width();
    reorder(img, |x, y| (w - 1 - x, y))
}

/// Mirrors rows.
pub fn flip_vertical(img: &ImageBuffer) -> ImageBuffer {
    let h = img.height();
    reorder(img, |x, y| (x, h - 1 - y))
}

/// Source coordinate and blend weight for one output position under
/// half-pixel-centred sampling.
fn sample_axis(dst: usize, in_len: usize, out_len: usize) -> (usize, usize, f64) {
    let src = ((dst as f64 + 0.5) * in_len as f64 / out_len as f64 - 0.5).max(0.0);
    let i0 = (src.floor() as usize).min(in_len - 1);
    let i1 = (i0 + 1).min(in_len - 1);
    let t = if i0 == in_len - 1 {
        0.0
    } else {
        src - i0 as f64
    };
    (i0, i1, t)
}

/// Bilinear resampling with half-pixel centres (align-corners off).
pub fn resize_bilinear(img: &ImageBuffer, out_w: usize, out_h: usize) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::contract(format!(
            "resize target must be at least 1x1, got {out_w}x{out_h}"
        )));
    }
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let xs: Vec<_> = (0..out_w).map(|x| sample_axis(x, w, out_w)).collect();
    let ys: Vec<_> = (0..out_h).map(|y| sample_axis(y, h, out_h)).collect();

    let planes: Vec<Vec<f64>> = (0..ch)
        .map(|c| {
            let src = img.plane_f64(c);
            let mut out = Vec::with_capacity(out_w * out_h);
            for &(y0, y1, ty) in &ys {
                for &(x0, x1, tx) in &xs {
                    let top = src[y0 * w + x0] * (1.0 - tx) + src[y0 * w + x1] * tx;
                    let bottom = src[y1 * w + x0] * (1.0 - tx) + src[y1 * w + x1] * tx;
                    out.push(top * (1.0 - ty) + bottom * ty);
                }
            }
            out
        })
        .collect();
    ImageBuffer::from_planes(out_w, out_h, img.depth(), &planes)
}

/// Per-channel affine standardization constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormalizationParams {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != std.len() {
            return Err(Error::contract(format!(
                "mean and std must have the same non-zero length, got {} and {}",
                mean.len(),
                std.len()
            )));
        }
        if let Some(s) = std.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::contract(format!(
                "std entries must be positive, got {s}"
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::contract("mean entries must be finite".to_string()));
        }
        Ok(NormalizationParams { mean, std })
    }

    /// ImageNet RGB statistics.
    pub fn imagenet() -> Self {
        NormalizationParams {
            mean: vec![0.485, 0.456, 0.406],
            std: vec![0.229, 0.224, 0.225],
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }
}

impl Default for NormalizationParams {
    fn default() -> Self {
        Self::imagenet()
    }
}

/// `(x - mean_c) / std_c` on unit-scale samples. 8-bit inputs are divided by
/// 255 first. The result is always a float buffer.
pub fn normalize(img: &ImageBuffer, p: &NormalizationParams) -> Result<ImageBuffer> {
    if p.channels() != img.channels() {
        return Err(Error::contract(format!(
            "normalization has {} channel(s) but the image has {}",
            p.channels(),
            img.channels()
        )));
    }
    let ch = img.channels();
    let unit = |s: f64| match img.depth() {
        Depth::Int8 => s / 255.0,
        Depth::Float => s,
    };
    let out: Vec<f32> = match img.samples() {
        Samples::U8(v) => v
            .iter()
            .enumerate()
            .map(|(i, &s)| ((unit(s as f64) - p.mean[i % ch]) / p.std[i % ch]) as f32)
            .collect(),
        Samples::F32(v) => v
            .iter()
            .enumerate()
            .map(|(i, &s)| ((unit(s as f64) - p.mean[i % ch]) / p.std[i % ch]) as f32)
            .collect(),
    };
    ImageBuffer::from_f32(img.width(), img.height(), ch, out)
}
