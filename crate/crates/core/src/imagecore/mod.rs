//! Raster buffers and the geometric / photometric primitives every other
//! subsystem builds on.
//!
//! Samples are stored row-major with channels interleaved, so pixel `(x, y)`
//! channel `c` lives at `(y * width + x) * channels + c`.

mod io;
mod ops;

pub use io::{load_float_raw, load_image, save_float_raw, save_image};
pub use ops::{
    extract_green, flip_horizontal, flip_vertical, normalize, replicate_to_rgb, resize_bilinear,
    NormalizationParams,
};

use crate::{Error, Result};

/// Sample depth of an [`ImageBuffer`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Depth {
    /// 8-bit samples in `[0, 255]`.
    Int8,
    /// Finite `f32` samples, nominally in `[0, 1]`.
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Samples {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::U8(v) => v.len(),
            Samples::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rectangular raster with 1 or 3 interleaved channels.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    samples: Samples,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, samples: Samples) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::contract(format!(
                "images carry 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(Error::contract(format!(
                "{width}x{height}x{channels} image needs {expected} samples, got {}",
                samples.len()
            )));
        }
        if let Samples::F32(v) = &samples {
            if let Some(i) = v.iter().position(|s| !s.is_finite()) {
                return Err(Error::contract(format!("non-finite sample at index {i}")));
            }
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn from_u8(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, channels, Samples::U8(data))
    }

    pub fn from_f32(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(width, height, channels, Samples::F32(data))
    }

    /// Constant 8-bit image.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::from_u8(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn depth(&self) -> Depth {
        match self.samples {
            Samples::U8(_) => Depth::Int8,
            Samples::F32(_) => Depth::Float,
        }
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn into_samples(self) -> Samples {
        self.samples
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.samples {
            Samples::U8(v) => Some(v),
            Samples::F32(_) => None,
        }
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.samples {
            Samples::F32(v) => Some(v),
            Samples::U8(_) => None,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    /// Sample at `(x, y, c)` in native units (0..=255 for 8-bit, unit scale for float).
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        let i = self.index(x, y, c);
        match &self.samples {
            Samples::U8(v) => v[i] as f64,
            Samples::F32(v) => v[i] as f64,
        }
    }

    /// Extracts channel `c` as a plane of native-unit `f64` values.
    pub(crate) fn plane_f64(&self, c: usize) -> Vec<f64> {
        let n = self.width * self.height;
        let mut out = Vec::with_capacity(n);
        match &self.samples {
            Samples::U8(v) => {
                out.extend(v.iter().skip(c).step_by(self.channels).map(|&s| s as f64))
            }
            Samples::F32(v) => {
                out.extend(v.iter().skip(c).step_by(self.channels).map(|&s| s as f64))
            }
        }
        out
    }

    /// Reassembles per-channel planes into a buffer of the requested depth,
    /// quantizing (round half away from zero, clamp to `[0, 255]`) for 8-bit.
    pub(crate) fn from_planes(
        width: usize,
        height: usize,
        depth: Depth,
        planes: &[Vec<f64>],
    ) -> Result<Self> {
        let channels = planes.len();
        let n = width * height;
        match depth {
            Depth::Int8 => {
                let mut data = vec![0u8; n * channels];
                for (c, plane) in planes.iter().enumerate() {
                    for (i, &v) in plane.iter().enumerate() {
                        data[i * channels + c] = quantize(v);
                    }
                }
                Self::from_u8(width, height, channels, data)
            }
            Depth::Float => {
                let mut data = vec![0f32; n * channels];
                for (c, plane) in planes.iter().enumerate() {
                    for (i, &v) in plane.iter().enumerate() {
                        data[i * channels + c] = v as f32;
                    }
                }
                Self::from_f32(width, height, channels, data)
            }
        }
    }
}

/// Rounds half away from zero and saturates into the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
