use std::fs;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageFormat};

use super::{Depth, ImageBuffer};
use crate::{Error, Result};

/// Decodes a PNG, JPEG or BMP file into an 8-bit buffer.
///
/// Sources without color information decode to one channel; everything else
/// decodes to RGB with any alpha channel dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };

    let format = image::guess_format(&bytes).map_err(|e| decode_err(e.to_string()))?;
    if !matches!(
        format,
        ImageFormat::Png | ImageFormat::Jpeg | ImageFormat::Bmp
    ) {
        return Err(decode_err(format!("unsupported format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| decode_err(e.to_string()))?;

    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    if decoded.color().has_color() {
        ImageBuffer::from_u8(width, height, 3, decoded.into_rgb8().into_raw())
    } else {
        ImageBuffer::from_u8(width, height, 1, decoded.into_luma8().into_raw())
    }
}

/// Writes an 8-bit buffer as a lossless PNG.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let data = img.as_u8().ok_or_else(|| {
        Error::contract("float images must be quantized to 8-bit before saving".to_string())
    })?;
    debug_assert_eq!(img.depth(), Depth::Int8);
    let color = if img.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(data, img.width() as u32, img.height() as u32, color)
        .map_err(|e| Error::contract(format!("png encoding failed: {e}")))?;
    Ok(out)
}

const FLOAT_MAGIC: &[u8; 8] = b"FNDSF32\n";

/// Writes a float buffer as raw little-endian `f32`.
///
/// Layout: the 8-byte magic `FNDSF32\n`, then width, height and channels as
/// little-endian `u32`, then the interleaved row-major samples.
pub fn save_float_raw(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let data = img
        .as_f32()
        .ok_or_else(|| Error::contract("raw float output needs a float image".to_string()))?;
    let mut out = Vec::with_capacity(20 + data.len() * 4);
    out.extend_from_slice(FLOAT_MAGIC);
    for d in [img.width(), img.height(), img.channels()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`save_float_raw`].
pub fn load_float_raw(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: &str| Error::Decode {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if bytes.len() < 20 || &bytes[..8] != FLOAT_MAGIC {
        return Err(bad("not a raw float image"));
    }
    let dim =
        |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let (w, h, c) = (dim(0), dim(1), dim(2));
    let body = &bytes[20..];
    if body.len() != w * h * c * 4 {
        return Err(bad("sample count does not match header"));
    }
    let data = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ImageBuffer::from_f32(w, h, c, data)
}
