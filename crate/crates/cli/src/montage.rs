//! Side-by-side comparison strips: the original followed by each method,
//! left to right, with a text label above every tile.

use std::str::FromStr;

use fundus_core::imagecore::{replicate_to_rgb, ImageBuffer};
use fundus_core::{Error, Result};

use crate::glyphs;

/// Gap between tiles, in pixels.
pub const SEPARATOR: usize = 4;
const SEPARATOR_VALUE: u8 = 255;
const STRIP_VALUE: u8 = 0;
const TEXT_VALUE: u8 = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Green,
    Ben,
    Clahe,
    GreenBen,
    GreenClahe,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Green => "green",
            Method::Ben => "ben",
            Method::Clahe => "clahe",
            Method::GreenBen => "greenben",
            Method::GreenClahe => "greenclahe",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Method::Green => "GREEN",
            Method::Ben => "BEN",
            Method::Clahe => "CLAHE",
            Method::GreenBen => "GREENBEN",
            Method::GreenClahe => "GREENCLAHE",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "green" => Method::Green,
            "ben" => Method::Ben,
            "clahe" => Method::Clahe,
            "greenben" => Method::GreenBen,
            "greenclahe" => Method::GreenClahe,
            _ => {
                return Err(Error::Validation(format!(
                    "unknown method '{s}' (expected green, ben, clahe, greenben or greenclahe)"
                )))
            }
        })
    }
}

/// Where things sit in a montage of `tiles` tiles of `w x h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub tile_width: usize,
    pub tile_height: usize,
    pub tiles: usize,
    /// Glyph magnification.
    pub scale: usize,
    /// Height of the label strip above the tiles.
    pub strip: usize,
}

impl Layout {
    pub fn new(tile_width: usize, tile_height: usize, tiles: usize) -> Self {
        let scale = (tile_width / 128).clamp(1, 4);
        Layout {
            tile_width,
            tile_height,
            tiles,
            scale,
            strip: (glyphs::HEIGHT + 4) * scale,
        }
    }

    pub fn width(&self) -> usize {
        self.tiles * self.tile_width + (self.tiles - 1) * SEPARATOR
    }

    pub fn height(&self) -> usize {
        self.strip + self.tile_height
    }

    /// Top-left corner of tile `i`.
    pub fn origin(&self, i: usize) -> (usize, usize) {
        (i * (self.tile_width + SEPARATOR), self.strip)
    }

    /// Copies tile `i` back out of a rendered montage.
    pub fn crop(&self, montage: &ImageBuffer, i: usize) -> Result<ImageBuffer> {
        let src = montage
            .as_u8()
            .ok_or_else(|| Error::Contract("montage must be 8-bit".into()))?;
        let (x0, y0) = self.origin(i);
        let mut out = Vec::with_capacity(self.tile_width * self.tile_height * 3);
        for y in y0..y0 + self.tile_height {
            let row = (y * montage.width() + x0) * 3;
            out.extend_from_slice(&src[row..row + self.tile_width * 3]);
        }
        ImageBuffer::from_u8(self.tile_width, self.tile_height, 3, out)
    }
}

fn to_rgb(img: &ImageBuffer) -> Result<ImageBuffer> {
    match img.channels() {
        1 => replicate_to_rgb(img),
        _ => Ok(img.clone()),
    }
}

fn draw_label(buf: &mut [u8], stride: usize, x0: usize, max_w: usize, l: &Layout, text: &str) {
    let s = l.scale;
    let pad = 2 * s;
    let mut x = x0 + pad;
    for ch in text.chars() {
        if x + glyphs::WIDTH * s > x0 + max_w {
            break;
        }
        let g = glyphs::glyph(ch);
        for (gy, bits) in g.iter().enumerate() {
            for gx in 0..glyphs::WIDTH {
                if bits >> (glyphs::WIDTH - 1 - gx) & 1 == 0 {
                    continue;
                }
                for dy in 0..s {
                    for dx in 0..s {
                        let px = x + gx * s + dx;
                        let py = pad + gy * s + dy;
                        let i = (py * stride + px) * 3;
                        buf[i..i + 3].fill(TEXT_VALUE);
                    }
                }
            }
        }
        x += (glyphs::WIDTH + 1) * s;
    }
}

/// Renders the original followed by `methods` (default parameters) as one
/// RGB image. Single-channel tiles are replicated to RGB.
pub fn build_montage(img: &ImageBuffer, methods: &[Method]) -> Result<ImageBuffer> {
    if methods.is_empty() {
        return Err(Error::Validation(
            "montage needs at least one method".into(),
        ));
    }
    let mut tiles = vec![(to_rgb(img)?, "ORIGINAL")];
    for &m in methods {
        tiles.push((to_rgb(&crate::enhance_default(m, img)?)?, m.label()));
    }
    let l = Layout::new(img.width(), img.height(), tiles.len());
    let (w, h) = (l.width(), l.height());
    let mut buf = vec![SEPARATOR_VALUE; w * h * 3];
    for (i, (tile, label)) in tiles.iter().enumerate() {
        let (x0, y0) = l.origin(i);
        for y in 0..l.strip {
            let row = (y * w + x0) * 3;
            buf[row..row + l.tile_width * 3].fill(STRIP_VALUE);
        }
        draw_label(&mut buf, w, x0, l.tile_width, &l, label);
        let src = tile.as_u8().expect("enhanced tiles are 8-bit");
        for y in 0..l.tile_height {
            let dst = ((y0 + y) * w + x0) * 3;
            let s = y * l.tile_width * 3;
            buf[dst..dst + l.tile_width * 3].copy_from_slice(&src[s..s + l.tile_width * 3]);
        }
    }
    ImageBuffer::from_u8(w, h, 3, buf)
}
