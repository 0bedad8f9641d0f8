//! Contrast-limited adaptive histogram equalization.
//!
//! All arithmetic after the clip threshold is integer, so results are exact
//! and independent of evaluation order.

use crate::imagecore::{Depth, ImageBuffer};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClaheParams {
    tiles_x: usize,
    tiles_y: usize,
    clip_limit: f64,
}

impl Default for ClaheParams {
    fn default() -> Self {
        ClaheParams {
            tiles_x: 8,
            tiles_y: 8,
            clip_limit: 2.0,
        }
    }
}

impl ClaheParams {
    /// `clip_limit` is a multiple of the uniform bin height `tile_pixels / 256`.
    pub fn new(tiles_x: usize, tiles_y: usize, clip_limit: f64) -> Result<Self> {
        if tiles_x == 0 || tiles_y == 0 {
            return Err(Error::Validation(format!(
                "tile grid must be at least 1x1, got {tiles_x}x{tiles_y}"
            )));
        }
        if !(clip_limit >= 1.0 && clip_limit.is_finite()) {
            return Err(Error::Validation(format!(
                "clip limit must be a finite value >= 1, got {clip_limit}"
            )));
        }
        Ok(ClaheParams {
            tiles_x,
            tiles_y,
            clip_limit,
        })
    }

    pub fn tiles_x(&self) -> usize {
        self.tiles_x
    }

    pub fn tiles_y(&self) -> usize {
        self.tiles_y
    }

    pub fn clip_limit(&self) -> f64 {
        self.clip_limit
    }
}

/// Tile layout along both axes. The last tile on each axis absorbs the remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileGrid {
    /// `(start, len)` per tile column.
    pub cols: Vec<(usize, usize)>,
    /// `(start, len)` per tile row.
    pub rows: Vec<(usize, usize)>,
}

fn spans(len: usize, tiles: usize) -> Vec<(usize, usize)> {
    let size = len / tiles;
    (0..tiles)
        .map(|i| {
            let start = i * size;
            let end = if i + 1 == tiles { len } else { start + size };
            (start, end - start)
        })
        .collect()
}

impl TileGrid {
    pub fn new(width: usize, height: usize, p: &ClaheParams) -> Result<Self> {
        if width < p.tiles_x || height < p.tiles_y {
            return Err(Error::contract(format!(
                "{}x{} tile grid does not fit a {width}x{height} image",
                p.tiles_x, p.tiles_y
            )));
        }
        Ok(TileGrid {
            cols: spans(width, p.tiles_x),
            rows: spans(height, p.tiles_y),
        })
    }
}

/// Clip threshold in pixel counts for a tile of `tile_pixels` pixels.
pub(crate) fn clip_count(clip_limit: f64, tile_pixels: usize) -> u64 {
    ((clip_limit * tile_pixels as f64 / 256.0).floor() as u64).max(1)
}

/// Clipped, redistributed equalization table for one tile histogram.
///
/// The excess is spread evenly over all 256 bins in a single pass. Bin
/// masses are kept scaled by 256 so the even share stays an integer.
fn tile_lut(hist: &[u64; 256], tile_pixels: u64, clip: u64) -> [u8; 256] {
    let excess: u64 = hist.iter().map(|&h| h.saturating_sub(clip)).sum();
    let total = 256 * tile_pixels;
    let mut lut = [0u8; 256];
    let mut cum = 0u64;
    for (v, &h) in hist.iter().enumerate() {
        cum += 256 * h.min(clip) + excess;
        lut[v] = ((2 * 255 * cum + total) / (2 * total)) as u8;
    }
    lut
}

/// Per-tile lookup tables for one 8-bit plane, row-major over the tile grid.
pub fn tile_lookup_tables(
    plane: &[u8],
    width: usize,
    height: usize,
    p: &ClaheParams,
) -> Result<Vec<[u8; 256]>> {
    if plane.len() != width * height {
        return Err(Error::contract(
            "plane length does not match dimensions".to_string(),
        ));
    }
    let grid = TileGrid::new(width, height, p)?;
    let mut luts = Vec::with_capacity(grid.rows.len() * grid.cols.len());
    for &(y0, th) in &grid.rows {
        for &(x0, tw) in &grid.cols {
            let mut hist = [0u64; 256];
            for y in y0..y0 + th {
                for &v in &plane[y * width + x0..y * width + x0 + tw] {
                    hist[v as usize] += 1;
                }
            }
            let n = tw * th;
            luts.push(tile_lut(&hist, n as u64, clip_count(p.clip_limit, n)));
        }
    }
    Ok(luts)
}

/// Neighbouring tile indices and the rational weight `num / den` of the
/// second one, for every coordinate along an axis.
///
/// Tile centres sit at `start + (len - 1) / 2`; working in doubled
/// coordinates keeps them integral.
fn axis_weights(len: usize, spans: &[(usize, usize)]) -> Vec<(usize, usize, u64, u64)> {
    let centres: Vec<u64> = spans.iter().map(|&(s, l)| (2 * s + l - 1) as u64).collect();
    let last = centres.len() - 1;
    (0..len)
        .map(|i| {
            let pos = 2 * i as u64;
            if pos <= centres[0] {
                (0, 0, 0, 1)
            } else if pos >= centres[last] {
                (last, last, 0, 1)
            } else {
                let t = centres.partition_point(|&c| c <= pos) - 1;
                (t, t + 1, pos - centres[t], centres[t + 1] - centres[t])
            }
        })
        .collect()
}

fn clahe_plane(plane: &[u8], width: usize, height: usize, p: &ClaheParams) -> Result<Vec<u8>> {
    let luts = tile_lookup_tables(plane, width, height, p)?;
    let grid = TileGrid::new(width, height, p)?;
    let tx = grid.cols.len();
    let xw = axis_weights(width, &grid.cols);
    let yw = axis_weights(height, &grid.rows);

    let mut out = vec![0u8; plane.len()];
    for (y, &(ty0, ty1, ny, dy)) in yw.iter().enumerate() {
        for (x, &(tx0, tx1, nx, dx)) in xw.iter().enumerate() {
            let v = plane[y * width + x] as usize;
            let m = |ty: usize, tx_: usize| luts[ty * tx + tx_][v] as u64;
            let top = (dx - nx) * m(ty0, tx0) + nx * m(ty0, tx1);
            let bottom = (dx - nx) * m(ty1, tx0) + nx * m(ty1, tx1);
            let num = (dy - ny) * top + ny * bottom;
            let den = dx * dy;
            out[y * width + x] = ((2 * num + den) / (2 * den)) as u8;
        }
    }
    Ok(out)
}

/// CLAHE on an 8-bit image; colour images are processed per channel.
pub fn clahe(img: &ImageBuffer, p: &ClaheParams) -> Result<ImageBuffer> {
    let data = img
        .as_u8()
        .filter(|_| img.depth() == Depth::Int8)
        .ok_or_else(|| Error::contract("CLAHE needs an 8-bit image".to_string()))?;
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = vec![0u8; data.len()];
    for c in 0..ch {
        let plane: Vec<u8> = data.iter().skip(c).step_by(ch).copied().collect();
        let eq = clahe_plane(&plane, w, h, p)?;
        for (i, v) in eq.into_iter().enumerate() {
            out[i * ch + c] = v;
        }
    }
    ImageBuffer::from_u8(w, h, ch, out)
}
