//! Fundus enhancement methods: Gaussian blur, Ben enhancement, CLAHE and the
//! green-channel variants built from them.

mod ben;
mod blur;
mod clahe;

pub use ben::{ben_enhance, BenParams, Sigma};
pub use blur::{gaussian_blur, gaussian_kernel};
pub use clahe::{clahe, tile_lookup_tables, ClaheParams, TileGrid};

use crate::imagecore::{extract_green, replicate_to_rgb, ImageBuffer};
use crate::Result;

/// Green plane followed by Ben enhancement, optionally copied back to RGB.
pub fn green_ben(img: &ImageBuffer, p: &BenParams, replicate: bool) -> Result<ImageBuffer> {
    let out = ben_enhance(&extract_green(img)?, p)?;
    if replicate {
        replicate_to_rgb(&out)
    } else {
        Ok(out)
    }
}

/// Green plane followed by CLAHE, optionally copied back to RGB.
pub fn green_clahe(img: &ImageBuffer, p: &ClaheParams, replicate: bool) -> Result<ImageBuffer> {
    let out = clahe(&extract_green(img)?, p)?;
    if replicate {
        replicate_to_rgb(&out)
    } else {
        Ok(out)
    }
}
