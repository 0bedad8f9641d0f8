//! Deterministic fundus-image enhancement, augmentation and evaluation.
//!
//! The crate is organised by subsystem:
//!
//! * [`imagecore`] - raster buffers, codecs, green-channel access, resize, flips, normalization
//! * [`enhance`] - Gaussian blur, Ben enhancement, CLAHE and the green-channel compositions
//! * [`pipeline`] - seeded, order-independent batch preprocessing
//! * [`dataset`] - grade manifests and split summaries
//! * [`metrics`] - confusion matrices, macro metrics, one-vs-rest AUC, joint accuracy
//! * [`attnref`] - forward-pass reference for the channel/spatial and cross-task attention blocks and the task losses

pub mod attnref;
pub mod dataset;
pub mod enhance;
mod error;
pub mod imagecore;
pub mod metrics;
pub mod pipeline;

pub use error::{Error, Result};
