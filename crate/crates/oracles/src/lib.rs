#![allow(clippy::needless_range_loop, clippy::len_without_is_empty)]

//! Slow, direct reference computations for the test suites.
//!
//! Nothing here calls into `fundus-core`; every routine works on plain
//! slices so it stays an independent route to the expected values.

pub mod attention;
pub mod image;
pub mod metrics;
