//! Real-time spectrum sensing over streamed I/Q samples.
//!
//! Samples are cut into FFT-sized chunks, turned into rows of a time-frequency
//! (TF) plot, and every completed plot is searched for energy blocks with a
//! short image-processing pipeline:
//!
//! 1. [`detector::estimate_psd`] / [`detector::smooth_and_floor`] aggregate the plot
//!    along time, estimate the noise floor and prune quiet frequency columns.
//! 2. [`detector::binarize`] applies Otsu's threshold to every retained column.
//! 3. [`detector::consolidate`] closes and opens the binary mask.
//! 4. [`detector::label`] groups 4-connected pixels and reports their extents.
//!
//! [`runtime`] runs the same pipeline under a manager/worker scheduler with a
//! ping-pong buffer and per-plot deadline accounting, [`metrics`] scores boxes
//! against ground truth, and [`baseline`] holds a convolution-search detector
//! used for comparison.

pub mod baseline;
pub mod detector;
pub mod error;
pub mod frontend;
pub mod geometry;
pub mod metrics;
pub mod runtime;
pub mod signals;

pub use crate::error::{Error, Result};
pub use crate::geometry::{BinBox, BoundingBox};
