//! Streaming building-footprint toolkit for very large satellite scenes.
//!
//! The crate turns sparse polygon annotations and per-pixel predictions
//! into building footprints, and evaluates, compares and classifies them:
//!
//! * [`geo`]: geotransforms, `.grid` rasters, GeoJSON, TM projection
//! * [`labels`]: sparse label masks, buffering, road merging, subsampling
//! * [`forest`]: per-pixel RGB random forest
//! * [`footprints`]: median filter, connected components, tracing,
//!   simplification and the streamed polygonizer
//! * [`eval`]: pixel P/R/F1, Recall@k, window counts, R², count adjustment
//! * [`change`]: change grids and adjusted totals
//! * [`quality`]: building features, minimum-area rectangles, boosted trees
//! * [`synth`]: deterministic synthetic scenes
//! * [`pipeline`]: configuration and multi-stage drivers
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; outputs are identical.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod change;
pub mod error;
pub mod eval;
pub mod footprints;
pub mod forest;
pub mod geo;
pub mod labels;
pub mod par;
pub mod pipeline;
pub mod quality;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
