//! File formats, pipeline orchestration and synthetic data for `poi-core`.

pub mod config;
pub mod error;
pub mod geojson;
pub mod pipeline;
pub mod records;
pub mod score;
pub mod synth;

pub use error::{Error, Result};
