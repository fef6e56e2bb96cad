//! Synthetic RIXS beamline workbench: configuration, pipeline stages and plots.

pub mod commands;
pub mod config;
pub mod plot;

pub use config::{DetectorConfig, PipelineConfig};
