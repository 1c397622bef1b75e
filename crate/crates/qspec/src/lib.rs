//! Command-line driver for `qspec-core`: JSON run configs, a rayon grid
//! driver, CSV/JSON/SVG output and run manifests.

pub mod commands;
pub mod config;
pub mod formats;
pub mod parallel;
pub mod pipeline;
