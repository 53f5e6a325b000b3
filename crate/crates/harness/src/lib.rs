//! Experiment harness for snapshot-assisted TD3: teacher training, snapshot
//! dataset generation, student runs per method variant, sweeps and
//! multi-seed aggregation. Artifacts are plain files: `.td3m` models, `.sds`
//! datasets and CSV curves.

pub mod config;
pub mod curves;
pub mod error;
pub mod experiment;
pub mod files;

pub use config::{ConfigError, ExperimentConfig, Preset, SweepAxis, Variant};
pub use error::HarnessError;
