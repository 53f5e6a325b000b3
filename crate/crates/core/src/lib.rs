//! Snapshot-assisted off-policy training.
//!
//! Building blocks, all `no_std` + `alloc`:
//! - [`env`]: environments with exact save/restore snapshots;
//! - [`nn`] and [`td3`]: small MLPs with manual backprop and a TD3 learner;
//! - [`kmeans`] and [`snapshot`]: teacher snapshot datasets, Q-value status
//!   classification and cluster-balanced sampling;
//! - [`wrapper`]: snapshot-phase resets, trajectory truncation and weaning;
//! - [`train`]: the interaction loop tying them together.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub(crate) mod codec;
pub mod env;
pub mod kmeans;
pub mod nn;
pub mod rng;
pub mod snapshot;
pub mod td3;
pub mod train;
pub mod wrapper;

pub use env::{EnvKind, Environment, Observation, SnapshotBlob, StepOutcome};
pub use rng::SplitMix64;
