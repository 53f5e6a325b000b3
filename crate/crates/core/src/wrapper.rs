//! Training-time environment wrapper: snapshot-loaded resets during the
//! snapshot phase, student trajectory truncation, then plain resets.

use alloc::boxed::Box;
use alloc::sync::Arc;

use rand::Rng;

use crate::env::{EnvError, Environment, Observation, SnapshotError};
use crate::snapshot::{sample_index, ClusteredDataset, SnapshotDataset};

/// `global_step < n_sostp`.
pub fn in_snapshot_phase(global_step: u64, n_sostp: u64) -> bool {
    global_step < n_sostp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct S3rlConfig {
    pub n_sostp: u64,
    pub t_truncate: usize,
    pub default_limit: usize,
    pub use_sc: bool,
    pub use_stt: bool,
    pub use_snapshots: bool,
}

impl S3rlConfig {
    /// Plain time-limited environment.
    pub fn disabled(default_limit: usize) -> Self {
        Self {
            n_sostp: 0,
            t_truncate: default_limit,
            default_limit,
            use_sc: false,
            use_stt: false,
            use_snapshots: false,
        }
    }

    pub fn validate(&self, total_timesteps: u64) -> Result<(), WrapperError> {
        if self.default_limit == 0 {
            return Err(WrapperError::Config("default_limit must be at least 1"));
        }
        if self.t_truncate == 0 || self.t_truncate > self.default_limit {
            return Err(WrapperError::Config("t_truncate must lie in 1..=default_limit"));
        }
        if self.n_sostp > total_timesteps {
            return Err(WrapperError::Config("n_sostp exceeds the total timestep budget"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WrapperError {
    #[error("invalid wrapper config: {0}")]
    Config(&'static str),
    #[error("snapshot phase requires a dataset")]
    MissingDataset,
    #[error("episode is over; reset before stepping")]
    EpisodeOver,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

/// Shared read-only snapshot collection for one or more runs.
#[derive(Debug, Clone)]
pub struct SnapshotSource {
    pub dataset: Arc<SnapshotDataset>,
    pub clustered: Arc<ClusteredDataset>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrappedStep {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

pub struct S3rlWrapper {
    env: Box<dyn Environment>,
    config: S3rlConfig,
    source: Option<SnapshotSource>,
    episode_step: usize,
    global_step: u64,
    limit: usize,
    live: bool,
    last_snapshot: Option<usize>,
}

impl S3rlWrapper {
    pub fn new(
        env: Box<dyn Environment>,
        config: S3rlConfig,
        source: Option<SnapshotSource>,
    ) -> Result<Self, WrapperError> {
        if config.use_snapshots && config.n_sostp > 0 && source.is_none() {
            return Err(WrapperError::MissingDataset);
        }
        if let Some(src) = &source {
            if src.dataset.env_id != env.id() {
                return Err(SnapshotError::EnvMismatch {
                    expected: env.id().into(),
                    found: src.dataset.env_id.clone(),
                }
                .into());
            }
        }
        Ok(Self {
            env,
            config,
            source,
            episode_step: 0,
            global_step: 0,
            limit: config.default_limit,
            live: false,
            last_snapshot: None,
        })
    }

    pub fn config(&self) -> &S3rlConfig {
        &self.config
    }

    pub fn env(&self) -> &dyn Environment {
        self.env.as_ref()
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn episode_step(&self) -> usize {
        self.episode_step
    }

    /// Step cap of the current episode, fixed when it started.
    pub fn episode_limit(&self) -> usize {
        self.limit
    }

    pub fn in_phase(&self) -> bool {
        in_snapshot_phase(self.global_step, self.config.n_sostp)
    }

    /// Dataset index loaded by the most recent reset, if any.
    pub fn last_snapshot(&self) -> Option<usize> {
        self.last_snapshot
    }

    /// Ordinary seeded reset, followed in the snapshot phase by loading a
    /// snapshot drawn from `rng` (cluster-balanced with SC, uniform without).
    /// The reset always runs first, so the env's own RNG consumption does not
    /// depend on the phase.
    pub fn reset<R: Rng + ?Sized>(&mut self, seed: u64, rng: &mut R) -> Result<Observation, WrapperError> {
        let mut obs = self.env.reset(seed);
        let phase = self.in_phase();
        self.last_snapshot = None;
        if self.config.use_snapshots && phase {
            let src = self.source.as_ref().ok_or(WrapperError::MissingDataset)?;
            let idx = if self.config.use_sc {
                sample_index(&src.clustered, rng)
            } else {
                rng.random_range(0..src.dataset.len())
            };
            self.env.load_snapshot(&src.dataset.snapshots[idx].blob)?;
            obs = self.env.observation();
            self.last_snapshot = Some(idx);
        }
        self.limit = if self.config.use_stt && phase {
            self.config.t_truncate
        } else {
            self.config.default_limit
        };
        self.episode_step = 0;
        self.live = true;
        Ok(obs)
    }

    pub fn step(&mut self, action: &[f64]) -> Result<WrappedStep, WrapperError> {
        if !self.live {
            return Err(WrapperError::EpisodeOver);
        }
        let out = self.env.step(action)?;
        self.episode_step += 1;
        self.global_step += 1;
        let truncated = !out.terminated && self.episode_step >= self.limit;
        self.live = !(out.terminated || truncated);
        Ok(WrappedStep {
            observation: out.observation,
            reward: out.reward,
            terminated: out.terminated,
            truncated,
        })
    }
}
