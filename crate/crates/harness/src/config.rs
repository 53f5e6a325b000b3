//! Experiment configuration: flat `key = value` text with `#` comments.

use std::path::PathBuf;
use std::str::FromStr;

use s3rl_core::env::EnvKind;
use s3rl_core::snapshot::QSource;
use s3rl_core::td3::Td3Config;
use s3rl_core::wrapper::S3rlConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("bad value for `{key}`: `{value}`")]
    Value { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Baseline,
    Snapshot,
    SnapshotSc,
    SnapshotStt,
    S3rl,
    SttOnly,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Baseline,
        Variant::Snapshot,
        Variant::SnapshotSc,
        Variant::SnapshotStt,
        Variant::S3rl,
        Variant::SttOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Snapshot => "snapshot",
            Variant::SnapshotSc => "snapshot_sc",
            Variant::SnapshotStt => "snapshot_stt",
            Variant::S3rl => "s3rl",
            Variant::SttOnly => "stt_only",
        }
    }

    /// `(use_sc, use_stt, use_snapshots)`.
    pub fn flags(self) -> (bool, bool, bool) {
        match self {
            Variant::Baseline => (false, false, false),
            Variant::Snapshot => (false, false, true),
            Variant::SnapshotSc => (true, false, true),
            Variant::SnapshotStt => (false, true, true),
            Variant::S3rl => (true, true, true),
            Variant::SttOnly => (false, true, false),
        }
    }

    pub fn uses_snapshots(self) -> bool {
        self.flags().2
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| ConfigError::Value {
                key: "variant".into(),
                value: s.into(),
            })
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    K,
    T,
    TeacherQuality,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::K => "K",
            SweepAxis::T => "T",
            SweepAxis::TeacherQuality => "teacher_quality",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "K" | "k" => Ok(SweepAxis::K),
            "T" | "t" => Ok(SweepAxis::T),
            "teacher_quality" => Ok(SweepAxis::TeacherQuality),
            _ => Err(ConfigError::Value {
                key: "sweep_axis".into(),
                value: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub variant: Variant,
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub teacher_seeds: Vec<u64>,
    pub td3: Td3Config,
    pub n_sostp: u64,
    pub t_truncate: usize,
    pub default_limit: usize,
    pub kmeans_k: usize,
    pub q_source: QSource,
    /// Teacher model used to generate a fresh dataset per run seed.
    pub teacher: Option<PathBuf>,
    /// Pre-generated dataset shared by every run; overrides `teacher`.
    pub dataset: Option<PathBuf>,
    pub snapshot_episodes: u32,
    pub snapshot_interval: u32,
    pub eval_interval: u64,
    pub eval_episodes: u32,
    /// Fraction of the teacher budget at which the weak checkpoint is kept.
    pub weak_fraction: f64,
    pub record_wall_time: bool,
    pub jobs: usize,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Vec<String>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut c = Self {
            env: EnvKind::PointMass,
            variant: Variant::S3rl,
            preset,
            seeds: vec![1, 2, 3, 4, 5],
            teacher_seeds: vec![101, 102, 103, 104, 105],
            td3: Td3Config::default(),
            n_sostp: 100_000,
            t_truncate: 100,
            default_limit: 200,
            kmeans_k: 6,
            q_source: QSource::MinTwin,
            teacher: None,
            dataset: None,
            snapshot_episodes: 10,
            snapshot_interval: 10,
            eval_interval: 5000,
            eval_episodes: 3,
            weak_fraction: 0.25,
            record_wall_time: false,
            jobs: 1,
            sweep_axis: None,
            sweep_values: Vec::new(),
            out_dir: PathBuf::from("runs"),
        };
        if preset == Preset::Desk {
            c.td3.total_timesteps = 40_000;
            c.td3.learning_starts = 1_000;
            c.td3.hidden_sizes = vec![32, 32];
            c.td3.batch_size = 64;
            c.n_sostp = 4_000;
            c.t_truncate = 25;
            c.default_limit = 200;
            c.eval_interval = 1_000;
        }
        c
    }

    pub fn desk() -> Self {
        Self::preset(Preset::Desk)
    }

    /// Parse config text. `preset` is applied first wherever it appears;
    /// every other key overrides the preset value.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if pairs.iter().any(|(seen, _)| seen == k) {
                return Err(ConfigError::Duplicate(k.into()));
            }
            pairs.push((k.into(), v.into()));
        }
        let preset = match pairs.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.as_str()) {
            None | Some("desk") => Preset::Desk,
            Some("paper") => Preset::Paper,
            Some(other) => {
                return Err(ConfigError::Value {
                    key: "preset".into(),
                    value: other.into(),
                })
            }
        };
        let mut c = Self::preset(preset);
        for (k, v) in &pairs {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::Value {
            key: key.into(),
            value: value.into(),
        };
        fn num<T: FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
            v.parse().map_err(|_| bad())
        }
        fn list<T: FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<Vec<T>, ConfigError> {
            v.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
        }
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "preset" => {}
            "env" => self.env = value.parse().map_err(|_| bad())?,
            "variant" => self.variant = value.parse()?,
            "seeds" => self.seeds = list(value, bad)?,
            "teacher_seeds" => self.teacher_seeds = list(value, bad)?,
            "total_timesteps" => self.td3.total_timesteps = num(value, bad)?,
            "learning_rate" => self.td3.learning_rate = num(value, bad)?,
            "buffer_size" => self.td3.buffer_capacity = num(value, bad)?,
            "gamma" => self.td3.gamma = num(value, bad)?,
            "tau" => self.td3.tau = num(value, bad)?,
            "batch_size" => self.td3.batch_size = num(value, bad)?,
            "policy_noise" => self.td3.policy_noise = num(value, bad)?,
            "exploration_noise" => self.td3.exploration_noise = num(value, bad)?,
            "learning_starts" => self.td3.learning_starts = num(value, bad)?,
            "policy_frequency" => self.td3.policy_frequency = num(value, bad)?,
            "noise_clip" => self.td3.noise_clip = num(value, bad)?,
            "hidden_sizes" => self.td3.hidden_sizes = list(value, bad)?,
            "n_sostp" => self.n_sostp = num(value, bad)?,
            "t_truncate" => self.t_truncate = num(value, bad)?,
            "default_limit" => self.default_limit = num(value, bad)?,
            "kmeans_k" => self.kmeans_k = num(value, bad)?,
            "q_source" => {
                self.q_source = match value {
                    "min" => QSource::MinTwin,
                    "q1" => QSource::FirstCritic,
                    _ => return Err(bad()),
                }
            }
            "teacher" => self.teacher = path(value),
            "dataset" => self.dataset = path(value),
            "snapshot_episodes" => self.snapshot_episodes = num(value, bad)?,
            "snapshot_interval" => self.snapshot_interval = num(value, bad)?,
            "eval_interval" => self.eval_interval = num(value, bad)?,
            "eval_episodes" => self.eval_episodes = num(value, bad)?,
            "weak_fraction" => self.weak_fraction = num(value, bad)?,
            "record_wall_time" => self.record_wall_time = num(value, bad)?,
            "jobs" => self.jobs = num(value, bad)?,
            "sweep_axis" => self.sweep_axis = Some(value.parse()?),
            "sweep_values" => self.sweep_values = value.split(',').map(|s| s.trim().to_string()).collect(),
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn wrapper_config(&self) -> S3rlConfig {
        let (use_sc, use_stt, use_snapshots) = self.variant.flags();
        S3rlConfig {
            n_sostp: self.n_sostp,
            t_truncate: self.t_truncate,
            default_limit: self.default_limit,
            use_sc,
            use_stt,
            use_snapshots,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.into()));
        self.td3.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.wrapper_config()
            .validate(self.td3.total_timesteps)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.seeds.is_empty() {
            return invalid("seeds must not be empty");
        }
        if self.eval_episodes == 0 || self.eval_interval == 0 {
            return invalid("eval_interval and eval_episodes must be at least 1");
        }
        if self.kmeans_k == 0 {
            return invalid("kmeans_k must be at least 1");
        }
        if self.snapshot_episodes == 0 || self.snapshot_interval == 0 {
            return invalid("snapshot_episodes and snapshot_interval must be at least 1");
        }
        if !(self.weak_fraction > 0.0 && self.weak_fraction <= 1.0) {
            return invalid("weak_fraction must lie in (0, 1]");
        }
        if self.jobs == 0 {
            return invalid("jobs must be at least 1");
        }
        if !self.variant.uses_snapshots() && self.dataset.is_some() {
            return Err(ConfigError::Invalid(format!(
                "variant {} does not use snapshots but a dataset is set",
                self.variant
            )));
        }
        Ok(())
    }

    /// Extra check before student training: snapshot variants need a source.
    pub fn require_snapshot_source(&self) -> Result<(), ConfigError> {
        if self.variant.uses_snapshots() && self.n_sostp > 0 && self.dataset.is_none() && self.teacher.is_none() {
            return Err(ConfigError::Invalid(format!(
                "variant {} needs `dataset` or `teacher`",
                self.variant
            )));
        }
        Ok(())
    }

    pub fn weak_checkpoint_step(&self) -> u64 {
        ((self.td3.total_timesteps as f64 * self.weak_fraction).round() as u64).max(1)
    }
}
