//! Teacher training, dataset generation, student runs, sweeps, aggregation.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use s3rl_core::rng::mix_seed;
use s3rl_core::snapshot::{cluster_dataset, generate_dataset, ClusteredDataset, SnapshotDataset};
use s3rl_core::train::{run_training, EvalRecord, RunSpec};
use s3rl_core::wrapper::{S3rlConfig, SnapshotSource};

use crate::config::{ConfigError, ExperimentConfig, SweepAxis};
use crate::curves::{read_curves, summarize, write_curves, write_summary, CurveRow, SummaryRow};
use crate::files::{load_dataset, load_model, save_dataset, save_model};
use crate::HarnessError;

const CLUSTER_STREAM: u64 = 0xc1;

/// Map `f` over `items` on up to `jobs` threads, keeping input order.
pub fn par_map<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect()
}

/// First evaluation step whose success rate reaches `threshold`.
pub fn first_success_step(evals: &[EvalRecord], threshold: f64) -> Option<u64> {
    evals.iter().find(|e| e.success_rate() >= threshold).map(|e| e.global_step)
}

fn eval_rows(label: &str, seed: u64, evals: &[(EvalRecord, f64)]) -> Vec<CurveRow> {
    evals.iter().map(|(e, t)| CurveRow::from_eval(label, seed, e, *t)).collect()
}

#[derive(Debug, Clone)]
pub struct TeacherRun {
    pub seed: u64,
    pub evals: Vec<EvalRecord>,
    pub model_path: PathBuf,
    pub weak_path: PathBuf,
    pub curve_path: PathBuf,
}

impl TeacherRun {
    pub fn final_eval(&self) -> &EvalRecord {
        self.evals.last().expect("at least one evaluation")
    }

    /// Final mean return, then the average over the last quarter of evals.
    fn score(&self) -> (f64, f64) {
        let tail = &self.evals[self.evals.len() - (self.evals.len() / 4).max(1)..];
        let avg = tail.iter().map(EvalRecord::mean_return).sum::<f64>() / tail.len() as f64;
        (self.final_eval().mean_return(), avg)
    }
}

#[derive(Debug, Clone)]
pub struct TeacherSummary {
    pub runs: Vec<TeacherRun>,
    pub best: usize,
    pub best_path: PathBuf,
    pub weak_path: PathBuf,
}

impl TeacherSummary {
    pub fn best_run(&self) -> &TeacherRun {
        &self.runs[self.best]
    }
}

pub fn teacher_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("teachers")
}

fn timed_run(cfg: &ExperimentConfig, spec: &RunSpec) -> Result<(s3rl_core::train::RunOutcome, Vec<(EvalRecord, f64)>), HarnessError> {
    let start = Instant::now();
    let mut timed = Vec::new();
    let out = run_training(spec, |e| {
        let t = if cfg.record_wall_time { start.elapsed().as_secs_f64() } else { 0.0 };
        timed.push((e.clone(), t));
    })?;
    Ok((out, timed))
}

/// Plain TD3 on the bare environment. Writes the final model, the weak
/// checkpoint and the eval curve under `<out_dir>/teachers`.
pub fn train_teacher(cfg: &ExperimentConfig, seed: u64) -> Result<TeacherRun, HarnessError> {
    let weak_step = cfg.weak_checkpoint_step();
    let spec = RunSpec {
        env: cfg.env,
        td3: cfg.td3.clone(),
        wrapper: S3rlConfig::disabled(cfg.default_limit),
        source: None,
        seed,
        eval_interval: cfg.eval_interval,
        eval_episodes: cfg.eval_episodes,
        checkpoints: vec![weak_step],
    };
    let (out, timed) = timed_run(cfg, &spec)?;
    let dir = teacher_dir(cfg);
    let model_path = dir.join(format!("teacher_seed{seed}.td3m"));
    let weak_path = dir.join(format!("teacher_seed{seed}_weak.td3m"));
    let curve_path = dir.join(format!("teacher_seed{seed}.csv"));
    save_model(&model_path, &out.agent.to_model(cfg.env.id()))?;
    save_model(&weak_path, &out.checkpoints[0].1)?;
    write_curves(&curve_path, &eval_rows("teacher", seed, &timed))?;
    Ok(TeacherRun {
        seed,
        evals: out.evals,
        model_path,
        weak_path,
        curve_path,
    })
}

/// Train every teacher seed and copy the best one (and its weak checkpoint)
/// to `best.td3m` / `weak.td3m`.
pub fn train_teachers(cfg: &ExperimentConfig) -> Result<TeacherSummary, HarnessError> {
    if cfg.teacher_seeds.is_empty() {
        return Err(ConfigError::Invalid("teacher_seeds must not be empty".into()).into());
    }
    let runs = par_map(cfg.jobs, &cfg.teacher_seeds, |&s| train_teacher(cfg, s))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.score() > runs[best].score() {
            best = i;
        }
    }
    let dir = teacher_dir(cfg);
    let best_path = dir.join("best.td3m");
    let weak_path = dir.join("weak.td3m");
    std::fs::copy(&runs[best].model_path, &best_path).map_err(HarnessError::io(&best_path))?;
    std::fs::copy(&runs[best].weak_path, &weak_path).map_err(HarnessError::io(&weak_path))?;
    Ok(TeacherSummary {
        runs,
        best,
        best_path,
        weak_path,
    })
}

fn required_teacher(cfg: &ExperimentConfig) -> Result<&Path, HarnessError> {
    cfg.teacher
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid("`teacher` is required".into()).into())
}

/// Teacher rollouts for one run seed.
pub fn generate_for_seed(cfg: &ExperimentConfig, teacher_path: &Path, seed: u64) -> Result<SnapshotDataset, HarnessError> {
    let teacher = load_model(teacher_path)?;
    let teacher_id = teacher_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut env = cfg.env.build();
    Ok(generate_dataset(
        env.as_mut(),
        &teacher,
        &teacher_id,
        cfg.snapshot_episodes,
        cfg.snapshot_interval,
        seed,
        cfg.q_source,
    )?)
}

pub fn dataset_path(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.out_dir.join("datasets").join(format!("{}_seed{seed}.sds", cfg.env.id()))
}

/// Write one dataset per run seed; returns the paths.
pub fn gen_snapshots(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, HarnessError> {
    let teacher = required_teacher(cfg)?;
    let mut paths = Vec::new();
    for &seed in &cfg.seeds {
        let ds = generate_for_seed(cfg, teacher, seed)?;
        let path = dataset_path(cfg, seed);
        save_dataset(&path, &ds)?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct StudentRun {
    pub seed: u64,
    pub evals: Vec<EvalRecord>,
    pub rows: Vec<CurveRow>,
    pub curve_path: PathBuf,
    pub dataset_size: Option<usize>,
    pub clusters: Option<usize>,
    pub snapshot_resets: u64,
    pub env_steps: u64,
}

impl StudentRun {
    pub fn final_return(&self) -> f64 {
        self.evals.last().map_or(f64::NAN, EvalRecord::mean_return)
    }
}

pub fn snapshot_source(cfg: &ExperimentConfig, seed: u64) -> Result<Option<SnapshotSource>, HarnessError> {
    if !cfg.variant.uses_snapshots() || cfg.n_sostp == 0 {
        return Ok(None);
    }
    cfg.require_snapshot_source()?;
    let dataset = match &cfg.dataset {
        Some(p) => load_dataset(p, cfg.env.id())?,
        None => generate_for_seed(cfg, required_teacher(cfg)?, seed)?,
    };
    let clustered = if cfg.wrapper_config().use_sc {
        cluster_dataset(&dataset, cfg.kmeans_k, mix_seed(seed, CLUSTER_STREAM))?
    } else {
        ClusteredDataset::single(dataset.len())
    };
    Ok(Some(SnapshotSource {
        dataset: Arc::new(dataset),
        clustered: Arc::new(clustered),
    }))
}

pub fn student_curve_path(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.out_dir.join("students").join(format!("{}_seed{seed}.csv", cfg.variant))
}

/// One fresh student for `seed` under the configured variant.
pub fn train_student(cfg: &ExperimentConfig, seed: u64) -> Result<StudentRun, HarnessError> {
    cfg.validate()?;
    let source = snapshot_source(cfg, seed)?;
    let dataset_size = source.as_ref().map(|s| s.dataset.len());
    let clusters = source.as_ref().map(|s| s.clustered.k());
    let spec = RunSpec {
        env: cfg.env,
        td3: cfg.td3.clone(),
        wrapper: cfg.wrapper_config(),
        source,
        seed,
        eval_interval: cfg.eval_interval,
        eval_episodes: cfg.eval_episodes,
        checkpoints: Vec::new(),
    };
    let (out, timed) = timed_run(cfg, &spec)?;
    let rows = eval_rows(cfg.variant.name(), seed, &timed);
    let curve_path = student_curve_path(cfg, seed);
    write_curves(&curve_path, &rows)?;
    Ok(StudentRun {
        seed,
        evals: out.evals,
        rows,
        curve_path,
        dataset_size,
        clusters,
        snapshot_resets: out.snapshot_resets,
        env_steps: out.env_steps,
    })
}

pub fn train_students(cfg: &ExperimentConfig) -> Result<Vec<StudentRun>, HarnessError> {
    par_map(cfg.jobs, &cfg.seeds, |&s| train_student(cfg, s)).into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub axis: SweepAxis,
    pub summary_path: PathBuf,
    pub summary: Vec<SummaryRow>,
    pub runs: Vec<(String, Vec<StudentRun>)>,
}

/// Config for one sweep point, writing under `<out_dir>/sweep_<axis>/<value>`.
pub fn sweep_point(cfg: &ExperimentConfig, axis: SweepAxis, value: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut c = cfg.clone();
    let bad = || ConfigError::Value {
        key: axis.name().into(),
        value: value.into(),
    };
    match axis {
        SweepAxis::K => c.kmeans_k = value.parse().map_err(|_| bad())?,
        SweepAxis::T => c.t_truncate = value.parse().map_err(|_| bad())?,
        SweepAxis::TeacherQuality => {
            if cfg.dataset.is_some() {
                return Err(ConfigError::Invalid("teacher_quality sweep needs `teacher`, not `dataset`".into()));
            }
            let dir = teacher_dir(cfg);
            let best = cfg.teacher.clone().unwrap_or_else(|| dir.join("best.td3m"));
            c.teacher = Some(match value {
                "best" => best,
                "weak" => {
                    let stem = best.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    if stem == "best" {
                        best.with_file_name("weak.td3m")
                    } else {
                        best.with_file_name(format!("{stem}_weak.td3m"))
                    }
                }
                _ => return Err(bad()),
            });
        }
    }
    c.out_dir = cfg.out_dir.join(format!("sweep_{}", axis.name())).join(value);
    c.validate()?;
    Ok(c)
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome, HarnessError> {
    let axis = cfg
        .sweep_axis
        .ok_or_else(|| ConfigError::Invalid("`sweep_axis` is required".into()))?;
    if cfg.sweep_values.is_empty() || cfg.sweep_values.iter().any(String::is_empty) {
        return Err(ConfigError::Invalid("`sweep_values` must list at least one value".into()).into());
    }
    let points = cfg
        .sweep_values
        .iter()
        .map(|v| sweep_point(cfg, axis, v).map(|c| (v.clone(), c)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut runs = Vec::new();
    let mut tagged = Vec::new();
    for (value, c) in &points {
        let r = train_students(c)?;
        for run in &r {
            tagged.extend(run.rows.iter().map(|row| (value.clone(), row.clone())));
        }
        runs.push((value.clone(), r));
    }
    let rows: Vec<CurveRow> = tagged
        .iter()
        .map(|(v, r)| CurveRow {
            variant: v.clone(),
            ..r.clone()
        })
        .collect();
    let summary = summarize(&rows, |r| r.variant.clone())?;
    // keep the sweep values in the order given
    let mut ordered = Vec::new();
    for v in &cfg.sweep_values {
        ordered.extend(summary.iter().filter(|s| &s.group == v).cloned());
    }
    let summary_path = cfg.out_dir.join(format!("sweep_{}.csv", axis.name()));
    write_summary(&summary_path, axis.name(), &ordered)?;
    Ok(SweepOutcome {
        axis,
        summary_path,
        summary: ordered,
        runs,
    })
}

/// Read curve CSVs and write per-(variant, step) statistics across seeds.
pub fn aggregate(inputs: &[PathBuf], out: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    if inputs.is_empty() {
        return Err(ConfigError::Invalid("no curve files given".into()).into());
    }
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(read_curves(p)?);
    }
    let summary = summarize(&rows, |r| r.variant.clone())?;
    write_summary(out, "variant", &summary)?;
    Ok(summary)
}
