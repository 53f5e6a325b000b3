use s3rl::curves::read_curves;
use s3rl::experiment::{
    aggregate, gen_snapshots, snapshot_source, sweep, sweep_point, train_student, train_teachers,
};
use s3rl::{ExperimentConfig, SweepAxis, Variant};
use s3rl_core::train::{run_training, RunSpec};
use s3rl_core::wrapper::S3rlConfig;

fn tiny(out: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.td3.total_timesteps = 1200;
    c.td3.learning_starts = 200;
    c.td3.batch_size = 16;
    c.td3.hidden_sizes = vec![8, 8];
    c.n_sostp = 120;
    c.eval_interval = 300;
    c.seeds = vec![1, 2];
    c.teacher_seeds = vec![7, 8];
    c.out_dir = out.to_path_buf();
    c
}

#[test]
fn baseline_equals_plain_td3() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.variant = Variant::Baseline;
    let run = train_student(&c, 4).unwrap();
    let plain = run_training(
        &RunSpec {
            env: c.env,
            td3: c.td3.clone(),
            wrapper: S3rlConfig::disabled(c.default_limit),
            source: None,
            seed: 4,
            eval_interval: c.eval_interval,
            eval_episodes: c.eval_episodes,
            checkpoints: vec![],
        },
        |_| {},
    )
    .unwrap();
    assert_eq!(run.evals, plain.evals);
}

#[test]
fn eval_rows_follow_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.variant = Variant::SttOnly;
    let run = train_student(&c, 1).unwrap();
    let steps: Vec<u64> = read_curves(&run.curve_path).unwrap().iter().map(|r| r.global_step).collect();
    assert_eq!(steps, vec![300, 600, 900, 1200]);
    assert_eq!(run.env_steps, c.td3.total_timesteps);
    let text = std::fs::read_to_string(&run.curve_path).unwrap();
    assert!(text.starts_with("variant,seed,global_step,mean_return,ep0,ep1,ep2,wall_time\n"));
}

#[test]
fn desk_phase_is_first_tenth() {
    let c = ExperimentConfig::desk();
    assert_eq!(c.n_sostp as f64 / c.td3.total_timesteps as f64, 0.1);
}

#[test]
fn teacher_to_student_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    let teachers = train_teachers(&c).unwrap();
    assert_eq!(teachers.runs.len(), 2);
    assert!(teachers.best_path.exists() && teachers.weak_path.exists());
    for r in &teachers.runs {
        assert!(r.model_path.exists() && r.weak_path.exists() && r.curve_path.exists());
    }
    c.teacher = Some(teachers.best_path.clone());
    let paths = gen_snapshots(&c).unwrap();
    assert_eq!(paths.len(), 2);

    c.variant = Variant::S3rl;
    let src = snapshot_source(&c, 1).unwrap().unwrap();
    assert!(src.clustered.k() <= c.kmeans_k && src.clustered.is_partition_of(src.dataset.len()));
    let run = train_student(&c, 1).unwrap();
    assert!(run.snapshot_resets > 0);

    // a saved dataset gives the same run as generating it in place
    let mut from_file = c.clone();
    from_file.dataset = Some(paths[0].clone());
    from_file.out_dir = dir.path().join("from_file");
    assert_eq!(train_student(&from_file, 1).unwrap().evals, run.evals);

    let out = dir.path().join("summary.csv");
    let curves: Vec<_> = [&run.curve_path].into_iter().cloned().collect();
    let rows = aggregate(&curves, &out).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn sweep_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    assert!(sweep(&c).is_err());
    c.sweep_axis = Some(SweepAxis::K);
    assert!(sweep(&c).is_err());
    assert!(sweep_point(&c, SweepAxis::T, "500").is_err());
    assert!(sweep_point(&c, SweepAxis::TeacherQuality, "medium").is_err());
    let p = sweep_point(&c, SweepAxis::TeacherQuality, "weak").unwrap();
    assert!(p.teacher.unwrap().ends_with("teachers/weak.td3m"));
}

#[test]
fn single_value_single_seed_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.variant = Variant::SttOnly;
    c.seeds = vec![3];
    c.sweep_axis = Some(SweepAxis::T);
    c.sweep_values = vec!["50".into()];
    let out = sweep(&c).unwrap();
    assert_eq!(out.runs.len(), 1);
    assert_eq!(out.runs[0].1.len(), 1);
    let text = std::fs::read_to_string(&out.summary_path).unwrap();
    assert!(text.starts_with("T,global_step,n_seeds,median,mean,q25,q75\n"));
    assert_eq!(text.lines().count(), 5);
}
