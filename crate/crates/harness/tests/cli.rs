use std::process::Command;

fn s3rl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_s3rl"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(s3rl().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(s3rl().arg("bogus").output().unwrap().status.code(), Some(1));
    assert_eq!(
        s3rl().args(["train-student", "--variant", "nope"]).output().unwrap().status.code(),
        Some(1)
    );
    let bad = d.join("bad.conf");
    std::fs::write(&bad, "gamma = lots\n").unwrap();
    assert_eq!(
        s3rl().arg("train-student").arg("--config").arg(&bad).output().unwrap().status.code(),
        Some(1)
    );
    assert_eq!(
        s3rl().args(["aggregate", "--out"]).arg(d.join("s.csv")).arg(d.join("missing.csv")).output().unwrap().status.code(),
        Some(2)
    );
    assert_eq!(
        s3rl().args(["gen-snapshots", "--teacher"]).arg(d.join("none.td3m")).arg("--out-dir").arg(d).output().unwrap().status.code(),
        Some(2)
    );
}

#[test]
fn end_to_end_small() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let conf = d.join("run.conf");
    std::fs::write(
        &conf,
        "total_timesteps = 600\nlearning_starts = 100\nn_sostp = 60\neval_interval = 300\n\
         hidden_sizes = 4\nbatch_size = 8\nseeds = 1\nteacher_seeds = 5\n",
    )
    .unwrap();
    let ok = |args: &[&str]| {
        let o = s3rl().args(args).arg("--config").arg(&conf).arg("--out-dir").arg(d).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    ok(&["train-teacher"]);
    let teacher = d.join("teachers/best.td3m");
    assert!(teacher.exists());
    let t = teacher.to_str().unwrap();
    ok(&["gen-snapshots", "--teacher", t]);
    assert!(d.join("datasets/point-mass-sparse_seed1.sds").exists());
    ok(&["train-student", "--variant", "s3rl", "--teacher", t]);
    ok(&["sweep", "--variant", "s3rl", "--teacher", t, "--axis", "K", "--values", "2,6"]);
    assert!(d.join("sweep_K.csv").exists());
    let o = s3rl()
        .arg("aggregate")
        .arg("--out")
        .arg(d.join("sum.csv"))
        .arg(d.join("students/s3rl_seed1.csv"))
        .status()
        .unwrap();
    assert!(o.success());
    let sum = std::fs::read_to_string(d.join("sum.csv")).unwrap();
    assert_eq!(sum.lines().count(), 3);
}
