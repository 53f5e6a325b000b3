use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use s3rl::experiment::{aggregate, first_success_step, gen_snapshots, sweep, train_students, train_teachers};
use s3rl::{ExperimentConfig, HarnessError, Variant};

#[derive(Parser)]
#[command(name = "s3rl", version, about = "Snapshot-assisted TD3 experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; the desk preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Teacher model path.
    #[arg(long)]
    teacher: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train teachers on the bare environment and keep the best.
    TrainTeacher(Common),
    /// Roll out a teacher and write one snapshot dataset per seed.
    GenSnapshots(Common),
    /// Train students for the configured variant and seeds.
    TrainStudent(Common),
    /// Sweep K, T or teacher quality (`sweep_axis`, `sweep_values`).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values.
        #[arg(long)]
        values: Option<String>,
    },
    /// Median, mean and IQR across seeds from curve CSVs.
    Aggregate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "summary.csv")]
        out: PathBuf,
        #[arg(required = true)]
        curves: Vec<PathBuf>,
    },
}

fn load(common: &Common, teacher_run: bool) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(HarnessError::io(p))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::desk(),
    };
    if let Some(s) = common.seed {
        if teacher_run {
            cfg.teacher_seeds = vec![s];
        } else {
            cfg.seeds = vec![s];
        }
    }
    if let Some(v) = &common.variant {
        cfg.variant = v.parse::<Variant>()?;
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(t) = &common.teacher {
        cfg.teacher = Some(t.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::TrainTeacher(c) => {
            let cfg = load(&c, true)?;
            let summary = train_teachers(&cfg)?;
            for r in &summary.runs {
                let last = r.final_eval();
                println!(
                    "teacher seed {}: final return {:.3}, success {}/{}",
                    r.seed,
                    last.mean_return(),
                    last.successes,
                    last.returns.len()
                );
            }
            println!("best: seed {} -> {}", summary.best_run().seed, summary.best_path.display());
        }
        Command::GenSnapshots(c) => {
            let cfg = load(&c, false)?;
            for p in gen_snapshots(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::TrainStudent(c) => {
            let cfg = load(&c, false)?;
            cfg.require_snapshot_source()?;
            for r in train_students(&cfg)? {
                let first = first_success_step(&r.evals, 2.0 / 3.0).map_or("never".to_string(), |s| s.to_string());
                println!(
                    "{} seed {}: final return {:.3}, first success at {}, curve {}",
                    cfg.variant,
                    r.seed,
                    r.final_return(),
                    first,
                    r.curve_path.display()
                );
            }
        }
        Command::Sweep { common, axis, values } => {
            let mut cfg = load(&common, false)?;
            if let Some(a) = axis {
                cfg.sweep_axis = Some(a.parse()?);
            }
            if let Some(v) = values {
                cfg.set("sweep_values", &v)?;
            }
            let out = sweep(&cfg)?;
            println!("{}", out.summary_path.display());
        }
        Command::Aggregate { common, out, curves } => {
            if common.config.is_some() {
                load(&common, false)?;
            }
            let rows = aggregate(&curves, &out)?;
            println!("{} rows -> {}", rows.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

