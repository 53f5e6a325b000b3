//! Learning-curve CSVs and cross-seed aggregation.
//!
//! Curve schema: `variant,seed,global_step,mean_return,ep0,..,ep{n-1},wall_time`
//! (three episode columns under the default evaluation protocol).

use std::collections::BTreeMap;
use std::path::Path;

use s3rl_core::train::EvalRecord;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub variant: String,
    pub seed: u64,
    pub global_step: u64,
    pub mean_return: f64,
    pub returns: Vec<f64>,
    pub wall_time: f64,
}

impl CurveRow {
    pub fn from_eval(variant: &str, seed: u64, rec: &EvalRecord, wall_time: f64) -> Self {
        Self {
            variant: variant.into(),
            seed,
            global_step: rec.global_step,
            mean_return: rec.mean_return(),
            returns: rec.returns.clone(),
            wall_time,
        }
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.into(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    Ok(())
}

pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let episodes = rows.first().map_or(3, |r| r.returns.len());
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<String> = ["variant", "seed", "global_step", "mean_return"].map(String::from).to_vec();
    header.extend((0..episodes).map(|i| format!("ep{i}")));
    header.push("wall_time".into());
    w.write_record(&header).map_err(csv_err(path))?;
    for r in rows {
        let mut rec = vec![
            r.variant.clone(),
            r.seed.to_string(),
            r.global_step.to_string(),
            r.mean_return.to_string(),
        ];
        rec.extend(r.returns.iter().map(f64::to_string));
        rec.push(r.wall_time.to_string());
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(HarnessError::io(path))
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let bad = |msg: &str| HarnessError::CurveFormat {
        path: path.into(),
        msg: msg.into(),
    };
    let header = r.headers().map_err(csv_err(path))?.clone();
    let n = header.len();
    if n < 5
        || &header[0] != "variant"
        || &header[1] != "seed"
        || &header[2] != "global_step"
        || &header[3] != "mean_return"
        || &header[n - 1] != "wall_time"
        || (4..n - 1).any(|i| header[i] != format!("ep{}", i - 4))
    {
        return Err(bad("unexpected header"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad("non-numeric field"));
        rows.push(CurveRow {
            variant: rec[0].to_string(),
            seed: rec[1].parse().map_err(|_| bad("bad seed"))?,
            global_step: rec[2].parse().map_err(|_| bad("bad global_step"))?,
            mean_return: f(3)?,
            returns: (4..n - 1).map(f).collect::<Result<_, _>>()?,
            wall_time: f(n - 1)?,
        });
    }
    Ok(rows)
}

/// Linear-interpolation quantile of sorted data (`q` in [0, 1]).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if sorted[lo] == sorted[hi] {
        // also keeps infinite entries from turning into NaN
        return sorted[lo];
    }
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile(&s, 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: String,
    pub global_step: u64,
    pub n_seeds: usize,
    pub median: f64,
    pub mean: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Cross-seed statistics of `mean_return` per (group, global_step). Every
/// seed within a group must report the same evaluation steps.
pub fn summarize(rows: &[CurveRow], group_of: impl Fn(&CurveRow) -> String) -> Result<Vec<SummaryRow>, HarnessError> {
    let mut groups: BTreeMap<String, BTreeMap<u64, BTreeMap<u64, f64>>> = BTreeMap::new();
    for r in rows {
        let by_seed = groups.entry(group_of(r)).or_default().entry(r.seed).or_default();
        if by_seed.insert(r.global_step, r.mean_return).is_some() {
            return Err(HarnessError::Misaligned(group_of(r)));
        }
    }
    let mut out = Vec::new();
    for (group, seeds) in groups {
        let mut it = seeds.values();
        let grid: Vec<u64> = it.next().map(|c| c.keys().copied().collect()).unwrap_or_default();
        if it.any(|c| !c.keys().copied().eq(grid.iter().copied())) {
            return Err(HarnessError::Misaligned(group));
        }
        for &step in &grid {
            let mut vals: Vec<f64> = seeds.values().map(|c| c[&step]).collect();
            vals.sort_by(f64::total_cmp);
            out.push(SummaryRow {
                group: group.clone(),
                global_step: step,
                n_seeds: vals.len(),
                median: quantile(&vals, 0.5),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                q25: quantile(&vals, 0.25),
                q75: quantile(&vals, 0.75),
            });
        }
    }
    Ok(out)
}

/// `group_column` names the first column (e.g. `variant`, or a sweep axis).
pub fn write_summary(path: &Path, group_column: &str, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([group_column, "global_step", "n_seeds", "median", "mean", "q25", "q75"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.global_step.to_string(),
            r.n_seeds.to_string(),
            r.median.to_string(),
            r.mean.to_string(),
            r.q25.to_string(),
            r.q75.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(HarnessError::io(path))
}
