//! One-dimensional k-means: k-means++ seeding, Lloyd iterations, best of
//! several restarts by within-cluster sum of squares.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{mix_seed, SplitMix64};

pub const MAX_ITERATIONS: usize = 200;
pub const DEFAULT_RESTARTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KMeansError {
    #[error("k-means needs at least one value")]
    EmptyInput,
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("k-means input contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index per input value; clusters are numbered by ascending
    /// centroid.
    pub assignments: Vec<usize>,
    pub centroids: Vec<f64>,
    pub sse: f64,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Outcome of one Lloyd run from given initial centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub assignments: Vec<usize>,
    pub centroids: Vec<f64>,
    /// SSE after each assignment step, starting with the initial centroids.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

pub fn count_distinct(values: &[f64]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

fn nearest(centroids: &[f64], v: f64) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centroids.iter().enumerate() {
        let d = (v - c) * (v - c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Squared distance of each value to its cluster's centroid, summed.
pub fn sse(values: &[f64], assignments: &[usize], centroids: &[f64]) -> f64 {
    values
        .iter()
        .zip(assignments)
        .map(|(&v, &a)| (v - centroids[a]) * (v - centroids[a]))
        .sum()
}

/// k-means++ seeding: first centre uniform, then each next centre drawn with
/// probability proportional to squared distance from the chosen ones.
pub fn kmeans_plus_plus<R: Rng + ?Sized>(values: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(values[rng.random_range(0..values.len())]);
    let mut d2: Vec<f64> = values.iter().map(|&v| (v - centroids[0]) * (v - centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let c = values[sample_weighted(&d2, total, rng)];
        centroids.push(c);
        for (d, &v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c) * (v - c));
        }
    }
    centroids
}

/// Index drawn with probability `weights[i] / total`, never a zero weight.
fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut target = rng.random::<f64>() * total;
    let mut pick = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        pick = Some(i);
        if target < w {
            break;
        }
        target -= w;
    }
    pick.expect("positive total implies a candidate")
}

/// Lloyd iterations until the assignment is a fixed point or `max_iter`
/// updates have run. An emptied cluster is re-seeded with the value farthest
/// from its centroid.
pub fn lloyd(values: &[f64], initial: &[f64], max_iter: usize) -> LloydRun {
    let k = initial.len();
    let mut centroids = initial.to_vec();
    let mut assignments: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v).0).collect();
    let mut sse_history = vec![sse(values, &assignments, &centroids)];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &a) in values.iter().zip(&assignments) {
            sums[a] += v;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let (far, _) = values
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| counts[assignments[i]] > 1)
                    .map(|(i, &v)| (i, (v - centroids[assignments[i]]).abs()))
                    .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                if far != usize::MAX {
                    counts[assignments[far]] -= 1;
                    assignments[far] = j;
                    counts[j] = 1;
                    centroids[j] = values[far];
                }
            }
        }
        let next: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v).0).collect();
        let changed = next != assignments;
        assignments = next;
        sse_history.push(sse(values, &assignments, &centroids));
        if !changed {
            break;
        }
    }
    // centroids consistent with the final assignment
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&v, &a) in values.iter().zip(&assignments) {
        sums[a] += v;
        counts[a] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            centroids[j] = sums[j] / counts[j] as f64;
        }
    }
    LloydRun {
        assignments,
        centroids,
        sse_history,
        iterations,
    }
}

/// Hartigan single-point transfers after Lloyd has converged: move a value to
/// another cluster whenever that lowers the SSE once both centroids shift,
/// i.e. when `n_b/(n_b+1) d(x,c_b)^2 < n_a/(n_a-1) d(x,c_a)^2`. Repeats until no
/// transfer helps. Each accepted move strictly lowers the SSE, and the SSE
/// after every pass is appended to `run.sse_history`.
pub fn hartigan_refine(values: &[f64], run: &mut LloydRun, max_passes: usize) {
    let k = run.centroids.len();
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for (&v, &a) in values.iter().zip(&run.assignments) {
        counts[a] += 1;
        sums[a] += v;
    }
    for _ in 0..max_passes {
        let mut moved = false;
        for (i, &x) in values.iter().enumerate() {
            let a = run.assignments[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let ca = sums[a] / na;
            let cost_out = na / (na - 1.0) * (x - ca) * (x - ca);
            let mut best: Option<(usize, f64)> = None;
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let cost_in = if counts[b] == 0 {
                    0.0
                } else {
                    let cb = sums[b] / nb;
                    nb / (nb + 1.0) * (x - cb) * (x - cb)
                };
                if cost_in < cost_out * (1.0 - 1e-12) && best.is_none_or(|(_, c)| cost_in < c) {
                    best = Some((b, cost_in));
                }
            }
            if let Some((b, _)) = best {
                counts[a] -= 1;
                sums[a] -= x;
                counts[b] += 1;
                sums[b] += x;
                run.assignments[i] = b;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        // recompute sums exactly to avoid drift from incremental updates
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (&v, &a) in values.iter().zip(&run.assignments) {
            sums[a] += v;
        }
        for j in 0..k {
            if counts[j] > 0 {
                run.centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        run.sse_history.push(sse(values, &run.assignments, &run.centroids));
    }
}

/// Cluster `values` into `min(k, distinct values)` groups. Deterministic for a
/// fixed `seed`; restart `r` uses its own derived stream.
pub fn kmeans_1d(values: &[f64], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult, KMeansError> {
    if values.is_empty() {
        return Err(KMeansError::EmptyInput);
    }
    if k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(KMeansError::NonFinite);
    }
    let k = k.min(count_distinct(values));
    let mut best: Option<LloydRun> = None;
    let mut best_sse = f64::INFINITY;
    for r in 0..restarts.max(1) {
        let mut rng = SplitMix64::new(mix_seed(seed, r as u64));
        let init = kmeans_plus_plus(values, k, &mut rng);
        let mut run = lloyd(values, &init, MAX_ITERATIONS);
        hartigan_refine(values, &mut run, MAX_ITERATIONS);
        let s = sse(values, &run.assignments, &run.centroids);
        if s < best_sse {
            best_sse = s;
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    Ok(canonicalize(values, run))
}

/// Drop empty clusters and renumber by ascending centroid.
fn canonicalize(values: &[f64], run: LloydRun) -> KMeansResult {
    let k = run.centroids.len();
    let mut used = vec![false; k];
    for &a in &run.assignments {
        used[a] = true;
    }
    let mut order: Vec<usize> = (0..k).filter(|&j| used[j]).collect();
    order.sort_by(|&a, &b| run.centroids[a].total_cmp(&run.centroids[b]));
    let mut remap = vec![usize::MAX; k];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let assignments: Vec<usize> = run.assignments.iter().map(|&a| remap[a]).collect();
    let centroids: Vec<f64> = order.iter().map(|&j| run.centroids[j]).collect();
    let sse = sse(values, &assignments, &centroids);
    KMeansResult {
        assignments,
        centroids,
        sse,
    }
}
