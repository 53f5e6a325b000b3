//! Teacher snapshot datasets: generation, Q-value tagging, status
//! classification by 1-D k-means, and cluster-balanced sampling.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::codec::{Reader, WriteLe};
use crate::env::{Environment, SnapshotBlob, SnapshotError};
use crate::kmeans::{kmeans_1d, KMeansError, DEFAULT_RESTARTS};
use crate::rng::mix_seed;
use crate::td3::{critic_input, ModelError, Td3Model};

pub const DATASET_MAGIC: &[u8; 4] = b"SDS1";
pub const DATASET_FORMAT_VERSION: u32 = 1;
/// Stream tag mixed into the generation seed for per-episode reset seeds.
const EPISODE_STREAM: u64 = 0x5eed_e915;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("not a snapshot dataset: bad magic")]
    BadMagic,
    #[error("unsupported dataset format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupted dataset: {0}")]
    Corrupted(&'static str),
    #[error("dataset is for `{found}`, expected `{expected}`")]
    EnvMismatch { expected: String, found: String },
    #[error("dataset is empty")]
    Empty,
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Teacher(#[from] ModelError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error("episodes and interval must both be at least 1")]
    BadGenerationSpec,
}

/// Which teacher critic(s) produce the status value of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QSource {
    /// `min(Q1, Q2)`, the value TD3 itself bootstraps from.
    #[default]
    MinTwin,
    FirstCritic,
}

/// Teacher value of `obs` under its own deterministic action.
pub fn teacher_q(teacher: &Td3Model, obs: &[f64], source: QSource) -> Result<f64, DatasetError> {
    let obs_dim = teacher.actor.input_dim();
    let act_dim = teacher.actor.output_dim();
    if obs.len() != obs_dim {
        return Err(ModelError::Dimensions {
            obs: obs_dim,
            act: act_dim,
        }
        .into());
    }
    let bad = |_| DatasetError::Teacher(ModelError::Dimensions { obs: obs_dim, act: act_dim });
    let action = teacher.actor.forward(obs).map_err(bad)?;
    let mut input = Vec::with_capacity(obs_dim + act_dim);
    critic_input(obs, &action, obs_dim, act_dim, &mut input);
    let q1 = teacher.critics[0].forward(&input).map_err(bad)?[0];
    Ok(match source {
        QSource::FirstCritic => q1,
        QSource::MinTwin => q1.min(teacher.critics[1].forward(&input).map_err(bad)?[0]),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSnapshot {
    pub blob: SnapshotBlob,
    pub q: f64,
    pub episode_index: u32,
    pub step_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationInfo {
    pub seed: u64,
    pub episodes: u32,
    pub interval: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    pub env_id: String,
    pub teacher_id: String,
    pub generation: GenerationInfo,
    pub snapshots: Vec<TaggedSnapshot>,
}

impl SnapshotDataset {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.q).collect()
    }

    /// Layout (little-endian): `SDS1`, version u32, env id, teacher id
    /// (u32 length + UTF-8 each), seed u64, episodes u32, interval u32,
    /// N u32, then N records of q f64, episode u32, step u32 and the encoded
    /// snapshot (u32 length + bytes). Cluster assignments are not stored.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(DATASET_MAGIC);
        out.put_u32(DATASET_FORMAT_VERSION);
        out.put_str(&self.env_id);
        out.put_str(&self.teacher_id);
        out.put_u64(self.generation.seed);
        out.put_u32(self.generation.episodes);
        out.put_u32(self.generation.interval);
        out.put_u32(self.snapshots.len() as u32);
        for s in &self.snapshots {
            out.put_f64(s.q);
            out.put_u32(s.episode_index);
            out.put_u32(s.step_index);
            out.put_bytes(&s.blob.encode());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DatasetError> {
        let mut r = Reader::new(bytes);
        let trunc = |_| DatasetError::Corrupted("truncated dataset");
        if r.take(4).map_err(|_| DatasetError::BadMagic)? != DATASET_MAGIC {
            return Err(DatasetError::BadMagic);
        }
        let version = r.u32().map_err(trunc)?;
        if version != DATASET_FORMAT_VERSION {
            return Err(DatasetError::UnsupportedVersion(version));
        }
        let not_utf8 = DatasetError::Corrupted("identifier is not UTF-8");
        let env_id = r.string().map_err(trunc)?.ok_or(not_utf8.clone())?;
        let teacher_id = r.string().map_err(trunc)?.ok_or(not_utf8)?;
        let generation = GenerationInfo {
            seed: r.u64().map_err(trunc)?,
            episodes: r.u32().map_err(trunc)?,
            interval: r.u32().map_err(trunc)?,
        };
        let n = r.u32().map_err(trunc)? as usize;
        if n == 0 {
            return Err(DatasetError::Empty);
        }
        // every record is at least 20 bytes
        if r.remaining() < n.saturating_mul(20) {
            return Err(DatasetError::Corrupted("truncated dataset"));
        }
        let mut snapshots = Vec::with_capacity(n);
        for _ in 0..n {
            let q = r.f64().map_err(trunc)?;
            let episode_index = r.u32().map_err(trunc)?;
            let step_index = r.u32().map_err(trunc)?;
            let blob = SnapshotBlob::decode(r.bytes().map_err(trunc)?)?;
            if !q.is_finite() {
                return Err(DatasetError::Corrupted("non-finite q value"));
            }
            if blob.env_id != env_id {
                return Err(DatasetError::EnvMismatch {
                    expected: env_id,
                    found: blob.env_id,
                });
            }
            snapshots.push(TaggedSnapshot {
                blob,
                q,
                episode_index,
                step_index,
            });
        }
        if !r.is_empty() {
            return Err(DatasetError::Corrupted("trailing bytes after records"));
        }
        Ok(Self {
            env_id,
            teacher_id,
            generation,
            snapshots,
        })
    }

    /// Decode and require a specific environment.
    pub fn decode_for(bytes: &[u8], env_id: &str) -> Result<Self, DatasetError> {
        let ds = Self::decode(bytes)?;
        if ds.env_id != env_id {
            return Err(DatasetError::EnvMismatch {
                expected: env_id.into(),
                found: ds.env_id,
            });
        }
        Ok(ds)
    }
}

/// Roll the deterministic teacher for `episodes` episodes (each capped at the
/// environment's default time limit) and keep a tagged snapshot of the
/// pre-step state whenever `step_index % interval == 0`, starting at step 0.
pub fn generate_dataset(
    env: &mut dyn Environment,
    teacher: &Td3Model,
    teacher_id: &str,
    episodes: u32,
    interval: u32,
    seed: u64,
    source: QSource,
) -> Result<SnapshotDataset, DatasetError> {
    if episodes == 0 || interval == 0 {
        return Err(DatasetError::BadGenerationSpec);
    }
    teacher.check_env(env.id(), env.obs_dim(), env.action_dim())?;
    let limit = env.default_time_limit();
    let mut snapshots = Vec::new();
    for ep in 0..episodes {
        let mut obs = env.reset(mix_seed(seed ^ EPISODE_STREAM, ep as u64));
        for step in 0..limit {
            if step as u32 % interval == 0 {
                snapshots.push(TaggedSnapshot {
                    blob: env.save_snapshot(),
                    q: teacher_q(teacher, obs.as_slice(), source)?,
                    episode_index: ep,
                    step_index: step as u32,
                });
            }
            let action = teacher
                .actor
                .forward(obs.as_slice())
                .map_err(|_| ModelError::Dimensions { obs: env.obs_dim(), act: env.action_dim() })?;
            let out = env.step(&action).expect("teacher actions are finite and sized");
            obs = out.observation;
            if out.terminated {
                break;
            }
        }
    }
    Ok(SnapshotDataset {
        env_id: env.id().into(),
        teacher_id: teacher_id.into(),
        generation: GenerationInfo {
            seed,
            episodes,
            interval,
        },
        snapshots,
    })
}

/// Partition of dataset indices into nonempty clusters by teacher value.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredDataset {
    pub clusters: Vec<Vec<usize>>,
    /// Cluster mean q, ascending.
    pub centroids: Vec<f64>,
}

impl ClusteredDataset {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    /// Disjoint, exhaustive over `0..n`, every cluster nonempty.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for c in &self.clusters {
            if c.is_empty() {
                return false;
            }
            for &i in c {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Single cluster holding every snapshot.
    pub fn single(n: usize) -> Self {
        Self {
            clusters: vec![(0..n).collect()],
            centroids: vec![0.0],
        }
    }
}

/// Status classification: 1-D k-means on the q tags. `k` shrinks to the
/// number of distinct q values.
pub fn cluster_dataset(dataset: &SnapshotDataset, k: usize, seed: u64) -> Result<ClusteredDataset, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let q = dataset.q_values();
    let km = kmeans_1d(&q, k, DEFAULT_RESTARTS, seed)?;
    let mut clusters = vec![Vec::new(); km.k()];
    for (i, &a) in km.assignments.iter().enumerate() {
        clusters[a].push(i);
    }
    Ok(ClusteredDataset {
        clusters,
        centroids: km.centroids,
    })
}

/// Cluster uniformly among K, then member uniformly within it; snapshot `s`
/// in cluster `i` is drawn with probability `1 / (K * n_i)`.
pub fn sample_index<R: Rng + ?Sized>(clustered: &ClusteredDataset, rng: &mut R) -> usize {
    let c = &clustered.clusters[rng.random_range(0..clustered.k())];
    c[rng.random_range(0..c.len())]
}

pub fn sample_snapshot<'d, R: Rng + ?Sized>(
    clustered: &ClusteredDataset,
    dataset: &'d SnapshotDataset,
    rng: &mut R,
) -> &'d TaggedSnapshot {
    &dataset.snapshots[sample_index(clustered, rng)]
}
