use alloc::string::String;
use alloc::vec::Vec;

use crate::codec::{Reader, WriteLe};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SNAP";
pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("not a snapshot: bad magic")]
    BadMagic,
    #[error("unsupported snapshot format version {0}")]
    UnsupportedVersion(u32),
    #[error("snapshot is for `{found}`, environment is `{expected}`")]
    EnvMismatch { expected: String, found: String },
    #[error("corrupted snapshot: {0}")]
    Corrupted(&'static str),
}

/// Opaque saved environment.
///
/// On disk: `SNAP`, format version (u32 LE), env id (u32 length + UTF-8),
/// payload (u32 length + bytes). The payload is an [`EnvState`](super::EnvState)
/// encoding and carries the generator state and step counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotBlob {
    pub format_version: u32,
    pub env_id: String,
    pub payload: Vec<u8>,
}

impl SnapshotBlob {
    pub fn new(env_id: &str, payload: Vec<u8>) -> Self {
        Self {
            format_version: SNAPSHOT_FORMAT_VERSION,
            env_id: env_id.into(),
            payload,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.env_id.len() + self.payload.len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.put_u32(self.format_version);
        out.put_str(&self.env_id);
        out.put_bytes(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut r = Reader::new(bytes);
        let truncated = |_| SnapshotError::Corrupted("truncated snapshot");
        if r.take(4).map_err(|_| SnapshotError::BadMagic)? != SNAPSHOT_MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let format_version = r.u32().map_err(truncated)?;
        if format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(SnapshotError::UnsupportedVersion(format_version));
        }
        let env_id = r
            .string()
            .map_err(truncated)?
            .ok_or(SnapshotError::Corrupted("env id is not UTF-8"))?;
        let payload = r.bytes().map_err(truncated)?.to_vec();
        if !r.is_empty() {
            return Err(SnapshotError::Corrupted("trailing bytes after payload"));
        }
        Ok(Self {
            format_version,
            env_id,
            payload,
        })
    }
}
