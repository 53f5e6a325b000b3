//! Model and dataset files.

use std::fs;
use std::path::Path;

use s3rl_core::snapshot::SnapshotDataset;
use s3rl_core::td3::Td3Model;

use crate::HarnessError;

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    fs::write(path, bytes).map_err(HarnessError::io(path))
}

pub fn save_model(path: &Path, model: &Td3Model) -> Result<(), HarnessError> {
    write_bytes(path, &model.encode())
}

pub fn load_model(path: &Path) -> Result<Td3Model, HarnessError> {
    let bytes = fs::read(path).map_err(HarnessError::io(path))?;
    Td3Model::decode(&bytes).map_err(|source| HarnessError::Model {
        path: path.into(),
        source,
    })
}

pub fn save_dataset(path: &Path, dataset: &SnapshotDataset) -> Result<(), HarnessError> {
    write_bytes(path, &dataset.encode())
}

pub fn load_dataset(path: &Path, env_id: &str) -> Result<SnapshotDataset, HarnessError> {
    let bytes = fs::read(path).map_err(HarnessError::io(path))?;
    SnapshotDataset::decode_for(&bytes, env_id).map_err(|source| HarnessError::Dataset {
        path: path.into(),
        source,
    })
}
