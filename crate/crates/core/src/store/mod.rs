//! Prediction tensors: storage, file formats, and seed-level reductions.

mod csv_io;
mod manifest;
mod tensor;
mod view;

use std::path::Path;

pub use csv_io::{emit_csv, ingest_csv, read_csv, write_csv, CsvSchema};
pub use manifest::{read_manifest, write_manifest, Manifest, ManifestDims};
pub use tensor::{PredictionTensor, SizeBlock, TensorParts, ValueKind};
pub use view::{ensemble_per_pretrain, flatten_runs, CheckpointPolicy, Provenance, SeedView};

use crate::error::Result;

/// Load a tensor from `.json` (manifest) or anything else (CSV).
pub fn load_tensor(path: impl AsRef<Path>) -> Result<PredictionTensor> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => read_manifest(path),
        _ => ingest_csv(path, &CsvSchema::default()),
    }
}
