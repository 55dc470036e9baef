use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing cell: size {size}, pretrain_seed {pretrain_seed}, finetune_seed {finetune_seed}, checkpoint {checkpoint}, instance {instance}")]
    MissingCell {
        size: String,
        pretrain_seed: i64,
        finetune_seed: i64,
        checkpoint: i64,
        instance: String,
    },
    #[error("duplicate cell at line {line}: size {size}, pretrain_seed {pretrain_seed}, finetune_seed {finetune_seed}, checkpoint {checkpoint}, instance {instance}")]
    DuplicateCell {
        line: u64,
        size: String,
        pretrain_seed: i64,
        finetune_seed: i64,
        checkpoint: i64,
        instance: String,
    },
    #[error("value {value} out of range at {location}")]
    ValueOutOfRange { value: f64, location: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown size label {0:?}")]
    UnknownSize(String),
    #[error("instance sets differ ({left} vs {right} instances)")]
    InstanceMismatch { left: usize, right: usize },
    #[error("slice count {0} is odd; the mixing baseline needs an even number of seeds")]
    OddSeedCount(usize),
    #[error("slice counts differ between sizes ({left} vs {right})")]
    SliceCountMismatch { left: usize, right: usize },
    #[error("bad split: {0}")]
    BadSplit(String),
    #[error("threshold grids differ (denominators {observed} and {baseline})")]
    GridMismatch { observed: u64, baseline: u64 },
    #[error("operation requires correctness bits, found {0} values")]
    RequiresCorrectness(&'static str),
    #[error("operation requires probability values, found correctness bits")]
    RequiresProbability,
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("need at least two checkpoints, got {0}")]
    TooFewCheckpoints(usize),
    #[error("need at least two finetuning runs per pretraining seed, got {0}")]
    TooFewFinetuneRuns(usize),
    #[error("need at least two pretraining seeds, got {0}")]
    TooFewPretrainSeeds(usize),
    #[error("need at least two runs at each level, got {0}")]
    TooFewRuns(usize),
    #[error("randomness tree is unbalanced at depth {0}")]
    UnbalancedTree(usize),
    #[error("node at depth {depth} has {children} children, need at least 2")]
    TooFewChildren { depth: usize, children: usize },
    #[error("tree level {requested} out of range (depth {depth})")]
    LevelOutOfRange { requested: usize, depth: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid generative config: {0}")]
    InvalidConfig(String),
    #[error("law has no closed-form moments: {0}")]
    UnsupportedLaw(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
