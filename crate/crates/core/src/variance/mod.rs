//! Unbiased decomposition of per-instance loss into squared bias and
//! pretraining, finetuning and checkpoint variance.

mod decompose;
mod estimator;
mod tree;

pub use decompose::{
    ckptvar, decompose, decompose_with, finevar, finevar_with, pretvar, pretvar_with, ComponentMeans,
    DecompositionResult, LossKind,
};
pub use estimator::{core_unbiased_variance, LevelSample};
pub use tree::{decompose_tree, Node, RandomnessTree};
