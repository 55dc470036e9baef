//! Instance-level comparison of model sizes from per-seed prediction tensors.
//!
//! The crate is organised around a [`store::PredictionTensor`] of correctness
//! bits or gold-class probabilities indexed by model size, pretraining seed,
//! finetuning seed, checkpoint and instance. Analyses:
//!
//! * [`decay`]: lower bounds on the fraction of instances where the larger
//!   model is worse, with false discoveries controlled by a seed-mixing
//!   baseline.
//! * [`significance`]: per-instance Fisher exact tests plus Benjamini-Hochberg.
//! * [`variance`]: unbiased split of per-instance loss into bias and
//!   pretraining, finetuning and checkpoint variance.
//! * [`correlation`]: bucketed momentum correlation, variance conditioned on
//!   bias, and seed-noise statistics.
//! * [`lab`]: hierarchical generative models with closed-form truth and the
//!   Monte Carlo harness that checks every estimator against it.

pub mod correlation;
pub mod decay;
pub mod error;
pub mod lab;
pub mod par;
pub mod rng;
pub mod significance;
pub mod store;
pub mod variance;

pub use error::{Error, Result};
