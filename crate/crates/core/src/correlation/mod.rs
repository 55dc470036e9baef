//! Momentum of instance differences across three sizes, variance
//! conditioned on bias, and seed-noise summary statistics.

mod gp;
mod momentum;
mod noise;

pub use gp::{
    conditional_variance_curve, fit_gp, hyperparameter_grid, log_marginal_likelihood, regress, unit_grid, Component,
    ConditionalVarianceCurve, GpFit, GpOptions, Hyperparameters, JITTER,
};
pub use momentum::{bucket_of, bucket_of_count, momentum, momentum_from_parts, pearson, MomentumBucket, MomentumTable, BUCKETS};
pub use noise::{disagreement, seed_noise_stats, DisagreementBasis, SeedNoiseStats};
