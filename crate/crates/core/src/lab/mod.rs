//! Hierarchical generative models of seed-noisy predictions with
//! closed-form ground truth, and a Monte Carlo harness around them.

pub mod certify;
mod config;
mod dominance;
mod generate;
pub mod presets;
mod trials;
mod truth;

pub use config::{point_config, FinetuneLaw, GenerativeConfig, InstanceClass, RateLaw};
pub use dominance::{binomial_tenths, convolve, difference, exact_dominance, DominanceCheck};
pub use generate::{generate, generate_with};
pub use trials::{run_trials, summarize, Band, StatSummary, Statistic, TrialSummary, BAND_SE, MIN_TRIALS};
pub use truth::{analytic_truth, AnalyticTruth, ClassTruth, PairTruth, SizeTruth};
