//! Instance differences, the mixing baseline, decay curves and lower bounds.

mod bootstrap;
mod curve;
mod estimate;
mod pipeline;

pub use bootstrap::{bootstrap_threshold_bias, BootstrapBiasReport, BootstrapReplicate};
pub use curve::{decay_curve, decay_curve_averaged, export_decaying_instances, DecayCurve, DecayingInstance};
pub use estimate::{
    delta_acc_hat, instance_accuracy, mixing_baseline, DeltaAccEstimate, DeltaValues, EstimateKind,
    InstanceAccuracy, SplitSpec,
};
pub use pipeline::{
    analyze_views, decay_analysis, decay_lower_bound, paired_views, seed_view, DecayAnalysis, SplitPolicy,
    ViewMode,
};
