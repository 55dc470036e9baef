//! Per-instance Fisher exact tests combined by Benjamini-Hochberg.

mod bh;
mod fisher;

pub use bh::{bh_adaptive, bh_lower_bound, default_q_grid, BHResult, HistogramBin, HISTOGRAM_BINS};
pub use fisher::{fisher_one_sided, ln_factorial, ContingencyTable};

use crate::decay::{instance_accuracy, paired_views, ViewMode};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::store::PredictionTensor;

/// Per-instance tables from the chosen seed views.
pub fn instance_tables(tensor: &PredictionTensor, s1: &str, s2: &str, mode: ViewMode) -> Result<Vec<ContingencyTable>> {
    let (v1, v2) = paired_views(tensor, s1, s2, mode)?;
    let (acc1, acc2) = (instance_accuracy(&v1), instance_accuracy(&v2));
    let (c1, c2) = match (acc1.counts, acc2.counts) {
        (Some(c1), Some(c2)) => (c1, c2),
        _ => return Err(Error::RequiresCorrectness("real-valued")),
    };
    let (n1, n2) = (acc1.slices as u64, acc2.slices as u64);
    c1.iter()
        .zip(&c2)
        .map(|(&a, &b)| ContingencyTable::new(a as u64, n1, b as u64, n2))
        .collect()
}

/// Fisher exact test per instance, then adaptive-rate BH over the default grid.
pub fn classical_pipeline(
    tensor: &PredictionTensor,
    s1: &str,
    s2: &str,
    mode: ViewMode,
    exec: Execution,
) -> Result<BHResult> {
    let tables = instance_tables(tensor, s1, s2, mode)?;
    let alphas = par::map_range(exec, tables.len(), |i| fisher_one_sided(tables[i]));
    bh_adaptive(&alphas, &default_q_grid())
}
