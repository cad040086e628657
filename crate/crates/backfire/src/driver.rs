//! Replicate-parallel execution.
//!
//! Every replicate derives its randomness from its own index, so running
//! them on a thread pool gives exactly the outcomes of the sequential loop;
//! the aggregators sort by index before reducing.

use backfire_core::{run_replicate, Cohort, ReplicateOutcome, ReplicatePlan};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Runs all replicates of `plan` on a pool of `threads` workers (default:
/// available parallelism).
pub fn run_replicates_parallel(
    cohort: &Cohort,
    plan: &ReplicatePlan,
    threads: Option<usize>,
) -> Result<Vec<ReplicateOutcome>> {
    plan.validate(cohort)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes = pool.install(|| {
        (0..plan.config.n_replicates)
            .into_par_iter()
            .map(|r| run_replicate(cohort, plan, r))
            .collect::<backfire_core::Result<Vec<_>>>()
    })?;
    Ok(outcomes)
}
