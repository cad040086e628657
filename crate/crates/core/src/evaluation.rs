//! Bootstrap decile-uplift validation.
//!
//! Each replicate resamples a population with replacement, splits it into
//! train and test, fits a T-learner on train, sorts the test rows by
//! predicted CATE into quantiles and measures the observed uplift inside
//! every quantile. Per-quantile uplifts are then summarized across
//! replicates by their mean and an empirical percentile interval.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Cohort;
use crate::error::{Error, Result};
use crate::gbt::GbtParams;
use crate::replicate::{run_replicates, ReplicateOutcome, ReplicatePlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_replicates: usize,
    pub population_size: usize,
    pub train_fraction: f64,
    pub n_quantiles: usize,
    pub ci_level: f64,
    pub master_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_replicates: 1000,
            population_size: 1600,
            train_fraction: 0.8,
            n_quantiles: 10,
            ci_level: 0.95,
            master_seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: alloc::string::String| Err(Error::InvalidParameter(what));
        if self.n_replicates == 0 {
            return bad("n_replicates must be positive".into());
        }
        if self.n_quantiles < 2 {
            return bad(format!("n_quantiles must be at least 2, got {}", self.n_quantiles));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level {} outside (0, 1)", self.ci_level));
        }
        let n_train = self.train_size();
        if n_train == 0 || n_train >= self.population_size {
            return bad(format!(
                "population of {} leaves an empty train or test part",
                self.population_size
            ));
        }
        if self.test_size() < self.n_quantiles {
            return bad(format!(
                "{} test rows cannot fill {} quantiles",
                self.test_size(),
                self.n_quantiles
            ));
        }
        Ok(())
    }

    pub fn train_size(&self) -> usize {
        libm::floor(self.population_size as f64 * self.train_fraction) as usize
    }

    pub fn test_size(&self) -> usize {
        self.population_size - self.train_size()
    }
}

/// Observed treated-minus-control outcome mean over `rows` of `cohort`, or
/// `None` when either arm is absent.
pub fn observed_uplift(cohort: &Cohort, rows: &[usize]) -> Option<f64> {
    let (mut n1, mut s1, mut n0, mut s0) = (0usize, 0usize, 0usize, 0usize);
    for &i in rows {
        let y = usize::from(cohort.outcome()[i]);
        if cohort.treated()[i] {
            n1 += 1;
            s1 += y;
        } else {
            n0 += 1;
            s0 += y;
        }
    }
    (n1 > 0 && n0 > 0).then(|| s1 as f64 / n1 as f64 - s0 as f64 / n0 as f64)
}

/// Quantile index (1-based, 1 = most negative prediction) for every row.
///
/// Rows are ordered by `tau_hat` with ties broken by row index, then cut
/// into `q` contiguous bins whose sizes differ by at most one, larger bins
/// first.
pub fn assign_quantiles(tau_hat: &[f64], q: usize) -> Result<Vec<usize>> {
    if q == 0 {
        return Err(Error::InvalidParameter("number of quantiles must be positive".into()));
    }
    let n = tau_hat.len();
    if n < q {
        return Err(Error::TooFewRows { needed: q, found: n });
    }
    let order = rank_order(tau_hat)?;
    let base = n / q;
    let extra = n % q;
    let mut out = alloc::vec![0; n];
    let mut pos = 0;
    for bin in 0..q {
        let size = base + usize::from(bin < extra);
        for &row in &order[pos..pos + size] {
            out[row] = bin + 1;
        }
        pos += size;
    }
    Ok(out)
}

/// Row indices sorted ascending by value, ties by index.
pub(crate) fn rank_order(values: &[f64]) -> Result<Vec<usize>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("cannot order NaN predictions".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    Ok(order)
}

/// Empirical percentile interval with linear interpolation between order
/// statistics: the `(1 - level) / 2` and `1 - (1 - level) / 2` quantiles.
pub fn percentile_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidParameter(format!("confidence level {level} outside [0, 1)")));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("NaN in percentile samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((interpolate(&sorted, tail), interpolate(&sorted, 1.0 - tail)))
}

fn interpolate(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileUplift {
    /// 1-based; quantile 1 holds the most negative predictions.
    pub quantile: usize,
    /// `None` when no replicate produced a defined uplift for this quantile.
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_valid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileUpliftReport {
    pub ci_level: f64,
    pub n_replicates: usize,
    /// Replicates dropped because a T-learner arm was empty or too small.
    pub skipped_replicates: usize,
    pub quantiles: Vec<QuantileUplift>,
    /// Per quantile, completed replicates whose uplift was undefined there.
    pub skipped_quantiles: Vec<usize>,
}

impl QuantileUpliftReport {
    /// Summarizes replicate outcomes. The result does not depend on the order
    /// of `outcomes`; samples are taken in replicate-index order.
    pub fn aggregate(config: &EvalConfig, outcomes: &[ReplicateOutcome]) -> Result<Self> {
        let ordered = sorted_by_index(outcomes);
        let q = config.n_quantiles;
        let mut samples: Vec<Vec<f64>> = alloc::vec![Vec::new(); q];
        let mut skipped_quantiles = alloc::vec![0; q];
        let mut skipped_replicates = 0;
        for outcome in ordered {
            let Some(done) = outcome.completed() else {
                skipped_replicates += 1;
                continue;
            };
            if done.quantile_uplift.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    found: done.quantile_uplift.len(),
                });
            }
            for (k, u) in done.quantile_uplift.iter().enumerate() {
                match u {
                    Some(v) => samples[k].push(*v),
                    None => skipped_quantiles[k] += 1,
                }
            }
        }
        let quantiles = samples
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let (mean, ci_low, ci_high) = if s.is_empty() {
                    (None, None, None)
                } else {
                    let (lo, hi) = percentile_ci(s, config.ci_level)?;
                    (Some(s.iter().sum::<f64>() / s.len() as f64), Some(lo), Some(hi))
                };
                Ok(QuantileUplift {
                    quantile: k + 1,
                    mean,
                    ci_low,
                    ci_high,
                    n_valid: s.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ci_level: config.ci_level,
            n_replicates: outcomes.len(),
            skipped_replicates,
            quantiles,
            skipped_quantiles,
        })
    }

    pub fn means(&self) -> Vec<Option<f64>> {
        self.quantiles.iter().map(|q| q.mean).collect()
    }
}

pub(crate) fn sorted_by_index(outcomes: &[ReplicateOutcome]) -> Vec<&ReplicateOutcome> {
    let mut ordered: Vec<&ReplicateOutcome> = outcomes.iter().collect();
    ordered.sort_by_key(|o| o.index);
    ordered
}

/// Runs the full protocol sequentially.
pub fn run_quantile_evaluation(
    cohort: &Cohort,
    params: &GbtParams,
    config: &EvalConfig,
) -> Result<QuantileUpliftReport> {
    let plan = ReplicatePlan::quantiles_only(params.clone(), config.clone());
    let outcomes = run_replicates(cohort, &plan)?;
    QuantileUpliftReport::aggregate(config, &outcomes)
}
