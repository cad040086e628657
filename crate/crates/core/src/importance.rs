//! Meta-model feature importances.
//!
//! Per replicate, a squared-error boosted regressor is fitted to the
//! T-learner's test-set CATE predictions as a function of the encoded
//! covariates, and its Gini importances are recorded. Column importances
//! are averaged across replicates, then each variable is scored by the mean
//! over its one-hot columns.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{CategoricalSchema, ColumnLayout, Cohort};
use crate::error::{Error, Result};
use crate::evaluation::{percentile_ci, sorted_by_index, EvalConfig};
use crate::gbt::GbtParams;
use crate::replicate::{run_replicates, ReplicateOutcome, ReplicatePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Category-averaged scores; these do not sum to one.
    RawAveraged,
    /// Scores divided by their total.
    Renormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableImportance {
    pub name: String,
    pub score: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Number of one-hot columns the score averages over.
    pub n_columns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub normalization: Normalization,
    pub ci_level: f64,
    pub n_replicates: usize,
    /// Replicates whose meta-regressor contributed importances.
    pub n_valid: usize,
    /// Replicates skipped because the T-learner could not be fitted.
    pub skipped_replicates: usize,
    /// Replicates skipped because the meta-regressor made no split.
    pub skipped_no_split: usize,
    /// Mean normalized importance per encoded column, in layout order.
    pub column_scores: Vec<f64>,
    /// One entry per schema variable, descending by score (ties keep schema
    /// order).
    pub variables: Vec<VariableImportance>,
}

impl ImportanceReport {
    pub fn aggregate(
        schema: &CategoricalSchema,
        ci_level: f64,
        outcomes: &[ReplicateOutcome],
    ) -> Result<Self> {
        let layout = ColumnLayout::from_schema(schema);
        let n_vars = schema.variables().len();
        let mut skipped_replicates = 0;
        let mut skipped_no_split = 0;
        let mut column_sums = alloc::vec![0.0; layout.len()];
        let mut per_variable: Vec<Vec<f64>> = alloc::vec![Vec::new(); n_vars];
        let mut n_valid = 0;
        for outcome in sorted_by_index(outcomes) {
            let Some(data) = outcome.completed() else {
                skipped_replicates += 1;
                continue;
            };
            let Some(imp) = &data.column_importances else {
                if data.meta_without_splits {
                    skipped_no_split += 1;
                }
                continue;
            };
            if imp.len() != layout.len() {
                return Err(Error::DimensionMismatch {
                    expected: layout.len(),
                    found: imp.len(),
                });
            }
            n_valid += 1;
            for (acc, v) in column_sums.iter_mut().zip(imp) {
                *acc += v;
            }
            for (v, scores) in per_variable.iter_mut().enumerate() {
                scores.push(block_mean(imp, layout.variable_columns(v)));
            }
        }
        if n_valid == 0 {
            return Err(Error::NoSplits);
        }
        let column_scores: Vec<f64> = column_sums.iter().map(|s| s / n_valid as f64).collect();
        let mut variables = schema
            .variables()
            .iter()
            .enumerate()
            .map(|(v, var)| {
                let (ci_low, ci_high) = percentile_ci(&per_variable[v], ci_level)?;
                Ok(VariableImportance {
                    name: var.name.clone(),
                    score: block_mean(&column_scores, layout.variable_columns(v)),
                    ci_low,
                    ci_high,
                    n_columns: layout.variable_columns(v).len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // Stable sort keeps schema order among equal scores.
        variables.sort_by(|a, b| b.score.total_cmp(&a.score));
        Ok(Self {
            normalization: Normalization::RawAveraged,
            ci_level,
            n_replicates: outcomes.len(),
            n_valid,
            skipped_replicates,
            skipped_no_split,
            column_scores,
            variables,
        })
    }

    /// Rescales the variable scores (and their intervals) to sum to one.
    pub fn renormalized(&self) -> Self {
        let mut out = self.clone();
        if self.normalization == Normalization::Renormalized {
            return out;
        }
        let total: f64 = self.variables.iter().map(|v| v.score).sum();
        if total > 0.0 {
            for v in &mut out.variables {
                v.score /= total;
                v.ci_low /= total;
                v.ci_high /= total;
            }
        }
        out.normalization = Normalization::Renormalized;
        out
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.score)
    }
}

/// Mean over a variable's columns; a variable without columns scores 0.
fn block_mean(values: &[f64], columns: core::ops::Range<usize>) -> f64 {
    if columns.is_empty() {
        0.0
    } else {
        let n = columns.len() as f64;
        values[columns].iter().sum::<f64>() / n
    }
}

/// Runs the bootstrap loop with the meta-regressor enabled and summarizes the
/// importances.
pub fn compute_meta_importances(
    cohort: &Cohort,
    params: &GbtParams,
    config: &EvalConfig,
) -> Result<ImportanceReport> {
    let plan = ReplicatePlan {
        importance: true,
        ..ReplicatePlan::quantiles_only(params.clone(), config.clone())
    };
    let outcomes = run_replicates(cohort, &plan)?;
    ImportanceReport::aggregate(cohort.schema(), config.ci_level, &outcomes)
}

/// Like [`compute_meta_importances`], but reports how many replicates were
/// skipped instead of failing when none contributes.
pub fn meta_importance_outcomes(
    cohort: &Cohort,
    params: &GbtParams,
    config: &EvalConfig,
) -> Result<Vec<ReplicateOutcome>> {
    let plan = ReplicatePlan {
        importance: true,
        ..ReplicatePlan::quantiles_only(params.clone(), config.clone())
    };
    run_replicates(cohort, &plan)
}
