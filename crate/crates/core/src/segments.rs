//! Extreme-segment profiling, per-category observed CATEs and threshold
//! targeting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{CategoricalSchema, Cohort};
use crate::error::{Error, Result};
use crate::evaluation::{observed_uplift, rank_order, sorted_by_index};
use crate::replicate::ReplicateOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    MostNegative,
    MostPositive,
}

impl SegmentKind {
    pub fn label(self) -> &'static str {
        match self {
            SegmentKind::MostNegative => "most-negative",
            SegmentKind::MostPositive => "most-positive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentProfile {
    pub segment: SegmentKind,
    pub variable: String,
    pub categories: Vec<String>,
    /// Share of each category within the segment; sums to 1.
    pub proportions: Vec<f64>,
    /// Rows in the segment (per replicate when averaged over a bootstrap).
    pub n_rows: usize,
    /// Number of replicates averaged; 1 for a direct computation.
    pub n_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCate {
    pub category: String,
    pub uplift: Option<f64>,
    pub n_treated: usize,
    pub n_control: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCateTable {
    pub variable: String,
    pub entries: Vec<GroupCate>,
}

/// `floor(n * fraction)`, rejecting fractions outside `(0, 0.5]` and empty
/// segments.
pub fn segment_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "segment fraction {fraction} outside (0, 0.5]"
        )));
    }
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    let k = libm::floor(n as f64 * fraction) as usize;
    if k == 0 {
        return Err(Error::InvalidParameter(format!(
            "segment fraction {fraction} selects no rows out of {n}"
        )));
    }
    Ok(k)
}

/// Row indices of the `floor(n * fraction)` smallest and largest
/// predictions, ties broken by row index. Both sets are returned in
/// ascending row order.
pub fn extreme_deciles(tau_hat: &[f64], fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = tau_hat.len();
    let k = segment_size(n, fraction)?;
    let order = rank_order(tau_hat)?;
    let mut bottom = order[..k].to_vec();
    let mut top = order[n - k..].to_vec();
    bottom.sort_unstable();
    top.sort_unstable();
    Ok((bottom, top))
}

/// Category shares of variable `variable` (schema index) among `rows`.
pub fn category_proportions(cohort: &Cohort, rows: &[usize], variable: usize) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("empty segment".into()));
    }
    let k = cohort.schema().variables()[variable].categories.len();
    let mut counts = alloc::vec![0usize; k];
    for &i in rows {
        counts[cohort.category(i, variable)] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / rows.len() as f64)
        .collect())
}

pub fn segment_profile(
    cohort: &Cohort,
    rows: &[usize],
    variable: &str,
    segment: SegmentKind,
) -> Result<SegmentProfile> {
    let v = cohort.schema().require_variable(variable)?;
    Ok(SegmentProfile {
        segment,
        variable: variable.into(),
        categories: cohort.schema().variables()[v].categories.clone(),
        proportions: category_proportions(cohort, rows, v)?,
        n_rows: rows.len(),
        n_replicates: 1,
    })
}

/// Observed uplift of every category of `variable` over the whole cohort.
pub fn group_cate_table(cohort: &Cohort, variable: &str) -> Result<GroupCateTable> {
    let v = cohort.schema().require_variable(variable)?;
    let categories = &cohort.schema().variables()[v].categories;
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); categories.len()];
    for i in 0..cohort.len() {
        members[cohort.category(i, v)].push(i);
    }
    let entries = categories
        .iter()
        .zip(&members)
        .map(|(cat, rows)| {
            let n_treated = rows.iter().filter(|&&i| cohort.treated()[i]).count();
            GroupCate {
                category: cat.clone(),
                uplift: observed_uplift(cohort, rows),
                n_treated,
                n_control: rows.len() - n_treated,
            }
        })
        .collect();
    Ok(GroupCateTable {
        variable: variable.into(),
        entries,
    })
}

/// Rows predicted to respond above `threshold`; `threshold = 0` avoids
/// every predicted backfire.
pub fn targeting_policy(tau_hat: &[f64], threshold: f64) -> Vec<usize> {
    tau_hat
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Averages the per-replicate extreme-segment proportions of the profiled
/// variables. Returns one (most-negative, most-positive) pair per variable.
pub fn aggregate_profiles(
    schema: &CategoricalSchema,
    variables: &[usize],
    segment_rows: usize,
    outcomes: &[ReplicateOutcome],
) -> Result<Vec<(SegmentProfile, SegmentProfile)>> {
    let done: Vec<_> = sorted_by_index(outcomes)
        .into_iter()
        .filter_map(ReplicateOutcome::completed)
        .collect();
    if done.is_empty() {
        return Err(Error::Numerical("no completed replicates to profile".into()));
    }
    variables
        .iter()
        .enumerate()
        .map(|(slot, &v)| {
            let var = &schema.variables()[v];
            let k = var.categories.len();
            let mut sums = [alloc::vec![0.0; k], alloc::vec![0.0; k]];
            for data in &done {
                let (bottom, top) = data.profiles.get(slot).ok_or(Error::DimensionMismatch {
                    expected: variables.len(),
                    found: data.profiles.len(),
                })?;
                for (acc, props) in sums.iter_mut().zip([bottom, top]) {
                    for (a, p) in acc.iter_mut().zip(props) {
                        *a += p;
                    }
                }
            }
            let [bottom, top] = sums.map(|s| {
                s.into_iter().map(|x| x / done.len() as f64).collect::<Vec<_>>()
            });
            let make = |segment, proportions| SegmentProfile {
                segment,
                variable: var.name.clone(),
                categories: var.categories.clone(),
                proportions,
                n_rows: segment_rows,
                n_replicates: done.len(),
            };
            Ok((
                make(SegmentKind::MostNegative, bottom),
                make(SegmentKind::MostPositive, top),
            ))
        })
        .collect()
}
