//! The shared bootstrap replicate loop.
//!
//! Quantile validation, meta-model importances and extreme-segment profiles
//! all reuse the same per-replicate T-learner, so one replicate computes
//! every requested analysis at once. Replicate `r` draws everything from
//! `mix_seed(master_seed, r)`, which makes replicates independent of each
//! other and of the order they are executed in; a parallel driver only has
//! to call [`run_replicate`] for every index.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::data::{resample_indices, split_indices, Cohort};
use crate::error::{Error, Result};
use crate::evaluation::{assign_quantiles, observed_uplift, EvalConfig};
use crate::gbt::{fit_gb_regressor, GbtParams};
use crate::rng::{mix_seed, rng_from_seed};
use crate::segments::{category_proportions, extreme_deciles};
use crate::tlearner::{fit_tlearner, predict_cate};

/// What each replicate computes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatePlan {
    pub params: GbtParams,
    pub config: EvalConfig,
    /// Fit the τ̂ ~ X meta-regressor and record its Gini importances.
    pub importance: bool,
    /// Schema indices of variables profiled in the extreme segments.
    pub profile_variables: Vec<usize>,
    pub extreme_fraction: f64,
}

impl ReplicatePlan {
    pub fn quantiles_only(params: GbtParams, config: EvalConfig) -> Self {
        Self {
            params,
            config,
            importance: false,
            profile_variables: Vec::new(),
            extreme_fraction: 0.1,
        }
    }

    pub fn validate(&self, cohort: &Cohort) -> Result<()> {
        self.params.validate()?;
        self.config.validate()?;
        if cohort.is_empty() {
            return Err(Error::TooFewRows { needed: 1, found: 0 });
        }
        if cohort.n_treated() == 0 {
            return Err(Error::EmptyArm(crate::error::Arm::Treatment));
        }
        if cohort.n_control() == 0 {
            return Err(Error::EmptyArm(crate::error::Arm::Control));
        }
        if let Some(&v) = self
            .profile_variables
            .iter()
            .find(|&&v| v >= cohort.schema().variables().len())
        {
            return Err(Error::InvalidParameter(alloc::format!(
                "profile variable index {v} outside the schema"
            )));
        }
        if !self.profile_variables.is_empty() {
            // Surfaces an empty segment before any model is fitted.
            crate::segments::segment_size(self.config.test_size(), self.extreme_fraction)?;
        }
        Ok(())
    }
}

/// Per-replicate results.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateData {
    /// Observed uplift per quantile; `None` where an arm is missing.
    pub quantile_uplift: Vec<Option<f64>>,
    /// Normalized meta-regressor importances per encoded column; `None` when
    /// importances were not requested or the meta-regressor found no split.
    pub column_importances: Option<Vec<f64>>,
    pub meta_without_splits: bool,
    /// For each profiled variable, category proportions in the
    /// (most-negative, most-positive) segments.
    pub profiles: Vec<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateStatus {
    Completed(ReplicateData),
    /// The replicate's training sample could not support a T-learner.
    Skipped(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub status: ReplicateStatus,
}

impl ReplicateOutcome {
    pub fn completed(&self) -> Option<&ReplicateData> {
        match &self.status {
            ReplicateStatus::Completed(data) => Some(data),
            ReplicateStatus::Skipped(_) => None,
        }
    }
}

/// Runs replicate `index` of `plan`. Expects a plan that passed
/// [`ReplicatePlan::validate`].
pub fn run_replicate(cohort: &Cohort, plan: &ReplicatePlan, index: usize) -> Result<ReplicateOutcome> {
    let config = &plan.config;
    let mut rng = rng_from_seed(mix_seed(config.master_seed, index as u64));
    let rows = resample_indices(cohort.len(), config.population_size, &mut rng);
    let (train_pos, test_pos) = split_indices(rows.len(), config.train_fraction, &mut rng)?;
    let tlearner_seed: u64 = rng.random();
    let meta_seed: u64 = rng.random();

    let pick = |pos: &[usize]| -> Vec<usize> { pos.iter().map(|&p| rows[p]).collect() };
    let train = cohort.select(&pick(&train_pos));
    let test = cohort.select(&pick(&test_pos));

    let model = match fit_tlearner(&train, &plan.params, tlearner_seed) {
        Ok(model) => model,
        Err(e @ (Error::EmptyArm(_) | Error::TooFewRows { .. })) => {
            return Ok(ReplicateOutcome {
                index,
                status: ReplicateStatus::Skipped(e),
            })
        }
        Err(e) => return Err(e),
    };
    let x_test = model.encode(&test)?;
    let tau = predict_cate(&model, &x_test)?;

    let bins = assign_quantiles(&tau, config.n_quantiles)?;
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); config.n_quantiles];
    for (row, &bin) in bins.iter().enumerate() {
        members[bin - 1].push(row);
    }
    let quantile_uplift = members.iter().map(|rows| observed_uplift(&test, rows)).collect();

    let mut column_importances = None;
    let mut meta_without_splits = false;
    if plan.importance {
        let mut meta_rng = rng_from_seed(meta_seed);
        let meta = fit_gb_regressor(&x_test, &tau, &plan.params, &mut meta_rng)?;
        match meta.gini_importances() {
            Ok(imp) => column_importances = Some(imp),
            Err(Error::NoSplits) => meta_without_splits = true,
            Err(e) => return Err(e),
        }
    }

    let mut profiles = Vec::with_capacity(plan.profile_variables.len());
    if !plan.profile_variables.is_empty() {
        let (bottom, top) = extreme_deciles(&tau, plan.extreme_fraction)?;
        for &v in &plan.profile_variables {
            profiles.push((
                category_proportions(&test, &bottom, v)?,
                category_proportions(&test, &top, v)?,
            ));
        }
    }

    Ok(ReplicateOutcome {
        index,
        status: ReplicateStatus::Completed(ReplicateData {
            quantile_uplift,
            column_importances,
            meta_without_splits,
            profiles,
        }),
    })
}

/// Runs every replicate sequentially, in index order.
pub fn run_replicates(cohort: &Cohort, plan: &ReplicatePlan) -> Result<Vec<ReplicateOutcome>> {
    plan.validate(cohort)?;
    (0..plan.config.n_replicates)
        .map(|r| run_replicate(cohort, plan, r))
        .collect()
}
