//! Heterogeneous treatment effect estimation for randomized experiments.
//!
//! The crate estimates conditional average treatment effects (CATEs) with a
//! T-learner built on natively implemented gradient-boosted trees, validates
//! the predictions with a bootstrap decile-uplift protocol, explains the
//! heterogeneity through meta-model Gini importances and interaction OLS, and
//! locates the segments where a treatment backfires.
//!
//! Everything here is pure computation over in-memory data and builds under
//! `no_std` with `alloc`. File formats, configuration and the parallel
//! replicate driver live in the `backfire` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod evaluation;
pub mod gbt;
pub mod importance;
pub mod ols;
pub mod replicate;
pub mod rng;
pub mod segments;
pub mod stats;
pub mod synthesis;
pub mod tlearner;

pub use data::{
    bootstrap_resample, one_hot_encode, split_train_test, CategoricalSchema, Cohort,
    ColumnLayout, EncodedColumn, EncodedMatrix, OutcomeLabels, Variable,
};
pub use error::{Error, ErrorKind, Result};
pub use evaluation::{
    assign_quantiles, observed_uplift, percentile_ci, run_quantile_evaluation, EvalConfig,
    QuantileUplift, QuantileUpliftReport,
};
pub use gbt::{fit_gb_classifier, fit_gb_regressor, fit_tree, BoostedModel, GbtParams, Loss, Tree};
pub use importance::{compute_meta_importances, ImportanceReport, Normalization, VariableImportance};
pub use ols::{build_interaction_design, fit_ols, t_sf, DesignMatrix, OlsSummary};
pub use replicate::{run_replicate, run_replicates, ReplicateOutcome, ReplicatePlan};
pub use segments::{
    extreme_deciles, group_cate_table, segment_profile, targeting_policy, GroupCateTable,
    SegmentKind, SegmentProfile,
};
pub use synthesis::{generate_cohort, true_cate, EffectRule, SyntheticSpec};
pub use tlearner::{ate, fit_tlearner, predict_cate, TLearnerModel};
