//! Synthetic randomized experiments with a known ground-truth CATE.
//!
//! The control-arm probability is `p0(x) = clip(base_rate + Σ baseline
//! shifts)`; the treatment-arm probability is `clip(p0(x) + Σ effects)`.
//! Rules add up, then each potential-outcome probability is clipped to
//! `[0, 1]` on its own, so the stored effect is always a difference of two
//! valid probabilities.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{CategoricalSchema, Cohort};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::stats::clip01;

/// Additive contribution applied when every condition matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRule {
    /// `(variable index, category index)` pairs, all of which must hold.
    /// An empty list matches every row.
    pub conditions: Vec<(usize, usize)>,
    pub effect: f64,
}

impl EffectRule {
    /// Builds a rule from `(variable, category)` names.
    pub fn when(schema: &CategoricalSchema, conditions: &[(&str, &str)], effect: f64) -> Result<Self> {
        let conditions = conditions
            .iter()
            .map(|&(var, cat)| {
                let v = schema.require_variable(var)?;
                let c = schema.variables()[v].category_index(cat).ok_or_else(|| {
                    Error::Schema(format!("variable `{var}` has no category `{cat}`"))
                })?;
                Ok((v, c))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { conditions, effect })
    }

    pub fn always(effect: f64) -> Self {
        Self {
            conditions: Vec::new(),
            effect,
        }
    }

    pub fn matches(&self, covariates: &[u32]) -> bool {
        self.conditions
            .iter()
            .all(|&(v, c)| covariates.get(v).is_some_and(|&x| x as usize == c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub schema: Arc<CategoricalSchema>,
    /// One distribution per schema variable, in schema order.
    pub category_probabilities: Vec<Vec<f64>>,
    pub base_rate: f64,
    pub baseline_rules: Vec<EffectRule>,
    pub effect_rules: Vec<EffectRule>,
    pub treatment_probability: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Uniform covariates, constant base rate, no effects, balanced arms.
    pub fn uniform(schema: Arc<CategoricalSchema>, base_rate: f64, seed: u64) -> Self {
        let category_probabilities = schema
            .variables()
            .iter()
            .map(|v| {
                let k = v.categories.len();
                alloc::vec![1.0 / k as f64; k]
            })
            .collect();
        Self {
            schema,
            category_probabilities,
            base_rate,
            baseline_rules: Vec::new(),
            effect_rules: Vec::new(),
            treatment_probability: 0.5,
            seed,
        }
    }

    pub fn with_effect(mut self, rule: EffectRule) -> Self {
        self.effect_rules.push(rule);
        self
    }

    pub fn with_baseline(mut self, rule: EffectRule) -> Self {
        self.baseline_rules.push(rule);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let vars = self.schema.variables();
        if self.category_probabilities.len() != vars.len() {
            return Err(Error::InvalidParameter(format!(
                "{} category distributions for {} variables",
                self.category_probabilities.len(),
                vars.len()
            )));
        }
        for (var, probs) in vars.iter().zip(&self.category_probabilities) {
            if probs.len() != var.categories.len() {
                return Err(Error::InvalidParameter(format!(
                    "variable `{}`: {} probabilities for {} categories",
                    var.name,
                    probs.len(),
                    var.categories.len()
                )));
            }
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidParameter(format!(
                    "variable `{}`: probabilities must lie in [0, 1]",
                    var.name
                )));
            }
            let total: f64 = probs.iter().sum();
            if libm::fabs(total - 1.0) > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "variable `{}`: probabilities sum to {total}",
                    var.name
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.base_rate) {
            return Err(Error::InvalidParameter(format!(
                "base rate {} outside [0, 1]",
                self.base_rate
            )));
        }
        if !(self.treatment_probability > 0.0 && self.treatment_probability < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "treatment probability {} outside (0, 1)",
                self.treatment_probability
            )));
        }
        for rule in self.baseline_rules.iter().chain(&self.effect_rules) {
            if !rule.effect.is_finite() {
                return Err(Error::InvalidParameter(String::from("non-finite rule effect")));
            }
            for &(v, c) in &rule.conditions {
                if v >= vars.len() || c >= vars[v].categories.len() {
                    return Err(Error::InvalidParameter(format!(
                        "rule condition ({v}, {c}) outside the schema"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Clipped control-arm outcome probability.
    pub fn control_probability(&self, covariates: &[u32]) -> f64 {
        clip01(self.base_rate + sum_matching(&self.baseline_rules, covariates))
    }

    /// Clipped treatment-arm outcome probability.
    pub fn treated_probability(&self, covariates: &[u32]) -> f64 {
        clip01(self.control_probability(covariates) + sum_matching(&self.effect_rules, covariates))
    }
}

fn sum_matching(rules: &[EffectRule], covariates: &[u32]) -> f64 {
    rules
        .iter()
        .filter(|r| r.matches(covariates))
        .map(|r| r.effect)
        .sum()
}

/// Ground-truth CATE `clip(p0 + τ) − clip(p0)` for one covariate profile.
pub fn true_cate(spec: &SyntheticSpec, covariates: &[u32]) -> f64 {
    spec.treated_probability(covariates) - spec.control_probability(covariates)
}

/// Draws `n` rows: covariates, then the treatment flag, then the outcome.
pub fn generate_cohort(spec: &SyntheticSpec, n: usize) -> Result<Cohort> {
    if n == 0 {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let n_vars = spec.schema.variables().len();
    let mut covariates = Vec::with_capacity(n * n_vars);
    let mut treated = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    let mut row = alloc::vec![0u32; n_vars];
    for _ in 0..n {
        for (slot, probs) in row.iter_mut().zip(&spec.category_probabilities) {
            *slot = draw_category(probs, rng.random::<f64>()) as u32;
        }
        let w = rng.random::<f64>() < spec.treatment_probability;
        let p0 = spec.control_probability(&row);
        let p1 = spec.treated_probability(&row);
        let y = rng.random::<f64>() < if w { p1 } else { p0 };
        covariates.extend_from_slice(&row);
        treated.push(w);
        outcome.push(y);
        tau.push(p1 - p0);
    }
    Cohort::new(Arc::clone(&spec.schema), covariates, treated, outcome, Some(tau))
}

fn draw_category(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave `acc` a hair under 1; fall back to the last
    // category with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
