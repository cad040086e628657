//! T-learner: one response model per arm, CATE as their difference.
//!
//! Under randomized assignment the arm-wise conditional means identify the
//! interventional quantities `E[Y | do(W = w), X = x]`, so the difference of
//! the two fitted response surfaces estimates the CATE and the difference of
//! arm means estimates the ATE.

use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{encode_with_layout, ColumnLayout, Cohort, EncodedMatrix};
use crate::error::{Arm, Error, Result};
use crate::gbt::{fit_gb_classifier, BoostedModel, GbtParams};
use crate::rng::{mix_seed, rng_from_seed};

/// Sub-seed streams of a T-learner fit.
const CONTROL_STREAM: u64 = 0;
const TREATMENT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TLearnerModel {
    /// Control response, fitted on `w = 0` rows only.
    pub mu0: BoostedModel,
    /// Treatment response, fitted on `w = 1` rows only.
    pub mu1: BoostedModel,
    pub layout: ColumnLayout,
}

impl TLearnerModel {
    /// Encodes `cohort` with this model's column layout.
    pub fn encode(&self, cohort: &Cohort) -> Result<EncodedMatrix> {
        let layout = ColumnLayout::from_schema(cohort.schema());
        if layout != self.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(encode_with_layout(cohort, Arc::new(layout)))
    }
}

/// Fits the control and treatment response models. Each arm receives its own
/// sub-seed of `seed`, so changing one arm never perturbs the other's fit.
pub fn fit_tlearner(train: &Cohort, params: &GbtParams, seed: u64) -> Result<TLearnerModel> {
    params.validate()?;
    let (treated_rows, control_rows): (Vec<usize>, Vec<usize>) =
        (0..train.len()).partition(|&i| train.treated()[i]);
    let needed = params.min_samples_split.max(2);
    for (arm, rows) in [(Arm::Control, &control_rows), (Arm::Treatment, &treated_rows)] {
        if rows.is_empty() {
            return Err(Error::EmptyArm(arm));
        }
        if rows.len() < needed {
            return Err(Error::TooFewRows {
                needed,
                found: rows.len(),
            });
        }
    }

    let layout = Arc::new(ColumnLayout::from_schema(train.schema()));
    let fit_arm = |rows: &[usize], stream: u64| {
        let arm = train.select(rows);
        let x = encode_with_layout(&arm, Arc::clone(&layout));
        let mut rng = rng_from_seed(mix_seed(seed, stream));
        fit_gb_classifier(&x, arm.outcome(), params, &mut rng)
    };
    let mu0 = fit_arm(&control_rows, CONTROL_STREAM)?;
    let mu1 = fit_arm(&treated_rows, TREATMENT_STREAM)?;
    Ok(TLearnerModel {
        mu0,
        mu1,
        layout: (*layout).clone(),
    })
}

/// `τ̂(x) = μ̂1(x) − μ̂0(x)`, in probability units.
pub fn predict_cate(model: &TLearnerModel, x: &EncodedMatrix) -> Result<Vec<f64>> {
    if **x.layout() != model.layout {
        return Err(Error::LayoutMismatch);
    }
    let treated = model.mu1.predict(x)?;
    let control = model.mu0.predict(x)?;
    Ok(treated.iter().zip(&control).map(|(a, b)| a - b).collect())
}

/// Difference in outcome means between arms.
pub fn ate(cohort: &Cohort) -> Result<f64> {
    let (mut n1, mut s1, mut n0, mut s0) = (0usize, 0usize, 0usize, 0usize);
    for (&w, &y) in cohort.treated().iter().zip(cohort.outcome()) {
        if w {
            n1 += 1;
            s1 += usize::from(y);
        } else {
            n0 += 1;
            s0 += usize::from(y);
        }
    }
    if n1 == 0 {
        return Err(Error::EmptyArm(Arm::Treatment));
    }
    if n0 == 0 {
        return Err(Error::EmptyArm(Arm::Control));
    }
    Ok(s1 as f64 / n1 as f64 - s0 as f64 / n0 as f64)
}
