//! Gradient-boosted regression trees.
//!
//! Two losses are supported: binomial deviance (log-loss) for the response
//! models and squared error for the CATE meta-regressor. Both start from a
//! constant score and add `learning_rate * tree(x)` per stage. Log-loss
//! stages fit a least-squares tree to the residual `y - p` and then replace
//! each leaf by the Newton step `Σ(y - p) / Σ p(1 - p)`.

mod tree;

use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnLayout, EncodedMatrix};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats::{logit, mean, sigmoid, softplus};

pub use tree::{fit_tree, Tree, TreeNode, BINARY_THRESHOLD};

/// Probability clamp used when a classifier sees a single class.
pub const PROBABILITY_CLAMP: f64 = 1e-6;
const NEWTON_DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_split: 2,
            min_samples_leaf: 1,
            subsample: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("gbt: {what}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// Binary classifier; predictions are probabilities.
    LogLoss,
    /// Regressor; predictions are raw scores.
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub loss: Loss,
    pub initial_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub params: GbtParams,
    pub layout: ColumnLayout,
    /// Set when a classifier was trained on a single class and is constant.
    pub degenerate: bool,
    /// Mean training loss before the first stage and after every stage.
    pub staged_loss: Vec<f64>,
}

impl BoostedModel {
    pub fn n_columns(&self) -> usize {
        self.layout.len()
    }

    /// Additive score before the link function.
    pub fn raw_score(&self, row: &[u8]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        self.initial_score + self.learning_rate * sum
    }

    pub fn predict_row(&self, row: &[u8]) -> f64 {
        match self.loss {
            Loss::LogLoss => sigmoid(self.raw_score(row)),
            Loss::Squared => self.raw_score(row),
        }
    }

    /// Predicts every row of `x`; the column layout must match training.
    pub fn predict(&self, x: &EncodedMatrix) -> Result<Vec<f64>> {
        if **x.layout() != self.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok((0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    pub fn n_splits(&self) -> usize {
        self.trees.iter().map(Tree::n_splits).sum()
    }

    /// Unnormalized importances: per column, Σ (n_node / n_root) × impurity
    /// decrease over every split on that column, summed across trees.
    pub fn raw_importances(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n_columns()];
        for tree in &self.trees {
            let total = tree.root().n_samples() as f64;
            for node in tree.nodes() {
                if let TreeNode::Split {
                    column,
                    impurity_decrease,
                    n_samples,
                    ..
                } = *node
                {
                    out[column] += n_samples as f64 / total * impurity_decrease;
                }
            }
        }
        out
    }

    /// Gini (mean decrease in impurity) importances normalized to sum to 1.
    pub fn gini_importances(&self) -> Result<Vec<f64>> {
        let raw = self.raw_importances();
        let total: f64 = raw.iter().sum();
        if self.n_splits() == 0 || total <= 0.0 {
            return Err(Error::NoSplits);
        }
        Ok(raw.into_iter().map(|v| v / total).collect())
    }
}

/// Fits a log-loss boosted classifier on binary targets.
pub fn fit_gb_classifier(
    x: &EncodedMatrix,
    y: &[bool],
    params: &GbtParams,
    rng: &mut Rng,
) -> Result<BoostedModel> {
    check_inputs(x, y.len(), params)?;
    let n = y.len();
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v))).collect();
    let positives = y.iter().filter(|&&v| v).count();

    if positives == 0 || positives == n {
        let p = if positives == 0 {
            PROBABILITY_CLAMP
        } else {
            1.0 - PROBABILITY_CLAMP
        };
        let initial_score = logit(p);
        let scores = alloc::vec![initial_score; n];
        return Ok(BoostedModel {
            loss: Loss::LogLoss,
            initial_score,
            learning_rate: params.learning_rate,
            trees: Vec::new(),
            params: params.clone(),
            layout: (**x.layout()).clone(),
            degenerate: true,
            staged_loss: alloc::vec![log_loss(&targets, &scores)],
        });
    }

    let base = positives as f64 / n as f64;
    let initial_score = logit(base);
    let mut scores = alloc::vec![initial_score; n];
    let mut staged_loss = Vec::with_capacity(params.n_stages + 1);
    staged_loss.push(log_loss(&targets, &scores));
    let mut trees = Vec::with_capacity(params.n_stages);
    let mut residuals = alloc::vec![0.0; n];
    for _ in 0..params.n_stages {
        for i in 0..n {
            residuals[i] = targets[i] - sigmoid(scores[i]);
        }
        let samples = stage_samples(n, params.subsample, rng);
        let (mut tree, leaves) = tree::grow(x, &residuals, samples, params);
        for (leaf, members) in &leaves {
            let mut numerator = 0.0;
            let mut denominator = 0.0;
            for &i in members {
                let p = targets[i] - residuals[i];
                numerator += residuals[i];
                denominator += p * (1.0 - p);
            }
            tree.set_leaf_value(*leaf, numerator / denominator.max(NEWTON_DENOMINATOR_FLOOR));
        }
        for (i, s) in scores.iter_mut().enumerate() {
            *s += params.learning_rate * tree.predict_row(x.row(i));
        }
        staged_loss.push(log_loss(&targets, &scores));
        trees.push(tree);
    }

    Ok(BoostedModel {
        loss: Loss::LogLoss,
        initial_score,
        learning_rate: params.learning_rate,
        trees,
        params: params.clone(),
        layout: (**x.layout()).clone(),
        degenerate: false,
        staged_loss,
    })
}

/// Fits a squared-error boosted regressor.
pub fn fit_gb_regressor(
    x: &EncodedMatrix,
    t: &[f64],
    params: &GbtParams,
    rng: &mut Rng,
) -> Result<BoostedModel> {
    check_inputs(x, t.len(), params)?;
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("regression targets must be finite".into()));
    }
    let n = t.len();
    let initial_score = mean(t);
    let mut scores = alloc::vec![initial_score; n];
    let mut residuals: Vec<f64> = t.iter().map(|v| v - initial_score).collect();
    let mut staged_loss = Vec::with_capacity(params.n_stages + 1);
    staged_loss.push(mean_square(&residuals));
    let mut trees = Vec::with_capacity(params.n_stages);
    for _ in 0..params.n_stages {
        let samples = stage_samples(n, params.subsample, rng);
        let (tree, _) = tree::grow(x, &residuals, samples, params);
        for i in 0..n {
            scores[i] += params.learning_rate * tree.predict_row(x.row(i));
            residuals[i] = t[i] - scores[i];
        }
        staged_loss.push(mean_square(&residuals));
        trees.push(tree);
    }
    Ok(BoostedModel {
        loss: Loss::Squared,
        initial_score,
        learning_rate: params.learning_rate,
        trees,
        params: params.clone(),
        layout: (**x.layout()).clone(),
        degenerate: false,
        staged_loss,
    })
}

fn check_inputs(x: &EncodedMatrix, n_targets: usize, params: &GbtParams) -> Result<()> {
    params.validate()?;
    if x.n_rows() != n_targets {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: n_targets,
        });
    }
    if n_targets < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: n_targets,
        });
    }
    Ok(())
}

/// Rows used by one stage. With `subsample == 1` no randomness is consumed.
fn stage_samples(n: usize, subsample: f64, rng: &mut Rng) -> Vec<usize> {
    if subsample >= 1.0 {
        return (0..n).collect();
    }
    let k = (libm::floor(subsample * n as f64) as usize).max(1);
    let mut rows = index::sample(rng, n, k).into_vec();
    rows.sort_unstable();
    rows
}

fn log_loss(targets: &[f64], scores: &[f64]) -> f64 {
    let total: f64 = targets
        .iter()
        .zip(scores)
        .map(|(&y, &s)| softplus(s) - y * s)
        .sum();
    total / targets.len() as f64
}

fn mean_square(residuals: &[f64]) -> f64 {
    residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use alloc::vec;

    fn grid(n: usize) -> EncodedMatrix {
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|i| vec![(i % 2) as u8, ((i / 2) % 2) as u8, ((i / 4) % 3 == 0) as u8])
            .collect();
        EncodedMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn default_params_mirror_reference_library() {
        let p = GbtParams::default();
        assert_eq!(
            (p.n_stages, p.learning_rate, p.max_depth, p.min_samples_split, p.min_samples_leaf, p.subsample),
            (100, 0.1, 3, 2, 1, 1.0)
        );
    }

    #[test]
    fn zero_stage_classifier_predicts_base_rate() {
        let x = grid(8);
        let y = [true, false, false, true, false, false, true, false];
        let params = GbtParams { n_stages: 0, ..GbtParams::default() };
        let model = fit_gb_classifier(&x, &y, &params, &mut rng_from_seed(0)).unwrap();
        for p in model.predict(&x).unwrap() {
            assert!((p - 3.0 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_class_classifier_is_clamped_constant() {
        let x = grid(10);
        let model = fit_gb_classifier(&x, &[true; 10], &GbtParams::default(), &mut rng_from_seed(0)).unwrap();
        assert!(model.degenerate);
        assert!(model.trees.is_empty());
        for p in model.predict(&x).unwrap() {
            assert!((p - (1.0 - PROBABILITY_CLAMP)).abs() < 1e-12);
        }
        let model = fit_gb_classifier(&x, &[false; 10], &GbtParams::default(), &mut rng_from_seed(0)).unwrap();
        for p in model.predict(&x).unwrap() {
            assert!((p - PROBABILITY_CLAMP).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_target_regressor_is_exact() {
        let x = grid(30);
        for c in [0.1, -0.37, 2.0 / 3.0] {
            let model = fit_gb_regressor(&x, &[c; 30], &GbtParams::default(), &mut rng_from_seed(1)).unwrap();
            assert!(model.predict(&x).unwrap().iter().all(|&p| p == c));
        }
    }

    #[test]
    fn separable_regressor_converges() {
        // Residuals shrink by (1 - 0.1) per stage: 0.25 * 0.9^400 < 1e-6.
        let x = grid(40);
        let t: Vec<f64> = (0..40).map(|i| if i % 2 == 1 { 1.0 } else { 0.0 }).collect();
        let params = GbtParams { n_stages: 400, ..GbtParams::default() };
        let model = fit_gb_regressor(&x, &t, &params, &mut rng_from_seed(1)).unwrap();
        assert!(*model.staged_loss.last().unwrap() < 1e-6);
    }

    #[test]
    fn zero_tree_model_predicts_initial_transform() {
        let x = grid(6);
        let t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let params = GbtParams { n_stages: 0, ..GbtParams::default() };
        let model = fit_gb_regressor(&x, &t, &params, &mut rng_from_seed(1)).unwrap();
        assert!(model.predict(&x).unwrap().iter().all(|&p| p == 3.5));
    }

    #[test]
    fn single_split_importance_is_one() {
        let x = grid(8);
        let t: Vec<f64> = (0..8).map(|i| ((i / 2) % 2) as f64).collect();
        let params = GbtParams { n_stages: 1, max_depth: 1, ..GbtParams::default() };
        let model = fit_gb_regressor(&x, &t, &params, &mut rng_from_seed(1)).unwrap();
        assert_eq!(model.gini_importances().unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn no_split_importances_are_undefined() {
        let x = grid(8);
        let model = fit_gb_regressor(&x, &[2.0; 8], &GbtParams::default(), &mut rng_from_seed(1)).unwrap();
        assert_eq!(model.gini_importances(), Err(Error::NoSplits));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let x = grid(8);
        let model = fit_gb_regressor(&x, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], &GbtParams::default(), &mut rng_from_seed(1)).unwrap();
        let other = EncodedMatrix::from_rows(&[vec![0, 1]]).unwrap();
        assert_eq!(model.predict(&other), Err(Error::LayoutMismatch));
    }

    #[test]
    fn subsampling_is_seed_deterministic() {
        let x = grid(50);
        let y: Vec<bool> = (0..50).map(|i| (i * 7) % 5 < 2).collect();
        let params = GbtParams { subsample: 0.5, ..GbtParams::default() };
        let a = fit_gb_classifier(&x, &y, &params, &mut rng_from_seed(4)).unwrap();
        let b = fit_gb_classifier(&x, &y, &params, &mut rng_from_seed(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let x = grid(4);
        for params in [
            GbtParams { learning_rate: 0.0, ..GbtParams::default() },
            GbtParams { subsample: 1.5, ..GbtParams::default() },
            GbtParams { max_depth: 0, ..GbtParams::default() },
            GbtParams { min_samples_split: 1, ..GbtParams::default() },
        ] {
            assert!(fit_gb_regressor(&x, &[0.0, 1.0, 0.0, 1.0], &params, &mut rng_from_seed(0)).is_err());
        }
    }
}
