//! Ordinary least squares with treatment × category interactions.
//!
//! The coefficient vector solves the least-squares problem through a
//! Householder QR decomposition; classical standard errors come from
//! `s² (XᵀX)⁻¹ = s² R⁻¹ R⁻ᵀ` with `s² = RSS / (n − p)`.

mod tdist;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Cohort;
use crate::error::{Error, Result};

pub use tdist::{f_sf, regularized_beta, t_sf};

/// Singular values below this fraction of the largest flag rank deficiency.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub const INTERCEPT: &str = "Intercept";
pub const CONDITION: &str = "Condition";

/// Dense row-major regression design with column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub labels: Vec<String>,
    pub n_rows: usize,
    pub values: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(labels: Vec<String>, n_rows: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: n_rows * labels.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            labels,
            n_rows,
            values,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_columns();
        &self.values[i * p..(i + 1) * p]
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_rows, self.n_columns(), &self.values)
    }
}

/// Intercept, one dummy per non-contrast category of `variable`, the
/// treatment indicator, and treatment × each dummy. Labels follow the
/// `Variable[category]` / `Condition:Variable[category]` convention.
pub fn build_interaction_design(cohort: &Cohort, variable: &str) -> Result<DesignMatrix> {
    let v = cohort.schema().require_variable(variable)?;
    let categories = &cohort.schema().variables()[v].categories;
    if !(0..cohort.len()).any(|i| cohort.category(i, v) == 0) {
        return Err(Error::InvalidCohort(format!(
            "contrast category `{}` of `{variable}` does not occur in the cohort",
            categories[0]
        )));
    }
    let k = categories.len();
    let mut labels = Vec::with_capacity(2 * k);
    labels.push(String::from(INTERCEPT));
    labels.extend(categories[1..].iter().map(|c| format!("{variable}[{c}]")));
    labels.push(String::from(CONDITION));
    labels.extend(categories[1..].iter().map(|c| format!("{CONDITION}:{variable}[{c}]")));

    let p = labels.len();
    let mut values = alloc::vec![0.0; cohort.len() * p];
    for i in 0..cohort.len() {
        let row = &mut values[i * p..(i + 1) * p];
        let cat = cohort.category(i, v);
        let w = f64::from(u8::from(cohort.treated()[i]));
        row[0] = 1.0;
        row[k] = w;
        if cat > 0 {
            row[cat] = 1.0;
            row[k + cat] = w;
        }
    }
    DesignMatrix::new(labels, cohort.len(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub label: String,
    pub coef: f64,
    pub std_err: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsSummary {
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    pub df_residuals: usize,
    pub df_model: usize,
    pub rss: f64,
    pub r_squared: f64,
    /// All-slopes-zero F statistic; absent for an intercept-only model.
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
}

impl OlsSummary {
    pub fn coefficient(&self, label: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.label == label)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.coef).collect()
    }
}

/// Fits `y ~ X` by least squares. The first design column is expected to
/// be the intercept; R² and F are computed about the mean of `y`.
pub fn fit_ols(y: &[f64], design: &DesignMatrix) -> Result<OlsSummary> {
    let n = design.n_rows;
    let p = design.n_columns();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if p == 0 {
        return Err(Error::InvalidParameter("design has no columns".into()));
    }
    if n <= p {
        return Err(Error::TooFewRows {
            needed: p + 1,
            found: n,
        });
    }
    if y.iter().chain(&design.values).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite value in regression inputs".into()));
    }
    let x = design.to_matrix();
    if let Some(column) = first_dependent_column(&x) {
        return Err(Error::RankDeficient {
            column: design.labels[column].clone(),
        });
    }

    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;
    let residuals = &yv - &x * &beta;
    let rss = residuals.norm_squared();
    let df_residuals = n - p;
    let sigma2 = rss / df_residuals as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;

    let coefficients = (0..p)
        .map(|j| {
            let row = r_inv.row(j);
            let std_err = libm::sqrt(sigma2 * row.dot(&row));
            let t = beta[j] / std_err;
            Ok(Coefficient {
                label: design.labels[j].clone(),
                coef: beta[j],
                std_err,
                t,
                p: t_sf(t, df_residuals)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    if tss == 0.0 {
        return Err(Error::Numerical("outcome has zero variance".into()));
    }
    let r_squared = (1.0 - rss / tss).clamp(0.0, 1.0);
    let df_model = p - 1;
    let (f_statistic, f_p_value) = if df_model == 0 {
        (None, None)
    } else {
        let f = ((tss - rss) / df_model as f64) / sigma2;
        (Some(f), Some(f_sf(f, df_model, df_residuals)?))
    };
    Ok(OlsSummary {
        coefficients,
        n_obs: n,
        df_residuals,
        df_model,
        rss,
        r_squared,
        f_statistic,
        f_p_value,
    })
}

/// Interaction OLS of the binary outcome on `variable` × treatment.
pub fn interaction_ols(cohort: &Cohort, variable: &str) -> Result<OlsSummary> {
    let design = build_interaction_design(cohort, variable)?;
    let y: Vec<f64> = cohort.outcome().iter().map(|&v| f64::from(u8::from(v))).collect();
    fit_ols(&y, &design)
}

fn is_deficient(x: &DMatrix<f64>) -> bool {
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    max == 0.0 || sv.iter().any(|&s| s < RANK_TOLERANCE * max)
}

/// Smallest `j` such that columns `0..=j` are rank deficient.
fn first_dependent_column(x: &DMatrix<f64>) -> Option<usize> {
    if !is_deficient(x) {
        return None;
    }
    (0..x.ncols()).find(|&j| is_deficient(&x.columns(0, j + 1).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CategoricalSchema, Variable};
    use alloc::sync::Arc;
    use alloc::vec;

    fn cohort(variable: Variable, cats: Vec<u32>, treated: Vec<bool>, outcome: Vec<bool>) -> Cohort {
        let schema = Arc::new(CategoricalSchema::new(vec![variable], "w", "y").unwrap());
        Cohort::new(schema, cats, treated, outcome, None).unwrap()
    }

    #[test]
    fn design_shapes_and_labels() {
        let eth = Variable::new("Ethnicity", ["White", "Hispanic", "Black", "Other"]);
        let c = cohort(eth, vec![0, 1, 2, 3], vec![true, false, true, false], vec![true; 4]);
        let d = build_interaction_design(&c, "Ethnicity").unwrap();
        assert_eq!(d.n_columns(), 8);
        assert_eq!(d.labels[2], "Ethnicity[Black]");
        assert_eq!(d.labels[4], "Condition");
        assert_eq!(d.labels[7], "Condition:Ethnicity[Other]");
        // Row 2: Black, treated.
        assert_eq!(d.row(2), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);

        let age = Variable::new("Age", ["18-24", "25-34", "35-44", "45-54", "55-64", "65+"]);
        let c = cohort(age, vec![0, 5], vec![true, false], vec![true, false]);
        assert_eq!(build_interaction_design(&c, "Age").unwrap().n_columns(), 12);

        let one = Variable::new("Flag", ["x"]);
        let c = cohort(one, vec![0, 0], vec![true, false], vec![true, false]);
        let d = build_interaction_design(&c, "Flag").unwrap();
        assert_eq!(d.labels, vec!["Intercept", "Condition"]);
        assert!(matches!(build_interaction_design(&c, "Nope"), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let values: Vec<f64> = xs.iter().flat_map(|&x| [1.0, x]).collect();
        let d = DesignMatrix::new(vec!["Intercept".into(), "x".into()], 5, values).unwrap();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let s = fit_ols(&y, &d).unwrap();
        assert!((s.coefficients[1].coef - 2.0).abs() < 1e-12);
        assert!(s.rss < 1e-24);
        assert_eq!(s.r_squared, 1.0);
    }

    #[test]
    fn rank_deficiency_names_column() {
        let values: Vec<f64> = (0..6).flat_map(|i| [1.0, f64::from(i), 2.0 * f64::from(i)]).collect();
        let d = DesignMatrix::new(vec!["Intercept".into(), "a".into(), "b".into()], 6, values).unwrap();
        assert_eq!(
            fit_ols(&[1.0, 2.0, 0.0, 1.0, 3.0, 2.0], &d),
            Err(Error::RankDeficient { column: "b".into() })
        );
    }

    #[test]
    fn too_few_rows() {
        let d = DesignMatrix::new(vec!["Intercept".into(), "a".into()], 2, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(fit_ols(&[1.0, 2.0], &d), Err(Error::TooFewRows { .. })));
    }
}
