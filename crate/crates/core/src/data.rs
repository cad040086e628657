//! Cohort data model: categorical schema, binary treatment and outcome,
//! one-hot encoding, train/test splitting and bootstrap resampling.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub categories: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

/// Ordered categorical covariates plus the names of the treatment and
/// outcome columns. Variable and category order defines the encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSchema {
    variables: Vec<Variable>,
    treatment_column: String,
    outcome_column: String,
}

impl CategoricalSchema {
    pub fn new(
        variables: Vec<Variable>,
        treatment_column: impl Into<String>,
        outcome_column: impl Into<String>,
    ) -> Result<Self> {
        let treatment_column = treatment_column.into();
        let outcome_column = outcome_column.into();
        if treatment_column == outcome_column {
            return Err(Error::Schema(format!(
                "treatment and outcome share the column name `{treatment_column}`"
            )));
        }
        for (i, var) in variables.iter().enumerate() {
            if var.categories.is_empty() {
                return Err(Error::Schema(format!("variable `{}` has no categories", var.name)));
            }
            if variables[..i].iter().any(|v| v.name == var.name) {
                return Err(Error::Schema(format!("duplicate variable `{}`", var.name)));
            }
            if var.name == treatment_column || var.name == outcome_column {
                return Err(Error::Schema(format!(
                    "variable `{}` collides with the treatment or outcome column",
                    var.name
                )));
            }
            for (j, cat) in var.categories.iter().enumerate() {
                if var.categories[..j].contains(cat) {
                    return Err(Error::Schema(format!(
                        "duplicate category `{cat}` in variable `{}`",
                        var.name
                    )));
                }
            }
        }
        Ok(Self {
            variables,
            treatment_column,
            outcome_column,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn treatment_column(&self) -> &str {
        &self.treatment_column
    }

    pub fn outcome_column(&self) -> &str {
        &self.outcome_column
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn require_variable(&self, name: &str) -> Result<usize> {
        self.variable_index(name)
            .ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    /// Number of one-hot columns: Σ (k − 1).
    pub fn encoded_width(&self) -> usize {
        self.variables.iter().map(|v| v.categories.len() - 1).sum()
    }
}

// ---------------------------------------------------------------------------
// Outcome binarization
// ---------------------------------------------------------------------------

/// Raw answer labels mapped to the binary outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeLabels {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

impl Default for OutcomeLabels {
    /// "Yes" is 1; "No" and "Don't know" are 0.
    fn default() -> Self {
        Self {
            positive: alloc::vec!["Yes".into()],
            negative: alloc::vec!["No".into(), "Don't know".into()],
        }
    }
}

impl OutcomeLabels {
    /// Maps a raw answer to the binary outcome; `row` is only used in the error.
    pub fn binarize(&self, raw: &str, row: usize) -> Result<bool> {
        let raw = raw.trim();
        if self.positive.iter().any(|l| l == raw) {
            Ok(true)
        } else if self.negative.iter().any(|l| l == raw) {
            Ok(false)
        } else {
            Err(Error::UnknownOutcomeLabel {
                row,
                label: raw.into(),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Cohort
// ---------------------------------------------------------------------------

/// Experiment rows stored column-wise: covariate category indices
/// (row-major, one per schema variable), treatment flag, binary outcome and
/// the optional ground-truth effect of synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    schema: Arc<CategoricalSchema>,
    covariates: Vec<u32>,
    treated: Vec<bool>,
    outcome: Vec<bool>,
    true_tau: Option<Vec<f64>>,
}

impl Cohort {
    pub fn new(
        schema: Arc<CategoricalSchema>,
        covariates: Vec<u32>,
        treated: Vec<bool>,
        outcome: Vec<bool>,
        true_tau: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = treated.len();
        if outcome.len() != n {
            return Err(Error::InvalidCohort(format!(
                "{} treatment flags but {} outcomes",
                n,
                outcome.len()
            )));
        }
        let width = schema.variables().len();
        if covariates.len() != n * width {
            return Err(Error::InvalidCohort(format!(
                "expected {} covariate entries for {n} rows, found {}",
                n * width,
                covariates.len()
            )));
        }
        if width > 0 {
            for (row, cats) in covariates.chunks_exact(width).enumerate() {
                for (var, &c) in schema.variables().iter().zip(cats) {
                    if c as usize >= var.categories.len() {
                        return Err(Error::InvalidCohort(format!(
                            "row {row}: category index {c} out of range for `{}`",
                            var.name
                        )));
                    }
                }
            }
        }
        if let Some(tau) = &true_tau {
            if tau.len() != n {
                return Err(Error::InvalidCohort(format!(
                    "{} true effects for {n} rows",
                    tau.len()
                )));
            }
        }
        Ok(Self {
            schema,
            covariates,
            treated,
            outcome,
            true_tau,
        })
    }

    pub fn schema(&self) -> &CategoricalSchema {
        &self.schema
    }

    pub fn shared_schema(&self) -> &Arc<CategoricalSchema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.treated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treated.is_empty()
    }

    /// Category indices of row `i`, one per schema variable.
    pub fn covariates(&self, i: usize) -> &[u32] {
        let w = self.schema.variables().len();
        &self.covariates[i * w..(i + 1) * w]
    }

    pub fn category(&self, row: usize, variable: usize) -> usize {
        self.covariates(row)[variable] as usize
    }

    pub fn treated(&self) -> &[bool] {
        &self.treated
    }

    pub fn outcome(&self) -> &[bool] {
        &self.outcome
    }

    pub fn true_tau(&self) -> Option<&[f64]> {
        self.true_tau.as_deref()
    }

    pub fn n_treated(&self) -> usize {
        self.treated.iter().filter(|&&w| w).count()
    }

    pub fn n_control(&self) -> usize {
        self.len() - self.n_treated()
    }

    /// New cohort made of the given rows, in order; rows may repeat.
    pub fn select(&self, rows: &[usize]) -> Cohort {
        let w = self.schema.variables().len();
        let mut covariates = Vec::with_capacity(rows.len() * w);
        for &i in rows {
            covariates.extend_from_slice(self.covariates(i));
        }
        Cohort {
            schema: Arc::clone(&self.schema),
            covariates,
            treated: rows.iter().map(|&i| self.treated[i]).collect(),
            outcome: rows.iter().map(|&i| self.outcome[i]).collect(),
            true_tau: self
                .true_tau
                .as_ref()
                .map(|t| rows.iter().map(|&i| t[i]).collect()),
        }
    }

    /// Same rows with the treatment flag inverted.
    pub fn with_swapped_arms(&self) -> Cohort {
        let mut out = self.clone();
        for w in &mut out.treated {
            *w = !*w;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// One-hot encoding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub variable: String,
    pub category: String,
}

/// Provenance of every encoded column. For each variable the schema-first
/// category is the dropped contrast level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLayout {
    columns: Vec<EncodedColumn>,
    /// Index of the source variable for each column.
    column_variable: Vec<usize>,
    /// First column of each variable's block (length = variables + 1).
    block_start: Vec<usize>,
}

impl ColumnLayout {
    pub fn from_schema(schema: &CategoricalSchema) -> Self {
        let mut columns = Vec::with_capacity(schema.encoded_width());
        let mut column_variable = Vec::with_capacity(schema.encoded_width());
        let mut block_start = Vec::with_capacity(schema.variables().len() + 1);
        for (v, var) in schema.variables().iter().enumerate() {
            block_start.push(columns.len());
            for cat in &var.categories[1..] {
                columns.push(EncodedColumn {
                    variable: var.name.clone(),
                    category: cat.clone(),
                });
                column_variable.push(v);
            }
        }
        block_start.push(columns.len());
        Self {
            columns,
            column_variable,
            block_start,
        }
    }

    /// Layout for an anonymous binary matrix: column `j` is variable `x{j}`.
    pub fn anonymous(n_columns: usize) -> Self {
        Self {
            columns: (0..n_columns)
                .map(|j| EncodedColumn {
                    variable: format!("x{j}"),
                    category: "1".into(),
                })
                .collect(),
            column_variable: (0..n_columns).collect(),
            block_start: (0..=n_columns).collect(),
        }
    }

    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn n_variables(&self) -> usize {
        self.block_start.len() - 1
    }

    pub fn column_variable(&self, column: usize) -> usize {
        self.column_variable[column]
    }

    /// Column range belonging to variable `v`.
    pub fn variable_columns(&self, v: usize) -> core::ops::Range<usize> {
        self.block_start[v]..self.block_start[v + 1]
    }
}

/// Row-major binary design matrix with column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    n_rows: usize,
    layout: Arc<ColumnLayout>,
    values: Vec<u8>,
}

impl EncodedMatrix {
    pub fn new(layout: Arc<ColumnLayout>, n_rows: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != n_rows * layout.len() {
            return Err(Error::DimensionMismatch {
                expected: n_rows * layout.len(),
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!(
                "encoded values must be 0 or 1, found {bad}"
            )));
        }
        Ok(Self {
            n_rows,
            layout,
            values,
        })
    }

    /// Binary matrix without categorical provenance, mostly for tests.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(Arc::new(ColumnLayout::anonymous(n_cols)), rows.len(), values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.layout.len()
    }

    pub fn layout(&self) -> &Arc<ColumnLayout> {
        &self.layout
    }

    pub fn columns(&self) -> &[EncodedColumn] {
        self.layout.columns()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let w = self.layout.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, row: usize, column: usize) -> u8 {
        self.values[row * self.layout.len() + column]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }
}

/// Encodes every covariate as k − 1 indicator columns in schema order,
/// dropping each variable's first category.
pub fn one_hot_encode(cohort: &Cohort) -> EncodedMatrix {
    let layout = Arc::new(ColumnLayout::from_schema(cohort.schema()));
    encode_with_layout(cohort, layout)
}

/// Encodes `cohort` against an existing layout built from the same schema.
pub fn encode_with_layout(cohort: &Cohort, layout: Arc<ColumnLayout>) -> EncodedMatrix {
    let width = layout.len();
    let mut values = alloc::vec![0u8; cohort.len() * width];
    for i in 0..cohort.len() {
        let row = &mut values[i * width..(i + 1) * width];
        for (v, &c) in cohort.covariates(i).iter().enumerate() {
            if c > 0 {
                row[layout.block_start[v] + c as usize - 1] = 1;
            }
        }
    }
    EncodedMatrix {
        n_rows: cohort.len(),
        layout,
        values,
    }
}

// ---------------------------------------------------------------------------
// Splitting and resampling
// ---------------------------------------------------------------------------

/// Uniformly shuffled, unstratified split. The training part holds
/// `floor(n * train_fraction)` rows and the remainder goes to test.
pub fn split_train_test(
    cohort: &Cohort,
    train_fraction: f64,
    rng: &mut Rng,
) -> Result<(Cohort, Cohort)> {
    let (train, test) = split_indices(cohort.len(), train_fraction, rng)?;
    Ok((cohort.select(&train), cohort.select(&test)))
}

/// Index form of [`split_train_test`].
pub fn split_indices(
    n: usize,
    train_fraction: f64,
    rng: &mut Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = libm::floor(n as f64 * train_fraction) as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} leaves an empty part for {n} rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let test = order.split_off(n_train);
    Ok((order, test))
}

/// Draws `size` rows uniformly with replacement.
pub fn bootstrap_resample(cohort: &Cohort, size: usize, rng: &mut Rng) -> Result<Cohort> {
    if cohort.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    if size == 0 {
        return Err(Error::InvalidParameter("bootstrap size must be positive".into()));
    }
    Ok(cohort.select(&resample_indices(cohort.len(), size, rng)))
}

/// `size` indices drawn uniformly with replacement from `0..n`.
pub fn resample_indices(n: usize, size: usize, rng: &mut Rng) -> Vec<usize> {
    (0..size).map(|_| rng.random_range(0..n)).collect()
}
