//! Cohort CSV files.
//!
//! A cohort file has a header row naming every schema variable, the
//! treatment column and the outcome column; other columns are ignored except
//! an optional `true_tau` column carrying synthetic ground truth. Row numbers
//! in errors count data rows from 1.

use std::path::Path;
use std::sync::Arc;

use backfire_core::{CategoricalSchema, Cohort};

use crate::config::LabelSection;
use crate::error::{CliError, Result};

pub const TRUE_TAU_COLUMN: &str = "true_tau";

pub fn load_csv(path: &Path, schema: &Arc<CategoricalSchema>, labels: &LabelSection) -> Result<Cohort> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_cohort(file, schema, labels).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_cohort(
    reader: impl std::io::Read,
    schema: &Arc<CategoricalSchema>,
    labels: &LabelSection,
) -> Result<Cohort> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(CliError::Data("empty file".into()));
    }
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Data(format!("missing column `{name}`")))
    };
    let var_cols = schema
        .variables()
        .iter()
        .map(|v| column(&v.name))
        .collect::<Result<Vec<_>>>()?;
    let w_col = column(schema.treatment_column())?;
    let y_col = column(schema.outcome_column())?;
    let tau_col = headers.iter().position(|h| h.trim() == TRUE_TAU_COLUMN);
    let outcome_labels = labels.outcome_labels();

    let mut covariates = Vec::new();
    let mut treated = Vec::new();
    let mut outcome = Vec::new();
    let mut tau = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Data(format!("row {row}: {e}")))?;
        let field = |c: usize, name: &str| -> Result<&str> {
            record
                .get(c)
                .map(str::trim)
                .ok_or_else(|| CliError::Data(format!("row {row}: missing field `{name}`")))
        };
        for (var, &c) in schema.variables().iter().zip(&var_cols) {
            let raw = field(c, &var.name)?;
            let cat = var.category_index(raw).ok_or_else(|| {
                CliError::Data(format!("row {row}: unknown category `{raw}` in column `{}`", var.name))
            })?;
            covariates.push(cat as u32);
        }
        let raw_w = field(w_col, schema.treatment_column())?;
        let w = if labels.treatment.iter().any(|l| l == raw_w) {
            true
        } else if labels.control.iter().any(|l| l == raw_w) {
            false
        } else {
            return Err(CliError::Data(format!(
                "row {row}: treatment column `{}` has non-binary value `{raw_w}`",
                schema.treatment_column()
            )));
        };
        treated.push(w);
        let raw_y = field(y_col, schema.outcome_column())?;
        outcome.push(
            outcome_labels
                .binarize(raw_y, row)
                .map_err(|e| CliError::Data(format!("{e} in column `{}`", schema.outcome_column())))?,
        );
        if let Some(c) = tau_col {
            let raw = field(c, TRUE_TAU_COLUMN)?;
            tau.push(raw.parse::<f64>().map_err(|_| {
                CliError::Data(format!("row {row}: `{TRUE_TAU_COLUMN}` value `{raw}` is not a number"))
            })?);
        }
    }
    if treated.is_empty() {
        return Err(CliError::Data("file has a header but no data rows".into()));
    }
    let tau = tau_col.map(|_| tau);
    Cohort::new(Arc::clone(schema), covariates, treated, outcome, tau).map_err(|e| CliError::Data(e.to_string()))
}

/// Writes `cohort` with the first configured label of each kind; the result
/// reads back to an identical cohort.
pub fn write_cohort_csv(path: &Path, cohort: &Cohort, labels: &LabelSection) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let schema = cohort.schema();
    let mut header: Vec<&str> = schema.variables().iter().map(|v| v.name.as_str()).collect();
    header.push(schema.treatment_column());
    header.push(schema.outcome_column());
    if cohort.true_tau().is_some() {
        header.push(TRUE_TAU_COLUMN);
    }
    out.write_record(&header).map_err(|e| csv_error(path, e))?;
    for i in 0..cohort.len() {
        let mut record: Vec<String> = schema
            .variables()
            .iter()
            .zip(cohort.covariates(i))
            .map(|(v, &c)| v.categories[c as usize].clone())
            .collect();
        let w = if cohort.treated()[i] { &labels.treatment[0] } else { &labels.control[0] };
        let y = if cohort.outcome()[i] {
            &labels.outcome_positive[0]
        } else {
            &labels.outcome_negative[0]
        };
        record.push(w.clone());
        record.push(y.clone());
        if let Some(tau) = cohort.true_tau() {
            record.push(tau[i].to_string());
        }
        out.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other:?}", path.display())),
    }
}
