//! CSV, JSON and text renderings of the analysis reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the
//! same report always produces the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use backfire_core::{
    GroupCateTable, ImportanceReport, OlsSummary, QuantileUpliftReport, SegmentKind, SegmentProfile,
};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::io::csv_error;
use crate::plot::{horizontal_bars, vertical_bars, BarChart, BarGroup};

/// Collects the paths written by a command.
#[derive(Debug, Default)]
pub struct Written(pub Vec<PathBuf>);

impl Written {
    pub fn text(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.0.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        text.push('\n');
        self.text(path, &text)
    }

    pub fn csv(&mut self, path: PathBuf, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut out = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        out.write_record(header).map_err(|e| csv_error(&path, e))?;
        for row in rows {
            out.write_record(row).map_err(|e| csv_error(&path, e))?;
        }
        out.flush().map_err(|e| CliError::io(&path, e))?;
        self.0.push(path);
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    v.to_string()
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `name.ext` with characters unsafe in file names replaced.
pub fn file_name(stem: &str, var: &str, ext: &str) -> String {
    let clean: String = var
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{stem}_{clean}.{ext}")
}

// ---------------------------------------------------------------------------

pub fn quantile_rows(report: &QuantileUpliftReport) -> Vec<Vec<String>> {
    report
        .quantiles
        .iter()
        .map(|q| {
            vec![
                q.quantile.to_string(),
                opt(q.mean),
                opt(q.ci_low),
                opt(q.ci_high),
                q.n_valid.to_string(),
            ]
        })
        .collect()
}

pub const QUANTILE_HEADER: [&str; 5] = ["quantile", "mean", "ci_low", "ci_high", "n_valid"];

pub fn quantile_chart(report: &QuantileUpliftReport) -> String {
    vertical_bars(&BarChart {
        title: "Observed uplift by quantile of predicted effect".into(),
        category_label: "Quantile of predicted effect (1 = most negative)".into(),
        value_label: "Observed uplift (treatment − control)".into(),
        series: vec!["uplift".into()],
        groups: report
            .quantiles
            .iter()
            .map(|q| BarGroup {
                label: q.quantile.to_string(),
                values: vec![q.mean],
                intervals: vec![q.ci_low.zip(q.ci_high)],
            })
            .collect(),
    })
}

pub const IMPORTANCE_HEADER: [&str; 5] = ["variable", "score", "ci_low", "ci_high", "n_columns"];

pub fn importance_rows(report: &ImportanceReport) -> Vec<Vec<String>> {
    report
        .variables
        .iter()
        .map(|v| {
            vec![
                v.name.clone(),
                num(v.score),
                num(v.ci_low),
                num(v.ci_high),
                v.n_columns.to_string(),
            ]
        })
        .collect()
}

pub fn importance_chart(report: &ImportanceReport) -> String {
    horizontal_bars(&BarChart {
        title: "Meta-model feature importance".into(),
        category_label: "Variable".into(),
        value_label: "Mean Gini importance".into(),
        series: vec!["importance".into()],
        groups: report
            .variables
            .iter()
            .map(|v| BarGroup {
                label: v.name.clone(),
                values: vec![Some(v.score)],
                intervals: vec![Some((v.ci_low, v.ci_high))],
            })
            .collect(),
    })
}

pub const PROFILE_HEADER: [&str; 6] = ["segment", "variable", "category", "proportion", "n_rows", "n_replicates"];

pub fn profile_rows(pair: &(SegmentProfile, SegmentProfile)) -> Vec<Vec<String>> {
    [&pair.0, &pair.1]
        .into_iter()
        .flat_map(|p| {
            p.categories.iter().zip(&p.proportions).map(move |(c, share)| {
                vec![
                    p.segment.label().to_string(),
                    p.variable.clone(),
                    c.clone(),
                    num(*share),
                    p.n_rows.to_string(),
                    p.n_replicates.to_string(),
                ]
            })
        })
        .collect()
}

pub fn profile_chart(pair: &(SegmentProfile, SegmentProfile)) -> String {
    let (neg, pos) = pair;
    vertical_bars(&BarChart {
        title: format!("{} in the extreme predicted-effect segments", neg.variable),
        category_label: neg.variable.clone(),
        value_label: "Share of segment".into(),
        series: vec![SegmentKind::MostNegative.label().into(), SegmentKind::MostPositive.label().into()],
        groups: neg
            .categories
            .iter()
            .enumerate()
            .map(|(i, c)| BarGroup {
                label: c.clone(),
                values: vec![Some(neg.proportions[i]), Some(pos.proportions[i])],
                intervals: vec![None, None],
            })
            .collect(),
    })
}

pub const GROUP_CATE_HEADER: [&str; 5] = ["variable", "category", "uplift", "n_treated", "n_control"];

pub fn group_cate_rows(table: &GroupCateTable) -> Vec<Vec<String>> {
    table
        .entries
        .iter()
        .map(|e| {
            vec![
                table.variable.clone(),
                e.category.clone(),
                opt(e.uplift),
                e.n_treated.to_string(),
                e.n_control.to_string(),
            ]
        })
        .collect()
}

pub fn group_cate_chart(table: &GroupCateTable) -> String {
    vertical_bars(&BarChart {
        title: format!("Observed uplift by {}", table.variable),
        category_label: table.variable.clone(),
        value_label: "Observed uplift (treatment − control)".into(),
        series: vec!["uplift".into()],
        groups: table
            .entries
            .iter()
            .map(|e| BarGroup {
                label: e.category.clone(),
                values: vec![e.uplift],
                intervals: vec![None],
            })
            .collect(),
    })
}

pub const OLS_HEADER: [&str; 5] = ["label", "coef", "std_err", "t", "p"];

pub fn ols_rows(summary: &OlsSummary) -> Vec<Vec<String>> {
    summary
        .coefficients
        .iter()
        .map(|c| vec![c.label.clone(), num(c.coef), num(c.std_err), num(c.t), num(c.p)])
        .collect()
}

/// Regression table in the familiar `coef / std err / t / P>|t|` layout.
pub fn ols_table(summary: &OlsSummary, dependent: &str) -> String {
    const RULE: &str = "==============================================================================";
    const THIN: &str = "------------------------------------------------------------------------------";
    let n = summary.n_obs as f64;
    let p = (summary.df_model + 1) as f64;
    let adj = 1.0 - (1.0 - summary.r_squared) * (n - 1.0) / (n - p);
    let mut s = String::new();
    let _ = writeln!(s, "{:^78}", "OLS Regression Results");
    let _ = writeln!(s, "{RULE}");
    let left = |k: &str, v: String| format!("{k:<16}{v:>22}");
    let right = |k: &str, v: String| format!("{k:<22}{v:>16}");
    let f = summary.f_statistic.map_or("n/a".into(), |v| format!("{v:.3}"));
    let fp = summary.f_p_value.map_or("n/a".into(), |v| format!("{v:.3e}"));
    let lines = [
        (left("Dep. Variable:", dependent.into()), right("R-squared:", format!("{:.3}", summary.r_squared))),
        (left("Model:", "OLS".into()), right("Adj. R-squared:", format!("{adj:.3}"))),
        (left("No. Observations:", summary.n_obs.to_string()), right("F-statistic:", f)),
        (left("Df Residuals:", summary.df_residuals.to_string()), right("Prob (F-statistic):", fp)),
        (left("Df Model:", summary.df_model.to_string()), String::new()),
    ];
    for (a, b) in lines {
        let _ = writeln!(s, "{}", format!("{a}  {b}").trim_end());
    }
    let _ = writeln!(s, "{RULE}");
    let width = summary.coefficients.iter().map(|c| c.label.len()).max().unwrap_or(0).max(30);
    let _ = writeln!(s, "{:width$}{:>12}{:>12}{:>10}{:>10}", "", "coef", "std err", "t", "P>|t|");
    let _ = writeln!(s, "{THIN}");
    for c in &summary.coefficients {
        let _ = writeln!(
            s,
            "{:width$}{:>12.4}{:>12.3}{:>10.3}{:>10.3}",
            c.label, c.coef, c.std_err, c.t, c.p
        );
    }
    let _ = writeln!(s, "{RULE}");
    s
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
