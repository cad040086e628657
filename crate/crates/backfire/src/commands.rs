//! The five pipeline commands. Each returns the files it wrote, in order.

use std::path::PathBuf;

use backfire_core::ols::interaction_ols;
use backfire_core::rng::mix_seed;
use backfire_core::segments::{aggregate_profiles, segment_size};
use backfire_core::{
    fit_tlearner, generate_cohort, group_cate_table, one_hot_encode, predict_cate, targeting_policy, Cohort,
    ImportanceReport, Normalization, QuantileUpliftReport, ReplicatePlan,
};
use serde::Serialize;

use crate::config::{InputSource, Run};
use crate::driver::run_replicates_parallel;
use crate::error::{CliError, Result};
use crate::io::{load_csv, write_cohort_csv};
use crate::report::*;

/// Seed stream of the full-cohort T-learner behind the targeting report.
const TARGETING_STREAM: u64 = u64::MAX;

pub fn load_cohort(run: &Run) -> Result<Cohort> {
    match &run.input {
        InputSource::Csv(path) => load_csv(path, &run.schema, &run.labels),
        InputSource::Synthetic { spec, n } => Ok(generate_cohort(spec, *n)?),
    }
}

fn out_path(run: &Run, name: &str) -> PathBuf {
    run.out.join(name)
}

#[derive(Serialize)]
struct Settings<'a> {
    seed: u64,
    n_replicates: usize,
    population_size: usize,
    train_fraction: f64,
    n_quantiles: usize,
    ci_level: f64,
    gbt: &'a backfire_core::GbtParams,
}

impl<'a> Settings<'a> {
    fn of(run: &'a Run) -> Self {
        Self {
            seed: run.eval.master_seed,
            n_replicates: run.eval.n_replicates,
            population_size: run.eval.population_size,
            train_fraction: run.eval.train_fraction,
            n_quantiles: run.eval.n_quantiles,
            ci_level: run.eval.ci_level,
            gbt: &run.params,
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T> {
    settings: Settings<'a>,
    #[serde(flatten)]
    report: &'a T,
}

pub fn evaluate_report(run: &Run, cohort: &Cohort) -> Result<QuantileUpliftReport> {
    let plan = ReplicatePlan::quantiles_only(run.params.clone(), run.eval.clone());
    let outcomes = run_replicates_parallel(cohort, &plan, run.threads)?;
    Ok(QuantileUpliftReport::aggregate(&run.eval, &outcomes)?)
}

pub fn cmd_evaluate(run: &Run) -> Result<Vec<PathBuf>> {
    let cohort = load_cohort(run)?;
    let report = evaluate_report(run, &cohort)?;
    ensure_dir(&run.out)?;
    let mut w = Written::default();
    w.csv(out_path(run, "quantile_uplift.csv"), &QUANTILE_HEADER, &quantile_rows(&report))?;
    w.json(
        out_path(run, "quantile_uplift.json"),
        &Document { settings: Settings::of(run), report: &report },
    )?;
    if run.plots {
        w.text(out_path(run, "quantile_uplift.svg"), &quantile_chart(&report))?;
    }
    Ok(w.0)
}

pub fn importance_report(run: &Run, cohort: &Cohort) -> Result<ImportanceReport> {
    let plan = ReplicatePlan {
        importance: true,
        ..ReplicatePlan::quantiles_only(run.params.clone(), run.eval.clone())
    };
    let outcomes = run_replicates_parallel(cohort, &plan, run.threads)?;
    let report = ImportanceReport::aggregate(cohort.schema(), run.eval.ci_level, &outcomes)?;
    Ok(match run.normalization {
        Normalization::RawAveraged => report,
        Normalization::Renormalized => report.renormalized(),
    })
}

pub fn cmd_importance(run: &Run) -> Result<Vec<PathBuf>> {
    let cohort = load_cohort(run)?;
    let report = importance_report(run, &cohort)?;
    ensure_dir(&run.out)?;
    let mut w = Written::default();
    w.csv(out_path(run, "importance.csv"), &IMPORTANCE_HEADER, &importance_rows(&report))?;
    w.json(
        out_path(run, "importance.json"),
        &Document { settings: Settings::of(run), report: &report },
    )?;
    if run.plots {
        w.text(out_path(run, "importance.svg"), &importance_chart(&report))?;
    }
    Ok(w.0)
}

#[derive(Serialize)]
struct TargetingSummary {
    threshold: f64,
    n_rows: usize,
    n_selected: usize,
    mean_tau_hat_selected: Option<f64>,
    mean_tau_hat_unselected: Option<f64>,
    /// Only for cohorts with ground truth.
    mean_true_tau_selected: Option<f64>,
    mean_true_tau_unselected: Option<f64>,
}

fn split_means(values: &[f64], selected: &[bool]) -> (Option<f64>, Option<f64>) {
    let mean = |want: bool| {
        let (s, n) = values
            .iter()
            .zip(selected)
            .filter(|(_, &sel)| sel == want)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
        (n > 0).then(|| s / n as f64)
    };
    (mean(true), mean(false))
}

pub fn cmd_segments(run: &Run) -> Result<Vec<PathBuf>> {
    if run.segment_variables.is_empty() {
        return Err(CliError::Config(
            "no segment variables: pass --variable or set segments.variables".into(),
        ));
    }
    let cohort = load_cohort(run)?;
    let indices: Vec<usize> = run
        .segment_variables
        .iter()
        .map(|v| cohort.schema().require_variable(v))
        .collect::<backfire_core::Result<_>>()?;
    let segment_rows = segment_size(run.eval.test_size(), run.fraction)?;
    let plan = ReplicatePlan {
        profile_variables: indices.clone(),
        extreme_fraction: run.fraction,
        ..ReplicatePlan::quantiles_only(run.params.clone(), run.eval.clone())
    };
    let outcomes = run_replicates_parallel(&cohort, &plan, run.threads)?;
    let profiles = aggregate_profiles(cohort.schema(), &indices, segment_rows, &outcomes)?;

    ensure_dir(&run.out)?;
    let mut w = Written::default();
    for (name, pair) in run.segment_variables.iter().zip(&profiles) {
        w.csv(out_path(run, &file_name("segments", name, "csv")), &PROFILE_HEADER, &profile_rows(pair))?;
        w.json(out_path(run, &file_name("segments", name, "json")), &[&pair.0, &pair.1])?;
        if run.plots {
            w.text(out_path(run, &file_name("segments", name, "svg")), &profile_chart(pair))?;
        }
        let table = group_cate_table(&cohort, name)?;
        w.csv(
            out_path(run, &file_name("group_cate", name, "csv")),
            &GROUP_CATE_HEADER,
            &group_cate_rows(&table),
        )?;
        w.json(out_path(run, &file_name("group_cate", name, "json")), &table)?;
        if run.plots {
            w.text(out_path(run, &file_name("group_cate", name, "svg")), &group_cate_chart(&table))?;
        }
    }

    if let Some(threshold) = run.threshold {
        let model = fit_tlearner(&cohort, &run.params, mix_seed(run.eval.master_seed, TARGETING_STREAM))?;
        let tau_hat = predict_cate(&model, &one_hot_encode(&cohort))?;
        let mut selected = vec![false; cohort.len()];
        for i in targeting_policy(&tau_hat, threshold) {
            selected[i] = true;
        }
        let truth = cohort.true_tau();
        let mut header = vec!["row", "tau_hat", "selected"];
        if truth.is_some() {
            header.push("true_tau");
        }
        let rows: Vec<Vec<String>> = (0..cohort.len())
            .map(|i| {
                let mut r = vec![(i + 1).to_string(), num(tau_hat[i]), u8::from(selected[i]).to_string()];
                if let Some(t) = truth {
                    r.push(num(t[i]));
                }
                r
            })
            .collect();
        w.csv(out_path(run, "targeting.csv"), &header, &rows)?;
        let (sel, unsel) = split_means(&tau_hat, &selected);
        let (true_sel, true_unsel) = truth.map_or((None, None), |t| split_means(t, &selected));
        w.json(
            out_path(run, "targeting.json"),
            &TargetingSummary {
                threshold,
                n_rows: cohort.len(),
                n_selected: selected.iter().filter(|&&s| s).count(),
                mean_tau_hat_selected: sel,
                mean_tau_hat_unselected: unsel,
                mean_true_tau_selected: true_sel,
                mean_true_tau_unselected: true_unsel,
            },
        )?;
    }
    Ok(w.0)
}

#[derive(Serialize)]
struct OlsDocument<'a> {
    dependent: &'a str,
    variable: &'a str,
    #[serde(flatten)]
    summary: &'a backfire_core::OlsSummary,
}

pub fn cmd_ols(run: &Run) -> Result<Vec<PathBuf>> {
    if run.ols_variables.is_empty() {
        return Err(CliError::Config("no OLS variables: pass --variable or set ols.variables".into()));
    }
    let cohort = load_cohort(run)?;
    let dependent = cohort.schema().outcome_column().to_string();
    let summaries = run
        .ols_variables
        .iter()
        .map(|v| interaction_ols(&cohort, v))
        .collect::<backfire_core::Result<Vec<_>>>()?;
    ensure_dir(&run.out)?;
    let mut w = Written::default();
    for (name, summary) in run.ols_variables.iter().zip(&summaries) {
        w.text(out_path(run, &file_name("ols", name, "txt")), &ols_table(summary, &dependent))?;
        w.csv(out_path(run, &file_name("ols", name, "csv")), &OLS_HEADER, &ols_rows(summary))?;
        w.json(
            out_path(run, &file_name("ols", name, "json")),
            &OlsDocument { dependent: &dependent, variable: name, summary },
        )?;
    }
    Ok(w.0)
}

pub fn cmd_synth(run: &Run) -> Result<Vec<PathBuf>> {
    let InputSource::Synthetic { spec, n } = &run.input else {
        return Err(CliError::Config("synth needs a [synthetic] input section".into()));
    };
    let cohort = generate_cohort(spec, *n)?;
    ensure_dir(&run.out)?;
    let path = out_path(run, "cohort.csv");
    write_cohort_csv(&path, &cohort, &run.labels)?;
    Ok(vec![path])
}
