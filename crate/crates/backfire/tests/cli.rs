use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use backfire::config::LabelSection;
use backfire::io::load_csv;
use backfire::{Overrides, RunConfig};
use backfire_core::generate_cohort;

const SCHEMA: &str = r#"
[schema]
treatment = "Condition"
outcome = "belief"
[[schema.variables]]
name = "Ethnicity"
categories = ["White", "Hispanic", "Black", "Other"]
[[schema.variables]]
name = "Sex"
categories = ["F", "M"]

[labels]
treatment = ["treatment"]
control = ["control"]

[gbt]
n_stages = 15

[eval]
n_replicates = 6
population_size = 500

[segments]
variables = ["Ethnicity"]

[ols]
variables = ["Ethnicity", "Sex"]
"#;

const SYNTHETIC: &str = r#"
[synthetic]
n = 1600
base_rate = 0.45
effects = [{ when = { Ethnicity = "Black" }, effect = 0.3 }, { when = { Ethnicity = "White" }, effect = -0.2 }]
"#;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, format!("seed = 11\n{SCHEMA}\n{body}")).unwrap();
    path
}

fn backfire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_backfire")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Vec<PathBuf> {
    let out = backfire(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap().lines().map(PathBuf::from).collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn every_command_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SYNTHETIC);
    let config = config.to_str().unwrap();
    for cmd in ["evaluate", "importance", "segments", "ols", "synth"] {
        let mut runs = Vec::new();
        for (label, threads) in [("a", "1"), ("b", "3")] {
            let out = dir.path().join(format!("{cmd}-{label}"));
            let files = run_ok(&[
                cmd, "--config", config, "--out", out.to_str().unwrap(), "--threads", threads, "--threshold", "0",
                "--plots",
            ]);
            assert!(!files.is_empty());
            runs.push(files);
        }
        assert_eq!(runs[0].len(), runs[1].len());
        for (a, b) in runs[0].iter().zip(&runs[1]) {
            assert_eq!(a.file_name(), b.file_name());
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{cmd}: {}", a.display());
        }
    }
}

#[test]
fn evaluate_writes_reports_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, format!("seed = 11\nout = \"results\"\n{SCHEMA}\n{SYNTHETIC}")).unwrap();
    let files = run_ok(&["evaluate", "--config", config.to_str().unwrap(), "--plots", "--quantiles", "5"]);
    let names: Vec<_> = files.iter().map(|f| f.file_name().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(names, ["quantile_uplift.csv", "quantile_uplift.json", "quantile_uplift.svg"]);
    assert!(files[0].starts_with(dir.path().join("results")));
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    assert!(csv.starts_with("quantile,mean,ci_low,ci_high,n_valid\n"));
    assert_eq!(csv.lines().count(), 6);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[1]).unwrap()).unwrap();
    assert_eq!(json["settings"]["n_replicates"], 6);
    assert_eq!(json["quantiles"].as_array().unwrap().len(), 5);
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SYNTHETIC);
    let config = config.to_str().unwrap();
    let a = run_ok(&["evaluate", "--config", config, "--out", dir.path().join("a").to_str().unwrap()]);
    let b = run_ok(&["evaluate", "--config", config, "--out", dir.path().join("b").to_str().unwrap(), "--seed", "12"]);
    assert_ne!(std::fs::read(&a[0]).unwrap(), std::fs::read(&b[0]).unwrap());
}

#[test]
fn missing_input_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[input]\ncsv = \"nowhere.csv\"");
    let out = backfire(&["evaluate", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nowhere.csv"), "{}", stderr(&out));
}

#[test]
fn missing_config_is_a_config_error() {
    let out = backfire(&["ols", "--config", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/definitely/not/here.toml"));
}

#[test]
fn unknown_variable_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SYNTHETIC);
    for cmd in ["importance", "segments", "ols"] {
        let out = backfire(&[cmd, "--config", config.to_str().unwrap(), "--variable", "Religion"]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(stderr(&out).contains("Religion"));
    }
}

#[test]
fn empty_segment_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SYNTHETIC);
    // 100 test rows × 0.005 selects nothing.
    let out = backfire(&[
        "segments", "--config", config.to_str().unwrap(), "--fraction", "0.005", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("selects no rows"), "{}", stderr(&out));
}

#[test]
fn segments_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SYNTHETIC);
    let out = dir.path().join("seg");
    let files = run_ok(&[
        "segments", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threshold", "0",
    ]);
    let names: Vec<_> = files.iter().map(|f| f.file_name().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(
        names,
        [
            "segments_Ethnicity.csv",
            "segments_Ethnicity.json",
            "group_cate_Ethnicity.csv",
            "group_cate_Ethnicity.json",
            "targeting.csv",
            "targeting.json"
        ]
    );
    let profile = std::fs::read_to_string(&files[0]).unwrap();
    // Two segments × four categories.
    assert_eq!(profile.lines().count(), 9);
    let targeting: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[5]).unwrap()).unwrap();
    let gap = targeting["mean_true_tau_selected"].as_f64().unwrap() - targeting["mean_true_tau_unselected"].as_f64().unwrap();
    assert!(gap > 0.0);
}

#[test]
fn ols_reproduces_residual_degrees_of_freedom() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SYNTHETIC);
    let files = run_ok(&["ols", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let table = std::fs::read_to_string(dir.path().join("ols_Ethnicity.txt")).unwrap();
    assert!(table.contains("Df Residuals:") && table.contains("1592"), "{table}");
    assert!(table.contains("Condition:Ethnicity[Other]"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ols_Sex.json")).unwrap()).unwrap();
    assert_eq!(json["df_residuals"], 1596);
    assert_eq!(files.len(), 6);
}

#[test]
fn rank_deficiency_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    // Every treated row is male, so Condition duplicates Sex[M].
    let mut csv = String::from("Ethnicity,Sex,Condition,belief\n");
    for i in 0..40 {
        let treated = i % 2 == 0;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            ["White", "Black"][i % 4 / 2],
            if treated { "M" } else { "F" },
            if treated { "treatment" } else { "control" },
            if i % 3 == 0 { "Yes" } else { "No" }
        ));
    }
    std::fs::write(dir.path().join("data.csv"), csv).unwrap();
    let config = write_config(dir.path(), "[input]\ncsv = \"data.csv\"");
    let out = backfire(&["ols", "--config", config.to_str().unwrap(), "--variable", "Sex", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("Condition"));
}

#[test]
fn synth_round_trips_through_load_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_config(dir.path(), SYNTHETIC);
    let files = run_ok(&["synth", "--config", config_path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(files, [dir.path().join("cohort.csv")]);
    assert_eq!(std::fs::read_to_string(&files[0]).unwrap().lines().count(), 1601);

    let run = RunConfig::load(&config_path).unwrap().resolve(&Overrides::default(), dir.path()).unwrap();
    let backfire::config::InputSource::Synthetic { spec, n } = &run.input else { panic!() };
    let generated = generate_cohort(spec, *n).unwrap();
    let labels = LabelSection { treatment: vec!["treatment".into()], control: vec!["control".into()], ..LabelSection::default() };
    assert_eq!(load_csv(&files[0], &run.schema, &labels).unwrap(), generated);
}

#[test]
fn synth_requires_synthetic_input() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[input]\ncsv = \"x.csv\"");
    let out = backfire(&["synth", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
