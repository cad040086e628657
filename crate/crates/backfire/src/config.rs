//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//! out = "results"
//!
//! [input]
//! csv = "survey.csv"          # or a [synthetic] table instead
//!
//! [schema]
//! treatment = "Condition"
//! outcome = "belief"
//! drop = "first"
//! [[schema.variables]]
//! name = "Ethnicity"
//! categories = ["White", "Hispanic", "Black", "Other"]
//! ```
//!
//! Relative paths inside the file resolve against the file's directory.
//! Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use backfire_core::{
    CategoricalSchema, EffectRule, EvalConfig, GbtParams, Normalization, OutcomeLabels, SyntheticSpec, Variable,
};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub plots: bool,
    pub input: Option<InputSection>,
    pub synthetic: Option<SyntheticSection>,
    pub schema: SchemaSection,
    #[serde(default)]
    pub labels: LabelSection,
    #[serde(default)]
    pub gbt: GbtParams,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub importance: ImportanceSection,
    #[serde(default)]
    pub segments: SegmentsSection,
    #[serde(default)]
    pub ols: OlsSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSection {
    pub treatment: String,
    pub outcome: String,
    #[serde(default = "default_drop")]
    pub drop: String,
    pub variables: Vec<VariableSection>,
}

fn default_drop() -> String {
    "first".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSection {
    pub name: String,
    pub categories: Vec<String>,
}

/// Raw CSV strings for the treatment flag and the outcome.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelSection {
    pub treatment: Vec<String>,
    pub control: Vec<String>,
    pub outcome_positive: Vec<String>,
    pub outcome_negative: Vec<String>,
}

impl Default for LabelSection {
    fn default() -> Self {
        let outcome = OutcomeLabels::default();
        Self {
            treatment: vec!["1".into()],
            control: vec!["0".into()],
            outcome_positive: outcome.positive,
            outcome_negative: outcome.negative,
        }
    }
}

impl LabelSection {
    pub fn outcome_labels(&self) -> OutcomeLabels {
        OutcomeLabels {
            positive: self.outcome_positive.clone(),
            negative: self.outcome_negative.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("treatment", &self.treatment),
            ("control", &self.control),
            ("outcome_positive", &self.outcome_positive),
            ("outcome_negative", &self.outcome_negative),
        ] {
            if list.is_empty() {
                return Err(CliError::Config(format!("labels.{name} must not be empty")));
            }
        }
        let overlap = |a: &[String], b: &[String]| a.iter().find(|x| b.contains(x)).cloned();
        if let Some(l) = overlap(&self.treatment, &self.control) {
            return Err(CliError::Config(format!("label `{l}` is both treatment and control")));
        }
        if let Some(l) = overlap(&self.outcome_positive, &self.outcome_negative) {
            return Err(CliError::Config(format!("label `{l}` is both a positive and a negative outcome")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub n_replicates: Option<usize>,
    pub population_size: Option<usize>,
    pub train_fraction: Option<f64>,
    pub n_quantiles: Option<usize>,
    pub ci_level: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImportanceSection {
    pub normalization: Normalization,
}

impl Default for ImportanceSection {
    fn default() -> Self {
        Self {
            normalization: Normalization::RawAveraged,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentsSection {
    pub variables: Vec<String>,
    pub fraction: f64,
    /// Enables the targeting report when set.
    pub threshold: Option<f64>,
}

impl Default for SegmentsSection {
    fn default() -> Self {
        Self {
            variables: Vec::new(),
            fraction: 0.1,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OlsSection {
    #[serde(default)]
    pub variables: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub n: usize,
    pub base_rate: f64,
    #[serde(default = "half")]
    pub treatment_probability: f64,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    /// Per-variable category distributions; unlisted variables are uniform.
    #[serde(default)]
    pub probabilities: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub effects: Vec<RuleSection>,
    #[serde(default)]
    pub baseline: Vec<RuleSection>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    /// Variable → category; an empty table matches every row.
    #[serde(default)]
    pub when: BTreeMap<String, String>,
    pub effect: f64,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub replicates: Option<usize>,
    pub quantiles: Option<usize>,
    pub train_fraction: Option<f64>,
    pub variables: Vec<String>,
    pub fraction: Option<f64>,
    pub threshold: Option<f64>,
    pub plots: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Csv(PathBuf),
    Synthetic { spec: SyntheticSpec, n: usize },
}

/// Fully validated settings for one command.
#[derive(Debug, Clone)]
pub struct Run {
    pub schema: Arc<CategoricalSchema>,
    pub labels: LabelSection,
    pub input: InputSource,
    pub params: GbtParams,
    pub eval: EvalConfig,
    pub normalization: Normalization,
    pub segment_variables: Vec<String>,
    pub ols_variables: Vec<String>,
    pub fraction: f64,
    pub threshold: Option<f64>,
    pub out: PathBuf,
    pub plots: bool,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read configuration {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Applies `overrides`, resolves relative paths against `base_dir` and
    /// validates everything a command may need.
    pub fn resolve(&self, overrides: &Overrides, base_dir: &Path) -> Result<Run> {
        if self.schema.drop != "first" {
            return Err(CliError::Config(format!(
                "unsupported drop policy `{}` (only `first` is available)",
                self.schema.drop
            )));
        }
        let variables = self
            .schema
            .variables
            .iter()
            .map(|v| Variable::new(v.name.clone(), v.categories.clone()))
            .collect();
        let schema = Arc::new(CategoricalSchema::new(
            variables,
            self.schema.treatment.clone(),
            self.schema.outcome.clone(),
        )?);
        self.labels.validate()?;

        let seed = overrides.seed.unwrap_or(self.seed);
        let defaults = EvalConfig::default();
        let eval = EvalConfig {
            n_replicates: overrides
                .replicates
                .or(self.eval.n_replicates)
                .unwrap_or(defaults.n_replicates),
            population_size: self.eval.population_size.unwrap_or(defaults.population_size),
            train_fraction: overrides
                .train_fraction
                .or(self.eval.train_fraction)
                .unwrap_or(defaults.train_fraction),
            n_quantiles: overrides
                .quantiles
                .or(self.eval.n_quantiles)
                .unwrap_or(defaults.n_quantiles),
            ci_level: self.eval.ci_level.unwrap_or(defaults.ci_level),
            master_seed: seed,
        };
        eval.validate()?;
        self.gbt.validate()?;

        let input = match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "configure exactly one input source: [input] or [synthetic], not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "no input source: add an [input] csv path or a [synthetic] table".into(),
                ))
            }
            (Some(input), None) => InputSource::Csv(base_dir.join(&input.csv)),
            (None, Some(syn)) => InputSource::Synthetic {
                spec: synthetic_spec(syn, &schema, seed)?,
                n: syn.n,
            },
        };

        let pick = |section: &[String]| -> Result<Vec<String>> {
            let chosen = if overrides.variables.is_empty() {
                section.to_vec()
            } else {
                overrides.variables.clone()
            };
            for name in &chosen {
                schema.require_variable(name)?;
            }
            Ok(chosen)
        };
        let segment_variables = pick(&self.segments.variables)?;
        let ols_variables = pick(&self.ols.variables)?;

        let fraction = overrides.fraction.unwrap_or(self.segments.fraction);
        if !(fraction > 0.0 && fraction <= 0.5) {
            return Err(CliError::Config(format!("segment fraction {fraction} outside (0, 0.5]")));
        }
        let threshold = overrides.threshold.or(self.segments.threshold);
        if threshold.is_some_and(|t| !t.is_finite()) {
            return Err(CliError::Config("targeting threshold must be finite".into()));
        }
        let threads = overrides.threads.or(self.threads);
        if threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        let out = match (&overrides.out, &self.out) {
            (Some(out), _) => out.clone(),
            (None, Some(out)) => base_dir.join(out),
            (None, None) => PathBuf::from("."),
        };

        Ok(Run {
            schema,
            labels: self.labels.clone(),
            input,
            params: self.gbt.clone(),
            eval,
            normalization: self.importance.normalization,
            segment_variables,
            ols_variables,
            fraction,
            threshold,
            out,
            plots: overrides.plots || self.plots,
            threads,
        })
    }
}

fn synthetic_spec(syn: &SyntheticSection, schema: &Arc<CategoricalSchema>, run_seed: u64) -> Result<SyntheticSpec> {
    let mut spec = SyntheticSpec::uniform(Arc::clone(schema), syn.base_rate, syn.seed.unwrap_or(run_seed));
    spec.treatment_probability = syn.treatment_probability;
    for (name, probs) in &syn.probabilities {
        let v = schema.require_variable(name)?;
        spec.category_probabilities[v] = probs.clone();
    }
    let rule = |r: &RuleSection| -> Result<EffectRule> {
        let conditions: Vec<(&str, &str)> = r.when.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        Ok(EffectRule::when(schema, &conditions, r.effect)?)
    };
    for r in &syn.effects {
        spec = spec.with_effect(rule(r)?);
    }
    for r in &syn.baseline {
        spec = spec.with_baseline(rule(r)?);
    }
    if syn.n == 0 {
        return Err(CliError::Config("synthetic.n must be positive".into()));
    }
    spec.validate()?;
    Ok(spec)
}
