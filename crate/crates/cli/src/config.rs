use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thermopost::simulate::GeneratorParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    PartitionLimit,
    PosteriorConcentration,
    DirectGibbs,
    HiddenGibbs,
    Misspecified,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::PartitionLimit,
        Scenario::PosteriorConcentration,
        Scenario::DirectGibbs,
        Scenario::HiddenGibbs,
        Scenario::Misspecified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::PartitionLimit => "partition_limit",
            Scenario::PosteriorConcentration => "posterior_concentration",
            Scenario::DirectGibbs => "direct_gibbs",
            Scenario::HiddenGibbs => "hidden_gibbs",
            Scenario::Misspecified => "misspecified",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    fn requires_theta_star(self) -> bool {
        matches!(self, Scenario::DirectGibbs | Scenario::HiddenGibbs)
    }
}

/// Invalid configuration; `field` names the offending entry.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl fmt::Display) -> Self {
        Self {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum ThetaValue {
    Scalar(f64),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub generator: String,
    #[serde(default)]
    pub logistic_a: Option<f64>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub period: Option<usize>,
    #[serde(default)]
    pub jitter: Option<f64>,
    #[serde(default)]
    pub pattern: Option<Vec<f64>>,
}

impl SourceConfig {
    pub fn params(&self) -> GeneratorParams {
        let d = GeneratorParams::default();
        GeneratorParams {
            logistic_a: self.logistic_a.unwrap_or(d.logistic_a),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            period: self.period.unwrap_or(d.period),
            jitter: self.jitter.unwrap_or(d.jitter),
            pattern: self.pattern.clone(),
        }
    }
}

const FIELDS: [&str; 15] = [
    "scenario",
    "sft",
    "family",
    "loss",
    "theta_star",
    "n_schedule",
    "replicates",
    "seed",
    "seeds",
    "beta",
    "output_dir",
    "radius",
    "mass_threshold",
    "audit_depth",
    "source",
];

type Object = serde_json::Map<String, serde_json::Value>;

/// Deserializes one optional field so that type errors name the field.
fn field<T: DeserializeOwned>(obj: &Object, name: &str) -> Result<Option<T>, ConfigError> {
    match obj.get(name) {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(v) => T::deserialize(v).map(Some).map_err(|e| ConfigError::new(name, e)),
    }
}

pub const DEFAULT_RADIUS: f64 = 0.05;
pub const DEFAULT_MASS_THRESHOLD: f64 = 0.05;
pub const DEFAULT_AUDIT_DEPTH: usize = 10;

/// A validated scenario configuration. Relative paths are resolved against the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub sft: PathBuf,
    pub family: PathBuf,
    pub loss: PathBuf,
    pub theta_star: Option<Vec<f64>>,
    pub n_schedule: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Explicit replicate seeds; derived from `seed` when absent.
    pub seeds: Option<Vec<u64>>,
    pub beta: f64,
    pub output_dir: PathBuf,
    pub radius: f64,
    pub mass_threshold: f64,
    pub audit_depth: usize,
    pub source: Option<SourceConfig>,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::new(field, "is required"))
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::new("config", e))?;
        let obj = value
            .as_object()
            .ok_or_else(|| ConfigError::new("config", "must be a JSON object"))?;
        if let Some(unknown) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            return Err(ConfigError::new(unknown, "is not a recognized field"));
        }

        let name: String = required(field(obj, "scenario")?, "scenario")?;
        let scenario = Scenario::parse(&name).ok_or_else(|| {
            let known: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
            ConfigError::new("scenario", format!("unknown scenario {name:?}; expected one of {known:?}"))
        })?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let sft = resolve(required(field(obj, "sft")?, "sft")?);
        let family = resolve(required(field(obj, "family")?, "family")?);
        let loss = resolve(required(field(obj, "loss")?, "loss")?);
        let source: Option<SourceConfig> = field(obj, "source")?;
        let seeds: Option<Vec<u64>> = field(obj, "seeds")?;

        let theta_star = field::<ThetaValue>(obj, "theta_star")?.map(|t| match t {
            ThetaValue::Scalar(x) => vec![x],
            ThetaValue::Point(p) => p,
        });
        if scenario.requires_theta_star() && theta_star.is_none() {
            return Err(ConfigError::new(
                "theta_star",
                format!("is required for scenario {}", scenario.name()),
            ));
        }
        if theta_star.as_ref().is_some_and(|t| t.is_empty() || t.iter().any(|x| !x.is_finite())) {
            return Err(ConfigError::new("theta_star", "must be a finite grid point"));
        }
        if scenario == Scenario::Misspecified && source.is_none() {
            return Err(ConfigError::new("source", "is required for scenario misspecified"));
        }
        if matches!(scenario, Scenario::PartitionLimit | Scenario::PosteriorConcentration)
            && theta_star.is_none()
            && source.is_none()
        {
            return Err(ConfigError::new(
                "theta_star",
                "either theta_star or source must name the observation process",
            ));
        }

        let n_schedule: Vec<usize> = required(field(obj, "n_schedule")?, "n_schedule")?;
        if n_schedule.is_empty() || n_schedule[0] == 0 || n_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("n_schedule", "must be a non-empty, strictly increasing list of positive lengths"));
        }
        let replicates = field(obj, "replicates")?.unwrap_or(1usize);
        if replicates == 0 {
            return Err(ConfigError::new("replicates", "must be at least 1"));
        }
        if let Some(seeds) = &seeds {
            if seeds.len() != replicates {
                return Err(ConfigError::new(
                    "seeds",
                    format!("lists {} seeds for {replicates} replicates", seeds.len()),
                ));
            }
        }
        let beta = field(obj, "beta")?.unwrap_or(1.0f64);
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(ConfigError::new("beta", "must be finite and non-negative"));
        }
        let radius = field(obj, "radius")?.unwrap_or(DEFAULT_RADIUS);
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(ConfigError::new("radius", "must be finite and non-negative"));
        }
        let mass_threshold = field(obj, "mass_threshold")?.unwrap_or(DEFAULT_MASS_THRESHOLD);
        if !(mass_threshold > 0.0 && mass_threshold < 1.0) {
            return Err(ConfigError::new("mass_threshold", "must lie in (0, 1)"));
        }
        let audit_depth = field(obj, "audit_depth")?.unwrap_or(DEFAULT_AUDIT_DEPTH);
        if audit_depth == 0 {
            return Err(ConfigError::new("audit_depth", "must be positive"));
        }
        if let Some(src) = &source {
            thermopost::simulate::Generator::from_name(&src.generator)
                .map_err(|e| ConfigError::new("source", e))?;
        }
        Ok(Self {
            scenario,
            sft,
            family,
            loss,
            theta_star,
            n_schedule,
            replicates,
            seed: field(obj, "seed")?.unwrap_or(0u64),
            seeds,
            beta,
            output_dir: resolve(field(obj, "output_dir")?.unwrap_or_else(|| PathBuf::from("out"))),
            radius,
            mass_threshold,
            audit_depth,
            source,
        })
    }

    pub fn replicate_seeds(&self) -> Vec<u64> {
        self.seeds
            .clone()
            .unwrap_or_else(|| thermopost::posterior::replicate_seeds(self.seed, self.replicates))
    }

    pub fn n_max(&self) -> usize {
        *self.n_schedule.last().expect("schedule is non-empty")
    }
}
