//! Experiment configuration: scenario selection, filter choice, trial
//! plan, and numerical overrides, loadable from JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use lrfs_core::filter::{FilterConfig, FilterKind, TruncationConfig};
use lrfs_core::gaussian::{GmReduction, UnscentedConfig};
use lrfs_core::metrics::OspaConfig;
use lrfs_core::scenario::ScenarioConfig;

use crate::{Error, Result};

/// Either the name of a built-in scenario or a full inline description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioChoice {
    Named(String),
    Inline(Box<ScenarioConfig>),
}

impl ScenarioChoice {
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        match self {
            Self::Named(name) => match name.as_str() {
                "radar1" => Ok(ScenarioConfig::radar1()),
                "toa3" => Ok(ScenarioConfig::toa3()),
                other => Err(Error::Config(format!(
                    "scenario: unknown name {other:?} (expected \"radar1\", \"toa3\", or an inline scenario object)"
                ))),
            },
            Self::Inline(cfg) => Ok((**cfg).clone()),
        }
    }

    /// Short tag used in default output paths.
    pub fn tag(&self) -> &str {
        match self {
            Self::Named(name) => name,
            Self::Inline(_) => "custom",
        }
    }
}

fn default_trials() -> u32 {
    20
}

/// One experiment: which scenario and filter to run, how many Monte-Carlo
/// trials under which master seed, optional numerical overrides, and
/// where to write outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioChoice,
    pub filter: FilterKind,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    /// Hypothesis truncation override; defaults to the filter's preset.
    #[serde(default)]
    pub truncation: Option<TruncationConfig>,
    /// Per-track mixture reduction override.
    #[serde(default)]
    pub reduction: Option<GmReduction>,
    /// Unscented-transform parameter override.
    #[serde(default)]
    pub unscented: Option<UnscentedConfig>,
    #[serde(default)]
    pub ospa: OspaConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Also write one CSV per trial.
    #[serde(default)]
    pub keep_trials: bool,
}

impl ExperimentConfig {
    /// Minimal experiment on a built-in scenario with all defaults.
    pub fn named(scenario: &str, filter: FilterKind) -> Self {
        Self {
            scenario: ScenarioChoice::Named(scenario.to_string()),
            filter,
            trials: default_trials(),
            seed: 0,
            truncation: None,
            reduction: None,
            unscented: None,
            ospa: OspaConfig::default(),
            output_dir: None,
            keep_trials: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Step-level numerics: the filter's preset with any overrides applied.
    pub fn filter_config(&self) -> FilterConfig {
        let mut fc = FilterConfig::for_kind(self.filter);
        if let Some(t) = self.truncation {
            fc.truncation = t;
        }
        if let Some(r) = self.reduction {
            fc.reduction = r;
        }
        if let Some(u) = self.unscented {
            fc.unscented = u;
        }
        fc
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials: must be at least 1".into()));
        }
        let scenario = self.scenario.resolve()?;
        scenario.validate().map_err(|e| Error::Config(format!("scenario: {e}")))?;
        if let Some(t) = &self.truncation {
            t.validate().map_err(|e| Error::Config(format!("truncation: {e}")))?;
        }
        self.ospa.validate().map_err(|e| Error::Config(format!("ospa: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_scenarios_resolve_and_unknown_is_rejected() {
        assert_eq!(ScenarioChoice::Named("radar1".into()).resolve().unwrap().sensors.len(), 1);
        assert_eq!(ScenarioChoice::Named("toa3".into()).resolve().unwrap().sensors.len(), 3);
        assert!(ScenarioChoice::Named("sonar".into()).resolve().is_err());
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let text = r#"{"scenario": "radar1", "filter": "mdglmb"}"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(config.trials, 20);
        assert_eq!(config.seed, 0);
        assert_eq!(config.filter, FilterKind::MdGlmb);
        assert!(!config.keep_trials);
        let echoed = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json(&echoed).unwrap();
        assert_eq!(back.trials, config.trials);
    }

    #[test]
    fn inline_scenario_parses() {
        let scenario = ScenarioConfig::radar1();
        let config = ExperimentConfig {
            scenario: ScenarioChoice::Inline(Box::new(scenario)),
            ..ExperimentConfig::named("radar1", FilterKind::Lmb)
        };
        let text = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.scenario.tag(), "custom");
        assert_eq!(back.scenario.resolve().unwrap().scan_count, 200);
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut config = ExperimentConfig::named("radar1", FilterKind::MdGlmb);
        config.trials = 0;
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("trials"), "got: {err}");

        let mut config = ExperimentConfig::named("radar1", FilterKind::MdGlmb);
        config.ospa.cutoff = -1.0;
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("ospa"), "got: {err}");

        let unknown = r#"{"scenario": "radar1", "filter": "mdglmb", "bogus": 1}"#;
        assert!(ExperimentConfig::from_json(unknown).is_err());
    }

    #[test]
    fn overrides_replace_presets() {
        let mut config = ExperimentConfig::named("radar1", FilterKind::DGlmb);
        assert_eq!(config.filter_config().truncation.max_hypotheses, 1000);
        config.truncation =
            Some(TruncationConfig { max_hypotheses: 50, ..TruncationConfig::dglmb() });
        assert_eq!(config.filter_config().truncation.max_hypotheses, 50);
    }
}
