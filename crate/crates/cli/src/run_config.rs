//! Strict JSON run configuration.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use riesz_jacobi::params::test_set;
use riesz_jacobi::{EvalConfig, JacobiParams};

/// Output format of command results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on besides the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Parameter pairs for `verify` when none is given on the command line.
    pub params: Vec<JacobiParams>,
    pub eval: EvalConfig,
    pub format: Format,
    /// Directory receiving verification reports.
    pub out_dir: String,
    /// Worker threads; 0 means one per available core.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: test_set(),
            eval: EvalConfig::default(),
            format: Format::Csv,
            out_dir: "reports".into(),
            jobs: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.eval.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_strictness() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_json()).unwrap(), c);
        assert!(RunConfig::parse(r#"{"jobz": 2}"#).is_err());
        assert!(RunConfig::parse(r#"{"eval": {"series": {"t_mn": 1}}}"#).is_err());
        let partial = RunConfig::parse(r#"{"jobs": 3}"#).unwrap();
        assert_eq!(partial.jobs, 3);
        assert_eq!(partial.params.len(), 5);
    }
}
