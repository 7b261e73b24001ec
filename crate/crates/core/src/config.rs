//! Every numerical tunable of an evaluation, serializable as strict JSON.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::poisson::{ProductConfig, SeriesTruncation};
use crate::series::AbelConfig;
use crate::tquad::TSplitConfig;
use crate::transforms::{PvLadder, RowConfig, SpectralConfig};

/// Pass thresholds of the verification checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub representation: f64,
    pub identities: f64,
    pub pv_zero: f64,
    pub closed_form: f64,
    pub envelope_stability: f64,
    pub large_t_fit: f64,
    pub probe_r2: f64,
    pub bounded_probe: f64,
    pub divergence_growth: f64,
    pub even_change: f64,
    pub basis: f64,
    pub eigen_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            representation: 1e-5,
            identities: 1e-8,
            pv_zero: 1e-6,
            closed_form: 1e-7,
            envelope_stability: 0.05,
            large_t_fit: 0.10,
            probe_r2: 0.99,
            bounded_probe: 1e-6,
            divergence_growth: 0.1,
            even_change: 1e-7,
            basis: 1e-10,
            eigen_residual: 1e-5,
        }
    }
}

/// Numerical settings shared by all modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub series: SeriesTruncation,
    pub product: ProductConfig,
    pub tsplit: TSplitConfig,
    pub abel: AbelConfig,
    /// Name of the kernel strategy: "abel" or "tquad".
    pub kernel_strategy: String,
    pub pv: PvLadder,
    pub row: RowConfig,
    pub spectral: SpectralConfig,
    pub tolerances: Tolerances,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            series: SeriesTruncation::default(),
            product: ProductConfig::default(),
            tsplit: TSplitConfig::default(),
            abel: AbelConfig::default(),
            kernel_strategy: "abel".into(),
            pv: PvLadder::default(),
            row: RowConfig::default(),
            spectral: SpectralConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl EvalConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        crate::kernels::strategy(&self.kernel_strategy)?;
        self.pv.validate()?;
        let pos = [
            ("series.t_min", self.series.t_min),
            ("series.tail_tol", self.series.tail_tol),
            ("tsplit.split_point", self.tsplit.split_point),
            ("abel.ratio", self.abel.ratio),
            ("row.max_panel", self.row.max_panel),
            ("spectral.tail_tol", self.spectral.tail_tol),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.abel.ratio >= 1.0 {
            return Err(Error::Config("abel.ratio must be below 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
