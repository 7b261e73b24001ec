use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Threshold below which `alpha + beta + 1` is treated as zero.
pub const TAU_ZERO_EPS: f64 = 1e-14;

/// The parameter pair (alpha, beta) together with tau = (alpha + beta + 1) / 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct JacobiParams {
    alpha: f64,
    beta: f64,
    tau: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for JacobiParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        JacobiParams::new(raw.alpha, raw.beta)
    }
}

impl From<JacobiParams> for RawParams {
    fn from(p: JacobiParams) -> Self {
        RawParams { alpha: p.alpha, beta: p.beta }
    }
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha <= -1.0 || beta <= -1.0 {
            return Err(Error::InvalidParams(format!("need alpha > -1 and beta > -1, got ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta, tau: (alpha + beta + 1.0) / 2.0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// True when zero belongs to the spectrum, i.e. alpha + beta = -1.
    pub fn tau_is_zero(&self) -> bool {
        (self.alpha + self.beta + 1.0).abs() < TAU_ZERO_EPS
    }

    /// Eigenvalue square root |n + tau| attached to the degree-n polynomial.
    pub fn lambda(&self, n: usize) -> f64 {
        if n == 0 && self.tau_is_zero() {
            0.0
        } else {
            (n as f64 + self.tau).abs()
        }
    }

    /// Parameters shifted by `k` in both entries, as produced by differentiation.
    pub fn shifted(&self, k: u32) -> Self {
        let k = k as f64;
        Self { alpha: self.alpha + k, beta: self.beta + k, tau: self.tau + k }
    }

    /// Total mass B(alpha + 1, beta + 1) of the measure on (0, pi).
    pub fn mass(&self) -> f64 {
        (ln_gamma(self.alpha + 1.0) + ln_gamma(self.beta + 1.0) - ln_gamma(self.alpha + self.beta + 2.0)).exp()
    }

    /// True when the product formula for the Poisson kernel applies.
    pub fn has_product_formula(&self) -> bool {
        self.alpha >= -0.5 && self.beta >= -0.5
    }

    /// Coefficient A(theta) of the first-order term in the Jacobi operator.
    pub fn drift(&self, theta: f64) -> f64 {
        (self.alpha - self.beta + (self.alpha + self.beta + 1.0) * theta.cos()) / theta.sin()
    }
}

impl std::fmt::Display for JacobiParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.alpha, self.beta)
    }
}

/// The five parameter pairs used throughout the verification suite.
pub fn test_set() -> Vec<JacobiParams> {
    [(-0.5, -0.5), (1.0, 0.0), (0.5, -0.3), (-0.7, 2.0), (-0.6, -0.8)]
        .iter()
        .map(|&(a, b)| JacobiParams::new(a, b).expect("valid test pair"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(JacobiParams::new(-1.0, 0.0).is_err());
        assert!(JacobiParams::new(0.0, -1.5).is_err());
        assert!(JacobiParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn tau_and_zero_flag() {
        let p = JacobiParams::new(-0.5, -0.5).unwrap();
        assert_eq!(p.tau(), 0.0);
        assert!(p.tau_is_zero());
        let q = JacobiParams::new(1.0, 0.0).unwrap();
        assert_eq!(q.tau(), 1.0);
        assert!(!q.tau_is_zero());
        let r = JacobiParams::new(-0.6, -0.8).unwrap();
        assert!((r.tau() + 0.2).abs() < 1e-15);
        assert!((r.lambda(0) - 0.2).abs() < 1e-15);
        assert!((r.lambda(1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn masses_match_beta_integrals() {
        let pi = std::f64::consts::PI;
        assert!((JacobiParams::new(-0.5, -0.5).unwrap().mass() - pi).abs() < 1e-13);
        assert!((JacobiParams::new(1.0, 0.0).unwrap().mass() - 0.5).abs() < 1e-14);
        assert!((JacobiParams::new(0.0, 0.0).unwrap().mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn serde_rejects_unknown_fields() {
        let ok: JacobiParams = serde_json::from_str(r#"{"alpha":1.0,"beta":0.0}"#).unwrap();
        assert_eq!(ok.tau(), 1.0);
        assert!(serde_json::from_str::<JacobiParams>(r#"{"alpha":1.0,"beta":0.0,"x":1}"#).is_err());
        assert!(serde_json::from_str::<JacobiParams>(r#"{"alpha":-2.0,"beta":0.0}"#).is_err());
    }
}
