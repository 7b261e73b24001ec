//! The Jacobi-Poisson kernel H_t, its compensated form, theta-derivatives,
//! the product formula and the q-function.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::basis::{check_angle, deriv_table, trig_poly_all};
use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::params::JacobiParams;
use crate::quadrature::{gauss_jacobi_rule, gauss_jacobi_x, gauss_legendre};

/// How many terms of the series are kept for a given t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesTruncation {
    /// Smallest t evaluated by the series in auto mode.
    pub t_min: f64,
    /// Bound on the discarded tail.
    pub tail_tol: f64,
    /// Hard cap on the number of terms.
    pub n_cap: usize,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self { t_min: 5e-3, tail_tol: 1e-14, n_cap: 200_000 }
    }
}

impl SeriesTruncation {
    /// Tail bound sum_{n > n_max} (n+1)^p e^{-t(n + tau)} with
    /// p = alpha + beta + 2 + 3j, bounded by the integral from n_max.
    fn tail(&self, p: f64, t: f64, tau: f64, n: usize) -> f64 {
        let x = t * (n as f64 + 1.0);
        let lead = (t * (1.0 - tau)).exp();
        if p + 1.0 <= 0.0 {
            // integrand is decreasing
            return lead * (-x).exp() * (n as f64 + 1.0).powf(p) / t.min(1.0) * 2.0;
        }
        lead * (ln_gamma(p + 1.0) - (p + 1.0) * t.ln()).exp() * gamma_ur(p + 1.0, x)
    }

    /// Number of terms for the j-th theta-derivative at time t.
    pub fn n_max(&self, params: &JacobiParams, t: f64, j: usize) -> Result<usize> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let p = params.alpha() + params.beta() + 2.0 + 3.0 * j as f64;
        let tau = params.tau();
        let mut hi = 16usize;
        while self.tail(p, t, tau, hi) > self.tail_tol {
            if hi > self.n_cap {
                return Err(Error::TruncationCap { needed: hi, cap: self.n_cap });
            }
            hi *= 2;
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.tail(p, t, tau, mid) > self.tail_tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if hi > self.n_cap {
            return Err(Error::TruncationCap { needed: hi, cap: self.n_cap });
        }
        Ok(hi)
    }
}

/// Evaluation route for the Poisson kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoissonMode {
    Series,
    Product,
    Auto,
}

impl std::str::FromStr for PoissonMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Self::Series),
            "product" => Ok(Self::Product),
            "auto" => Ok(Self::Auto),
            other => Err(Error::Unknown { kind: "poisson mode", name: other.to_string() }),
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("t must be positive, got {t}")))
    }
}

/// sum_n e^{-t lambda_n} d^j P_n(theta) P_n(phi), from n = 1 when compensated.
pub fn series_deriv(
    params: &JacobiParams,
    j: usize,
    t: f64,
    theta: f64,
    phi: f64,
    compensated: bool,
    trunc: &SeriesTruncation,
) -> Result<f64> {
    check_t(t)?;
    check_angle(phi)?;
    let n = trunc.n_max(params, t, j)?;
    let d = deriv_table(params, j, n, theta)?;
    let p = trig_poly_all(params, n, phi)?;
    let start = usize::from(compensated);
    Ok((start..=n).map(|k| (-t * params.lambda(k)).exp() * d[k] * p[k]).sum())
}

/// Series values of d^j H_t(theta, phi_i) for many phi at once.
pub fn series_row(
    params: &JacobiParams,
    j: usize,
    t: f64,
    theta: f64,
    phis: &[f64],
    compensated: bool,
    trunc: &SeriesTruncation,
) -> Result<Vec<f64>> {
    check_t(t)?;
    let n = trunc.n_max(params, t, j)?;
    let d = deriv_table(params, j, n, theta)?;
    let start = usize::from(compensated);
    let c: Vec<f64> = (0..=n).map(|k| (-t * params.lambda(k)).exp() * d[k]).collect();
    phis.iter()
        .map(|&phi| {
            let p = trig_poly_all(params, n, phi)?;
            Ok((start..=n).map(|k| c[k] * p[k]).sum())
        })
        .collect()
}

/// Settings of the product-formula quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProductConfig {
    /// Gauss nodes per panel of the graded dPi rules.
    pub panel_nodes: usize,
}

impl Default for ProductConfig {
    fn default() -> Self {
        Self { panel_nodes: 16 }
    }
}

/// The q-function at one point of the (u, v) square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QPoint {
    pub theta: f64,
    pub phi: f64,
    pub u: f64,
    pub v: f64,
}

impl QPoint {
    pub fn new(theta: f64, phi: f64, u: f64, v: f64) -> Result<Self> {
        check_angle(theta)?;
        check_angle(phi)?;
        if !(-1.0..=1.0).contains(&u) || !(-1.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("u, v must lie in [-1, 1], got {u}, {v}")));
        }
        Ok(Self { theta, phi, u, v })
    }

    /// 1 - u sin(theta/2) sin(phi/2) - v cos(theta/2) cos(phi/2), written
    /// around u = v = 1 to avoid cancellation.
    pub fn q(&self) -> f64 {
        q_shifted(self.theta, self.phi, 1.0 - self.u, 1.0 - self.v)
    }

    /// Partial derivative of q in theta.
    pub fn dq_dtheta(&self) -> f64 {
        dq_shifted(self.theta, self.phi, 1.0 - self.u, 1.0 - self.v)
    }
}

fn q_shifted(theta: f64, phi: f64, x: f64, y: f64) -> f64 {
    let s = (0.25 * (theta - phi)).sin();
    2.0 * s * s + x * (0.5 * theta).sin() * (0.5 * phi).sin() + y * (0.5 * theta).cos() * (0.5 * phi).cos()
}

fn dq_shifted(theta: f64, phi: f64, x: f64, y: f64) -> f64 {
    0.5 * (0.5 * (theta - phi)).sin()
        + 0.5 * (x * (0.5 * theta).cos() * (0.5 * phi).sin() - y * (0.5 * theta).sin() * (0.5 * phi).cos())
}

/// The three elementary identities for products of half-angle functions,
/// as (name, left side, right side).
pub fn elementary_relations(theta: f64, phi: f64) -> Vec<(&'static str, f64, f64)> {
    let (st, ct) = (0.5 * theta).sin_cos();
    let (sp, cp) = (0.5 * phi).sin_cos();
    let dm = (0.25 * (theta - phi)).sin();
    let sp4 = (0.25 * (theta + phi)).sin();
    let cp4 = (0.25 * (theta + phi)).cos();
    vec![
        ("one_minus_cos_cos", 1.0 - ct * cp, dm * dm + sp4 * sp4),
        ("one_minus_sin_sin", 1.0 - st * sp, dm * dm + cp4 * cp4),
        ("q_at_corner", 1.0 - st * sp - ct * cp, 2.0 * dm * dm),
    ]
}

/// Nodes x = 1 - u and weights of dPi_nu, graded toward x = 0 with finest
/// panel `width`.
fn dpi_rule(nu: f64, width: f64, m: usize) -> Result<Vec<(f64, f64)>> {
    if nu == -0.5 {
        return Ok(vec![(0.0, 0.5), (2.0, 0.5)]);
    }
    let a = nu - 0.5;
    // dPi_nu = c (1-u^2)^{nu - 1/2} du = c x^a (2-x)^a dx
    let c = (ln_gamma(nu + 1.0) - ln_gamma(nu + 0.5)).exp() / std::f64::consts::PI.sqrt();
    let mut breaks = vec![0.0];
    let mut w = width.clamp(1e-300, 1.0);
    while w < 1.0 {
        breaks.push(w);
        w *= 2.0;
    }
    breaks.push(1.0);
    breaks.push(2.0);
    let (gx, gw) = gauss_legendre(m)?;
    let (lx, lw) = gauss_jacobi_x(0.0, a, m)?;
    let (rx, rw) = gauss_jacobi_x(a, 0.0, m)?;
    let mut out = Vec::new();
    let last = breaks.len() - 2;
    for i in 0..=last {
        let (l, r) = (breaks[i], breaks[i + 1]);
        let h = 0.5 * (r - l);
        if i == 0 {
            // weight x^a on [0, r]
            for (y, wy) in lx.iter().zip(&lw) {
                let x = l + h * (1.0 + y);
                out.push((x, c * wy * h.powf(a + 1.0) * (2.0 - x).powf(a)));
            }
        } else if i == last {
            // weight (2 - x)^a on [1, 2]
            for (y, wy) in rx.iter().zip(&rw) {
                let x = l + h * (1.0 + y);
                out.push((x, c * wy * h.powf(a + 1.0) * x.powf(a)));
            }
        } else {
            for (y, wy) in gx.iter().zip(&gw) {
                let x = l + h * (1.0 + y);
                out.push((x, c * wy * h * (x * (2.0 - x)).powf(a)));
            }
        }
    }
    Ok(out)
}

/// Integrand family of the product formula: j = 0 gives H_t / C, j = 1 gives
/// d_theta H_t / C.
fn product_integral(params: &JacobiParams, j: usize, t: f64, theta: f64, phi: f64, pc: &ProductConfig) -> Result<f64> {
    let (a, b) = (params.alpha(), params.beta());
    let e = a + b + 2.0;
    let ch = 2.0 * (0.25 * t).sinh().powi(2);
    let dm = (0.25 * (theta - phi)).sin();
    let d = ch + 2.0 * dm * dm;
    let ss = (0.5 * theta).sin() * (0.5 * phi).sin();
    let cc = (0.5 * theta).cos() * (0.5 * phi).cos();
    let ru = dpi_rule(a, (d / ss).min(1.0) / 4.0, pc.panel_nodes)?;
    let rv = dpi_rule(b, (d / cc).min(1.0) / 4.0, pc.panel_nodes)?;
    let mut acc = 0.0;
    for &(x, wx) in &ru {
        let mut inner = 0.0;
        for &(y, wy) in &rv {
            let den = ch + q_shifted(theta, phi, x, y);
            inner += wy * if j == 0 { den.powf(-e) } else { dq_shifted(theta, phi, x, y) * den.powf(-e - 1.0) };
        }
        acc += wx * inner;
    }
    let s = (0.5 * t).sinh();
    Ok(if j == 0 { s * acc } else { -e * s * acc })
}

fn constant_cache() -> &'static Mutex<HashMap<(u64, u64, usize), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64, usize), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Normalizing constant of the product formula, fixed by the row mass
/// identity at t = 1/2.
pub fn product_constant(params: &JacobiParams, pc: &ProductConfig) -> Result<f64> {
    if !params.has_product_formula() {
        return Err(Error::ProductUnavailable { alpha: params.alpha(), beta: params.beta() });
    }
    let key = (params.alpha().to_bits(), params.beta().to_bits(), pc.panel_nodes);
    if let Some(&c) = constant_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(c);
    }
    let c = mass_ratio(params, 0.5, pc)?;
    constant_cache().lock().expect("cache poisoned").insert(key, c);
    Ok(c)
}

/// e^{-t|tau|} divided by the row integral of the unnormalized product formula.
pub fn mass_ratio(params: &JacobiParams, t: f64, pc: &ProductConfig) -> Result<f64> {
    let rule = gauss_jacobi_rule(params, 96)?;
    let theta = std::f64::consts::FRAC_PI_2;
    let mut m = 0.0;
    for (phi, w) in rule.nodes.iter().zip(&rule.weights) {
        m += w * product_integral(params, 0, t, theta, *phi, pc)?;
    }
    Ok((-t * params.tau().abs()).exp() / m)
}

fn product_eval(params: &JacobiParams, j: usize, t: f64, theta: f64, phi: f64, pc: &ProductConfig) -> Result<f64> {
    check_t(t)?;
    check_angle(theta)?;
    check_angle(phi)?;
    let c = product_constant(params, pc)?;
    Ok(c * product_integral(params, j, t, theta, phi, pc)?)
}

/// A way of evaluating H_t and its first theta-derivative.
pub trait PoissonEvaluator: Send + Sync {
    fn name(&self) -> &'static str;
    fn eval(&self, params: &JacobiParams, j: usize, t: f64, theta: f64, phi: f64, cfg: &EvalConfig) -> Result<f64>;
}

pub struct SeriesEvaluator;
pub struct ProductEvaluator;
pub struct AutoEvaluator;

impl PoissonEvaluator for SeriesEvaluator {
    fn name(&self) -> &'static str {
        "series"
    }
    fn eval(&self, params: &JacobiParams, j: usize, t: f64, theta: f64, phi: f64, cfg: &EvalConfig) -> Result<f64> {
        series_deriv(params, j, t, theta, phi, false, &cfg.series)
    }
}

impl PoissonEvaluator for ProductEvaluator {
    fn name(&self) -> &'static str {
        "product"
    }
    fn eval(&self, params: &JacobiParams, j: usize, t: f64, theta: f64, phi: f64, cfg: &EvalConfig) -> Result<f64> {
        if j > 1 {
            return Err(Error::Unsupported(format!("product formula provides derivatives up to order 1, got {j}")));
        }
        product_eval(params, j, t, theta, phi, &cfg.product)
    }
}

impl PoissonEvaluator for AutoEvaluator {
    fn name(&self) -> &'static str {
        "auto"
    }
    fn eval(&self, params: &JacobiParams, j: usize, t: f64, theta: f64, phi: f64, cfg: &EvalConfig) -> Result<f64> {
        if t >= cfg.series.t_min {
            SeriesEvaluator.eval(params, j, t, theta, phi, cfg)
        } else if params.has_product_formula() && j <= 1 {
            ProductEvaluator.eval(params, j, t, theta, phi, cfg)
        } else if !params.has_product_formula() {
            Err(Error::ProductUnavailable { alpha: params.alpha(), beta: params.beta() })
        } else {
            Err(Error::Unsupported(format!(
                "t = {t} below t_min needs the product formula, which has no order-{j} derivative"
            )))
        }
    }
}

pub fn evaluator(mode: PoissonMode) -> Box<dyn PoissonEvaluator> {
    match mode {
        PoissonMode::Series => Box::new(SeriesEvaluator),
        PoissonMode::Product => Box::new(ProductEvaluator),
        PoissonMode::Auto => Box::new(AutoEvaluator),
    }
}

/// H_t(theta, phi).
pub fn poisson_kernel(
    params: &JacobiParams,
    t: f64,
    theta: f64,
    phi: f64,
    mode: PoissonMode,
    cfg: &EvalConfig,
) -> Result<f64> {
    check_t(t)?;
    check_angle(theta)?;
    check_angle(phi)?;
    evaluator(mode).eval(params, 0, t, theta, phi, cfg)
}

/// H_t minus its n = 0 term.
pub fn poisson_kernel_compensated(
    params: &JacobiParams,
    t: f64,
    theta: f64,
    phi: f64,
    mode: PoissonMode,
    cfg: &EvalConfig,
) -> Result<f64> {
    if mode == PoissonMode::Series || (mode == PoissonMode::Auto && t >= cfg.series.t_min) {
        return series_deriv(params, 0, t, theta, phi, true, &cfg.series);
    }
    let h = poisson_kernel(params, t, theta, phi, mode, cfg)?;
    Ok(h - (-t * params.lambda(0)).exp() / params.mass())
}

/// d^j_theta H_t(theta, phi) by term-wise differentiation.
pub fn poisson_deriv_theta(
    params: &JacobiParams,
    j: usize,
    t: f64,
    theta: f64,
    phi: f64,
    cfg: &EvalConfig,
) -> Result<f64> {
    series_deriv(params, j, t, theta, phi, false, &cfg.series)
}

/// d_theta H_t(theta, phi) from the product formula.
pub fn product_deriv_theta(params: &JacobiParams, t: f64, theta: f64, phi: f64, cfg: &EvalConfig) -> Result<f64> {
    product_eval(params, 1, t, theta, phi, &cfg.product)
}

/// Upper envelope for |d^j H_t| at small t, up to a constant.
pub fn envelope_bound(params: &JacobiParams, j: usize, t: f64, theta: f64, phi: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("envelope needs 0 < t <= 1, got {t}")));
    }
    let pi = std::f64::consts::PI;
    let t2 = t * t;
    let a = (t2 + theta * theta + phi * phi).powf(-params.alpha() - 0.5);
    let b = (t2 + (pi - theta).powi(2) + (pi - phi).powi(2)).powf(-params.beta() - 0.5);
    let c = t / (t2 + (theta - phi).powi(2)).powf(1.0 + 0.5 * j as f64);
    Ok(a * b * c)
}
