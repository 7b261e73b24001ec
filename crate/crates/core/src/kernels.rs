//! Potential kernels K_sigma, Riesz-Jacobi kernels R_N and their interlaced
//! counterparts, evaluated off the diagonal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::params::JacobiParams;
use crate::reduction::DerivReduction;
use crate::series::{block_sums, rho, Block};

/// Which derivative string defines the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    Interlaced,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "interlaced" => Ok(Self::Interlaced),
            other => Err(Error::Unknown { kind: "variant", name: other.to_string() }),
        }
    }
}

/// A kernel K(theta, phi); derivatives always act on theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// d^j_theta K_sigma, built from the compensated Poisson kernel when asked.
    Potential { sigma: f64, j: usize, compensated: bool },
    /// R_N = d^N K_{N/2}, compensated when tau = 0.
    Riesz { order: usize },
    /// The kernel of the interlaced transform, identity part removed.
    Interlaced { order: usize },
}

impl KernelKind {
    pub fn riesz(order: usize, variant: Variant) -> Self {
        match variant {
            Variant::Standard => Self::Riesz { order },
            Variant::Interlaced => Self::Interlaced { order },
        }
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A kernel written as a theta-dependent combination of series blocks.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub blocks: Vec<Block>,
    terms: Vec<Term>,
    reduction: Option<DerivReduction>,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    block: usize,
    source: Source,
    factor: f64,
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Constant,
    P(usize),
    Q(usize),
}

impl Decomposition {
    fn push(&mut self, block: Block, source: Source, factor: f64) {
        if factor == 0.0 {
            return;
        }
        let idx = match self.blocks.iter().position(|b| *b == block) {
            Some(i) => i,
            None => {
                self.blocks.push(block);
                self.blocks.len() - 1
            }
        };
        self.terms.push(Term { block: idx, source, factor });
    }

    pub fn new(params: &JacobiParams, kind: KernelKind) -> Result<Self> {
        let mut d = Self { blocks: Vec::new(), terms: Vec::new(), reduction: None };
        let tau2 = params.tau() * params.tau();
        match kind {
            KernelKind::Potential { sigma, j, compensated } => {
                if !(sigma > 0.0) {
                    return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
                }
                if !compensated && params.tau_is_zero() {
                    return Err(Error::Domain("tau = 0: only the compensated potential kernel exists".into()));
                }
                d.add_reduced(params, 2.0 * sigma, j, compensated);
            }
            KernelKind::Riesz { order } => {
                if order == 0 {
                    return Err(Error::Domain("Riesz order must be at least 1".into()));
                }
                d.add_reduced(params, order as f64, order, params.tau_is_zero());
            }
            KernelKind::Interlaced { order } => {
                if order == 0 {
                    return Err(Error::Domain("Riesz order must be at least 1".into()));
                }
                let m = order / 2;
                if order % 2 == 0 {
                    if params.tau_is_zero() {
                        // kernel of -projection onto constants
                        d.push(Block::comp(0.0), Source::Constant, 1.0);
                    } else {
                        for j in 1..=m {
                            let f = binom(m, j) * (-tau2).powi(j as i32);
                            d.push(Block::plain(2.0 * j as f64), Source::Constant, f);
                        }
                    }
                } else {
                    for j in 0..=m {
                        let f = binom(m, j) * (-tau2).powi(j as i32);
                        d.push(Block::deriv(2.0 * j as f64 + 1.0), Source::Constant, f);
                    }
                }
            }
        }
        Ok(d)
    }

    /// Adds sum_n lambda^{-s0} d^j P_n(theta) P_n(phi).
    fn add_reduced(&mut self, params: &JacobiParams, s0: f64, j: usize, compensated: bool) {
        let red = DerivReduction::new(params, j);
        let tau2 = params.tau() * params.tau();
        for k in 0..=red.degree() {
            // mu^k = sum_i C(k,i) tau^{2(k-i)} (-lambda^2)^i
            for i in 0..=k {
                let f = binom(k, i) * tau2.powi((k - i) as i32) * if i % 2 == 0 { 1.0 } else { -1.0 };
                let s = s0 - 2.0 * i as f64;
                let comp = compensated || k >= 1;
                // P has no mu^0 part once differentiated
                if k >= 1 || j == 0 {
                    self.push(Block { s, deriv: false, compensated: comp }, Source::P(k), f);
                }
                self.push(Block::deriv(s), Source::Q(k), f);
            }
        }
        self.reduction = Some(red);
    }

    /// Block coefficients at theta.
    pub fn coefficients(&self, theta: f64) -> Vec<f64> {
        let (p, q) = match &self.reduction {
            Some(r) => r.coefficients(theta),
            None => (vec![], vec![]),
        };
        let mut c = vec![0.0; self.blocks.len()];
        for t in &self.terms {
            let v = match t.source {
                Source::Constant => 1.0,
                Source::P(k) => p[k],
                Source::Q(k) => q[k],
            };
            c[t.block] += t.factor * v;
        }
        c
    }
}

/// A way of evaluating kernels at a batch of (theta, phi) pairs.
pub trait KernelStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn eval(&self, params: &JacobiParams, kind: KernelKind, pairs: &[(f64, f64)], cfg: &EvalConfig)
        -> Result<Vec<f64>>;
}

/// Smoothed spectral series with extrapolation in the smoothing parameter.
pub struct AbelSeries;

impl KernelStrategy for AbelSeries {
    fn name(&self) -> &'static str {
        "abel"
    }

    fn eval(
        &self,
        params: &JacobiParams,
        kind: KernelKind,
        pairs: &[(f64, f64)],
        cfg: &EvalConfig,
    ) -> Result<Vec<f64>> {
        let dec = Decomposition::new(params, kind)?;
        let sums = block_sums(params, &dec.blocks, pairs, &cfg.abel)?;
        Ok(pairs
            .iter()
            .zip(&sums)
            .map(|(&(t, _), row)| {
                let c = dec.coefficients(t);
                c.iter().zip(row).map(|(a, b)| a * b).sum()
            })
            .collect())
    }
}

/// Looks up a kernel strategy by name.
pub fn strategy(name: &str) -> Result<Box<dyn KernelStrategy>> {
    match name {
        "abel" => Ok(Box::new(AbelSeries)),
        "tquad" => Ok(Box::new(crate::tquad::TQuadrature)),
        other => Err(Error::Unknown { kind: "kernel strategy", name: other.to_string() }),
    }
}

pub fn strategy_names() -> Vec<&'static str> {
    vec!["abel", "tquad"]
}

/// Batch evaluation with the configured strategy. Pairs are grouped by the
/// dyadic band of their distance to the singular set, since the cost of a
/// batch is set by its closest pair.
pub fn kernel_values(
    params: &JacobiParams,
    kind: KernelKind,
    pairs: &[(f64, f64)],
    cfg: &EvalConfig,
) -> Result<Vec<f64>> {
    let strat = strategy(&cfg.kernel_strategy)?;
    let mut bands: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &(t, p)) in pairs.iter().enumerate() {
        let r = rho(t, p);
        let key = if r > 0.0 { r.log2().floor() as i32 } else { i32::MIN };
        bands.entry(key).or_default().push(i);
    }
    let mut out = vec![0.0; pairs.len()];
    for idx in bands.values() {
        let sub: Vec<(f64, f64)> = idx.iter().map(|&i| pairs[i]).collect();
        for (&i, v) in idx.iter().zip(strat.eval(params, kind, &sub, cfg)?) {
            out[i] = v;
        }
    }
    Ok(out)
}

fn single(params: &JacobiParams, kind: KernelKind, theta: f64, phi: f64, cfg: &EvalConfig) -> Result<f64> {
    if theta == phi {
        return Err(Error::Domain(format!("kernel is not defined on the diagonal theta = phi = {theta}")));
    }
    Ok(kernel_values(params, kind, &[(theta, phi)], cfg)?[0])
}

/// K_sigma(theta, phi), or its compensated version.
pub fn potential_kernel(
    params: &JacobiParams,
    sigma: f64,
    theta: f64,
    phi: f64,
    compensated: bool,
    cfg: &EvalConfig,
) -> Result<f64> {
    single(params, KernelKind::Potential { sigma, j: 0, compensated }, theta, phi, cfg)
}

/// d^j_theta K_sigma(theta, phi).
pub fn dtheta_potential_kernel(
    params: &JacobiParams,
    j: usize,
    sigma: f64,
    theta: f64,
    phi: f64,
    compensated: bool,
    cfg: &EvalConfig,
) -> Result<f64> {
    single(params, KernelKind::Potential { sigma, j, compensated }, theta, phi, cfg)
}

/// R_N(theta, phi).
pub fn riesz_kernel(params: &JacobiParams, order: usize, theta: f64, phi: f64, cfg: &EvalConfig) -> Result<f64> {
    single(params, KernelKind::Riesz { order }, theta, phi, cfg)
}

/// Kernel of the interlaced transform of order N.
pub fn riesz_kernel_interlaced(
    params: &JacobiParams,
    order: usize,
    theta: f64,
    phi: f64,
    cfg: &EvalConfig,
) -> Result<f64> {
    single(params, KernelKind::Interlaced { order }, theta, phi, cfg)
}
