//! Kernel evaluation by direct integration of Poisson-kernel derivatives in t:
//!
//!   sum_n lambda_n^{-s} d^j P_n(theta) P_n(phi) = (1/Gamma(s)) int_0^inf t^{s-1} d^j H_t dt.
//!
//! Kernels are first reduced to blocks with j <= 1, so small t can be served
//! by the product formula. The near region is covered by panels graded toward
//! t = 0 on the scale of rho, the far region by panels of length 1/c, where
//! c is the slowest decay rate present, up to an explicit tail bound.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::basis::{deriv_table, trig_poly_all};
use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::kernels::{Decomposition, KernelKind, KernelStrategy};
use crate::params::JacobiParams;
use crate::poisson::{poisson_kernel, product_deriv_theta, PoissonMode};
use crate::quadrature::gauss_legendre;
use crate::series::{local_value, rho, Block};

/// Settings of the t-integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TSplitConfig {
    /// Boundary between the near and far regions.
    pub split_point: f64,
    /// Gauss nodes per graded panel of the near region.
    pub near_nodes: usize,
    /// Gauss nodes per far panel; far panels have length 1/c.
    pub far_nodes: usize,
    /// Decay rate for the far map and tail bound; the smallest retained
    /// eigenvalue when unset.
    pub tail_rate_c: Option<f64>,
    /// Number of dyadic panels below min(rho, split).
    pub depth: usize,
}

impl Default for TSplitConfig {
    fn default() -> Self {
        Self { split_point: 1.0, near_nodes: 16, far_nodes: 16, tail_rate_c: None, depth: 36 }
    }
}

const TAIL_TOL: f64 = 1e-13;

/// Kernel strategy integrating the Poisson kernel in t.
pub struct TQuadrature;

struct Nodes {
    t: Vec<f64>,
    w: Vec<f64>,
}

fn t_nodes(cfg: &TSplitConfig, rho: f64, c: f64, s_max: f64) -> Result<Nodes> {
    let split = cfg.split_point;
    if !(split > 0.0) {
        return Err(Error::Config(format!("split_point must be positive, got {split}")));
    }
    let (gx, gw) = gauss_legendre(cfg.near_nodes)?;
    let mut t = Vec::new();
    let mut w = Vec::new();
    let push_panel = |l: f64, r: f64, t: &mut Vec<f64>, w: &mut Vec<f64>| {
        let h = 0.5 * (r - l);
        for (x, wx) in gx.iter().zip(&gw) {
            t.push(l + h * (1.0 + x));
            w.push(h * wx);
        }
    };
    let top = rho.min(split);
    let mut lo = top * (-(cfg.depth as f64) * std::f64::consts::LN_2).exp();
    push_panel(0.0, lo, &mut t, &mut w);
    while lo < split {
        let hi = (2.0 * lo).min(split);
        push_panel(lo, hi, &mut t, &mut w);
        lo = hi;
    }
    // far region: panels of length 1/c up to T with e^{-cT} T^{s-1} below the tolerance
    let mut big_t = split + 1.0;
    while (-c * big_t).exp() * big_t.max(1.0).powf((s_max - 1.0).max(0.0)) / c > TAIL_TOL {
        big_t += 1.0 / c;
    }
    let (fx, fw) = gauss_legendre(cfg.far_nodes)?;
    let panels = ((big_t - split) * c).ceil().max(1.0) as usize;
    let h = 0.5 * (big_t - split) / panels as f64;
    for p in 0..panels {
        let lo = split + 2.0 * h * p as f64;
        for (x, wx) in fx.iter().zip(&fw) {
            t.push(lo + h * (1.0 + x));
            w.push(h * wx);
        }
    }
    Ok(Nodes { t, w })
}

/// d^j H_t(theta, phi) on a t-grid, from n = 1 when compensated.
fn poisson_on_grid(
    params: &JacobiParams,
    j: usize,
    compensated: bool,
    theta: f64,
    phi: f64,
    ts: &[f64],
    cfg: &EvalConfig,
) -> Result<Vec<f64>> {
    let t_min = cfg.series.t_min;
    let n_top = ts
        .iter()
        .filter(|&&t| t >= t_min)
        .fold(None, |m: Option<f64>, &t| Some(m.map_or(t, |m| m.min(t))))
        .map(|t| cfg.series.n_max(params, t, j))
        .transpose()?;
    let tables = match n_top {
        Some(n) => Some((deriv_table(params, j, n, theta)?, trig_poly_all(params, n, phi)?)),
        None => None,
    };
    let start = usize::from(compensated);
    let mass = params.mass();
    ts.iter()
        .map(|&t| {
            if t >= t_min {
                let (d, p) = tables.as_ref().expect("tables exist when a node is above t_min");
                let n = cfg.series.n_max(params, t, j)?;
                Ok((start..=n).map(|k| (-t * params.lambda(k)).exp() * d[k] * p[k]).sum())
            } else if !params.has_product_formula() {
                Err(Error::ProductUnavailable { alpha: params.alpha(), beta: params.beta() })
            } else if j == 0 {
                let h = poisson_kernel(params, t, theta, phi, PoissonMode::Product, cfg)?;
                Ok(if compensated { h - (-t * params.lambda(0)).exp() / mass } else { h })
            } else {
                product_deriv_theta(params, t, theta, phi, cfg)
            }
        })
        .collect()
}

fn block_value(
    params: &JacobiParams,
    blk: &Block,
    theta: f64,
    phi: f64,
    cfg: &EvalConfig,
    cache: &mut Vec<((usize, bool), Nodes, Vec<f64>)>,
    c: f64,
    s_max: f64,
) -> Result<f64> {
    if let Some(v) = local_value(params, blk)? {
        return Ok(v);
    }
    let j = usize::from(blk.deriv);
    let comp = blk.compensated && !blk.deriv;
    let key = (j, comp);
    if !cache.iter().any(|(k, _, _)| *k == key) {
        let nodes = t_nodes(&cfg.tsplit, rho(theta, phi), c, s_max)?;
        let vals = poisson_on_grid(params, j, comp, theta, phi, &nodes.t, cfg)?;
        cache.push((key, nodes, vals));
    }
    let (_, nodes, vals) = cache.iter().find(|(k, _, _)| *k == key).expect("inserted above");
    let g = gamma(blk.s);
    Ok(nodes.t.iter().zip(&nodes.w).zip(vals).map(|((t, w), v)| w * t.powf(blk.s - 1.0) * v).sum::<f64>() / g)
}

impl KernelStrategy for TQuadrature {
    fn name(&self) -> &'static str {
        "tquad"
    }

    fn eval(
        &self,
        params: &JacobiParams,
        kind: KernelKind,
        pairs: &[(f64, f64)],
        cfg: &EvalConfig,
    ) -> Result<Vec<f64>> {
        let dec = Decomposition::new(params, kind)?;
        let keeps_n0 = dec.blocks.iter().any(|b| b.s > 0.0 && !b.deriv && !b.compensated);
        let c = cfg.tsplit.tail_rate_c.unwrap_or(if keeps_n0 { params.lambda(0) } else { params.lambda(1) });
        if !(c > 0.0) {
            return Err(Error::Config(format!("tail rate must be positive, got {c}")));
        }
        let s_max = dec.blocks.iter().map(|b| b.s).fold(1.0, f64::max);
        pairs
            .iter()
            .map(|&(theta, phi)| {
                if theta == phi {
                    return Err(Error::Domain(format!("kernel is not defined on the diagonal theta = phi = {theta}")));
                }
                let coef = dec.coefficients(theta);
                let mut cache = Vec::new();
                let mut acc = 0.0;
                for (blk, a) in dec.blocks.iter().zip(&coef) {
                    if *a != 0.0 {
                        acc += a * block_value(params, blk, theta, phi, cfg, &mut cache, c, s_max)?;
                    }
                }
                Ok(acc)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::AbelSeries;
    use std::f64::consts::PI;

    fn tq(cfg: &EvalConfig) -> EvalConfig {
        EvalConfig { kernel_strategy: "tquad".into(), ..cfg.clone() }
    }

    #[test]
    fn chebyshev_kernels_near_the_diagonal() {
        let c = JacobiParams::new(-0.5, -0.5).unwrap();
        let cfg = tq(&EvalConfig::default());
        for &x in &[1.0, 1e-3, 1e-7] {
            let (t, p) = (1.0, 1.0 + x);
            let r1 = TQuadrature.eval(&c, KernelKind::Riesz { order: 1 }, &[(t, p)], &cfg).unwrap()[0];
            let e = -(1.0 / (2.0 * PI)) * (1.0 / (0.5 * (t - p)).tan() + 1.0 / (0.5 * (t + p)).tan());
            assert!((r1 - e).abs() < 1e-8 * e.abs(), "{x}: {r1} vs {e}");
            let r2 = TQuadrature.eval(&c, KernelKind::Riesz { order: 2 }, &[(t, p)], &cfg).unwrap()[0];
            assert!((r2 - 1.0 / PI).abs() < 1e-8, "{x}: {r2}");
        }
    }

    #[test]
    fn agrees_with_smoothed_series() {
        let cfg = tq(&EvalConfig::default());
        for &(a, b) in &[(0.0, 0.0), (1.0, 0.0), (0.5, -0.3)] {
            let p = JacobiParams::new(a, b).unwrap();
            let pairs = [(1.0, 1.6), (0.7, 2.2)];
            for kind in [
                KernelKind::Potential { sigma: 1.0, j: 0, compensated: false },
                KernelKind::Potential { sigma: 1.5, j: 1, compensated: false },
                KernelKind::Riesz { order: 1 },
                KernelKind::Riesz { order: 2 },
            ] {
                if !p.has_product_formula() {
                    assert!(TQuadrature.eval(&p, kind, &pairs, &cfg).is_err());
                    continue;
                }
                let x = TQuadrature.eval(&p, kind, &pairs, &cfg).unwrap();
                let y = AbelSeries.eval(&p, kind, &pairs, &cfg).unwrap();
                for (u, v) in x.iter().zip(&y) {
                    assert!((u - v).abs() < 1e-8 * v.abs().max(1.0), "{p} {kind:?}: {u} vs {v}");
                }
            }
        }
    }
}
