//! Off-diagonal evaluation of spectral kernel series
//!
//!   G(theta, phi) = sum_n lambda_n^{-s} d^j P_n(theta) P_n(phi),   j in {0, 1},
//!
//! by Abel smoothing and Richardson extrapolation. With Q(s, x) the regularized
//! upper incomplete gamma function, the smoothed sum
//!
//!   S(eps) = sum_n lambda_n^{-s} Q(s, eps lambda_n) d^j P_n(theta) P_n(phi)
//!
//! equals the t-integral of the Poisson kernel derivative cut at t = eps. The
//! kernel is odd and analytic in t away from the diagonal, so
//! S(eps) = G - sum_k c_k eps^{s+1+2k}, and a few dyadic values of eps remove
//! the leading error terms. The radius of analyticity is
//! rho = min(|theta - phi|, theta + phi, 2 pi - theta - phi), so the work grows
//! like 1/rho.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::basis::{check_angle, rec_a, rec_b};
use crate::error::{Error, Result};
use crate::params::JacobiParams;

/// One family of terms: multiplier lambda^{-s}, theta-derivative order 0 or 1,
/// and whether the n = 0 term is dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub s: f64,
    pub deriv: bool,
    pub compensated: bool,
}

impl Block {
    pub fn plain(s: f64) -> Self {
        Self { s, deriv: false, compensated: false }
    }

    pub fn comp(s: f64) -> Self {
        Self { s, deriv: false, compensated: true }
    }

    pub fn deriv(s: f64) -> Self {
        Self { s, deriv: true, compensated: false }
    }
}

/// Settings of the smoothed-series evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbelConfig {
    /// Number of dyadic smoothing levels combined by extrapolation.
    pub levels: usize,
    /// Coarsest smoothing parameter as a fraction of rho.
    pub ratio: f64,
    /// Terms are dropped once Q(s, eps lambda) is below this value.
    pub q_floor: f64,
    /// Hard cap on the number of terms.
    pub n_cap: usize,
}

impl Default for AbelConfig {
    fn default() -> Self {
        Self { levels: 5, ratio: 0.25, q_floor: 1e-18, n_cap: 60_000_000 }
    }
}

/// Distance from (theta, phi) to the nearest singular set of the kernels.
pub fn rho(theta: f64, phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    (theta - phi).abs().min(theta + phi).min(two_pi - theta - phi)
}

fn is_integer(s: f64) -> bool {
    s.fract() == 0.0 && s.abs() < 64.0
}

/// Q(s, x) for s > 0.
fn q_reg(s: f64, x: f64, e: f64) -> f64 {
    if is_integer(s) {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..(s as usize) {
            term *= x / k as f64;
            sum += term;
        }
        e * sum
    } else {
        gamma_ur(s, x)
    }
}

fn q_cutoff(s: f64, floor: f64) -> f64 {
    let mut x = 20.0;
    while q_reg(s, x, (-x).exp()) > floor {
        x += 0.5;
    }
    x
}

/// Weights r_l with sum r_l = 1 that cancel eps^{s+1+2k}, k < levels - 1,
/// for eps_l = eps_0 2^{-l}.
fn richardson_weights(s: f64, levels: usize) -> Result<Vec<f64>> {
    let mut m = DMatrix::<f64>::zeros(levels, levels);
    let mut rhs = DVector::<f64>::zeros(levels);
    for l in 0..levels {
        m[(0, l)] = 1.0;
    }
    rhs[0] = 1.0;
    for k in 0..levels.saturating_sub(1) {
        let p = s + 1.0 + 2.0 * k as f64;
        for l in 0..levels {
            m[(k + 1, l)] = (-(l as f64) * p * std::f64::consts::LN_2).exp();
        }
    }
    m.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::NonConvergence("singular extrapolation system".into()))
}

#[derive(Clone, Copy, Default)]
struct Lane {
    p_prev: f64,
    p_cur: f64,
    q_prev: f64,
    q_cur: f64,
    u_prev: f64,
    u_cur: f64,
    d_cur: f64,
    x_t: f64,
    x_p: f64,
    sin_t: f64,
}

/// Value of a block that reduces to a local operator (s <= 0), which off the
/// diagonal is only the removed n = 0 term; None for blocks that need summing.
pub(crate) fn local_value(params: &JacobiParams, blk: &Block) -> Result<Option<f64>> {
    if blk.s > 0.0 {
        if !blk.deriv && !blk.compensated && params.tau_is_zero() {
            return Err(Error::Domain("uncompensated series with tau = 0 has a zero eigenvalue".into()));
        }
        return Ok(None);
    }
    let even = blk.s.fract() == 0.0 && (blk.s as i64) % 2 == 0;
    if !even {
        return Err(Error::Unsupported(format!(
            "series with multiplier lambda^{} is not summable off the diagonal",
            -blk.s
        )));
    }
    if !blk.deriv && blk.compensated {
        Ok(Some(-params.lambda(0).powf(-blk.s) / params.mass()))
    } else {
        Ok(Some(0.0))
    }
}

/// Sums of every block at every (theta, phi) pair: result[pair][block].
pub fn block_sums(
    params: &JacobiParams,
    blocks: &[Block],
    pairs: &[(f64, f64)],
    cfg: &AbelConfig,
) -> Result<Vec<Vec<f64>>> {
    let nb = blocks.len();
    let mut out = vec![vec![0.0; nb]; pairs.len()];
    if pairs.is_empty() || nb == 0 {
        return Ok(out);
    }
    let mut rho_min = f64::INFINITY;
    for &(t, p) in pairs {
        check_angle(t)?;
        check_angle(p)?;
        let r = rho(t, p);
        if r <= 0.0 {
            return Err(Error::Domain(format!("kernel evaluated on the diagonal theta = phi = {t}")));
        }
        rho_min = rho_min.min(r);
    }
    let mass = params.mass();
    let lambda0 = params.lambda(0);
    let tau0 = params.tau_is_zero();

    let mut streamed: Vec<usize> = Vec::new();
    let mut constant = vec![0.0; nb];
    for (b, blk) in blocks.iter().enumerate() {
        match local_value(params, blk)? {
            Some(v) => constant[b] = v,
            None => streamed.push(b),
        }
    }
    if streamed.is_empty() {
        for row in out.iter_mut() {
            row.copy_from_slice(&constant);
        }
        return Ok(out);
    }

    // distinct exponents
    let mut exps: Vec<f64> = Vec::new();
    for &b in &streamed {
        if !exps.iter().any(|&e| e == blocks[b].s) {
            exps.push(blocks[b].s);
        }
    }
    let levels = cfg.levels.max(1);
    let eps0 = cfg.ratio * rho_min;
    let eps: Vec<f64> = (0..levels).map(|l| eps0 * (-(l as f64) * std::f64::consts::LN_2).exp()).collect();
    let weights: Vec<Vec<f64>> = exps.iter().map(|&s| richardson_weights(s, levels)).collect::<Result<_>>()?;
    let cut: Vec<f64> = exps.iter().map(|&s| q_cutoff(s, cfg.q_floor)).collect();
    let x_max = cut.iter().cloned().fold(0.0, f64::max);
    let n_max = (x_max / eps[levels - 1] - params.tau()).ceil().max(1.0) as usize + 1;
    if n_max > cfg.n_cap {
        return Err(Error::TruncationCap { needed: n_max, cap: cfg.n_cap });
    }
    let block_exp: Vec<usize> =
        streamed.iter().map(|&b| exps.iter().position(|&e| e == blocks[b].s).unwrap()).collect();
    let need_deriv = streamed.iter().any(|&b| blocks[b].deriv);

    let (a, b) = (params.alpha(), params.beta());
    let (a1, b1) = (a + 1.0, b + 1.0);
    let p0 = 1.0 / mass.sqrt();
    let u0 = 1.0 / params.shifted(1).mass().sqrt();
    let mut lanes: Vec<Lane> = pairs
        .iter()
        .map(|&(t, p)| Lane {
            p_cur: p0,
            q_cur: p0,
            u_cur: u0,
            x_t: t.cos(),
            x_p: p.cos(),
            sin_t: t.sin(),
            ..Default::default()
        })
        .collect();
    let mut acc = vec![0.0; pairs.len() * streamed.len()];
    let ns = streamed.len();
    let mut filt = vec![0.0; exps.len()];
    let mut bfilt = vec![0.0; ns];
    let mut expo = vec![0.0; levels];
    let mut step = vec![0.0; levels];
    for l in 0..levels {
        step[l] = (-eps[l]).exp();
    }
    let mut an = 0.0; // a_n for the base family
    let mut an_sh = 0.0; // a_{n-1} for the shifted family
    let tau = params.tau();

    for n in 0..=n_max {
        let lam = params.lambda(n);
        // smoothing factors exp(-eps_l lambda_n)
        if n <= 1 || n % 256 == 0 {
            for l in 0..levels {
                expo[l] = (-eps[l] * lam).exp();
            }
        } else {
            for l in 0..levels {
                expo[l] *= step[l];
            }
        }
        let skip_n0 = n == 0 && tau0;
        for (e, &s) in exps.iter().enumerate() {
            if skip_n0 {
                filt[e] = 0.0;
                continue;
            }
            let mut sum = 0.0;
            for l in 0..levels {
                let x = eps[l] * lam;
                if x < cut[e] {
                    sum += weights[e][l] * q_reg(s, x, expo[l]);
                }
            }
            filt[e] = sum * lam.powf(-s);
        }
        for (k, &b) in streamed.iter().enumerate() {
            bfilt[k] = filt[block_exp[k]];
            if n == 0 && blocks[b].deriv {
                bfilt[k] = 0.0;
            }
        }

        // recurrence coefficients
        let an1 = rec_a(a, b, n + 1);
        let bn = rec_b(a, b, n);
        let nf = (n + 1) as f64;
        let dcoef = -0.5 * (nf * (nf + 2.0 * tau)).sqrt();
        let (bn_sh, an1_sh) = if need_deriv { (rec_b(a1, b1, n), rec_a(a1, b1, n + 1)) } else { (0.0, 1.0) };

        for (i, ln) in lanes.iter_mut().enumerate() {
            let row = &mut acc[i * ns..(i + 1) * ns];
            let pt = ln.p_cur;
            let pp = ln.q_cur;
            let dt = ln.d_cur;
            for k in 0..ns {
                let left = if blocks[streamed[k]].deriv { dt } else { pt };
                row[k] += bfilt[k] * left * pp;
            }
            // advance to n + 1
            let np = ((ln.x_t - bn) * pt - an * ln.p_prev) / an1;
            ln.p_prev = pt;
            ln.p_cur = np;
            let nq = ((ln.x_p - bn) * pp - an * ln.q_prev) / an1;
            ln.q_prev = pp;
            ln.q_cur = nq;
            if need_deriv {
                // d P_{n+1} uses the shifted polynomial of degree n
                ln.d_cur = dcoef * ln.sin_t * ln.u_cur;
                let nu = ((ln.x_t - bn_sh) * ln.u_cur - an_sh * ln.u_prev) / an1_sh;
                ln.u_prev = ln.u_cur;
                ln.u_cur = nu;
            }
        }
        an = an1;
        an_sh = an1_sh;
    }

    for (i, row) in out.iter_mut().enumerate() {
        row.copy_from_slice(&constant);
        for (k, &b) in streamed.iter().enumerate() {
            let blk = blocks[b];
            let mut v = acc[i * ns + k];
            if !blk.deriv && blk.compensated {
                if tau0 {
                    // the cut t-integral of the removed constant mode
                    let w = &weights[block_exp[k]];
                    let shift: f64 = (0..levels).map(|l| w[l] * eps[l].powf(blk.s)).sum();
                    v -= shift / (mass * gamma(blk.s + 1.0));
                } else {
                    v -= lambda0.powf(-blk.s) / mass;
                }
            }
            row[b] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cheb() -> JacobiParams {
        JacobiParams::new(-0.5, -0.5).unwrap()
    }

    fn cheb_r1(t: f64, p: f64) -> f64 {
        -(1.0 / (2.0 * PI)) * (1.0 / ((t - p) / 2.0).tan() + 1.0 / ((t + p) / 2.0).tan())
    }

    #[test]
    fn weights_sum_to_one() {
        for s in [0.5, 1.0, 2.0, 3.0] {
            let w = richardson_weights(s, 5).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chebyshev_first_order_kernel() {
        let cfg = AbelConfig::default();
        let pairs = [(1.0, 2.0), (0.3, 0.35), (2.9, 3.0), (1.5, 1.501), (0.02, 0.01)];
        let v = block_sums(&cheb(), &[Block::deriv(1.0)], &pairs, &cfg).unwrap();
        for (k, &(t, p)) in pairs.iter().enumerate() {
            let e = cheb_r1(t, p);
            let tol = if rho(t, p) < 0.005 { 2e-9 } else { 1e-11 };
            assert!(((v[k][0] - e) / e).abs() < tol, "{t} {p}: {} vs {e}", v[k][0]);
        }
    }

    #[test]
    fn chebyshev_compensated_potential() {
        // sum_{n>=1} cos(n y) / n^2 = pi^2/6 - pi y/2 + y^2/4 on [0, 2 pi]
        let b2 = |x: f64| {
            let y = x.rem_euclid(2.0 * PI);
            y * y / 4.0 - PI * y / 2.0 + PI * PI / 6.0
        };
        let cfg = AbelConfig::default();
        for &(t, p) in &[(1.0, 2.0), (0.4, 0.41), (2.5, 0.2)] {
            let v = block_sums(&cheb(), &[Block::comp(2.0)], &[(t, p)], &cfg).unwrap()[0][0];
            let e = (b2(t - p) + b2(t + p)) / PI;
            assert!((v - e).abs() < 1e-11, "{v} vs {e}");
        }
    }

    #[test]
    fn half_half_log_kernel() {
        let p = JacobiParams::new(0.5, 0.5).unwrap();
        let cfg = AbelConfig::default();
        for &(t, f) in &[(1.0, 2.0), (0.5, 0.52), (3.0, 3.05)] {
            let v = block_sums(&p, &[Block::plain(1.0)], &[(t, f)], &cfg).unwrap()[0][0];
            let e = 4.0 / (PI * t.sin() * f.sin()) * (((t + f) / 2.0).sin() / ((t - f) / 2.0).sin()).abs().ln();
            assert!(((v - e) / e).abs() < 1e-9, "{v} vs {e}");
        }
    }

    #[test]
    fn local_blocks_are_constants() {
        let p = JacobiParams::new(1.0, 0.0).unwrap();
        let v = block_sums(
            &p,
            &[Block::comp(0.0), Block::deriv(0.0), Block::comp(-2.0)],
            &[(1.0, 2.0)],
            &AbelConfig::default(),
        )
        .unwrap();
        assert!((v[0][0] + 1.0 / p.mass()).abs() < 1e-15);
        assert_eq!(v[0][1], 0.0);
        assert!((v[0][2] + 1.0 / p.mass()).abs() < 1e-15);
        assert!(block_sums(&p, &[Block::plain(-1.0)], &[(1.0, 2.0)], &AbelConfig::default()).is_err());
    }

    #[test]
    fn diagonal_is_rejected() {
        let r = block_sums(&cheb(), &[Block::deriv(1.0)], &[(1.0, 1.0)], &AbelConfig::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
