//! Normalized trigonometric Jacobi polynomials, the measure dmu, and
//! Fourier-Jacobi analysis and synthesis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::params::JacobiParams;
use crate::quadrature::{default_order, gauss_jacobi_rule, QuadratureRule};

/// Coefficients beyond this magnitude at the last index mean the expansion
/// was cut too early.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

pub(crate) fn check_angle(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::Domain(format!("angle {theta} is not in (0, pi)")))
    }
}

/// Density of dmu without the domain check.
pub(crate) fn density(params: &JacobiParams, theta: f64) -> f64 {
    let h = 0.5 * theta;
    h.sin().powf(2.0 * params.alpha() + 1.0) * h.cos().powf(2.0 * params.beta() + 1.0)
}

/// (sin theta/2)^{2 alpha + 1} (cos theta/2)^{2 beta + 1}.
pub fn mu_density(params: &JacobiParams, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok(density(params, theta))
}

/// Total mass of dmu on (0, pi).
pub fn mu_total(params: &JacobiParams) -> f64 {
    params.mass()
}

/// Diagonal recurrence coefficient b_n for the weight (1-x)^a (1+x)^b.
pub fn rec_b(a: f64, b: f64, n: usize) -> f64 {
    if n == 0 {
        return (b - a) / (a + b + 2.0);
    }
    let s = 2.0 * n as f64 + a + b;
    (b * b - a * a) / (s * (s + 2.0))
}

/// Off-diagonal recurrence coefficient a_n (n >= 1) for the weight (1-x)^a (1+x)^b.
pub fn rec_a(a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n >= 1);
    if n == 1 {
        let s = a + b + 2.0;
        return (4.0 * (1.0 + a) * (1.0 + b) / (s * s * (s + 1.0))).sqrt();
    }
    let nf = n as f64;
    let s = 2.0 * nf + a + b;
    (4.0 * nf * (nf + a) * (nf + b) * (nf + a + b) / (s * s * (s + 1.0) * (s - 1.0))).sqrt()
}

/// Streaming evaluator of the orthonormal recurrence at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stepper {
    a: f64,
    b: f64,
    x: f64,
    n: usize,
    prev: f64,
    cur: f64,
}

impl Stepper {
    pub(crate) fn new(params: &JacobiParams, theta: f64) -> Self {
        Self { a: params.alpha(), b: params.beta(), x: theta.cos(), n: 0, prev: 0.0, cur: 1.0 / params.mass().sqrt() }
    }

    /// Current value, the polynomial of index `self.n`.
    pub(crate) fn value(&self) -> f64 {
        self.cur
    }

    pub(crate) fn advance(&mut self) {
        let n = self.n;
        let an1 = rec_a(self.a, self.b, n + 1);
        let an = if n == 0 { 0.0 } else { rec_a(self.a, self.b, n) };
        let next = ((self.x - rec_b(self.a, self.b, n)) * self.cur - an * self.prev) / an1;
        self.prev = self.cur;
        self.cur = next;
        self.n += 1;
    }
}

/// Values of the normalized polynomials of degree 0..=n_max at theta.
pub fn trig_poly_all(params: &JacobiParams, n_max: usize, theta: f64) -> Result<Vec<f64>> {
    check_angle(theta)?;
    let mut st = Stepper::new(params, theta);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(st.value());
    for _ in 0..n_max {
        st.advance();
        out.push(st.value());
    }
    Ok(out)
}

/// Normalized trigonometric Jacobi polynomial of degree n at theta.
pub fn trig_poly(params: &JacobiParams, n: usize, theta: f64) -> Result<f64> {
    Ok(trig_poly_all(params, n, theta)?[n])
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The j-th theta-derivative of every polynomial of degree 0..=n_max at theta.
///
/// Each differentiation lowers the degree by one and raises both parameters
/// by one, with the sin(theta) prefactor handled by the product rule.
pub fn deriv_table(params: &JacobiParams, j: usize, n_max: usize, theta: f64) -> Result<Vec<f64>> {
    check_angle(theta)?;
    // level[k][i][m] = i-th derivative of the degree-m polynomial with parameters shifted by k
    let mut upper: Vec<Vec<f64>> = Vec::new();
    for k in (0..=j).rev() {
        let pk = params.shifted(k as u32);
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(j - k + 1);
        cur.push(trig_poly_all(&pk, n_max, theta)?);
        let ab = pk.alpha() + pk.beta();
        for i in 1..=(j - k) {
            let mut row = vec![0.0; n_max + 1];
            for m in 1..=n_max {
                let c = 0.5 * ((m as f64) * (m as f64 + ab + 1.0)).sqrt();
                let mut acc = 0.0;
                for l in 0..i {
                    let sin_l = (theta + l as f64 * std::f64::consts::FRAC_PI_2).sin();
                    acc += binom(i - 1, l) * sin_l * upper[i - 1 - l][m - 1];
                }
                row[m] = -c * acc;
            }
            cur.push(row);
        }
        upper = cur;
    }
    Ok(upper.pop().expect("table has j + 1 rows"))
}

/// The j-th theta-derivative of the degree-n polynomial at theta.
pub fn trig_poly_deriv(params: &JacobiParams, n: usize, j: usize, theta: f64) -> Result<f64> {
    Ok(deriv_table(params, j, n, theta)?[n])
}

/// Finite Fourier-Jacobi coefficient sequence a_n = <f, P_n>, n = 0..=n_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffVector {
    pub params: JacobiParams,
    pub a: Vec<f64>,
}

impl CoeffVector {
    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    /// Largest coefficient magnitude among the last few indices.
    pub fn tail_magnitude(&self) -> f64 {
        let k = self.a.len().min(8);
        self.a[self.a.len() - k..].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Coefficients computed with the given rule, a_n = sum_k w_k f(theta_k) P_n(theta_k).
pub fn fourier_coeffs<F: Fn(f64) -> f64>(
    f: F,
    params: &JacobiParams,
    n_max: usize,
    rule: &QuadratureRule,
) -> Result<CoeffVector> {
    let mut a = vec![0.0; n_max + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fw = f(t) * w;
        if fw == 0.0 {
            continue;
        }
        let mut st = Stepper::new(params, t);
        a[0] += fw * st.value();
        for an in a.iter_mut().skip(1) {
            st.advance();
            *an += fw * st.value();
        }
    }
    let c = CoeffVector { params: *params, a };
    if c.tail_magnitude() > DEFAULT_TAIL_TOL {
        log::warn!(
            "coefficient tail {:.3e} exceeds {:.1e}; n_max = {} is too small",
            c.tail_magnitude(),
            DEFAULT_TAIL_TOL,
            n_max
        );
    }
    Ok(c)
}

/// Coefficients of a registry function with a rule adapted to it: a composite
/// rule on the support for compactly supported functions, a Gauss rule otherwise.
pub fn analyze(f: &dyn TestFunction, params: &JacobiParams, n_max: usize) -> Result<CoeffVector> {
    let rule = match f.support() {
        Some((a, b)) => {
            // about 24 nodes per half-wavelength of the highest mode
            let panels = ((b - a) * (n_max as f64 + 10.0) / 12.0).ceil().max(8.0) as usize;
            QuadratureRule::composite(params, a, b, panels, 24)?
        }
        None => gauss_jacobi_rule(params, default_order(n_max))?,
    };
    fourier_coeffs(|t| f.eval(t), params, n_max, &rule)
}

/// Partial sum of the expansion at theta.
pub fn synthesize(coeffs: &CoeffVector, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    let mut st = Stepper::new(&coeffs.params, theta);
    let mut s = coeffs.a[0] * st.value();
    for an in &coeffs.a[1..] {
        st.advance();
        s += an * st.value();
    }
    Ok(s)
}

/// Removes the constant component.
pub fn pi0_project(coeffs: &CoeffVector) -> CoeffVector {
    let mut c = coeffs.clone();
    c.a[0] = 0.0;
    c
}
