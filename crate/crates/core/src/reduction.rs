//! Reduction of high theta-derivatives of the basis through the Jacobi equation
//!
//!   d^2 P_n = mu_n P_n - A d P_n,   mu_n = tau^2 - lambda_n^2,
//!
//! so that d^j P_n = P_j(mu_n, theta) P_n + Q_j(mu_n, theta) d P_n, where P_j and
//! Q_j are polynomials in mu_n with coefficients built from A and its
//! derivatives. The coefficients are stored as polynomials in c = cot(theta/2)
//! and t = tan(theta/2).

use std::collections::BTreeMap;

use crate::params::JacobiParams;

/// Polynomial in (cot(theta/2), tan(theta/2)).
#[derive(Debug, Clone, Default, PartialEq)]
struct Trig2(BTreeMap<(u32, u32), f64>);

impl Trig2 {
    fn constant(v: f64) -> Self {
        let mut m = BTreeMap::new();
        if v != 0.0 {
            m.insert((0, 0), v);
        }
        Self(m)
    }

    fn add_term(&mut self, key: (u32, u32), v: f64) {
        let e = self.0.entry(key).or_insert(0.0);
        *e += v;
        if *e == 0.0 {
            self.0.remove(&key);
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (&k, &v) in &other.0 {
            r.add_term(k, v);
        }
        r
    }

    fn mul(&self, other: &Self) -> Self {
        let mut r = Self::default();
        for (&(i, j), &v) in &self.0 {
            for (&(k, l), &w) in &other.0 {
                r.add_term((i + k, j + l), v * w);
            }
        }
        r
    }

    fn scale(&self, s: f64) -> Self {
        let mut r = Self::default();
        for (&k, &v) in &self.0 {
            r.add_term(k, v * s);
        }
        r
    }

    /// d/dtheta with c' = -(1 + c^2)/2 and t' = (1 + t^2)/2.
    fn diff(&self) -> Self {
        let mut r = Self::default();
        for (&(i, j), &v) in &self.0 {
            if i > 0 {
                let f = -0.5 * v * i as f64;
                r.add_term((i - 1, j), f);
                r.add_term((i + 1, j), f);
            }
            if j > 0 {
                let f = 0.5 * v * j as f64;
                r.add_term((i, j - 1), f);
                r.add_term((i, j + 1), f);
            }
        }
        r
    }

    fn eval(&self, c: f64, t: f64) -> f64 {
        self.0.iter().map(|(&(i, j), &v)| v * c.powi(i as i32) * t.powi(j as i32)).sum()
    }
}

/// Polynomial in mu with Trig2 coefficients.
#[derive(Debug, Clone, Default)]
struct MuPoly(Vec<Trig2>);

impl MuPoly {
    fn get(&self, k: usize) -> Trig2 {
        self.0.get(k).cloned().unwrap_or_default()
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self((0..n).map(|k| self.get(k).add(&other.get(k))).collect())
    }

    fn diff(&self) -> Self {
        Self(self.0.iter().map(Trig2::diff).collect())
    }

    fn times_mu(&self) -> Self {
        let mut v = vec![Trig2::default()];
        v.extend(self.0.iter().cloned());
        Self(v)
    }

    fn times(&self, f: &Trig2) -> Self {
        Self(self.0.iter().map(|c| c.mul(f)).collect())
    }
}

/// Coefficients of d^j in terms of (P_n, d P_n) for one parameter pair.
#[derive(Debug, Clone)]
pub struct DerivReduction {
    p: MuPoly,
    q: MuPoly,
}

impl DerivReduction {
    pub fn new(params: &JacobiParams, j: usize) -> Self {
        let mut drift = Trig2::default();
        drift.add_term((1, 0), params.alpha() + 0.5);
        drift.add_term((0, 1), -(params.beta() + 0.5));
        let mut p = MuPoly(vec![Trig2::constant(1.0)]);
        let mut q = MuPoly(vec![]);
        for _ in 0..j {
            let np = p.diff().add(&q.times_mu());
            let nq = p.add(&q.diff()).add(&q.times(&drift.scale(-1.0)));
            p = np;
            q = nq;
        }
        Self { p, q }
    }

    /// Highest power of mu appearing.
    pub fn degree(&self) -> usize {
        self.p.0.len().max(self.q.0.len()).saturating_sub(1)
    }

    /// Coefficient functions at theta: (p_k(theta), q_k(theta)) for k = 0..=degree.
    pub fn coefficients(&self, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 1.0 / (0.5 * theta).tan();
        let t = (0.5 * theta).tan();
        let d = self.degree();
        let p = (0..=d).map(|k| self.p.get(k).eval(c, t)).collect();
        let q = (0..=d).map(|k| self.q.get(k).eval(c, t)).collect();
        (p, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{trig_poly, trig_poly_deriv};
    use crate::params::test_set;

    #[test]
    fn reproduces_direct_derivatives() {
        for params in test_set() {
            for j in 0..6 {
                let red = DerivReduction::new(&params, j);
                for n in [0usize, 1, 3, 8] {
                    for &theta in &[0.3, 1.2, 2.7] {
                        let (p, q) = red.coefficients(theta);
                        let mu = params.tau().powi(2) - params.lambda(n).powi(2);
                        let pv: f64 = p.iter().enumerate().map(|(k, c)| c * mu.powi(k as i32)).sum();
                        let qv: f64 = q.iter().enumerate().map(|(k, c)| c * mu.powi(k as i32)).sum();
                        let v = pv * trig_poly(&params, n, theta).unwrap()
                            + qv * trig_poly_deriv(&params, n, 1, theta).unwrap();
                        let e = trig_poly_deriv(&params, n, j, theta).unwrap();
                        assert!((v - e).abs() < 1e-9 * (1.0 + e.abs()), "{params} j={j} n={n}: {v} vs {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn no_constant_term_in_p() {
        let params = crate::params::JacobiParams::new(0.5, -0.3).unwrap();
        for j in 1..6 {
            let (p, _) = DerivReduction::new(&params, j).coefficients(1.0);
            assert!(p[0].abs() < 1e-14);
        }
    }
}
