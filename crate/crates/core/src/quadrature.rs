//! Gauss rules built with the Golub-Welsch method, and rules for the measure
//! dmu on (0, pi).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::basis::{rec_a, rec_b};
use crate::error::{Error, Result};
use crate::params::JacobiParams;

/// Nodes and weights for the weight (1-x)^a (1+x)^b on (-1, 1), nodes increasing.
pub fn gauss_jacobi_x(a: f64, b: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Quadrature("rule order must be at least 1".into()));
    }
    if a <= -1.0 || b <= -1.0 {
        return Err(Error::Quadrature(format!("weight exponents must exceed -1, got ({a}, {b})")));
    }
    let mu0 =
        ((a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp();
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = rec_b(a, b, i);
        if i + 1 < n {
            let off = rec_a(a, b, i + 1);
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::try_new(jm, f64::EPSILON, 0)
        .ok_or_else(|| Error::Quadrature("tridiagonal eigen-solve did not converge".into()))?;
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    if pairs.iter().any(|&(x, w)| !(x > -1.0 && x < 1.0) || !(w > 0.0)) {
        return Err(Error::Quadrature("eigen-solve produced nodes outside (-1, 1)".into()));
    }
    Ok(pairs.into_iter().unzip())
}

/// Gauss-Legendre nodes and weights on (-1, 1).
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauss_jacobi_x(0.0, 0.0, n)
}

/// Nodes on (0, pi) with weights in units of mu-mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Composite Gauss-Legendre rule on [a, b] subset of (0, pi), weights include the density.
    pub fn composite(params: &JacobiParams, a: f64, b: f64, panels: usize, order: usize) -> Result<Self> {
        if !(0.0 < a && a < b && b < std::f64::consts::PI) || panels == 0 {
            return Err(Error::Domain(format!("composite rule needs 0 < a < b < pi, got [{a}, {b}]")));
        }
        let (x, w) = gauss_legendre(order)?;
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let t = lo + 0.5 * h * (xi + 1.0);
                nodes.push(t);
                weights.push(0.5 * h * wi * crate::basis::density(params, t));
            }
        }
        Ok(Self { nodes, weights })
    }
}

/// Gauss rule exact for the measure dmu on (0, pi): products of polynomials
/// of total degree up to 2M - 1 are integrated exactly.
pub fn gauss_jacobi_rule(params: &JacobiParams, m: usize) -> Result<QuadratureRule> {
    let (x, w) = gauss_jacobi_x(params.alpha(), params.beta(), m)?;
    let scale = (-(params.alpha() + params.beta() + 1.0) * std::f64::consts::LN_2).exp();
    // theta = arccos x reverses the order
    let nodes: Vec<f64> = x.iter().rev().map(|&xi| xi.acos()).collect();
    let weights: Vec<f64> = w.iter().rev().map(|&wi| wi * scale).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Default rule order for analysing up to degree `n_max`.
pub fn default_order(n_max: usize) -> usize {
    200.max(2 * n_max + 20)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10).unwrap();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_node_reproduces_mass() {
        let p = JacobiParams::new(0.0, 0.0).unwrap();
        let r = gauss_jacobi_rule(&p, 1).unwrap();
        assert_eq!(r.order(), 1);
        assert!((r.total_weight() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_second_moment() {
        let p = JacobiParams::new(-0.5, -0.5).unwrap();
        let r = gauss_jacobi_rule(&p, 40).unwrap();
        assert!((r.integrate(|t| t.cos().powi(2)) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn nodes_increase_inside_interval() {
        for p in crate::params::test_set() {
            let r = gauss_jacobi_rule(&p, 200).unwrap();
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(r.nodes[0] > 0.0 && *r.nodes.last().unwrap() < PI);
            assert!((r.total_weight() / p.mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_rule_matches_mass_piece() {
        let p = JacobiParams::new(-0.5, -0.5).unwrap();
        let r = QuadratureRule::composite(&p, 1.0, 2.0, 4, 12).unwrap();
        assert!((r.total_weight() - 1.0).abs() < 1e-14);
    }
}
