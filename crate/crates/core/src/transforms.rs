//! Riesz-Jacobi transforms of test functions, evaluated twice: through the
//! spectral multiplier series and through the singular-integral
//! representation with the kernels. Also principal-value row integrals and
//! negative powers of the operator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{analyze, check_angle, density, deriv_table, trig_poly_all, CoeffVector};
use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::kernels::{kernel_values, KernelKind, Variant};
use crate::params::JacobiParams;
use crate::quadrature::{gauss_jacobi_x, gauss_legendre};

/// Truncation of Fourier-Jacobi expansions used by the spectral side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub n_max: usize,
    /// Largest admissible coefficient magnitude at the end of the expansion.
    pub tail_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { n_max: 1500, tail_tol: 1e-10 }
    }
}

/// Quadrature layout of row integrals with a singular point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RowConfig {
    /// Gauss nodes per outer panel.
    pub panel_nodes: usize,
    /// Gauss nodes per dyadic shell around the singular point.
    pub shell_nodes: usize,
    /// Longest outer panel.
    pub max_panel: f64,
    /// Largest half-width of the symmetric region folded around the singular point.
    pub fold_max: f64,
    /// Shells below the fold radius before the innermost model takes over.
    pub inner_shells: usize,
    /// Shells sampled to fit the innermost model.
    pub fit_shells: usize,
}

impl Default for RowConfig {
    fn default() -> Self {
        Self { panel_nodes: 20, shell_nodes: 16, max_panel: 0.1, fold_max: 0.125, inner_shells: 6, fit_shells: 3 }
    }
}

/// How the excision ladder is carried to eps = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extrapolation {
    /// Report the value at the smallest eps.
    None,
    /// Remove the eps^k and eps^k log eps terms with a least-squares model
    /// of the folded integrand on the innermost shells.
    Richardson,
}

/// Symmetric excision radii for principal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvLadder {
    pub eps_seq: Vec<f64>,
    pub extrapolation: Extrapolation,
    /// Largest admissible gap between the last two extrapolated values.
    pub tol: f64,
}

impl Default for PvLadder {
    fn default() -> Self {
        Self {
            eps_seq: (3..=12).map(|k| 0.5f64.powi(k)).collect(),
            extrapolation: Extrapolation::Richardson,
            tol: 1e-7,
        }
    }
}

impl PvLadder {
    pub fn validate(&self) -> Result<()> {
        if self.eps_seq.len() < 2 {
            return Err(Error::Config("eps_seq needs at least two entries".into()));
        }
        if !self.eps_seq.iter().all(|&e| e > 0.0) || !self.eps_seq.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::Config("eps_seq must be positive and strictly decreasing".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// spectral side

fn check_tail(coeffs: &CoeffVector, tol: f64) -> Result<()> {
    let t = coeffs.tail_magnitude();
    if t > tol {
        return Err(Error::NonConvergence(format!(
            "coefficient tail {t:.3e} exceeds {tol:.1e}; raise n_max above {}",
            coeffs.n_max()
        )));
    }
    Ok(())
}

/// R_N f(theta) (or the interlaced transform) from the coefficients of f.
pub fn riesz_spectral(coeffs: &CoeffVector, order: usize, theta: f64, variant: Variant) -> Result<f64> {
    riesz_spectral_tol(coeffs, order, theta, variant, SpectralConfig::default().tail_tol)
}

pub fn riesz_spectral_tol(
    coeffs: &CoeffVector,
    order: usize,
    theta: f64,
    variant: Variant,
    tail_tol: f64,
) -> Result<f64> {
    if order == 0 {
        return Err(Error::Domain("Riesz order must be at least 1".into()));
    }
    check_tail(coeffs, tail_tol)?;
    let p = &coeffs.params;
    let n = coeffs.n_max();
    let tau = p.tau();
    match variant {
        Variant::Standard => {
            let d = deriv_table(p, order, n, theta)?;
            Ok((1..=n).map(|k| p.lambda(k).powi(-(order as i32)) * coeffs.a[k] * d[k]).sum())
        }
        Variant::Interlaced => {
            let m = (order / 2) as i32;
            let vals = if order.is_multiple_of(2) { trig_poly_all(p, n, theta)? } else { deriv_table(p, 1, n, theta)? };
            Ok((1..=n)
                .map(|k| {
                    let kf = k as f64;
                    p.lambda(k).powi(-(order as i32)) * (kf * (kf + 2.0 * tau)).powi(m) * coeffs.a[k] * vals[k]
                })
                .sum())
        }
    }
}

/// sum over nonzero eigenvalues of lambda^{-2 sigma} a_n P_n(theta).
pub fn inverse_power_spectral(coeffs: &CoeffVector, sigma: f64, theta: f64) -> Result<f64> {
    let p = &coeffs.params;
    let v = trig_poly_all(p, coeffs.n_max(), theta)?;
    let start = usize::from(p.tau_is_zero());
    Ok((start..=coeffs.n_max()).map(|k| p.lambda(k).powf(-2.0 * sigma) * coeffs.a[k] * v[k]).sum())
}

// ---------------------------------------------------------------------------
// row integrals

/// Integration interval with an optional singular point and endpoint powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSpec {
    pub lo: f64,
    pub hi: f64,
    /// Point where the integrand is singular or non-smooth.
    pub center: Option<f64>,
    /// The integrand behaves like (x - lo)^e near lo.
    pub lo_power: Option<f64>,
    /// The integrand behaves like (hi - x)^e near hi.
    pub hi_power: Option<f64>,
}

/// Layout of the shells around the singular point.
#[derive(Debug, Clone, PartialEq)]
pub enum Inner {
    /// Dyadic shells from the fold radius, then the fitted model.
    Fit,
    /// Shells ending at the given excision radii.
    Ladder(Vec<f64>, Extrapolation),
}

/// Result of a row integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowEstimate {
    pub value: f64,
    /// Same estimate with the innermost model anchored one shell further out.
    pub alt: f64,
    /// (eps, integral over |x - center| > eps).
    pub ladder: Vec<(f64, f64)>,
}

impl RowEstimate {
    pub fn delta(&self) -> f64 {
        (self.value - self.alt).abs()
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    kind: PanelKind,
}

#[derive(Clone, Copy)]
enum PanelKind {
    Plain,
    Left(f64),
    Right(f64),
}

/// Panels on [a, b] no longer than the distance to `center` or `max`.
fn graded(a: f64, b: f64, center: Option<f64>, max: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if b <= a {
        return out;
    }
    match center {
        Some(c) if c <= a => {
            let mut x = a;
            while x < b {
                let h = max.min((x - c).max(max * 1e-9));
                let y = if b - (x + h) < 0.25 * h { b } else { x + h };
                out.push((x, y));
                x = y;
            }
        }
        Some(c) if c >= b => {
            let mut x = b;
            while x > a {
                let h = max.min((c - x).max(max * 1e-9));
                let y = if (x - h) - a < 0.25 * h { a } else { x - h };
                out.push((y, x));
                x = y;
            }
            out.reverse();
        }
        _ => {
            let n = ((b - a) / max).ceil().max(1.0) as usize;
            let h = (b - a) / n as f64;
            for i in 0..n {
                out.push((a + h * i as f64, if i + 1 == n { b } else { a + h * (i + 1) as f64 }));
            }
        }
    }
    out
}

fn outer_rule(spec: &RowSpec, segments: &[(f64, f64)], cfg: &RowConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut panels = Vec::new();
    for &(a, b) in segments {
        let mut ps: Vec<Panel> = graded(a, b, spec.center, cfg.max_panel)
            .into_iter()
            .map(|(lo, hi)| Panel { lo, hi, kind: PanelKind::Plain })
            .collect();
        if let (Some(e), Some(first)) = (spec.lo_power, ps.first_mut()) {
            if first.lo == spec.lo {
                first.kind = PanelKind::Left(e);
            }
        }
        if let (Some(e), Some(last)) = (spec.hi_power, ps.last_mut()) {
            if last.hi == spec.hi {
                last.kind = match last.kind {
                    PanelKind::Left(_) => {
                        // one panel touching both ends: split it
                        let mid = 0.5 * (last.lo + last.hi);
                        let left = Panel { lo: last.lo, hi: mid, kind: last.kind };
                        last.lo = mid;
                        panels.push(left);
                        PanelKind::Right(e)
                    }
                    _ => PanelKind::Right(e),
                };
            }
        }
        panels.extend(ps);
    }
    let m = cfg.panel_nodes;
    let (gx, gw) = gauss_legendre(m)?;
    let mut x = Vec::new();
    let mut w = Vec::new();
    for p in &panels {
        let h = 0.5 * (p.hi - p.lo);
        match p.kind {
            PanelKind::Plain => {
                for (y, wy) in gx.iter().zip(&gw) {
                    x.push(p.lo + h * (1.0 + y));
                    w.push(h * wy);
                }
            }
            PanelKind::Left(e) => {
                // weight (x - lo)^e, integrand divided by it
                let (jx, jw) = gauss_jacobi_x(0.0, e, m)?;
                for (y, wy) in jx.iter().zip(&jw) {
                    let u = h * (1.0 + y);
                    x.push(p.lo + u);
                    w.push(wy * h.powf(e + 1.0) / u.powf(e));
                }
            }
            PanelKind::Right(e) => {
                let (jx, jw) = gauss_jacobi_x(e, 0.0, m)?;
                for (y, wy) in jx.iter().zip(&jw) {
                    let u = h * (1.0 - y);
                    x.push(p.hi - u);
                    w.push(wy * h.powf(e + 1.0) / u.powf(e));
                }
            }
        }
    }
    Ok((x, w))
}

const FIT_BASIS: usize = 10;

/// y^k and y^k log y for k <= 4: the shape of folded kernels near the diagonal.
fn fit_basis(y: f64) -> [f64; FIT_BASIS] {
    let l = y.ln();
    let mut out = [0.0; FIT_BASIS];
    let mut p = 1.0;
    for k in 0..FIT_BASIS / 2 {
        out[2 * k] = p;
        out[2 * k + 1] = p * l;
        p *= y;
    }
    out
}

/// Integrals of the basis over y in [0, 1]: 1/(k+1) and -1/(k+1)^2.
fn fit_integrals() -> [f64; FIT_BASIS] {
    let mut out = [0.0; FIT_BASIS];
    for k in 0..FIT_BASIS / 2 {
        let m = (k + 1) as f64;
        out[2 * k] = 1.0 / m;
        out[2 * k + 1] = -1.0 / (m * m);
    }
    out
}

/// Integral over [0, x0] of a least-squares model of samples (x, value).
fn fit_integral(samples: &[(f64, f64)], x0: f64) -> Result<f64> {
    let k = FIT_BASIS.min(samples.len());
    if k == 0 {
        return Ok(0.0);
    }
    let mut a = DMatrix::<f64>::zeros(samples.len(), k);
    let mut b = DVector::<f64>::zeros(samples.len());
    for (i, &(x, v)) in samples.iter().enumerate() {
        let row = fit_basis(x / x0);
        for j in 0..k {
            a[(i, j)] = row[j];
        }
        b[i] = v;
    }
    let c = a.svd(true, true).solve(&b, 1e-13).map_err(|e| Error::Quadrature(format!("innermost fit failed: {e}")))?;
    let ints = fit_integrals();
    Ok(x0 * (0..k).map(|j| c[j] * ints[j]).sum::<f64>())
}

/// Integral of g over [lo, hi]; `g` evaluates the integrand at a batch of points.
pub fn integrate_row(
    spec: &RowSpec,
    inner: &Inner,
    cfg: &RowConfig,
    g: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<RowEstimate> {
    if !(spec.lo < spec.hi) {
        return Err(Error::Domain(format!("empty interval [{}, {}]", spec.lo, spec.hi)));
    }
    let fold = spec.center.filter(|&c| c > spec.lo && c < spec.hi);
    let Some(c) = fold else {
        let (x, w) = outer_rule(spec, &[(spec.lo, spec.hi)], cfg)?;
        let v = g(&x)?;
        let s: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        return Ok(RowEstimate { value: s, alt: s, ladder: Vec::new() });
    };
    let cap = match inner {
        Inner::Ladder(eps, _) => cfg.fold_max.max(2.0 * eps.first().copied().unwrap_or(0.0)),
        Inner::Fit => cfg.fold_max,
    };
    let d = (0.5 * (c - spec.lo).min(spec.hi - c)).min(cap);
    let (x, w) = outer_rule(spec, &[(spec.lo, c - d), (c + d, spec.hi)], cfg)?;
    let v = g(&x)?;
    let outer: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();

    // shell breakpoints, decreasing from d
    let mut br = vec![d];
    match inner {
        Inner::Fit => {
            for k in 1..=cfg.inner_shells.max(cfg.fit_shells + 1) {
                br.push(d * (-(k as f64) * std::f64::consts::LN_2).exp());
            }
        }
        Inner::Ladder(eps, _) => {
            if eps.iter().any(|&e| e >= d) {
                return Err(Error::Domain(format!("excision radius {} exceeds the fold radius {d} at {c}", eps[0])));
            }
            br.extend(eps.iter().copied());
        }
    }
    let (sx, sw) = gauss_legendre(cfg.shell_nodes)?;
    let mut pts = Vec::new();
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for s in 0..br.len() - 1 {
        let (hi, lo) = (br[s], br[s + 1]);
        let h = 0.5 * (hi - lo);
        for (y, wy) in sx.iter().zip(&sw) {
            let x = lo + h * (1.0 + y);
            xs.push(x);
            ws.push(h * wy);
            pts.push(c + x);
            pts.push(c - x);
        }
    }
    let gv = g(&pts)?;
    let m = cfg.shell_nodes;
    let phi: Vec<f64> = (0..xs.len()).map(|i| gv[2 * i] + gv[2 * i + 1]).collect();
    let mut partial = vec![outer];
    for s in 0..br.len() - 1 {
        let shell: f64 = (s * m..(s + 1) * m).map(|i| ws[i] * phi[i]).sum();
        partial.push(partial[s] + shell);
    }
    let ladder: Vec<(f64, f64)> = br.iter().copied().zip(partial.iter().copied()).collect();
    let fit_at = |k: usize| -> Result<f64> {
        // model on the fit_shells shells just outside br[k]
        let first = k.saturating_sub(cfg.fit_shells);
        let samples: Vec<(f64, f64)> = (first * m..k * m).map(|i| (xs[i], phi[i])).collect();
        Ok(partial[k] + fit_integral(&samples, br[k])?)
    };
    let last = br.len() - 1;
    let extrap = match inner {
        Inner::Ladder(_, Extrapolation::None) => None,
        _ => Some(()),
    };
    let (value, alt) = match extrap {
        None => (partial[last], partial[last - 1]),
        Some(()) => {
            let v = fit_at(last)?;
            let a = if last > cfg.fit_shells { fit_at(last - 1)? } else { v };
            (v, a)
        }
    };
    Ok(RowEstimate { value, alt, ladder })
}

// ---------------------------------------------------------------------------
// singular side

/// int K(theta, phi) F(phi) dmu(phi) for F = f, or F = f - f(theta) when
/// `subtract` is set.
pub fn kernel_row(
    params: &JacobiParams,
    kind: KernelKind,
    theta: f64,
    f: &dyn TestFunction,
    subtract: bool,
    cfg: &EvalConfig,
) -> Result<RowEstimate> {
    check_angle(theta)?;
    let f0 = if subtract { f.eval(theta) } else { 0.0 };
    let pi = std::f64::consts::PI;
    let whole = RowSpec {
        lo: 0.0,
        hi: pi,
        center: Some(theta),
        lo_power: Some(2.0 * params.alpha() + 1.0),
        hi_power: Some(2.0 * params.beta() + 1.0),
    };
    let spec = match (f0 != 0.0, f.support()) {
        (false, Some((a, b))) => RowSpec { lo: a, hi: b, center: Some(theta), lo_power: None, hi_power: None },
        _ => whole,
    };
    let mut g = |xs: &[f64]| -> Result<Vec<f64>> {
        let mut idx = Vec::with_capacity(xs.len());
        let mut pairs = Vec::with_capacity(xs.len());
        let mut out = vec![0.0; xs.len()];
        for (i, &x) in xs.iter().enumerate() {
            let fv = f.eval(x) - f0;
            if fv != 0.0 {
                idx.push((i, fv * density(params, x)));
                pairs.push((theta, x));
            }
        }
        let k = kernel_values(params, kind, &pairs, cfg)?;
        for ((i, fw), kv) in idx.into_iter().zip(k) {
            out[i] = fw * kv;
        }
        Ok(out)
    };
    integrate_row(&spec, &Inner::Fit, &cfg.row, &mut g)
}

/// Principal value of int K(theta, phi) dmu(phi) over (0, pi).
pub fn pv_kernel_row(
    params: &JacobiParams,
    kind: KernelKind,
    theta: f64,
    inner: &Inner,
    cfg: &EvalConfig,
) -> Result<RowEstimate> {
    check_angle(theta)?;
    let spec = RowSpec {
        lo: 0.0,
        hi: std::f64::consts::PI,
        center: Some(theta),
        lo_power: Some(2.0 * params.alpha() + 1.0),
        hi_power: Some(2.0 * params.beta() + 1.0),
    };
    let mut g = |xs: &[f64]| -> Result<Vec<f64>> {
        let pairs: Vec<(f64, f64)> = xs.iter().map(|&x| (theta, x)).collect();
        let k = kernel_values(params, kind, &pairs, cfg)?;
        Ok(k.iter().zip(xs).map(|(kv, &x)| kv * density(params, x)).collect())
    };
    integrate_row(&spec, inner, &cfg.row, &mut g)
}

/// Excision ladder of the principal-value row integral of R_N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvEstimate {
    pub ladder: Vec<(f64, f64)>,
    pub limit: f64,
    pub delta: f64,
    pub converged: bool,
}

/// Ladder and extrapolated limit of int_{|phi - theta| > eps} R_N(theta, phi) dmu(phi).
pub fn pv_ladder(
    params: &JacobiParams,
    order: usize,
    theta: f64,
    ladder: &PvLadder,
    cfg: &EvalConfig,
) -> Result<PvEstimate> {
    if order.is_multiple_of(2) {
        return Err(Error::Domain(format!("principal values are taken for odd orders, got {order}")));
    }
    ladder.validate()?;
    let inner = Inner::Ladder(ladder.eps_seq.clone(), ladder.extrapolation);
    let r = pv_kernel_row(params, KernelKind::Riesz { order }, theta, &inner, cfg)?;
    let delta = r.delta();
    Ok(PvEstimate {
        ladder: r.ladder.into_iter().skip(1).collect(),
        limit: r.value,
        delta,
        converged: delta < ladder.tol,
    })
}

/// pv int R_N(theta, phi) dmu(phi) for odd N.
pub fn pv_row_integral(
    params: &JacobiParams,
    order: usize,
    theta: f64,
    ladder: &PvLadder,
    cfg: &EvalConfig,
) -> Result<f64> {
    let e = pv_ladder(params, order, theta, ladder, cfg)?;
    if !e.converged {
        return Err(Error::NonConvergence(format!(
            "principal value ladder at theta = {theta}: last estimates differ by {:.3e}",
            e.delta
        )));
    }
    Ok(e.limit)
}

/// The transform through its singular-integral representation.
pub fn riesz_singular(
    f: &dyn TestFunction,
    params: &JacobiParams,
    order: usize,
    theta: f64,
    variant: Variant,
    cfg: &EvalConfig,
) -> Result<f64> {
    if order == 0 {
        return Err(Error::Domain("Riesz order must be at least 1".into()));
    }
    check_angle(theta)?;
    let kind = KernelKind::riesz(order, variant);
    let f0 = f.eval(theta);
    if order % 2 == 1 {
        let row = kernel_row(params, kind, theta, f, true, cfg)?;
        // the first-order row has vanishing principal value
        let pv =
            if f0 == 0.0 || order == 1 { 0.0 } else { pv_kernel_row(params, kind, theta, &Inner::Fit, cfg)?.value };
        Ok(row.value + f0 * pv)
    } else {
        let sign = match variant {
            Variant::Standard if (order / 2) % 2 == 1 => -1.0,
            _ => 1.0,
        };
        Ok(sign * f0 + kernel_row(params, kind, theta, f, false, cfg)?.value)
    }
}

/// Route for negative powers of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseMode {
    Spectral,
    Kernel,
}

/// J^{-sigma} f(theta), on the complement of constants when tau = 0.
pub fn inverse_power(
    f: &dyn TestFunction,
    coeffs: &CoeffVector,
    sigma: f64,
    mode: InverseMode,
    theta: f64,
    cfg: &EvalConfig,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let params = &coeffs.params;
    match mode {
        InverseMode::Spectral => {
            check_tail(coeffs, cfg.spectral.tail_tol)?;
            inverse_power_spectral(coeffs, sigma, theta)
        }
        InverseMode::Kernel => {
            let kind = KernelKind::Potential { sigma, j: 0, compensated: params.tau_is_zero() };
            Ok(kernel_row(params, kind, theta, f, false, cfg)?.value)
        }
    }
}

// ---------------------------------------------------------------------------
// evaluator registry

/// A test function with its coefficients, prepared once per (f, params).
pub struct TransformInput {
    pub f: Box<dyn TestFunction>,
    pub coeffs: CoeffVector,
}

impl TransformInput {
    pub fn new(f: Box<dyn TestFunction>, params: &JacobiParams, cfg: &EvalConfig) -> Result<Self> {
        let coeffs = analyze(f.as_ref(), params, cfg.spectral.n_max)?;
        Ok(Self { f, coeffs })
    }

    pub fn from_spec(spec: &str, params: &JacobiParams, cfg: &EvalConfig) -> Result<Self> {
        Self::new(crate::functions::build(spec, params)?, params, cfg)
    }
}

/// One way of evaluating R_N f(theta).
pub trait TransformEvaluator: Send + Sync {
    fn name(&self) -> &'static str;
    fn eval(&self, input: &TransformInput, order: usize, theta: f64, variant: Variant, cfg: &EvalConfig)
        -> Result<f64>;
}

pub struct Spectral;
pub struct Singular;

impl TransformEvaluator for Spectral {
    fn name(&self) -> &'static str {
        "spectral"
    }
    fn eval(
        &self,
        input: &TransformInput,
        order: usize,
        theta: f64,
        variant: Variant,
        cfg: &EvalConfig,
    ) -> Result<f64> {
        riesz_spectral_tol(&input.coeffs, order, theta, variant, cfg.spectral.tail_tol)
    }
}

impl TransformEvaluator for Singular {
    fn name(&self) -> &'static str {
        "singular"
    }
    fn eval(
        &self,
        input: &TransformInput,
        order: usize,
        theta: f64,
        variant: Variant,
        cfg: &EvalConfig,
    ) -> Result<f64> {
        riesz_singular(input.f.as_ref(), &input.coeffs.params, order, theta, variant, cfg)
    }
}

pub fn evaluators() -> Vec<Box<dyn TransformEvaluator>> {
    vec![Box::new(Spectral), Box::new(Singular)]
}

pub fn evaluator(name: &str) -> Result<Box<dyn TransformEvaluator>> {
    evaluators()
        .into_iter()
        .find(|e| e.name() == name)
        .ok_or_else(|| Error::Unknown { kind: "transform evaluator", name: name.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::fourier_coeffs;
    use crate::functions::{build, Bump};
    use crate::quadrature::gauss_jacobi_rule;
    use std::f64::consts::PI;

    fn cheb() -> JacobiParams {
        JacobiParams::new(-0.5, -0.5).unwrap()
    }

    fn cfg() -> EvalConfig {
        EvalConfig::default()
    }

    #[test]
    fn conjugate_function_examples() {
        let c = cheb();
        let rule = gauss_jacobi_rule(&c, 40).unwrap();
        let co = fourier_coeffs(|t| t.cos(), &c, 16, &rule).unwrap();
        let r1 = riesz_spectral(&co, 1, 1.0, Variant::Standard).unwrap();
        assert!((r1 + 1f64.sin()).abs() < 1e-12);
        let r2 = riesz_spectral(&co, 2, 1.0, Variant::Standard).unwrap();
        assert!((r2 + 1f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn interlaced_eigenfunction() {
        let p = JacobiParams::new(1.0, 0.0).unwrap();
        let mut a = vec![0.0; 20];
        a[1] = 1.0;
        let co = CoeffVector { params: p, a };
        let v = riesz_spectral(&co, 2, 0.9, Variant::Interlaced).unwrap();
        let p1 = crate::basis::trig_poly(&p, 1, 0.9).unwrap();
        assert!((v - 0.75 * p1).abs() < 1e-14);
    }

    #[test]
    fn graded_panels_cover_interval() {
        for (a, b, c) in [(1.0, 2.0, Some(0.9)), (0.0, 1.0, Some(1.3)), (0.0, PI, None), (1.0, 2.0, Some(1.0))] {
            let ps = graded(a, b, c, 0.1);
            assert_eq!(ps.first().unwrap().0, a);
            assert_eq!(ps.last().unwrap().1, b);
            assert!(ps.windows(2).all(|w| w[0].1 == w[1].0));
        }
    }

    #[test]
    fn row_integrator_handles_logs_and_endpoints() {
        // a log singularity inside and an endpoint power
        let spec = RowSpec { lo: 0.0, hi: PI, center: Some(1.0), lo_power: Some(-0.4), hi_power: Some(2.0) };
        let mut g = |xs: &[f64]| -> Result<Vec<f64>> {
            Ok(xs.iter().map(|&x| x.powf(-0.4) * (PI - x).powi(2) * (x - 1.0).abs().ln()).collect())
        };
        let r = integrate_row(&spec, &Inner::Fit, &RowConfig::default(), &mut g).unwrap();
        // reference by splitting at the singularity with a substitution
        let reference = -10.319105521994016;
        assert!((r.value - reference).abs() < 1e-8, "{} vs {}", r.value, reference);
        assert!(r.delta() < 1e-7, "{r:?}");
    }

    #[test]
    fn constant_kernel_even_order() {
        let c = cheb();
        let f = Bump::new(1.0, 2.0).unwrap();
        let v = riesz_singular(&f, &c, 2, 1.5, Variant::Standard, &cfg()).unwrap();
        let rule = QuadRef::bump_integral(&f);
        let e = -f.eval(1.5) + rule / PI;
        assert!((v - e).abs() < 1e-9, "{v} vs {e}");
    }

    struct QuadRef;
    impl QuadRef {
        fn bump_integral(f: &Bump) -> f64 {
            let (x, w) = gauss_legendre(60).unwrap();
            let mut s = 0.0;
            for k in 0..50 {
                let a = 1.0 + k as f64 / 50.0;
                let h = 0.01;
                for (xi, wi) in x.iter().zip(&w) {
                    s += h * wi * f.eval(a + h * (1.0 + xi));
                }
            }
            s
        }
    }

    #[test]
    fn chebyshev_first_order_of_cosine() {
        let c = cheb();
        let f = build("cosk(1)", &c).unwrap();
        let v = riesz_singular(f.as_ref(), &c, 1, 1.0, Variant::Standard, &cfg()).unwrap();
        assert!((v + 1f64.sin()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn pv_ladder_chebyshev() {
        let c = cheb();
        let e = pv_ladder(&c, 1, 1.0, &PvLadder::default(), &cfg()).unwrap();
        assert!(e.converged);
        assert!(e.limit.abs() < 1e-8, "{}", e.limit);
        // exact truncated values from the cot antiderivative
        let t = 1.0f64;
        for &(eps, v) in &e.ladder {
            let exact = ((t + 0.5 * eps).sin() / (t - 0.5 * eps).sin()).ln() / PI;
            assert!((v - exact).abs() < 1e-9, "{eps}: {v} vs {exact}");
        }
    }

    #[test]
    fn representation_sample() {
        let p = JacobiParams::new(0.5, -0.3).unwrap();
        let input = TransformInput::from_spec("bump(1,2)", &p, &cfg()).unwrap();
        for order in 1..=4 {
            for variant in [Variant::Standard, Variant::Interlaced] {
                let s = Spectral.eval(&input, order, 1.4, variant, &cfg()).unwrap();
                let g = Singular.eval(&input, order, 1.4, variant, &cfg()).unwrap();
                assert!((s - g).abs() < 1e-6, "N={order} {variant:?}: {s} vs {g}");
            }
        }
    }
}
