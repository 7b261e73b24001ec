//! Verification checks that reproduce the main identities, estimates and
//! representation formulas as numerical reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::{density, trig_poly_all};
use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::functions::{build, TestFunction};
use crate::kernels::{kernel_values, riesz_kernel, KernelKind, Variant};
use crate::params::JacobiParams;
use crate::poisson::{evaluator, poisson_kernel, series_row, PoissonMode};
use crate::quadrature::{gauss_jacobi_rule, QuadratureRule};
use crate::series::AbelConfig;
use crate::transforms::{
    integrate_row, inverse_power, pv_ladder, riesz_singular, riesz_spectral_tol, Extrapolation, Inner, InverseMode,
    RowConfig, RowSpec, TransformInput,
};

// ---------------------------------------------------------------------------
// reports

/// Outcome of one check for one parameter pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub check_id: String,
    pub params: JacobiParams,
    /// Quantities compared against `tolerance`.
    #[serde(with = "num_map")]
    pub residuals: BTreeMap<String, f64>,
    /// Measured constants reported for information.
    #[serde(with = "num_map")]
    pub constants: BTreeMap<String, f64>,
    /// Evaluation failures; any entry fails the report.
    pub errors: Vec<String>,
    pub pass: bool,
    pub tolerance: f64,
    pub runtime_ms: u64,
    pub config_hash: String,
    pub notes: Vec<String>,
}

impl VerificationReport {
    /// True when no error occurred and every residual is finite and within tolerance.
    pub fn evaluate_pass(&self) -> bool {
        self.errors.is_empty() && self.residuals.values().all(|&r| r.is_finite() && r <= self.tolerance)
    }

    /// Largest residual, infinite when one is not finite.
    pub fn worst(&self) -> f64 {
        self.residuals.values().fold(0.0, |m: f64, &r| if r.is_finite() { m.max(r) } else { f64::INFINITY })
    }
}

/// Non-finite values are written as strings so that JSON round-trips exactly.
mod num_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let out: BTreeMap<&String, Num> = m
            .iter()
            .map(|(k, &v)| {
                let n = if v.is_finite() {
                    Num::F(v)
                } else if v.is_nan() {
                    Num::S("NaN".into())
                } else if v > 0.0 {
                    Num::S("inf".into())
                } else {
                    Num::S("-inf".into())
                };
                (k, n)
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw: BTreeMap<String, Num> = BTreeMap::deserialize(d)?;
        raw.into_iter()
            .map(|(k, n)| {
                let v = match n {
                    Num::F(v) => v,
                    Num::S(s) => match s.as_str() {
                        "NaN" => f64::NAN,
                        "inf" => f64::INFINITY,
                        "-inf" => f64::NEG_INFINITY,
                        _ => return Err(serde::de::Error::custom(format!("bad number `{s}`"))),
                    },
                };
                Ok((k, v))
            })
            .collect()
    }
}

struct Builder {
    report: VerificationReport,
    start: Instant,
}

impl Builder {
    fn new(check_id: &str, params: &JacobiParams, tolerance: f64, cfg: &EvalConfig) -> Self {
        Self {
            report: VerificationReport {
                check_id: check_id.to_string(),
                params: *params,
                residuals: BTreeMap::new(),
                constants: BTreeMap::new(),
                errors: Vec::new(),
                pass: false,
                tolerance,
                runtime_ms: 0,
                config_hash: cfg.hash(),
                notes: Vec::new(),
            },
            start: Instant::now(),
        }
    }

    fn residual(&mut self, name: impl Into<String>, v: f64) {
        self.report.residuals.insert(name.into(), v);
    }

    /// Keeps the largest value seen under a name.
    fn residual_max(&mut self, name: impl Into<String>, v: f64) {
        let e = self.report.residuals.entry(name.into()).or_insert(0.0);
        if !(v <= *e) {
            *e = v;
        }
    }

    fn constant(&mut self, name: impl Into<String>, v: f64) {
        self.report.constants.insert(name.into(), v);
    }

    fn error(&mut self, context: &str, e: Error) {
        self.report.errors.push(format!("{context}: {e}"));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.report.notes.push(s.into());
    }

    /// Runs `f`, recording a failure under `context`.
    fn attempt<T>(&mut self, context: &str, f: impl FnOnce() -> Result<T>) -> Option<T> {
        match f() {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(context, e);
                None
            }
        }
    }

    fn finish(mut self) -> VerificationReport {
        self.report.runtime_ms = self.start.elapsed().as_millis() as u64;
        self.report.pass = self.report.evaluate_pass();
        self.report
    }
}

/// Writes reports as CSV, one row per residual or constant.
pub fn to_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from("check_id,alpha,beta,kind,name,value,tolerance,pass,runtime_ms,config_hash\n");
    for r in reports {
        let rows = r
            .residuals
            .iter()
            .map(|(k, v)| ("residual", k, v))
            .chain(r.constants.iter().map(|(k, v)| ("constant", k, v)));
        for (kind, name, v) in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&r.check_id),
                fmt17(r.params.alpha()),
                fmt17(r.params.beta()),
                kind,
                csv_field(name),
                fmt17(*v),
                fmt17(r.tolerance),
                r.pass,
                r.runtime_ms,
                r.config_hash
            ));
        }
        for e in &r.errors {
            out.push_str(&format!(
                "{},{},{},error,{},,{},{},{},{}\n",
                csv_field(&r.check_id),
                fmt17(r.params.alpha()),
                fmt17(r.params.beta()),
                csv_field(e),
                fmt17(r.tolerance),
                r.pass,
                r.runtime_ms,
                r.config_hash
            ));
        }
    }
    out
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ---------------------------------------------------------------------------
// registry

/// One verification check, producing one or more reports per parameter pair.
pub trait Check: Send + Sync {
    fn id(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    /// Whether the check has anything to verify for these parameters.
    fn applies(&self, _params: &JacobiParams) -> bool {
        true
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport>;
}

/// All checks with their default settings, in suite order.
pub fn registry() -> Vec<Box<dyn Check>> {
    vec![
        Box::new(BasisCheck),
        Box::new(IdentitiesCheck),
        Box::new(ClosedFormsCheck),
        Box::new(RepresentationCheck::default()),
        Box::new(PvZeroCheck::default()),
        Box::new(EnvelopeCheck::default()),
        Box::new(L1ProbeCheck::default()),
        Box::new(DivergenceCheck::default()),
    ]
}

pub fn check_names() -> Vec<&'static str> {
    registry().iter().map(|c| c.id()).collect()
}

pub fn check(name: &str) -> Result<Box<dyn Check>> {
    registry()
        .into_iter()
        .find(|c| c.id() == name)
        .ok_or_else(|| Error::Unknown { kind: "check", name: name.to_string() })
}

/// Runs the checks sequentially over the parameter pairs.
pub fn run_checks(checks: &[Box<dyn Check>], params: &[JacobiParams], cfg: &EvalConfig) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    for p in params {
        for c in checks {
            if c.applies(p) {
                out.extend(c.run(p, cfg));
            }
        }
    }
    out
}

fn interior_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|i| i as f64 * PI / (m + 1) as f64).collect()
}

fn pow2(k: i32) -> f64 {
    (k as f64 * std::f64::consts::LN_2).exp()
}

/// Least-squares line y = a + b x; returns (b, a, R^2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let b = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (b, my - b * mx, r2)
}

const PAIRS: [(f64, f64); 3] = [(0.7, 1.9), (1.2, 1.3), (2.5, 0.4)];

// ---------------------------------------------------------------------------
// basis

/// Orthonormality of the first polynomials and their eigen-equation.
pub struct BasisCheck;

impl Check for BasisCheck {
    fn id(&self) -> &'static str {
        "basis"
    }
    fn describe(&self) -> &'static str {
        "Gram matrix of the first 21 polynomials and the finite-difference eigen-residual"
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        let tol = &cfg.tolerances;
        let mut gram = Builder::new("basis.gram", params, tol.basis, cfg);
        let n = 20;
        if let Some(rule) = gram.attempt("quadrature", || gauss_jacobi_rule(params, 200)) {
            let vals: Option<Vec<Vec<f64>>> =
                gram.attempt("polynomials", || rule.nodes.iter().map(|&t| trig_poly_all(params, n, t)).collect());
            if let Some(vals) = vals {
                let mut dev: f64 = 0.0;
                for i in 0..=n {
                    for j in 0..=i {
                        let g: f64 = vals.iter().zip(&rule.weights).map(|(v, w)| w * v[i] * v[j]).sum();
                        dev = dev.max((g - if i == j { 1.0 } else { 0.0 }).abs());
                    }
                }
                gram.residual("gram_max_deviation", dev);
            }
        }
        let gram = gram.finish();

        let mut eig = Builder::new("basis.eigen", params, tol.eigen_residual, cfg);
        let h = 1e-4;
        let grid = interior_grid(19);
        let tau2 = params.tau() * params.tau();
        let res: Result<()> = (|| {
            for deg in 0..=8 {
                let lam2 = params.lambda(deg).powi(2);
                let mut num: f64 = 0.0;
                let mut den: f64 = 0.0;
                for &t in &grid {
                    let f = |x: f64| -> Result<f64> { Ok(trig_poly_all(params, deg, x)?[deg]) };
                    let (fm, f0, fp) = (f(t - h)?, f(t)?, f(t + h)?);
                    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
                    let d1 = (fp - fm) / (2.0 * h);
                    let applied = -d2 - params.drift(t) * d1 + tau2 * f0;
                    num = num.max((applied - lam2 * f0).abs());
                    den = den.max(f0.abs());
                }
                eig.residual(format!("n={deg}"), num / (den * lam2.max(1.0)));
            }
            Ok(())
        })();
        if let Err(e) = res {
            eig.error("eigen residual", e);
        }
        vec![gram, eig.finish()]
    }
}

// ---------------------------------------------------------------------------
// identities

/// Mass, zero mean, semigroup, series against product, potential rows and the
/// interlaced decomposition.
pub struct IdentitiesCheck;

const MASS_TIMES: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
const ROW_THETAS: [f64; 3] = [0.5, 1.2, 2.5];

impl Check for IdentitiesCheck {
    fn id(&self) -> &'static str {
        "identities"
    }
    fn describe(&self) -> &'static str {
        "Poisson-kernel mass, zero mean, semigroup, product formula, potential rows, interlaced decomposition"
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        let tol = &cfg.tolerances;
        let mut out = Vec::new();
        let rule = match gauss_jacobi_rule(params, 200) {
            Ok(r) => r,
            Err(e) => {
                let mut b = Builder::new("identities", params, tol.identities, cfg);
                b.error("quadrature", e);
                return vec![b.finish()];
            }
        };

        // mass and zero mean
        let mut mass = Builder::new("identities.mass", params, tol.identities, cfg);
        let mut zero = Builder::new("identities.zero_mean", params, tol.identities, cfg);
        for &t in &MASS_TIMES {
            for &th in &ROW_THETAS {
                let expect = (-t * params.lambda(0)).exp();
                if let Some(v) = mass.attempt("mass", || series_row(params, 0, t, th, &rule.nodes, false, &cfg.series))
                {
                    let s: f64 = v.iter().zip(&rule.weights).map(|(a, w)| a * w).sum();
                    mass.residual_max(format!("t={t}"), (s - expect).abs());
                }
                if let Some(v) =
                    zero.attempt("zero mean", || series_row(params, 1, t, th, &rule.nodes, false, &cfg.series))
                {
                    let s: f64 = v.iter().zip(&rule.weights).map(|(a, w)| a * w).sum();
                    zero.residual_max(format!("t={t}"), s.abs());
                }
            }
        }
        out.push(mass.finish());
        out.push(zero.finish());

        // semigroup
        let mut semi = Builder::new("identities.semigroup", params, tol.closed_form, cfg);
        for &(t, s) in &[(0.25, 0.5), (0.5, 0.5), (0.5, 1.0)] {
            for &(th, ph) in &PAIRS {
                let r = semi.attempt("semigroup", || {
                    let a = series_row(params, 0, t, th, &rule.nodes, false, &cfg.series)?;
                    let b = series_row(params, 0, s, ph, &rule.nodes, false, &cfg.series)?;
                    let lhs: f64 = a.iter().zip(&b).zip(&rule.weights).map(|((x, y), w)| x * y * w).sum();
                    let rhs = poisson_kernel(params, t + s, th, ph, PoissonMode::Series, cfg)?;
                    Ok((lhs - rhs).abs())
                });
                if let Some(r) = r {
                    semi.residual_max(format!("t={t},s={s}"), r);
                }
            }
        }
        out.push(semi.finish());

        // series against product
        if params.has_product_formula() {
            let mut prod = Builder::new("identities.product", params, tol.identities, cfg);
            let series = evaluator(PoissonMode::Series);
            let product = evaluator(PoissonMode::Product);
            for &t in &[0.05, 0.1, 0.3, 0.6, 1.0] {
                for j in 0..=1 {
                    for &(th, ph) in &PAIRS {
                        let r = prod.attempt("product", || {
                            let a = series.eval(params, j, t, th, ph, cfg)?;
                            let b = product.eval(params, j, t, th, ph, cfg)?;
                            Ok((a - b).abs())
                        });
                        if let Some(r) = r {
                            prod.residual_max(format!("j={j},t={t}"), r);
                        }
                    }
                }
            }
            out.push(prod.finish());
        }

        // potential rows
        let mut pot = Builder::new("identities.potential_row", params, tol.closed_form, cfg);
        let one = build("cosk(0)", params).expect("builtin function");
        let kind = KernelKind::Potential { sigma: 1.0, j: 0, compensated: params.tau_is_zero() };
        let expect = if params.tau_is_zero() { 0.0 } else { params.lambda(0).powi(-2) };
        for &th in &ROW_THETAS {
            if let Some(r) = pot
                .attempt("potential row", || crate::transforms::kernel_row(params, kind, th, one.as_ref(), false, cfg))
            {
                pot.residual(format!("theta={th:.6}"), (r.value - expect).abs());
            }
        }
        if params.tau_is_zero() {
            pot.note("tau = 0: the compensated row integrates to zero");
        }
        out.push(pot.finish());

        out.push(interlaced_identity(params, cfg));
        out
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn interlaced_identity(params: &JacobiParams, cfg: &EvalConfig) -> VerificationReport {
    let mut b = Builder::new("identities.interlaced", params, cfg.tolerances.identities, cfg);
    let Some(input) = b.attempt("analysis", || TransformInput::from_spec("bump(1,2)", params, cfg)) else {
        return b.finish();
    };
    let f = input.f.as_ref();
    let tau2 = params.tau() * params.tau();
    // mean of f for the tau = 0 projection
    let mean = QuadratureRule::composite(params, 1.0, 2.0, 8, 20).map(|r| r.integrate(|t| f.eval(t)) / params.mass());
    for m in 1..=2 {
        for &th in &[1.3, 1.6] {
            let r = b.attempt("interlaced identity", || {
                let lhs = riesz_spectral_tol(&input.coeffs, 2 * m, th, Variant::Interlaced, cfg.spectral.tail_tol)?;
                let rhs = if params.tau_is_zero() {
                    f.eval(th) - mean.clone()?
                } else {
                    let mut s = f.eval(th);
                    for j in 1..=m {
                        let inv = inverse_power(f, &input.coeffs, j as f64, InverseMode::Kernel, th, cfg)?;
                        s += binom(m, j) * (-tau2).powi(j as i32) * inv;
                    }
                    s
                };
                Ok((lhs - rhs).abs())
            });
            if let Some(r) = r {
                b.residual_max(format!("m={m}"), r);
            }
        }
    }
    if params.tau_is_zero() {
        b.note("tau = 0: the identity reduces to the projection onto the complement of constants");
    }
    b.finish()
}

// ---------------------------------------------------------------------------
// closed forms

/// Exact formulas available when alpha = beta = -1/2.
pub struct ClosedFormsCheck;

fn is_chebyshev(p: &JacobiParams) -> bool {
    p.alpha() == -0.5 && p.beta() == -0.5
}

fn disc_poisson(t: f64, theta: f64, phi: f64) -> f64 {
    let r = (-t).exp();
    let pr = |x: f64| (1.0 - r * r) / (1.0 - 2.0 * r * x.cos() + r * r);
    (pr(theta - phi) + pr(theta + phi)) / (2.0 * PI)
}

fn cot_kernel(theta: f64, phi: f64) -> f64 {
    let cot = |x: f64| 1.0 / x.tan();
    -(cot((theta - phi) / 2.0) + cot((theta + phi) / 2.0)) / (2.0 * PI)
}

impl Check for ClosedFormsCheck {
    fn id(&self) -> &'static str {
        "closedforms"
    }
    fn describe(&self) -> &'static str {
        "Chebyshev-case Poisson kernel, first and second Riesz kernels, conjugate of cos"
    }
    fn applies(&self, params: &JacobiParams) -> bool {
        is_chebyshev(params)
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        let tol = &cfg.tolerances;
        let mut pois = Builder::new("closedforms.poisson", params, tol.basis, cfg);
        for &t in &[0.002, 0.05, 0.5, 2.0] {
            for &(th, ph) in &PAIRS {
                if let Some(v) = pois.attempt("poisson", || poisson_kernel(params, t, th, ph, PoissonMode::Auto, cfg)) {
                    pois.residual_max(format!("t={t}"), (v - disc_poisson(t, th, ph)).abs());
                }
            }
        }

        let pois = pois.finish();
        let mut ker = Builder::new("closedforms.kernels", params, tol.closed_form, cfg);
        let pairs = [(1.0, 2.0), (0.3, 2.8), (1.0, 1.01), (2.0, 1.999), (0.05, 0.1), (3.0, 3.1)];
        for &(th, ph) in &pairs {
            if let Some(v) = ker.attempt("R_1", || riesz_kernel(params, 1, th, ph, cfg)) {
                let e = cot_kernel(th, ph);
                ker.residual_max("R_1 relative", (v - e).abs() / e.abs().max(1.0));
            }
            if let Some(v) = ker.attempt("R_2", || riesz_kernel(params, 2, th, ph, cfg)) {
                ker.residual_max("R_2", (v - 1.0 / PI).abs());
            }
        }

        let ker = ker.finish();
        let mut tr = Builder::new("closedforms.transform", params, 1e-6, cfg);
        let cos = build("cosk(1)", params).expect("builtin function");
        for &th in &[0.5f64, 1.0, 2.0] {
            for (order, exact) in [(1, -th.sin()), (2, -th.cos())] {
                if let Some(v) =
                    tr.attempt("singular", || riesz_singular(cos.as_ref(), params, order, th, Variant::Standard, cfg))
                {
                    tr.residual_max(format!("R_{order} cos"), (v - exact).abs());
                }
            }
        }
        vec![pois, ker, tr.finish()]
    }
}

// ---------------------------------------------------------------------------
// representation

/// Spectral against singular-integral evaluation of the transforms.
pub struct RepresentationCheck {
    pub orders: Vec<usize>,
    pub functions: Vec<String>,
    pub grid: Vec<f64>,
    pub variants: Vec<Variant>,
}

impl Default for RepresentationCheck {
    fn default() -> Self {
        Self {
            orders: vec![1, 2, 3, 4],
            functions: vec!["bump(1,2)".into(), "bump(0.5,2.5)".into()],
            grid: interior_grid(9),
            variants: vec![Variant::Standard, Variant::Interlaced],
        }
    }
}

impl RepresentationCheck {
    pub fn run_variant(&self, params: &JacobiParams, variant: Variant, cfg: &EvalConfig) -> VerificationReport {
        let id = match variant {
            Variant::Standard => "representation.standard",
            Variant::Interlaced => "representation.interlaced",
        };
        let mut b = Builder::new(id, params, cfg.tolerances.representation, cfg);
        for spec in &self.functions {
            let Some(input) = b.attempt(spec, || TransformInput::from_spec(spec, params, cfg)) else {
                continue;
            };
            for &n in &self.orders {
                let name = format!("N={n} f={spec}");
                for &th in &self.grid {
                    let r = b.attempt(&format!("{name} theta={th}"), || {
                        let s = riesz_spectral_tol(&input.coeffs, n, th, variant, cfg.spectral.tail_tol)?;
                        let g = riesz_singular(input.f.as_ref(), params, n, th, variant, cfg)?;
                        Ok((s - g).abs())
                    });
                    if let Some(r) = r {
                        b.residual_max(name.clone(), r);
                    }
                }
            }
        }
        b.finish()
    }
}

impl Check for RepresentationCheck {
    fn id(&self) -> &'static str {
        "representation"
    }
    fn describe(&self) -> &'static str {
        "spectral and singular-integral transforms agree on a grid"
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        self.variants.iter().map(|&v| self.run_variant(params, v, cfg)).collect()
    }
}

// ---------------------------------------------------------------------------
// principal value of the first-order row

/// The principal-value row integral of R_1 vanishes.
pub struct PvZeroCheck {
    pub thetas: Vec<f64>,
}

impl Default for PvZeroCheck {
    fn default() -> Self {
        Self { thetas: vec![PI / 4.0, PI / 2.0, 2.0] }
    }
}

impl Check for PvZeroCheck {
    fn id(&self) -> &'static str {
        "pvzero"
    }
    fn describe(&self) -> &'static str {
        "extrapolated principal-value row integral of R_1"
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        let mut b = Builder::new("pvzero", params, cfg.tolerances.pv_zero, cfg);
        for &th in &self.thetas {
            if let Some(e) = b.attempt(&format!("theta={th:.6}"), || pv_ladder(params, 1, th, &cfg.pv, cfg)) {
                b.residual(format!("theta={th:.6}"), e.limit.abs());
                b.residual(format!("theta={th:.6} ladder gap"), e.delta);
                if let Some(&(eps, v)) = e.ladder.last() {
                    b.constant(format!("theta={th:.6} truncated at {eps:.3e}"), v);
                }
            }
        }
        vec![b.finish()]
    }
}

// ---------------------------------------------------------------------------
// envelope

/// Uniform bound of the Poisson-kernel derivatives by the envelope for
/// t <= 1, and exponential decay for large t.
pub struct EnvelopeCheck {
    pub orders: Vec<usize>,
    /// Angles accumulate geometrically at both endpoints down to pi 2^{-angle_octaves}.
    pub angle_octaves: i32,
    /// Smallest t is 2^{-t_octaves}.
    pub t_octaves: i32,
    pub large_t: Vec<f64>,
}

impl Default for EnvelopeCheck {
    fn default() -> Self {
        Self {
            orders: vec![0, 1, 2],
            angle_octaves: 8,
            t_octaves: 6,
            large_t: (0..19).map(|i| 1.0 + 0.5 * i as f64).collect(),
        }
    }
}

/// Points 2^{-k/per_octave} for k = 0..=octaves * per_octave.
fn geometric(octaves: i32, per_octave: i32) -> Vec<f64> {
    (0..=octaves * per_octave).map(|k| (-(k as f64) / per_octave as f64 * std::f64::consts::LN_2).exp()).collect()
}

/// Angles clustering at both endpoints, symmetric about pi/2.
fn endpoint_grid(octaves: i32, per_octave: i32) -> Vec<f64> {
    let mut a: Vec<f64> =
        geometric(octaves, per_octave).into_iter().skip(per_octave as usize + 1).map(|x| PI * x).collect();
    a.reverse();
    let mut out = a.clone();
    out.push(PI / 2.0);
    out.extend(a.iter().rev().map(|x| PI - x));
    out
}

impl EnvelopeCheck {
    /// max over the grids of |d^j H_t| / envelope.
    fn sup_ratio(
        &self,
        params: &JacobiParams,
        j: usize,
        angles: &[f64],
        times: &[f64],
        cfg: &EvalConfig,
    ) -> Result<f64> {
        let mut best: f64 = 0.0;
        for &t in times {
            for &th in angles {
                let row = series_row(params, j, t, th, angles, false, &cfg.series)?;
                for (&ph, v) in angles.iter().zip(row) {
                    let e = crate::poisson::envelope_bound(params, j, t, th, ph)?;
                    best = best.max(v.abs() / e);
                }
            }
        }
        Ok(best)
    }

    fn small_t(&self, params: &JacobiParams, cfg: &EvalConfig) -> VerificationReport {
        let mut b = Builder::new("envelope.small_t", params, cfg.tolerances.envelope_stability, cfg);
        let coarse = endpoint_grid(self.angle_octaves, 1);
        let fine = endpoint_grid(self.angle_octaves, 2);
        let tc = geometric(self.t_octaves, 1);
        let tf = geometric(self.t_octaves, 2);
        for &j in &self.orders {
            let r = b.attempt(&format!("j={j}"), || {
                Ok((self.sup_ratio(params, j, &coarse, &tc, cfg)?, self.sup_ratio(params, j, &fine, &tf, cfg)?))
            });
            if let Some((c, f)) = r {
                b.constant(format!("j={j} C coarse"), c);
                b.constant(format!("j={j} C fine"), f);
                b.residual(format!("j={j} refinement change"), (f - c).abs() / c);
            }
        }
        b.finish()
    }

    fn large_t(&self, params: &JacobiParams, cfg: &EvalConfig) -> VerificationReport {
        let mut b = Builder::new("envelope.large_t", params, cfg.tolerances.large_t_fit, cfg);
        let angles = interior_grid(11);
        for &j in &self.orders {
            let comp = j == 0 && params.tau_is_zero();
            let expected = if j == 0 && !params.tau_is_zero() { params.lambda(0) } else { params.lambda(1) };
            let r = b.attempt(&format!("j={j}"), || {
                let mut sup = Vec::with_capacity(self.large_t.len());
                for &t in &self.large_t {
                    let mut m: f64 = 0.0;
                    for &th in &angles {
                        for v in series_row(params, j, t, th, &angles, comp, &cfg.series)? {
                            m = m.max(v.abs());
                        }
                    }
                    sup.push(m);
                }
                Ok(sup)
            });
            let Some(sup) = r else { continue };
            let logs: Vec<f64> = sup.iter().map(|m| m.ln()).collect();
            let (slope, icpt, _) = linear_fit(&self.large_t, &logs);
            let dev = self
                .large_t
                .iter()
                .zip(&sup)
                .map(|(&t, &m)| ((icpt + slope * t).exp() - m).abs() / m)
                .fold(0.0, f64::max);
            let n = sup.len();
            let dt = self.large_t[n - 1] - self.large_t[n - 2];
            b.constant(format!("j={j} rate c"), -slope);
            b.constant(format!("j={j} final local rate"), (sup[n - 2] / sup[n - 1]).ln() / dt);
            b.constant(format!("j={j} spectral rate"), expected);
            b.constant(format!("j={j} C'"), icpt.exp());
            b.residual(format!("j={j} fit deviation"), dev);
        }
        b.finish()
    }
}

impl Check for EnvelopeCheck {
    fn id(&self) -> &'static str {
        "envelope"
    }
    fn describe(&self) -> &'static str {
        "sup of |d^j H_t| over the envelope under grid refinement, and large-t exponential fit"
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        vec![self.small_t(params, cfg), self.large_t(params, cfg)]
    }
}

// ---------------------------------------------------------------------------
// row-integral growth

/// Growth of int_0^{pi/4} |K(theta, phi)| dmu(theta) as phi -> 0.
pub struct L1ProbeCheck {
    pub ks: Vec<i32>,
}

impl Default for L1ProbeCheck {
    fn default() -> Self {
        Self { ks: (3..=10).collect() }
    }
}

/// Settings for the probe: the fit needs far less accuracy than the
/// representation checks, so fewer smoothing levels and shells are used.
fn probe_config(cfg: &EvalConfig) -> EvalConfig {
    let mut c = cfg.clone();
    c.row = RowConfig { inner_shells: 3, ..cfg.row.clone() };
    c.abel = AbelConfig { levels: 3, ratio: 0.5, ..cfg.abel.clone() };
    c
}

/// int_0^{pi/4} |w(theta) K(theta, phi)| dmu(theta) for the kernel produced by `kernel`.
pub fn row_l1(
    params: &JacobiParams,
    phi: f64,
    kernel: &dyn Fn(&[(f64, f64)]) -> Result<Vec<f64>>,
    cfg: &EvalConfig,
) -> Result<f64> {
    let spec = RowSpec {
        lo: 0.0,
        hi: PI / 4.0,
        center: Some(phi),
        lo_power: Some(2.0 * params.alpha() + 1.0),
        hi_power: None,
    };
    let mut g = |xs: &[f64]| -> Result<Vec<f64>> {
        let pairs: Vec<(f64, f64)> = xs.iter().map(|&x| (x, phi)).collect();
        let k = kernel(&pairs)?;
        Ok(k.iter().zip(xs).map(|(v, &x)| v.abs() * density(params, x)).collect())
    };
    Ok(integrate_row(&spec, &Inner::Fit, &cfg.row, &mut g)?.value)
}

impl L1ProbeCheck {
    fn series(
        &self,
        params: &JacobiParams,
        kernel: &dyn Fn(&[(f64, f64)]) -> Result<Vec<f64>>,
        cfg: &EvalConfig,
    ) -> Result<Vec<f64>> {
        self.ks.iter().map(|&k| row_l1(params, pow2(-k), kernel, cfg)).collect()
    }
}

impl Check for L1ProbeCheck {
    fn id(&self) -> &'static str {
        "l1probe"
    }
    fn describe(&self) -> &'static str {
        "row integrals of |R_2| near the endpoint, fitted against log(1/phi)"
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        let pcfg = probe_config(cfg);
        let r2 = |pairs: &[(f64, f64)]| kernel_values(params, KernelKind::Riesz { order: 2 }, pairs, &pcfg);
        let logs: Vec<f64> = self.ks.iter().map(|&k| k as f64 * std::f64::consts::LN_2).collect();
        if is_chebyshev(params) {
            let mut b = Builder::new("l1probe", params, cfg.tolerances.bounded_probe, cfg);
            if let Some(g) = b.attempt("R_2 rows", || self.series(params, &r2, &pcfg)) {
                let (lo, hi) = g.iter().fold((f64::INFINITY, 0.0f64), |(a, c), &v| (a.min(v), c.max(v)));
                for (&k, v) in self.ks.iter().zip(&g) {
                    b.constant(format!("g(2^-{k:02})"), *v);
                    b.residual_max("max |g - 1/4|", (v - 0.25).abs());
                }
                b.constant("max g / min g", hi / lo);
                b.note("bounded case: the kernel is the constant 1/pi");
            }
            return vec![b.finish()];
        }
        let mut b = Builder::new("l1probe", params, 1.0 - cfg.tolerances.probe_r2, cfg);
        let fit = |b: &mut Builder, label: &str, g: &[f64]| -> (f64, f64) {
            let (slope, icpt, r2v) = linear_fit(&logs, g);
            for (&k, v) in self.ks.iter().zip(g) {
                b.constant(format!("{label} g(2^-{k:02})"), *v);
            }
            b.constant(format!("{label} slope"), slope);
            b.constant(format!("{label} intercept"), icpt);
            b.constant(format!("{label} R^2"), r2v);
            (slope, r2v)
        };
        let main = b.attempt("R_2 rows", || self.series(params, &r2, &pcfg));
        let verdict = |(slope, r2v): (f64, f64)| slope > 0.0 && r2v > cfg.tolerances.probe_r2;
        let mut headline = main.as_ref().map(|g| ("R_2", fit(&mut b, "R_2", g)));
        if !headline.is_some_and(|(_, s)| verdict(s)) {
            // fall back to the kernel cot(theta/2) d_theta K_1 carrying the log term
            let kind = KernelKind::Potential { sigma: 1.0, j: 1, compensated: params.tau_is_zero() };
            let t1 = |pairs: &[(f64, f64)]| -> Result<Vec<f64>> {
                let v = kernel_values(params, kind, pairs, &pcfg)?;
                Ok(v.iter().zip(pairs).map(|(k, &(t, _))| k / (t / 2.0).tan()).collect())
            };
            if let Some(g) = b.attempt("T_1 rows", || self.series(params, &t1, &pcfg)) {
                let s = fit(&mut b, "T_1", &g);
                if verdict(s) || headline.is_none() {
                    headline = Some(("T_1", s));
                }
            }
        }
        if let Some((label, (slope, r2v))) = headline {
            b.note(format!("headline pathway: {label}"));
            b.residual("1 - R^2", 1.0 - r2v);
            b.residual("slope not positive", if slope > 0.0 { 0.0 } else { 1.0 });
        }
        vec![b.finish()]
    }
}

// ---------------------------------------------------------------------------
// divergence of the unsubtracted near-diagonal integral

/// Excision experiment without subtraction: logarithmic growth for N = 1,
/// convergence for N = 2.
pub struct DivergenceCheck {
    pub theta: f64,
    pub function: String,
    /// Excision radii are 2^{-k} for k in this range; halvings are measured
    /// over the last `measured` steps.
    pub ks: (i32, i32),
    pub measured: usize,
}

impl Default for DivergenceCheck {
    fn default() -> Self {
        Self { theta: 1.5, function: "bump(1,2)".into(), ks: (4, 26), measured: 4 }
    }
}

impl DivergenceCheck {
    /// Integrals of |R_N f| dmu over |phi - theta| > eps along the ladder.
    fn ladder(
        &self,
        params: &JacobiParams,
        order: usize,
        f: &dyn TestFunction,
        cfg: &EvalConfig,
    ) -> Result<Vec<(f64, f64)>> {
        let (a, b) =
            f.support().ok_or_else(|| Error::Domain("divergence check needs a compactly supported function".into()))?;
        let eps: Vec<f64> = (self.ks.0..=self.ks.1).map(|k| pow2(-k)).collect();
        let spec = RowSpec { lo: a, hi: b, center: Some(self.theta), lo_power: None, hi_power: None };
        let th = self.theta;
        let mut g = |xs: &[f64]| -> Result<Vec<f64>> {
            let pairs: Vec<(f64, f64)> = xs.iter().map(|&x| (th, x)).collect();
            let k = kernel_values(params, KernelKind::Riesz { order }, &pairs, cfg)?;
            Ok(k.iter().zip(xs).map(|(v, &x)| (v * f.eval(x)).abs() * density(params, x)).collect())
        };
        let r = integrate_row(&spec, &Inner::Ladder(eps, Extrapolation::None), &cfg.row, &mut g)?;
        Ok(r.ladder)
    }
}

impl Check for DivergenceCheck {
    fn id(&self) -> &'static str {
        "divergence"
    }
    fn describe(&self) -> &'static str {
        "unsubtracted excision ladder: log growth for N = 1, convergence for N = 2 (Chebyshev case)"
    }
    fn applies(&self, params: &JacobiParams) -> bool {
        is_chebyshev(params)
    }
    fn run(&self, params: &JacobiParams, cfg: &EvalConfig) -> Vec<VerificationReport> {
        let tol = &cfg.tolerances;
        let mut c = cfg.clone();
        c.kernel_strategy = "tquad".into();
        let mut b = Builder::new("divergence", params, tol.even_change, cfg);
        b.note("kernels evaluated by t-quadrature; integrand |R_N f| without subtraction");
        let Some(f) = b.attempt("function", || build(&self.function, params)) else {
            return vec![b.finish()];
        };
        let steps = |lad: &[(f64, f64)]| -> Vec<f64> {
            let tail = &lad[lad.len() - self.measured - 1..];
            tail.windows(2).map(|w| w[1].1 - w[0].1).collect()
        };
        if let Some(lad) = b.attempt("N=1", || self.ladder(params, 1, f.as_ref(), &c)) {
            let growth = steps(&lad);
            let min = growth.iter().copied().fold(f64::INFINITY, f64::min);
            b.constant("N=1 min growth per halving", min);
            b.constant("N=1 value at smallest eps", lad.last().map_or(f64::NAN, |x| x.1));
            b.residual("N=1 growth shortfall", (tol.divergence_growth - min).max(0.0));
        }
        if let Some(lad) = b.attempt("N=2", || self.ladder(params, 2, f.as_ref(), &c)) {
            let change = steps(&lad).iter().map(|d| d.abs()).fold(0.0, f64::max);
            b.constant("N=2 value at smallest eps", lad.last().map_or(f64::NAN, |x| x.1));
            b.residual("N=2 max change per halving", change);
        }
        vec![b.finish()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cheb() -> JacobiParams {
        JacobiParams::new(-0.5, -0.5).unwrap()
    }

    #[test]
    fn report_round_trips_with_non_finite_values() {
        let cfg = EvalConfig::default();
        let mut b = Builder::new("x", &cheb(), 1e-6, &cfg);
        b.residual("a", 0.1 + 0.2);
        b.residual("b", f64::INFINITY);
        b.constant("c", f64::NAN);
        b.constant("d", -1.0 / 3.0);
        let r = b.finish();
        assert!(!r.pass);
        let text = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.residuals, r.residuals);
        assert!(back.constants["c"].is_nan());
        assert_eq!(back.constants["d"].to_bits(), r.constants["d"].to_bits());
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn pass_flag_follows_residuals() {
        let cfg = EvalConfig::default();
        let mut b = Builder::new("x", &cheb(), 1e-6, &cfg);
        b.residual("a", 1e-7);
        assert!(b.finish().pass);
        let mut b = Builder::new("x", &cheb(), 1e-6, &cfg);
        b.residual("a", 1e-7);
        b.error("step", Error::Domain("boom".into()));
        assert!(!b.finish().pass);
    }

    #[test]
    fn csv_quotes_names() {
        let cfg = EvalConfig::default();
        let mut b = Builder::new("x", &cheb(), 1e-6, &cfg);
        b.residual("N=1 f=bump(1,2)", 0.5);
        let csv = to_csv(&[b.finish()]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.contains("\"N=1 f=bump(1,2)\",5.0000000000000000e-1"));
    }

    #[test]
    fn line_fit() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (b, a, r2) = linear_fit(&x, &y);
        assert!((b + 0.5).abs() < 1e-14 && (a - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(
            check_names(),
            vec!["basis", "identities", "closedforms", "representation", "pvzero", "envelope", "l1probe", "divergence"]
        );
        assert!(check("nope").is_err());
        assert!(!ClosedFormsCheck.applies(&JacobiParams::new(1.0, 0.0).unwrap()));
    }

    #[test]
    fn basis_check_passes() {
        let cfg = EvalConfig::default();
        for r in BasisCheck.run(&JacobiParams::new(0.5, -0.3).unwrap(), &cfg) {
            assert!(r.pass, "{r:?}");
        }
    }
}
