//! Test functions addressed by name: `bump(a,b)`, `cosk(k)`, `poly(n)`.

use std::collections::BTreeMap;

use crate::basis::trig_poly;
use crate::error::{Error, Result};
use crate::params::JacobiParams;

/// A real function on (0, pi) usable as transform input.
pub trait TestFunction: Send + Sync {
    fn name(&self) -> String;
    fn eval(&self, theta: f64) -> f64;
    /// Closed interval inside (0, pi) outside which the function vanishes.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

/// exp(-1/(1-u^2)) with u = (2 theta - a - b)/(b - a), zero outside (a, b).
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    a: f64,
    b: f64,
}

impl Bump {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0 < a && a < b && b < std::f64::consts::PI) {
            return Err(Error::Domain(format!("bump support ({a}, {b}) must lie inside (0, pi)")));
        }
        Ok(Self { a, b })
    }
}

impl TestFunction for Bump {
    fn name(&self) -> String {
        format!("bump({},{})", self.a, self.b)
    }

    fn eval(&self, theta: f64) -> f64 {
        if theta <= self.a || theta >= self.b {
            return 0.0;
        }
        let u = (2.0 * theta - self.a - self.b) / (self.b - self.a);
        let d = 1.0 - u * u;
        if d <= 0.0 {
            0.0
        } else {
            (-1.0 / d).exp()
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.a, self.b))
    }
}

/// cos(k theta).
#[derive(Debug, Clone, Copy)]
pub struct CosK {
    k: f64,
}

impl TestFunction for CosK {
    fn name(&self) -> String {
        format!("cosk({})", self.k)
    }

    fn eval(&self, theta: f64) -> f64 {
        (self.k * theta).cos()
    }
}

/// The normalized polynomial of degree n for the given parameters.
#[derive(Debug, Clone, Copy)]
pub struct Poly {
    n: usize,
    params: JacobiParams,
}

impl TestFunction for Poly {
    fn name(&self) -> String {
        format!("poly({})", self.n)
    }

    fn eval(&self, theta: f64) -> f64 {
        trig_poly(&self.params, self.n, theta).unwrap_or(f64::NAN)
    }
}

pub type FunctionBuilder = fn(&[f64], &JacobiParams) -> Result<Box<dyn TestFunction>>;

/// Name-keyed constructors for test functions.
pub struct FunctionRegistry {
    builders: BTreeMap<String, (usize, FunctionBuilder)>,
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl FunctionRegistry {
    pub fn empty() -> Self {
        Self { builders: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("bump", 2, |args, _| Ok(Box::new(Bump::new(args[0], args[1])?)));
        r.register("cosk", 1, |args, _| Ok(Box::new(CosK { k: args[0] })));
        r.register("poly", 1, |args, params| {
            let n = args[0];
            if n < 0.0 || n.fract() != 0.0 {
                return Err(Error::Domain(format!("poly degree must be a non-negative integer, got {n}")));
            }
            Ok(Box::new(Poly { n: n as usize, params: *params }))
        });
        r
    }

    pub fn register(&mut self, name: &str, arity: usize, builder: FunctionBuilder) {
        self.builders.insert(name.to_string(), (arity, builder));
    }

    pub fn names(&self) -> Vec<String> {
        self.builders.keys().cloned().collect()
    }

    /// Builds a function from a spec such as `bump(1,2)`.
    pub fn build(&self, spec: &str, params: &JacobiParams) -> Result<Box<dyn TestFunction>> {
        let (name, args) = parse_call(spec)?;
        let (arity, builder) =
            self.builders.get(name).ok_or_else(|| Error::Unknown { kind: "test function", name: name.to_string() })?;
        if args.len() != *arity {
            return Err(Error::Domain(format!("{name} takes {arity} argument(s), got {}", args.len())));
        }
        builder(&args, params)
    }
}

fn parse_call(spec: &str) -> Result<(&str, Vec<f64>)> {
    let bad = || Error::Domain(format!("cannot parse function spec `{spec}`"));
    let spec = spec.trim();
    let open = spec.find('(').ok_or_else(bad)?;
    let inner = spec[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let args = inner.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
    Ok((spec[..open].trim(), args))
}

/// Convenience wrapper around the builtin registry.
pub fn build(spec: &str, params: &JacobiParams) -> Result<Box<dyn TestFunction>> {
    FunctionRegistry::builtin().build(spec, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let p = JacobiParams::new(1.0, 0.0).unwrap();
        let f = build("bump(1,2)", &p).unwrap();
        assert_eq!(f.support(), Some((1.0, 2.0)));
        assert!((f.eval(1.5) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(2.0), 0.0);
        let g = build(" cosk( 3 ) ", &p).unwrap();
        assert!((g.eval(0.4) - 1.2f64.cos()).abs() < 1e-15);
        let h = build("poly(2)", &p).unwrap();
        assert_eq!(h.eval(0.9), trig_poly(&p, 2, 0.9).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        let p = JacobiParams::new(1.0, 0.0).unwrap();
        assert!(matches!(build("gauss(1)", &p), Err(Error::Unknown { .. })));
        assert!(build("bump(1)", &p).is_err());
        assert!(build("bump(2,1)", &p).is_err());
        assert!(build("poly(1.5)", &p).is_err());
        assert!(build("cosk", &p).is_err());
    }
}
