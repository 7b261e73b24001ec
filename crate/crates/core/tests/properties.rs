use proptest::prelude::*;

use riesz_jacobi::basis::{pi0_project, synthesize, trig_poly_all, trig_poly_deriv, CoeffVector};
use riesz_jacobi::kernels::{potential_kernel, Variant};
use riesz_jacobi::poisson::{poisson_kernel, PoissonMode};
use riesz_jacobi::quadrature::gauss_jacobi_rule;
use riesz_jacobi::transforms::riesz_spectral;
use riesz_jacobi::verify::VerificationReport;
use riesz_jacobi::{EvalConfig, JacobiParams};

fn params() -> impl Strategy<Value = JacobiParams> {
    (-0.95f64..3.0, -0.95f64..3.0).prop_map(|(a, b)| JacobiParams::new(a, b).unwrap())
}

fn product_params() -> impl Strategy<Value = JacobiParams> {
    (-0.5f64..2.5, -0.5f64..2.5).prop_map(|(a, b)| JacobiParams::new(a, b).unwrap())
}

fn angle() -> impl Strategy<Value = f64> {
    0.05f64..3.09
}

fn finite_or_not() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => any::<f64>().prop_filter("finite", |x| x.is_finite()),
        1 => Just(f64::NAN),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parameters_outside_the_range_are_rejected(a in -5.0f64..-1.0, b in -0.9f64..3.0) {
        prop_assert!(JacobiParams::new(a, b).is_err());
        prop_assert!(JacobiParams::new(b, a).is_err());
    }

    #[test]
    fn basis_is_orthonormal(p in params()) {
        let rule = gauss_jacobi_rule(&p, 40).unwrap();
        let n = 15;
        let mut gram = vec![vec![0.0; n + 1]; n + 1];
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = trig_poly_all(&p, n, t).unwrap();
            for i in 0..=n {
                for j in 0..=n {
                    gram[i][j] += w * v[i] * v[j];
                }
            }
        }
        for (i, row) in gram.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - want).abs() < 1e-11, "({i},{j}): {g}");
            }
        }
    }

    #[test]
    fn poisson_kernel_is_symmetric(p in params(), t in 0.05f64..2.0, th in angle(), ph in angle()) {
        let cfg = EvalConfig::default();
        let a = poisson_kernel(&p, t, th, ph, PoissonMode::Series, &cfg).unwrap();
        let b = poisson_kernel(&p, t, ph, th, PoissonMode::Series, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn poisson_series_matches_product(p in product_params(), t in 0.05f64..1.0, th in angle(), ph in angle()) {
        let cfg = EvalConfig::default();
        let s = poisson_kernel(&p, t, th, ph, PoissonMode::Series, &cfg).unwrap();
        let q = poisson_kernel(&p, t, th, ph, PoissonMode::Product, &cfg).unwrap();
        prop_assert!((s - q).abs() <= 1e-9 * s.abs().max(1.0), "{s} vs {q}");
    }

    #[test]
    fn projection_removes_only_the_constant(p in params(), a in prop::collection::vec(-1.0f64..1.0, 2..12), th in angle(), ph in angle()) {
        let c = CoeffVector { params: p, a };
        let proj = pi0_project(&c);
        prop_assert_eq!(&pi0_project(&proj), &proj);
        let d1 = synthesize(&c, th).unwrap() - synthesize(&proj, th).unwrap();
        let d2 = synthesize(&c, ph).unwrap() - synthesize(&proj, ph).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-12);
        prop_assert!((d1 - c.a[0] / p.mass().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectral_transform_of_one_mode(p in params(), n in 1usize..10, order in 1usize..5, th in angle()) {
        let mut a = vec![0.0; 30];
        a[n] = 1.0;
        let c = CoeffVector { params: p, a };
        let got = riesz_spectral(&c, order, th, Variant::Standard).unwrap();
        let want = trig_poly_deriv(&p, n, order, th).unwrap() / p.lambda(n).powi(order as i32);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn report_json_round_trips_bit_exactly(
        values in prop::collection::vec(finite_or_not(), 0..6),
        tol in 1e-12f64..1.0,
    ) {
        let mut r = VerificationReport {
            check_id: "prop".into(),
            params: JacobiParams::new(0.25, -0.5).unwrap(),
            residuals: values.iter().enumerate().map(|(i, v)| (format!("r{i}"), *v)).collect(),
            constants: values.iter().enumerate().map(|(i, v)| (format!("c{i}"), -v)).collect(),
            errors: vec![],
            pass: false,
            tolerance: tol,
            runtime_ms: 7,
            config_hash: "0".repeat(64),
            notes: vec!["note, with \"quotes\"".into()],
        };
        r.pass = r.evaluate_pass();
        let text = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        // NaN payloads and signs carry no meaning and are not preserved
        let key = |v: &f64| if v.is_nan() { f64::NAN.to_bits() } else { v.to_bits() };
        let bits = |m: &std::collections::BTreeMap<String, f64>| m.iter().map(|(k, v)| (k.clone(), key(v))).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.residuals), bits(&r.residuals));
        prop_assert_eq!(bits(&back.constants), bits(&r.constants));
        prop_assert_eq!(back.pass, r.pass);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn potential_kernel_is_symmetric(p in params(), sigma in 0.3f64..1.5, th in 0.3f64..1.2, gap in 0.5f64..1.5) {
        let cfg = EvalConfig::default();
        let ph = th + gap;
        let a = potential_kernel(&p, sigma, th, ph, p.tau_is_zero(), &cfg).unwrap();
        let b = potential_kernel(&p, sigma, ph, th, p.tau_is_zero(), &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
    }
}
