use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_riesz-jacobi"));
    c.env_remove("RIESZ_JACOBI_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn load(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn temp_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("riesz-jacobi-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

/// Validates the keywords used by the shipped schemas.
fn validate(v: &Value, s: &Value, path: &str) -> Result<(), String> {
    if let Some(alts) = s.get("oneOf").and_then(Value::as_array) {
        let n = alts.iter().filter(|a| validate(v, a, path).is_ok()).count();
        return if n == 1 { Ok(()) } else { Err(format!("{path}: {n} oneOf branches match")) };
    }
    if let Some(options) = s.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{path}: {v} not in enum"));
        }
    }
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|ty| match *ty {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: {v} is not {t}"));
        }
    }
    if let Some(x) = v.as_f64() {
        let bound = |k: &str| s.get(k).and_then(Value::as_f64);
        if bound("minimum").is_some_and(|m| x < m)
            || bound("exclusiveMinimum").is_some_and(|m| x <= m)
            || bound("exclusiveMaximum").is_some_and(|m| x >= m)
        {
            return Err(format!("{path}: {x} out of range"));
        }
    }
    if let Some(text) = v.as_str() {
        let len = text.chars().count() as u64;
        if s.get("minLength").and_then(Value::as_u64).is_some_and(|m| len < m)
            || s.get("maxLength").and_then(Value::as_u64).is_some_and(|m| len > m)
        {
            return Err(format!("{path}: bad length {len}"));
        }
    }
    if let Some(items) = v.as_array() {
        if s.get("minItems").and_then(Value::as_u64).is_some_and(|m| (items.len() as u64) < m) {
            return Err(format!("{path}: too few items"));
        }
        if let Some(is) = s.get("items") {
            for (i, it) in items.iter().enumerate() {
                validate(it, is, &format!("{path}[{i}]"))?;
            }
        }
    }
    if let Some(map) = v.as_object() {
        let props = s.get("properties").and_then(Value::as_object);
        for req in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !map.contains_key(req.as_str().unwrap()) {
                return Err(format!("{path}: missing {req}"));
            }
        }
        for (k, val) in map {
            let p = format!("{path}.{k}");
            match (props.and_then(|p| p.get(k)), s.get("additionalProperties")) {
                (Some(ps), _) => validate(val, ps, &p)?,
                (None, Some(Value::Bool(false))) => return Err(format!("{p}: unexpected property")),
                (None, Some(extra @ Value::Object(_))) => validate(val, extra, &p)?,
                _ => {}
            }
        }
    }
    Ok(())
}

#[test]
fn schema_validator_rejects_bad_documents() {
    let schema = load(&repo_file("config/run_config.schema.json"));
    let bad: Value = serde_json::json!({"jobs": -1});
    assert!(validate(&bad, &schema, "$").is_err());
    let bad: Value = serde_json::json!({"eval": {"abel": {"ratio": 1.5}}});
    assert!(validate(&bad, &schema, "$").is_err());
    let bad: Value = serde_json::json!({"extra": 1});
    assert!(validate(&bad, &schema, "$").is_err());
}

#[test]
fn shipped_default_matches_binary_and_schema() {
    let o = run(&["defaults"]);
    assert!(o.status.success());
    let shipped = std::fs::read_to_string(repo_file("config/default.json")).unwrap();
    assert_eq!(stdout(&o), shipped);
    let schema = load(&repo_file("config/run_config.schema.json"));
    validate(&serde_json::from_str(&shipped).unwrap(), &schema, "$").unwrap();
}

#[test]
fn chebyshev_polynomial_value() {
    let o = run(&[
        "eval",
        "poly",
        "--alpha",
        "-0.5",
        "--beta",
        "-0.5",
        "--n",
        "2",
        "--theta",
        "1.0471975511965976",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let x = v[0]["value"].as_f64().unwrap();
    assert!((x + 0.3989422804).abs() < 1e-10, "{x}");
}

#[test]
fn chebyshev_second_order_kernel_is_constant() {
    let o = run(&[
        "eval", "kernel", "--alpha", "-0.5", "--beta", "-0.5", "--N", "2", "--theta", "0.7,2.2", "--phi", "1.1,2.9",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,beta,kernel,theta,phi,value"));
    let values: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    for v in values {
        assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-7, "{v}");
    }
}

#[test]
fn transform_routes_agree() {
    let o = run(&[
        "eval",
        "transform",
        "--alpha",
        "1",
        "--beta",
        "0",
        "--N",
        "2",
        "--f",
        "bump(1,2)",
        "--theta",
        "1.5",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate(&v, &load(&repo_file("config/eval_output.schema.json")), "$").unwrap();
    let a = v[0]["spectral"].as_f64().unwrap();
    let b = v[0]["singular"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn poisson_modes_agree() {
    let args = |mode: &'static str| {
        vec![
            "eval", "poisson", "--alpha", "0.5", "--beta", "-0.3", "--t", "0.2", "--theta", "1.1", "--phi", "2.0",
            "--mode", mode, "--format", "json",
        ]
    };
    let get = |mode| {
        let o = run(&args(mode));
        assert!(o.status.success());
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v[0]["value"].as_f64().unwrap()
    };
    let (s, p) = (get("series"), get("product"));
    assert!((s - p).abs() < 1e-10 * s.abs().max(1.0), "{s} vs {p}");
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        vec!["eval", "poly", "--alpha", "-1.5", "--beta", "0", "--n", "1", "--theta", "1"],
        vec!["eval", "poly", "--alpha", "0", "--beta", "0", "--n", "1", "--theta", "4"],
        vec!["eval", "transform", "--alpha", "0", "--beta", "0", "--N", "1", "--f", "nope(1)", "--theta", "1"],
        vec![
            "eval",
            "kernel",
            "--alpha",
            "0",
            "--beta",
            "0",
            "--N",
            "1",
            "--variant",
            "odd",
            "--theta",
            "1",
            "--phi",
            "2",
        ],
        vec!["verify", "unknown"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_config_exits_with_two() {
    let dir = temp_dir("config");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"eval": {"kernel_strategy": "magic"}}"#).unwrap();
    let o = run(&["--config", path.to_str().unwrap(), "verify", "basis", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&path, r#"{"unknown": true}"#).unwrap();
    let o = run(&["--config", path.to_str().unwrap(), "defaults"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_follow_schema_and_are_byte_stable() {
    let dir = temp_dir("basis");
    let schema = load(&repo_file("config/report.schema.json"));
    let mut texts = Vec::new();
    for _ in 0..2 {
        let o = run(&["verify", "basis", "--out-dir", dir.to_str().unwrap(), "--omit-timing", "--jobs", "2"]);
        assert_eq!(o.status.code(), Some(0));
        let json = std::fs::read_to_string(dir.join("verify-basis.json")).unwrap();
        let csv = std::fs::read_to_string(dir.join("verify-basis.csv")).unwrap();
        texts.push((json, csv));
    }
    assert_eq!(texts[0], texts[1]);
    let reports: Value = serde_json::from_str(&texts[0].0).unwrap();
    validate(&reports, &schema, "$").unwrap();
    let n = reports.as_array().unwrap().len();
    assert_eq!(n, 10);
    let rows: usize = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["residuals"].as_object().unwrap().len() + r["constants"].as_object().unwrap().len())
        .sum();
    assert_eq!(texts[0].1.lines().count(), rows + 1);
}

#[test]
fn pvzero_example_passes() {
    let dir = temp_dir("pvzero");
    let o = run(&["verify", "pvzero", "--alpha", "0.5", "--beta", "-0.3", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = load(&dir.join("verify-pvzero.json"));
    assert_eq!(reports[0]["pass"], true);
}

#[test]
fn chebyshev_probe_is_one_quarter() {
    let dir = temp_dir("l1probe");
    let o = run(&[
        "--format",
        "json",
        "verify",
        "l1probe",
        "--alpha",
        "-0.5",
        "--beta",
        "-0.5",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let reports: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let constants = reports[0]["constants"].as_object().unwrap();
    let probes: Vec<_> = constants.iter().filter(|(k, _)| k.starts_with("g(")).collect();
    assert_eq!(probes.len(), 8);
    for (name, g) in probes {
        let g = g.as_f64().unwrap();
        assert!((g - 0.25).abs() < 1e-6, "{name}: {g}");
    }
}

#[test]
fn failing_check_exits_with_one() {
    let dir = temp_dir("envelope");
    let o = run(&["verify", "envelope", "--alpha", "1", "--beta", "0", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("envelope.large_t") && l.contains(",false,")), "{text}");
}
