//! Command implementations.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;

use riesz_jacobi::functions;
use riesz_jacobi::kernels::{dtheta_potential_kernel, riesz_kernel, riesz_kernel_interlaced, Variant};
use riesz_jacobi::poisson::{evaluator, poisson_kernel, poisson_kernel_compensated, PoissonMode};
use riesz_jacobi::transforms::{evaluator as transform_evaluator, inverse_power, InverseMode, TransformInput};
use riesz_jacobi::verify::{self, Check, PvZeroCheck, RepresentationCheck, VerificationReport};
use riesz_jacobi::{basis, Error, EvalConfig, JacobiParams};

use crate::run_config::{Format, RunConfig};
use crate::table::{Cell, Table};
use crate::{Cli, Command, EvalCommand, ParamArgs, VerifyArgs};

/// Errors in user input, reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// 2 for invalid input, 3 for numerical failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::InvalidParams(_) | Error::Domain(_) | Error::Unknown { .. } | Error::Config(_) => 2,
                _ => 3,
            };
        }
    }
    3
}

pub fn run(cli: Cli) -> Result<u8> {
    let mut rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        rc.format = f;
    }
    if let Some(j) = cli.jobs {
        rc.jobs = j;
    }
    match cli.command {
        Command::Eval(cmd) => {
            let table = eval(cmd, &rc.eval)?;
            print_table(&table, rc.format);
            Ok(0)
        }
        Command::Verify(args) => verify_cmd(args, &rc),
        Command::Defaults => {
            print!("{}", RunConfig::default().to_json());
            Ok(0)
        }
    }
}

fn print_table(t: &Table, format: Format) {
    match format {
        Format::Csv => print!("{}", t.to_csv()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&t.to_json()).expect("json")),
    }
}

fn params(p: ParamArgs) -> Result<JacobiParams> {
    Ok(JacobiParams::new(p.alpha, p.beta)?)
}

fn variant(s: &str) -> Result<Variant> {
    Ok(s.parse::<Variant>()?)
}

fn base(p: &JacobiParams) -> Vec<Cell> {
    vec![p.alpha().into(), p.beta().into()]
}

fn eval(cmd: EvalCommand, cfg: &EvalConfig) -> Result<Table> {
    match cmd {
        EvalCommand::Poly { params: pa, n, j, theta } => {
            let p = params(pa)?;
            let mut t = Table::new(&["alpha", "beta", "n", "j", "theta", "value"]);
            for th in theta {
                let v = basis::trig_poly_deriv(&p, n, j, th)?;
                let mut row = base(&p);
                row.extend([n.into(), j.into(), th.into(), v.into()]);
                t.push(row);
            }
            Ok(t)
        }
        EvalCommand::Poisson { params: pa, t: ts, theta, phi, j, mode, compensated } => {
            let p = params(pa)?;
            let mode: PoissonMode = mode.parse()?;
            let ev = evaluator(mode);
            let mut t = Table::new(&["alpha", "beta", "t", "theta", "phi", "j", "mode", "compensated", "value"]);
            for &tt in &ts {
                for &th in &theta {
                    for &ph in &phi {
                        // The n = 0 term is constant in theta, so compensation only affects j = 0.
                        let v = match (j, compensated) {
                            (0, true) => poisson_kernel_compensated(&p, tt, th, ph, mode, cfg)?,
                            (0, false) => poisson_kernel(&p, tt, th, ph, mode, cfg)?,
                            _ => ev.eval(&p, j, tt, th, ph, cfg)?,
                        };
                        let mut row = base(&p);
                        row.extend([
                            tt.into(),
                            th.into(),
                            ph.into(),
                            j.into(),
                            ev.name().into(),
                            compensated.into(),
                            v.into(),
                        ]);
                        t.push(row);
                    }
                }
            }
            Ok(t)
        }
        EvalCommand::Kernel { params: pa, order, variant: var, sigma, j, compensated, theta, phi } => {
            let p = params(pa)?;
            let var = variant(&var)?;
            let (label, f): (String, Box<dyn Fn(f64, f64) -> riesz_jacobi::Result<f64>>) = match (order, sigma) {
                (Some(n), None) => match var {
                    Variant::Standard => (format!("R_{n}"), Box::new(move |a, b| riesz_kernel(&p, n, a, b, cfg))),
                    Variant::Interlaced => {
                        (format!("interlaced R_{n}"), Box::new(move |a, b| riesz_kernel_interlaced(&p, n, a, b, cfg)))
                    }
                },
                (None, Some(s)) => {
                    let name = if compensated { "compensated K" } else { "K" };
                    (
                        format!("d^{j} {name}_{s}"),
                        Box::new(move |a, b| dtheta_potential_kernel(&p, j, s, a, b, compensated, cfg)),
                    )
                }
                _ => bail!(UsageError("give either --N or --sigma".into())),
            };
            let mut t = Table::new(&["alpha", "beta", "kernel", "theta", "phi", "value"]);
            for &th in &theta {
                for &ph in &phi {
                    let v = f(th, ph)?;
                    let mut row = base(&p);
                    row.extend([label.clone().into(), th.into(), ph.into(), v.into()]);
                    t.push(row);
                }
            }
            Ok(t)
        }
        EvalCommand::Transform { params: pa, order, sigma, variant: var, f, theta } => {
            let p = params(pa)?;
            let input = TransformInput::from_spec(&f, &p, cfg)?;
            match (order, sigma) {
                (Some(n), None) => {
                    let var = variant(&var)?;
                    let spectral = transform_evaluator("spectral")?;
                    let singular = transform_evaluator("singular")?;
                    let mut t = Table::new(&[
                        "alpha",
                        "beta",
                        "f",
                        "N",
                        "variant",
                        "theta",
                        "spectral",
                        "singular",
                        "difference",
                    ]);
                    for th in theta {
                        let a = spectral.eval(&input, n, th, var, cfg)?;
                        let b = singular.eval(&input, n, th, var, cfg)?;
                        let mut row = base(&p);
                        let vname = match var {
                            Variant::Standard => "standard",
                            Variant::Interlaced => "interlaced",
                        };
                        row.extend([
                            f.clone().into(),
                            n.into(),
                            vname.into(),
                            th.into(),
                            a.into(),
                            b.into(),
                            (a - b).into(),
                        ]);
                        t.push(row);
                    }
                    Ok(t)
                }
                (None, Some(s)) => {
                    let mut t =
                        Table::new(&["alpha", "beta", "f", "sigma", "theta", "spectral", "kernel", "difference"]);
                    for th in theta {
                        let a = inverse_power(input.f.as_ref(), &input.coeffs, s, InverseMode::Spectral, th, cfg)?;
                        let b = inverse_power(input.f.as_ref(), &input.coeffs, s, InverseMode::Kernel, th, cfg)?;
                        let mut row = base(&p);
                        row.extend([f.clone().into(), s.into(), th.into(), a.into(), b.into(), (a - b).into()]);
                        t.push(row);
                    }
                    Ok(t)
                }
                _ => bail!(UsageError("give either --N or --sigma".into())),
            }
        }
    }
}

/// Builds the checks named on the command line, applying overrides.
fn checks(args: &VerifyArgs) -> Result<Vec<Box<dyn Check>>> {
    let mut list: Vec<Box<dyn Check>> =
        if args.check == "all" { verify::registry() } else { vec![verify::check(&args.check)?] };
    for c in list.iter_mut() {
        match c.id() {
            "pvzero" if !args.theta.is_empty() => {
                *c = Box::new(PvZeroCheck { thetas: args.theta.clone() });
            }
            "representation" => {
                let mut r = RepresentationCheck::default();
                if !args.theta.is_empty() {
                    r.grid = args.theta.clone();
                }
                if !args.orders.is_empty() {
                    r.orders = args.orders.clone();
                }
                if !args.functions.is_empty() {
                    for f in &args.functions {
                        functions::build(f, &JacobiParams::new(0.0, 0.0)?)?;
                    }
                    r.functions = args.functions.clone();
                }
                if !args.variant.is_empty() {
                    r.variants = args.variant.iter().map(|v| variant(v)).collect::<Result<_>>()?;
                }
                *c = Box::new(r);
            }
            _ => {}
        }
    }
    Ok(list)
}

fn verify_cmd(args: VerifyArgs, rc: &RunConfig) -> Result<u8> {
    let param_list = match (args.alpha, args.beta) {
        (Some(a), Some(b)) => vec![JacobiParams::new(a, b)?],
        _ => rc.params.clone(),
    };
    if param_list.is_empty() {
        bail!(UsageError("no parameter pairs to verify".into()));
    }
    let list = checks(&args)?;
    let tasks: Vec<(JacobiParams, usize)> =
        param_list.iter().flat_map(|p| (0..list.len()).filter(|&i| list[i].applies(p)).map(move |i| (*p, i))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(rc.jobs).build().context("cannot start worker threads")?;
    let results: Vec<Vec<VerificationReport>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(p, i)| {
                info!("running {} for {p}", list[*i].id());
                list[*i].run(p, &rc.eval)
            })
            .collect()
    });
    let mut reports: Vec<VerificationReport> = results.into_iter().flatten().collect();
    if args.omit_timing {
        for r in &mut reports {
            r.runtime_ms = 0;
        }
    }

    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from(&rc.out_dir));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let stem = dir.join(format!("verify-{}", args.check));
    let json = serde_json::to_string_pretty(&reports)? + "\n";
    fs::write(stem.with_extension("json"), &json).context("cannot write the JSON report")?;
    fs::write(stem.with_extension("csv"), verify::to_csv(&reports)).context("cannot write the CSV report")?;

    match rc.format {
        Format::Json => print!("{json}"),
        Format::Csv => {
            let mut t = Table::new(&["check_id", "alpha", "beta", "pass", "worst_residual", "tolerance", "errors"]);
            for r in &reports {
                let mut row = base(&r.params);
                row.insert(0, r.check_id.clone().into());
                row.extend([r.pass.into(), r.worst().into(), r.tolerance.into(), r.errors.len().into()]);
                t.push(row);
            }
            print!("{}", t.to_csv());
        }
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    eprintln!("{} of {} reports passed; reports written to {}", reports.len() - failed, reports.len(), dir.display());
    if reports.iter().any(|r| !r.errors.is_empty()) {
        Ok(3)
    } else if failed > 0 {
        Ok(1)
    } else {
        Ok(0)
    }
}
