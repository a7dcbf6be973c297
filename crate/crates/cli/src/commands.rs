use std::process::ExitCode;

use bellopt::fock::{joint_vacuum_probability_oracle, single_vacuum_probability_oracle};
use bellopt::inequality::{builtins, by_name, verify_lhv_bounds, LhvReport, LhvVerdict};
use bellopt::optimizer::{self, find_threshold, OptimizationResult};
use bellopt::{
    joint_probability, single_probability, BellError, BellInequality, Facet, LocalOscillatorSetting, SettingsVector,
    WernerParameter,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::{defaults_banner, emit, RunReport};
use crate::{EvaluateArgs, Format, OracleArgs, OutputArgs, SweepArgs, ThresholdArgs, VerifyArgs};

/// Largest analytic-vs-oracle discrepancy accepted by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments; exit code 2.
    Usage(String),
    /// Domain or tolerance failure; exit code 1.
    Failure(String),
}

impl From<BellError> for CliError {
    fn from(e: BellError) -> Self {
        match e {
            BellError::MixingOutOfRange(_)
            | BellError::UnknownInequality(_)
            | BellError::SettingsLength { .. }
            | BellError::InvalidTruncation(_)
            | BellError::TruncationTooSmall { .. }
            | BellError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("write failed: {e}"))
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn lookup(name: &str) -> Result<BellInequality, CliError> {
    Ok(by_name(name)?)
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn write_out(out: &OutputArgs, default: Format, json: impl FnOnce() -> String, csv: impl FnOnce() -> String) -> Result<(), CliError> {
    let text = match out.format.unwrap_or(default) {
        Format::Json => json(),
        Format::Csv => {
            eprintln!("{}", defaults_banner());
            csv()
        }
    };
    emit(&text, out.output.as_deref())?;
    Ok(())
}

fn bound_f64(ineq: &BellInequality, facet: Facet) -> Option<f64> {
    ineq.bound(facet).map(|b| *b.numer() as f64 / *b.denom() as f64)
}

fn settings_json(s: &SettingsVector) -> Value {
    Value::Array(s.as_slice().iter().map(|a| json!([a.re, a.im])).collect())
}

fn settings_cells(s: &SettingsVector) -> Vec<String> {
    s.as_slice().iter().flat_map(|a| [a.re.to_string(), a.im.to_string()]).collect()
}

fn settings_header(n: usize) -> Vec<String> {
    (0..n).flat_map(|i| [format!("s{i}_re"), format!("s{i}_im")]).collect()
}

fn optimizer_inputs(cfg: &optimizer::OptimizerConfig) -> Value {
    json!({
        "starts": cfg.starts,
        "radius": cfg.radius,
        "tol_value": cfg.tol_value,
        "tol_p": cfg.tol_p,
        "max_iters": cfg.max_iters,
        "seed": cfg.seed,
    })
}

fn result_json(r: &OptimizationResult) -> Value {
    json!({
        "p": r.p,
        "value": r.value,
        "excess": r.excess,
        "violated": r.violated(),
        "facet": r.facet,
        "starts_converged": r.starts_converged,
        "settings": settings_json(&r.settings),
    })
}

pub fn evaluate(a: &EvaluateArgs) -> CmdResult {
    let ineq = lookup(&a.inequality)?;
    let p = WernerParameter::new(a.p)?;
    let settings = SettingsVector(a.settings.clone());
    let value = ineq.evaluate(p, &settings)?;
    let excess = ineq.excess_of_value(value);
    let lower_distance = bound_f64(&ineq, Facet::Lower).map(|b| value - b);
    let upper_distance = bound_f64(&ineq, Facet::Upper).map(|b| b - value);

    write_out(
        &a.out,
        Format::Json,
        || {
            RunReport::new(
                "evaluate",
                None,
                json!({"inequality": ineq.name(), "p": a.p, "settings": settings_json(&settings)}),
                json!({
                    "value": value,
                    "lower_bound": bound_f64(&ineq, Facet::Lower),
                    "upper_bound": bound_f64(&ineq, Facet::Upper),
                    "lower_distance": lower_distance,
                    "upper_distance": upper_distance,
                    "excess": excess,
                    "violated": excess > 0.0,
                }),
            )
            .to_json()
        },
        || {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            csv_text(
                &["inequality", "p", "value", "lower_distance", "upper_distance", "excess", "violated"].map(String::from),
                &[vec![
                    ineq.name().to_string(),
                    a.p.to_string(),
                    value.to_string(),
                    opt(lower_distance),
                    opt(upper_distance),
                    excess.to_string(),
                    u8::from(excess > 0.0).to_string(),
                ]],
            )
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(a: &SweepArgs) -> CmdResult {
    let ineq = lookup(&a.inequality)?;
    let cfg = a.opt.config();
    let grid = optimizer::grid(a.grid.start, a.grid.stop, a.grid.step)?;
    let rows = optimizer::sweep(&ineq, &grid, &cfg)?;

    write_out(
        &a.out,
        Format::Csv,
        || {
            RunReport::new(
                "sweep",
                Some(cfg.seed),
                json!({
                    "inequality": ineq.name(),
                    "grid": {"start": a.grid.start, "stop": a.grid.stop, "step": a.grid.step},
                    "optimizer": optimizer_inputs(&cfg),
                }),
                json!({"rows": rows.iter().map(|(_, r)| result_json(r)).collect::<Vec<_>>()}),
            )
            .to_json()
        },
        || {
            let mut header: Vec<String> = ["p", "value", "excess", "violated"].map(String::from).to_vec();
            header.extend(settings_header(ineq.n()));
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|(p, r)| {
                    let mut row = vec![
                        p.to_string(),
                        r.value.to_string(),
                        r.excess.to_string(),
                        u8::from(r.violated()).to_string(),
                    ];
                    row.extend(settings_cells(&r.settings));
                    row
                })
                .collect();
            csv_text(&header, &body)
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn threshold(a: &ThresholdArgs) -> CmdResult {
    let ineq = lookup(&a.inequality)?;
    let cfg = a.opt.config();
    let outcome = match find_threshold(&ineq, &cfg) {
        Ok(t) => Ok(t),
        Err(BellError::NoViolation { excess, .. }) => Err(excess),
        Err(e) => return Err(e.into()),
    };

    let inputs = json!({"inequality": ineq.name(), "optimizer": optimizer_inputs(&cfg)});
    let outputs = match &outcome {
        Ok(t) => json!({
            "status": "found",
            "p_star": t.p_star,
            "bracket": [t.bracket.0, t.bracket.1],
            "probes": t.probes,
            "evidence": result_json(&t.evidence),
        }),
        Err(excess) => json!({
            "status": "no_violation",
            "p_star": null,
            "best_excess_at_p1": excess,
        }),
    };
    write_out(
        &a.out,
        Format::Json,
        || RunReport::new("threshold", Some(cfg.seed), inputs.clone(), outputs.clone()).to_json(),
        || {
            let mut header: Vec<String> = ["status", "p_star", "p_low", "p_high", "excess"].map(String::from).to_vec();
            header.extend(settings_header(ineq.n()));
            let row = match &outcome {
                Ok(t) => {
                    let mut row = vec![
                        "found".to_string(),
                        t.p_star.to_string(),
                        t.bracket.0.to_string(),
                        t.bracket.1.to_string(),
                        t.evidence.excess.to_string(),
                    ];
                    row.extend(settings_cells(&t.evidence.settings));
                    row
                }
                Err(excess) => {
                    let mut row = vec!["no_violation".into(), String::new(), String::new(), String::new(), excess.to_string()];
                    row.extend(std::iter::repeat_n(String::new(), 2 * ineq.n()));
                    row
                }
            };
            csv_text(&header, &[row])
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn bits(v: &[u8]) -> String {
    v.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
}

pub fn verify_lhv(a: &VerifyArgs) -> CmdResult {
    let targets = match &a.inequality {
        Some(name) if !a.all => vec![lookup(name)?],
        _ => builtins(),
    };
    let reports: Vec<LhvReport> = targets.iter().map(verify_lhv_bounds).collect::<Result<_, _>>()?;
    let all_hold = reports.iter().all(|r| r.verdict.holds());

    write_out(
        &a.out,
        Format::Json,
        || {
            let entries: Vec<Value> = targets
                .iter()
                .zip(&reports)
                .map(|(ineq, r)| {
                    let mut v = serde_json::to_value(r).expect("report serialises");
                    v["lower_bound"] = json!(ineq.lower_bound().map(|b| b.to_string()));
                    v["upper_bound"] = json!(ineq.upper_bound().map(|b| b.to_string()));
                    v["tight"] = json!(r.is_tight(ineq));
                    v
                })
                .collect();
            RunReport::new(
                "verify-lhv",
                None,
                json!({"inequalities": targets.iter().map(|i| i.name()).collect::<Vec<_>>()}),
                json!({"all_hold": all_hold, "results": entries}),
            )
            .to_json()
        },
        || {
            let header = [
                "inequality",
                "vertices",
                "status",
                "violating_assignment",
                "min_value",
                "max_value",
                "lower_bound",
                "upper_bound",
                "lower_attained",
                "upper_attained",
            ]
            .map(String::from);
            let body: Vec<Vec<String>> = targets
                .iter()
                .zip(&reports)
                .map(|(ineq, r)| {
                    let (status, violating) = match &r.verdict {
                        LhvVerdict::Holds => ("holds", String::new()),
                        LhvVerdict::ViolatedAt { assignment, .. } => ("violated", bits(assignment)),
                    };
                    let join = |vs: &Vec<Vec<u8>>| vs.iter().map(|v| bits(v)).collect::<Vec<_>>().join(";");
                    vec![
                        ineq.name().to_string(),
                        r.vertices.to_string(),
                        status.to_string(),
                        violating,
                        r.min_value.clone(),
                        r.max_value.clone(),
                        ineq.lower_bound().map(|b| b.to_string()).unwrap_or_default(),
                        ineq.upper_bound().map(|b| b.to_string()).unwrap_or_default(),
                        join(&r.lower_attained),
                        join(&r.upper_attained),
                    ]
                })
                .collect();
            csv_text(&header, &body)
        },
    )?;

    if all_hold {
        Ok(ExitCode::SUCCESS)
    } else {
        for r in &reports {
            if let LhvVerdict::ViolatedAt { assignment, facet, value, bound } = &r.verdict {
                eprintln!(
                    "{}: {facet} bound {bound} violated at ({}) with value {value}",
                    r.name,
                    bits(assignment)
                );
            }
        }
        Ok(ExitCode::from(1))
    }
}

struct OracleCase {
    p: f64,
    alpha: LocalOscillatorSetting,
    beta: LocalOscillatorSetting,
    analytic_joint: f64,
    oracle_joint: f64,
    single_discrepancy: f64,
}

impl OracleCase {
    fn joint_discrepancy(&self) -> f64 {
        (self.analytic_joint - self.oracle_joint).abs()
    }
}

fn disk_point(rng: &mut ChaCha8Rng, radius: f64) -> LocalOscillatorSetting {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    LocalOscillatorSetting::from_polar(r, theta)
}

/// Seeded `(p, α, β)` draws: `p` uniform in `[0, 1]`, amplitudes uniform in
/// the disk of radius 2.
pub fn random_cases(count: usize, seed: u64) -> Vec<(f64, LocalOscillatorSetting, LocalOscillatorSetting)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = rng.gen_range(0.0..=1.0);
            let a = disk_point(&mut rng, 2.0);
            let b = disk_point(&mut rng, 2.0);
            (p, a, b)
        })
        .collect()
}

fn check_case(p: f64, alpha: LocalOscillatorSetting, beta: LocalOscillatorSetting, n: usize) -> Result<OracleCase, BellError> {
    let w = WernerParameter::new(p)?;
    let analytic_joint = joint_probability(w, alpha, beta)?;
    let oracle_joint = joint_vacuum_probability_oracle(w, alpha, beta, n)?;
    let mut single_discrepancy = 0.0f64;
    for s in [alpha, beta] {
        let d = (single_probability(s)? - single_vacuum_probability_oracle(w, s, n)?).abs();
        single_discrepancy = single_discrepancy.max(d);
    }
    Ok(OracleCase {
        p,
        alpha,
        beta,
        analytic_joint,
        oracle_joint,
        single_discrepancy,
    })
}

pub fn oracle_check(a: &OracleArgs) -> CmdResult {
    let n = a.truncation as usize;
    let draws = match a.random {
        Some(count) => random_cases(count as usize, a.seed.seed),
        None => a.pair.chunks_exact(2).map(|c| (a.p, c[0], c[1])).collect(),
    };
    let cases: Vec<OracleCase> = draws
        .into_iter()
        .map(|(p, x, y)| check_case(p, x, y, n))
        .collect::<Result<_, _>>()?;

    let max_joint = cases.iter().map(OracleCase::joint_discrepancy).fold(0.0, f64::max);
    let max_single = cases.iter().map(|c| c.single_discrepancy).fold(0.0, f64::max);
    let max_discrepancy = max_joint.max(max_single);
    let pass = max_discrepancy <= ORACLE_TOLERANCE;

    let inputs = match a.random {
        Some(count) => json!({"random": count, "seed": a.seed.seed, "truncation": n}),
        None => json!({
            "p": a.p,
            "pairs": cases.iter().map(|c| json!([[c.alpha.re, c.alpha.im], [c.beta.re, c.beta.im]])).collect::<Vec<_>>(),
            "truncation": n,
        }),
    };
    write_out(
        &a.out,
        Format::Json,
        || {
            let mut outputs = json!({
                "cases": cases.len(),
                "max_joint_discrepancy": max_joint,
                "max_single_discrepancy": max_single,
                "max_discrepancy": max_discrepancy,
                "tolerance": ORACLE_TOLERANCE,
                "pass": pass,
            });
            if a.random.is_none() {
                outputs["results"] = cases
                    .iter()
                    .map(|c| {
                        json!({
                            "p": c.p,
                            "analytic_joint": c.analytic_joint,
                            "oracle_joint": c.oracle_joint,
                            "joint_discrepancy": c.joint_discrepancy(),
                            "single_discrepancy": c.single_discrepancy,
                        })
                    })
                    .collect();
            }
            let seed = a.random.map(|_| a.seed.seed);
            RunReport::new("oracle-check", seed, inputs.clone(), outputs).to_json()
        },
        || {
            let header = [
                "p",
                "alpha_re",
                "alpha_im",
                "beta_re",
                "beta_im",
                "analytic_joint",
                "oracle_joint",
                "joint_discrepancy",
                "single_discrepancy",
            ]
            .map(String::from);
            let body: Vec<Vec<String>> = cases
                .iter()
                .map(|c| {
                    [
                        c.p,
                        c.alpha.re,
                        c.alpha.im,
                        c.beta.re,
                        c.beta.im,
                        c.analytic_joint,
                        c.oracle_joint,
                        c.joint_discrepancy(),
                        c.single_discrepancy,
                    ]
                    .iter()
                    .map(f64::to_string)
                    .collect()
                })
                .collect();
            csv_text(&header, &body)
        },
    )?;

    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(CliError::Failure(format!(
            "max discrepancy {max_discrepancy:e} exceeds {ORACLE_TOLERANCE:e}"
        )))
    }
}
