//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bellopt::inequality::{builtins, by_name, verify_lhv_bounds};
use bellopt::optimizer::{optimize_settings, OptimizerConfig};
use bellopt::{joint_probability, single_probability, LocalOscillatorSetting, SettingsVector, WernerParameter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn bellopt(args: &[&str]) -> Result<(Value, Duration), String> {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_bellopt"))
        .args(args)
        .env_remove("BELLOPT_SEED")
        .output()
        .map_err(|e| format!("spawn failed: {e}"))?;
    let elapsed = t.elapsed();
    if !out.status.success() {
        return Err(format!(
            "bellopt {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let v = serde_json::from_slice(&out.stdout).map_err(|e| format!("bad json: {e}"))?;
    Ok((v, elapsed))
}

fn threshold(name: &str) -> Result<(f64, Duration), String> {
    let (r, t) = bellopt(&["threshold", "--inequality", name, "--tol-p", "1e-3"])?;
    let p = r["outputs"]["p_star"]
        .as_f64()
        .ok_or_else(|| format!("{name}: no p_star in {}", r["outputs"]))?;
    Ok((p, t))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn p(v: f64) -> WernerParameter {
    WernerParameter::new(v).unwrap()
}

fn ch_threshold() -> Outcome {
    let (p_star, t) = threshold("ch")?;
    check(
        (p_star - 0.75).abs() <= 0.02 && t <= Duration::from_secs(60),
        format!("p* = {p_star:.4} (target 0.75 ± 0.02), runtime {:.2} s (limit 60 s)", t.as_secs_f64()),
    )
}

fn w1_threshold() -> Outcome {
    let w1 = by_name("w1").unwrap();
    let zeros = SettingsVector::zeros(3);
    let mut curve_err = 0.0f64;
    for k in 0..=100 {
        let pv = k as f64 / 100.0;
        let v = w1.evaluate(p(pv), &zeros).unwrap();
        curve_err = curve_err.max((v - (1.5 - 0.75 * (1.0 - pv))).abs());
    }
    let at_third = w1.evaluate(p(1.0 / 3.0), &zeros).unwrap();
    let tol_p = OptimizerConfig::default().tol_p;
    let (p_star, _) = threshold("w1")?;
    check(
        (p_star - 1.0 / 3.0).abs() <= 0.01 && curve_err <= 1e-12 && (at_third - 1.0).abs() <= 1e-12 && (p_star - 1.0 / 3.0).abs() <= tol_p,
        format!(
            "p* = {p_star:.5} (target 1/3 ± 0.01, within tol_p {tol_p}); coincident curve max error {curve_err:.1e}, value at 1/3 = {at_third}"
        ),
    )
}

fn j1_threshold_and_linearity() -> Outcome {
    let (p_star, _) = threshold("j1")?;
    let j1 = by_name("j1").unwrap();
    let cfg = OptimizerConfig::default();
    let ps: Vec<f64> = (5..=10).map(|k| k as f64 / 10.0).collect();
    let ex: Vec<f64> = ps
        .iter()
        .map(|&x| optimize_settings(&j1, p(x), &cfg).map(|r| r.excess))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let n = ps.len() as f64;
    let mx = ps.iter().sum::<f64>() / n;
    let my = ex.iter().sum::<f64>() / n;
    let sxy: f64 = ps.iter().zip(&ex).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = ps.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let resid = ps
        .iter()
        .zip(&ex)
        .map(|(x, y)| (y - (icpt + slope * x)).abs())
        .fold(0.0, f64::max);
    check(
        (p_star - 0.40).abs() <= 0.02 && resid <= 1e-3,
        format!(
            "p* = {p_star:.4} (target 0.40 ± 0.02); excess on p = 0.5..1.0 fits {slope:.4}·p {icpt:+.4} with max residual {resid:.2e} (limit 1e-3)"
        ),
    )
}

fn j3_threshold() -> Outcome {
    let j3 = by_name("j3").unwrap();
    let zeros = SettingsVector::zeros(4);
    let mut anchor_err = 0.0f64;
    for k in 0..=100 {
        let pv = k as f64 / 100.0;
        let v = j3.evaluate(p(pv), &zeros).unwrap();
        anchor_err = anchor_err.max((v - (4.0 - 1.5 * (1.0 - pv))).abs());
    }
    let at_third = j3.evaluate(p(1.0 / 3.0), &zeros).unwrap();
    let (p_star, _) = threshold("j3")?;
    check(
        (p_star - 1.0 / 3.0).abs() <= 0.01 && anchor_err <= 1e-12 && (at_third - 3.0).abs() <= 1e-12,
        format!("p* = {p_star:.5} (target 1/3 ± 0.01); anchor max error {anchor_err:.1e}, value at 1/3 = {at_third}"),
    )
}

fn maxima_at_one() -> Outcome {
    let cfg = OptimizerConfig::default();
    let w1 = optimize_settings(&by_name("w1").unwrap(), p(1.0), &cfg).map_err(|e| e.to_string())?;
    let j3 = optimize_settings(&by_name("j3").unwrap(), p(1.0), &cfg).map_err(|e| e.to_string())?;
    check(
        (w1.value - 1.5).abs() <= 1e-4 && (j3.value - 4.0).abs() <= 1e-4,
        format!("W1 max {:.8} (1.5 ± 1e-4), J3 max {:.8} (4 ± 1e-4)", w1.value, j3.value),
    )
}

fn oracle_equivalence() -> Outcome {
    let (r, t) = bellopt(&["oracle-check", "--random", "1000", "--seed", "42", "--truncation", "32"])?;
    let o = &r["outputs"];
    let joint = o["max_joint_discrepancy"].as_f64().unwrap_or(f64::NAN);
    let single = o["max_single_discrepancy"].as_f64().unwrap_or(f64::NAN);
    check(
        o["cases"] == 1000 && joint <= 1e-9 && single <= 1e-9 && t <= Duration::from_secs(120),
        format!(
            "{} draws, max joint {joint:.1e}, max single {single:.1e} (limit 1e-9), runtime {:.1} s (limit 120 s)",
            o["cases"],
            t.as_secs_f64()
        ),
    )
}

fn lhv_suite() -> Outcome {
    let t = Instant::now();
    let all = builtins();
    let reports: Vec<_> = all.iter().map(verify_lhv_bounds).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let bad: Vec<&str> = all
        .iter()
        .zip(&reports)
        .filter(|(i, r)| !r.verdict.holds() || !r.is_tight(i))
        .map(|(i, _)| i.name())
        .collect();
    check(
        all.len() == 7 && bad.is_empty() && elapsed < Duration::from_secs(1),
        format!(
            "{} inequalities, {} vertices, failing {bad:?}, runtime {:.1} ms",
            all.len(),
            reports.iter().map(|r| r.vertices).sum::<usize>(),
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn separable_soundness() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut worst = (f64::NEG_INFINITY, String::new(), 0.0);
    for ineq in builtins() {
        for pv in [0.0, 0.1, 0.2, 0.3] {
            let r = optimize_settings(&ineq, p(pv), &cfg).map_err(|e| e.to_string())?;
            if r.excess > worst.0 {
                worst = (r.excess, ineq.name().to_string(), pv);
            }
        }
    }
    check(
        worst.0 <= 1e-6,
        format!("largest excess {:.2e} ({} at p = {}) over 7 × 4 points (limit 1e-6)", worst.0, worst.1, worst.2),
    )
}

fn disk(rng: &mut ChaCha8Rng) -> LocalOscillatorSetting {
    LocalOscillatorSetting::from_polar(2.0 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut sym, mut gauge, mut affine, mut dominance) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..5000 {
        let (a, b) = (disk(&mut rng), disk(&mut rng));
        let pv: f64 = rng.gen();
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let q = joint_probability(p(pv), a, b).unwrap();
        sym = sym.max((q - joint_probability(p(pv), b, a).unwrap()).abs());
        gauge = gauge.max((q - joint_probability(p(pv), a.rotated(theta), b.rotated(theta)).unwrap()).abs());
        let q0 = joint_probability(p(0.0), a, b).unwrap();
        let q1 = joint_probability(p(1.0), a, b).unwrap();
        affine = affine.max((q - (pv * q1 + (1.0 - pv) * q0)).abs());
        let m = single_probability(a).unwrap().min(single_probability(b).unwrap());
        dominance = dominance.max(q - m);
    }

    let sweep = ["sweep", "--inequality", "j1", "--grid", "0.4:0.6:0.1", "--seed", "42", "--format", "json"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_bellopt"))
            .args(sweep)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .map(|o| o.stdout)
    };
    let outs = [run("1"), run("1"), run("4")];
    let outs: Vec<Vec<u8>> = outs.into_iter().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let reproducible = !outs[0].is_empty() && outs.iter().all(|o| o == &outs[0]);

    check(
        sym == 0.0 && gauge <= 1e-12 && affine <= 1e-12 && dominance <= 1e-15 && reproducible,
        format!(
            "5000 draws: symmetry {sym:.1e}, gauge {gauge:.1e}, affinity {affine:.1e}, joint − min marginal ≤ {dominance:.1e}; seeded sweep byte-identical across runs and 1/4 threads: {reproducible}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("CH threshold", ch_threshold),
        ("Bell-Wigner threshold", w1_threshold),
        ("Janssens J1 threshold and linear excess", j1_threshold_and_linearity),
        ("Janssens J3 threshold", j3_threshold),
        ("maxima at p = 1", maxima_at_one),
        ("oracle equivalence", oracle_equivalence),
        ("LHV facet suite", lhv_suite),
        ("separable-region soundness", separable_soundness),
        ("property suite", property_suite),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
