//! Multi-start Nelder-Mead maximisation of the violation excess over
//! local-oscillator settings, `p` sweeps, and bisection for the smallest `p`
//! at which a violation appears.
//!
//! Settings are encoded as a real vector of length `2n - 1`: the first
//! setting is rotated onto the non-negative real axis (all probabilities are
//! invariant under a common phase), the others contribute `(re, im)` pairs.
//! Every coordinate is clamped to `[-radius, radius]`.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{LocalOscillatorSetting, WernerParameter};
use crate::error::{BellError, Result};
use crate::inequality::{BellInequality, Facet, SettingsVector};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Edge length of the initial simplex, as a fraction of the search radius.
const SIMPLEX_SCALE: f64 = 0.25;

/// Random starts are drawn from the inner box `[-f r, f r]`. Probabilities
/// decay like `e^{-|α|²}`, so starts near the edge of a radius-3 box sit on
/// a flat plateau and rarely reach the violating region.
const START_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of random start points per facet.
    pub starts: usize,
    /// Bound on every real and imaginary component.
    pub radius: f64,
    /// Simplex convergence tolerance on the objective spread.
    pub tol_value: f64,
    /// Bracket width at which threshold bisection stops.
    pub tol_p: f64,
    /// Iteration cap per local search.
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            radius: 3.0,
            tol_value: 1e-9,
            tol_p: 1e-3,
            max_iters: 2000,
            seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(BellError::Config(msg.to_string()));
        if self.starts < 1 {
            return bad("starts must be at least 1");
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad("radius must be positive and finite");
        }
        if !(self.tol_value.is_finite() && self.tol_value > 0.0) {
            return bad("tol_value must be positive");
        }
        if !(self.tol_p.is_finite() && self.tol_p > 0.0) {
            return bad("tol_p must be positive");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }
}

/// Best settings found for one inequality at one `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub p: f64,
    pub settings: SettingsVector,
    pub value: f64,
    pub excess: f64,
    /// Facet whose bound is closest to being (or most) violated.
    pub facet: Facet,
    /// Local searches that met the convergence test before `max_iters`.
    pub starts_converged: usize,
}

impl OptimizationResult {
    pub fn violated(&self) -> bool {
        self.excess > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub p_star: f64,
    /// `(p_low, p_high)` with no violation found at `p_low` and one found at
    /// `p_high`.
    pub bracket: (f64, f64),
    /// Optimum at `p_high`.
    pub evidence: OptimizationResult,
    /// Number of `optimize_settings` calls made, retries included.
    pub probes: usize,
}

/// Outcome of one Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearch {
    pub settings: SettingsVector,
    /// Signed excess past the targeted facet.
    pub facet_excess: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Box-constrained Nelder-Mead minimiser.
struct Simplex<'a, F: Fn(&[f64]) -> f64> {
    f: F,
    lower: &'a [f64],
    upper: &'a [f64],
}

impl<F: Fn(&[f64]) -> f64> Simplex<'_, F> {
    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(self.lower).zip(self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Returns (best point, best value, converged, iterations).
    fn minimize(&self, start: &[f64], step: f64, tol_value: f64, max_iters: usize) -> (Vec<f64>, f64, bool, usize) {
        let dim = start.len();
        let tol_x = tol_value.sqrt();
        let mut x0 = start.to_vec();
        self.clamp(&mut x0);

        let mut points = Vec::with_capacity(dim + 1);
        points.push(x0.clone());
        for k in 0..dim {
            let mut v = x0.clone();
            // Step inward when the vertex would leave the box.
            v[k] = if x0[k] + step <= self.upper[k] { x0[k] + step } else { x0[k] - step };
            self.clamp(&mut v);
            points.push(v);
        }
        let mut values: Vec<f64> = points.iter().map(|p| self.eval(p)).collect();
        let mut order: Vec<usize> = (0..=dim).collect();

        let mut iterations = 0;
        let mut converged = false;
        let mut centroid = vec![0.0; dim];
        let mut trial = vec![0.0; dim];
        let mut trial2 = vec![0.0; dim];

        while iterations < max_iters {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            let best = order[0];
            let worst = order[dim];
            let second = order[dim - 1];

            let spread = values[worst] - values[best];
            let diameter = points
                .iter()
                .map(|p| p.iter().zip(&points[best]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread <= tol_value && diameter <= tol_x {
                converged = true;
                break;
            }
            iterations += 1;

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for &i in &order[..dim] {
                for (c, v) in centroid.iter_mut().zip(&points[i]) {
                    *c += v;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= dim as f64);

            let along = |out: &mut Vec<f64>, coef: f64, pts: &Vec<Vec<f64>>| {
                for k in 0..dim {
                    out[k] = centroid[k] + coef * (pts[worst][k] - centroid[k]);
                }
            };

            along(&mut trial, -REFLECT, &points);
            self.clamp(&mut trial);
            let f_r = self.eval(&trial);

            if f_r < values[best] {
                along(&mut trial2, -REFLECT * EXPAND, &points);
                self.clamp(&mut trial2);
                let f_e = self.eval(&trial2);
                if f_e < f_r {
                    points[worst].copy_from_slice(&trial2);
                    values[worst] = f_e;
                } else {
                    points[worst].copy_from_slice(&trial);
                    values[worst] = f_r;
                }
                continue;
            }
            if f_r < values[second] {
                points[worst].copy_from_slice(&trial);
                values[worst] = f_r;
                continue;
            }
            if f_r < values[worst] {
                along(&mut trial2, -REFLECT * CONTRACT, &points);
                self.clamp(&mut trial2);
                let f_c = self.eval(&trial2);
                if f_c <= f_r {
                    points[worst].copy_from_slice(&trial2);
                    values[worst] = f_c;
                    continue;
                }
            } else {
                along(&mut trial2, CONTRACT, &points);
                self.clamp(&mut trial2);
                let f_c = self.eval(&trial2);
                if f_c < values[worst] {
                    points[worst].copy_from_slice(&trial2);
                    values[worst] = f_c;
                    continue;
                }
            }
            let anchor = points[best].clone();
            for i in 0..=dim {
                if i == best {
                    continue;
                }
                for k in 0..dim {
                    points[i][k] = anchor[k] + SHRINK * (points[i][k] - anchor[k]);
                }
                values[i] = self.eval(&points[i]);
            }
        }

        let best = (0..=dim)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
            .expect("non-empty simplex");
        (points[best].clone(), values[best], converged, iterations)
    }
}

fn decode(x: &[f64], gauge_fixed: bool) -> Vec<LocalOscillatorSetting> {
    if gauge_fixed {
        let mut out = Vec::with_capacity(x.len().div_ceil(2));
        out.push(LocalOscillatorSetting::new(x[0], 0.0));
        out.extend(x[1..].chunks_exact(2).map(|c| LocalOscillatorSetting::new(c[0], c[1])));
        out
    } else {
        x.chunks_exact(2).map(|c| LocalOscillatorSetting::new(c[0], c[1])).collect()
    }
}

/// Rotate so the first setting is real and non-negative, then flatten.
fn encode(settings: &[LocalOscillatorSetting], gauge_fixed: bool) -> Vec<f64> {
    if !gauge_fixed {
        return settings.iter().flat_map(|s| [s.re, s.im]).collect();
    }
    let first = settings[0];
    let theta = if first.norm_sqr() > 0.0 { -first.im.atan2(first.re) } else { 0.0 };
    let mut x = Vec::with_capacity(2 * settings.len() - 1);
    x.push(first.modulus());
    for s in &settings[1..] {
        let r = s.rotated(theta);
        x.push(r.re);
        x.push(r.im);
    }
    x
}

fn bounds(n: usize, radius: f64, gauge_fixed: bool) -> (Vec<f64>, Vec<f64>) {
    let dim = if gauge_fixed { 2 * n - 1 } else { 2 * n };
    let mut lower = vec![-radius; dim];
    let upper = vec![radius; dim];
    if gauge_fixed {
        lower[0] = 0.0;
    }
    (lower, upper)
}

/// One Nelder-Mead run from `start`, maximising the excess past `facet`.
pub fn local_search(
    ineq: &BellInequality,
    p: WernerParameter,
    facet: Facet,
    start: &SettingsVector,
    cfg: &OptimizerConfig,
    gauge_fixed: bool,
) -> Result<LocalSearch> {
    cfg.validate()?;
    ineq.evaluate(p, start)?;
    if ineq.bound(facet).is_none() {
        return Err(BellError::Config(format!("{} has no {facet} bound", ineq.name())));
    }
    let x0 = encode(start.as_slice(), gauge_fixed);
    Ok(run_from(ineq, p.value(), facet, &x0, cfg, gauge_fixed))
}

fn run_from(
    ineq: &BellInequality,
    p: f64,
    facet: Facet,
    x0: &[f64],
    cfg: &OptimizerConfig,
    gauge_fixed: bool,
) -> LocalSearch {
    let (lower, upper) = bounds(ineq.n(), cfg.radius, gauge_fixed);
    let simplex = Simplex {
        f: |x: &[f64]| -ineq.facet_excess(facet, ineq.evaluate_unchecked(p, &decode(x, gauge_fixed))),
        lower: &lower,
        upper: &upper,
    };
    let (x, f, converged, iterations) =
        simplex.minimize(x0, SIMPLEX_SCALE * cfg.radius, cfg.tol_value, cfg.max_iters);
    LocalSearch {
        settings: SettingsVector(decode(&x, gauge_fixed)),
        facet_excess: -f,
        converged,
        iterations,
    }
}

/// Larger excess first; ties go to the lexicographically smaller settings.
fn better(a: &LocalSearch, b: &LocalSearch) -> Ordering {
    b.facet_excess.total_cmp(&a.facet_excess).then_with(|| {
        a.settings
            .as_slice()
            .iter()
            .flat_map(|s| [s.re, s.im])
            .zip(b.settings.as_slice().iter().flat_map(|s| [s.re, s.im]))
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Seeded start points, uniform in the inner gauge-fixed box.
fn start_points(n: usize, cfg: &OptimizerConfig) -> Vec<Vec<f64>> {
    let (lower, upper) = bounds(n, START_FRACTION * cfg.radius, true);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.starts)
        .map(|_| lower.iter().zip(&upper).map(|(lo, hi)| rng.gen_range(*lo..=*hi)).collect())
        .collect()
}

#[cfg(feature = "parallel")]
fn run_all<T: Sync, R: Send>(jobs: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    jobs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all<T: Sync, R: Send>(jobs: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    jobs.iter().map(f).collect()
}

/// Maximise the violation excess of `ineq` at mixing `p`.
pub fn optimize_settings(
    ineq: &BellInequality,
    p: WernerParameter,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize_with_warm_starts(ineq, p, cfg, &[])
}

/// As [`optimize_settings`], with extra start points appended to the seeded
/// ones.
pub fn optimize_with_warm_starts(
    ineq: &BellInequality,
    p: WernerParameter,
    cfg: &OptimizerConfig,
    warm: &[SettingsVector],
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let n = ineq.n();
    for w in warm {
        ineq.evaluate(p, w)?;
    }
    let mut starts = start_points(n, cfg);
    starts.extend(warm.iter().map(|w| encode(w.as_slice(), true)));

    let jobs: Vec<(Facet, &Vec<f64>)> = ineq
        .facets()
        .into_iter()
        .flat_map(|f| starts.iter().map(move |x| (f, x)))
        .collect();
    let pv = p.value();
    let runs = run_all(&jobs, |(facet, x0)| run_from(ineq, pv, *facet, x0, cfg, true));

    let starts_converged = runs.iter().filter(|r| r.converged).count();
    let best = runs.into_iter().min_by(better).expect("at least one start");
    finish(ineq, p, best.settings, starts_converged)
}

fn finish(
    ineq: &BellInequality,
    p: WernerParameter,
    settings: SettingsVector,
    starts_converged: usize,
) -> Result<OptimizationResult> {
    let value = ineq.evaluate(p, &settings)?;
    let excess = ineq.excess_of_value(value);
    let facet = ineq
        .facets()
        .into_iter()
        .max_by(|a, b| ineq.facet_excess(*a, value).total_cmp(&ineq.facet_excess(*b, value)))
        .expect("at least one facet");
    Ok(OptimizationResult {
        p: p.value(),
        settings,
        value,
        excess,
        facet,
        starts_converged,
    })
}

/// Optimise at every grid point in order, seeding each with the previous
/// optimum.
pub fn sweep(
    ineq: &BellInequality,
    grid: &[WernerParameter],
    cfg: &OptimizerConfig,
) -> Result<Vec<(f64, OptimizationResult)>> {
    cfg.validate()?;
    let mut out: Vec<(f64, OptimizationResult)> = Vec::with_capacity(grid.len());
    for &p in grid {
        let warm: Vec<SettingsVector> = out.last().map(|(_, r)| r.settings.clone()).into_iter().collect();
        let r = optimize_with_warm_starts(ineq, p, cfg, &warm)?;
        out.push((p.value(), r));
    }
    Ok(out)
}

/// Parse-friendly inclusive grid `start, start + step, …, stop`. The last
/// point is kept when it lies within `1e-12` of `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<WernerParameter>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(BellError::Config(format!("grid step {step} must be positive")));
    }
    let start_p = WernerParameter::new(start)?;
    let stop_p = WernerParameter::new(stop)?;
    if stop_p < start_p {
        return Err(BellError::Config(format!("grid start {start} exceeds stop {stop}")));
    }
    let count = ((stop - start) / step + 1e-12 / step).floor() as usize;
    (0..=count)
        .map(|k| {
            let p = if k == count && (start + k as f64 * step - stop).abs() <= 1e-12 {
                stop
            } else {
                start + k as f64 * step
            };
            WernerParameter::new(p.clamp(0.0, 1.0))
        })
        .collect()
}

/// Bisect on `p` for the onset of violation.
///
/// For fixed settings the value is affine in `p`, so the optimised excess is
/// a maximum of affine functions and therefore convex in `p`; with
/// `excess(0) <= 0 < excess(1)` it crosses zero exactly once.
pub fn find_threshold(ineq: &BellInequality, cfg: &OptimizerConfig) -> Result<ThresholdResult> {
    cfg.validate()?;
    let one = WernerParameter::new(1.0)?;
    let zero = WernerParameter::new(0.0)?;

    let mut probes = 1;
    let at_one = optimize_settings(ineq, one, cfg)?;
    if !at_one.violated() {
        return Err(BellError::NoViolation {
            name: ineq.name().to_string(),
            excess: at_one.excess,
        });
    }
    probes += 1;
    let at_zero = optimize_with_warm_starts(ineq, zero, cfg, std::slice::from_ref(&at_one.settings))?;
    if at_zero.violated() {
        return Err(BellError::ViolatedAtZero {
            name: ineq.name().to_string(),
            excess: at_zero.excess,
        });
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut evidence = at_one;
    let mut quiet = at_zero.settings;
    while hi - lo > cfg.tol_p {
        let mid = 0.5 * (lo + hi);
        let p = WernerParameter::new(mid)?;
        let warm = [evidence.settings.clone(), quiet.clone()];
        let floor = warm
            .iter()
            .map(|s| ineq.excess(p, s))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        probes += 1;
        let mut r = optimize_with_warm_starts(ineq, p, cfg, &warm)?;
        if r.excess < floor {
            let retry = OptimizerConfig {
                starts: 2 * cfg.starts,
                ..*cfg
            };
            probes += 1;
            r = optimize_with_warm_starts(ineq, p, &retry, &warm)?;
        }
        if r.violated() {
            hi = mid;
            evidence = r;
        } else {
            lo = mid;
            quiet = r.settings;
        }
    }
    Ok(ThresholdResult {
        p_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        evidence,
        probes,
    })
}
