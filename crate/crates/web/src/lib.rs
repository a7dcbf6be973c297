//! Browser bindings for the demo page in `www/`.
//!
//! The exported functions are thin wrappers over plain Rust functions so the
//! logic can be tested natively.

use bellopt::inequality::by_name;
use bellopt::optimizer::{find_threshold, grid, sweep, OptimizerConfig};
use bellopt::{joint_probability, BellError, LocalOscillatorSetting, WernerParameter};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest heatmap side accepted, in pixels.
pub const MAX_HEATMAP_SIZE: usize = 512;

#[derive(Debug, Serialize, PartialEq)]
pub struct CurvePoint {
    pub p: f64,
    pub value: f64,
    pub excess: f64,
    pub violated: bool,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ThresholdSummary {
    pub inequality: String,
    pub p_star: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub settings: Vec<(f64, f64)>,
}

fn demo_config(starts: u32, seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        starts: starts as usize,
        seed,
        ..OptimizerConfig::default()
    }
}

/// Joint no-click probability `Q(α, β)` on a `size × size` grid of `α` over
/// `[-extent, extent]²`, row-major with `Im α` decreasing down the rows.
pub fn heatmap(p: f64, beta: (f64, f64), extent: f64, size: usize) -> Result<Vec<f64>, BellError> {
    if size == 0 || size > MAX_HEATMAP_SIZE {
        return Err(BellError::Config(format!("heatmap size {size} outside 1..={MAX_HEATMAP_SIZE}")));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(BellError::Config(format!("extent {extent} must be positive")));
    }
    let p = WernerParameter::new(p)?;
    let beta = LocalOscillatorSetting::new(beta.0, beta.1);
    let coord = |k: usize| {
        if size == 1 {
            0.0
        } else {
            -extent + 2.0 * extent * k as f64 / (size - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(size * size);
    for row in 0..size {
        let im = coord(size - 1 - row);
        for col in 0..size {
            out.push(joint_probability(p, LocalOscillatorSetting::new(coord(col), im), beta)?);
        }
    }
    Ok(out)
}

pub fn curve(name: &str, start: f64, stop: f64, step: f64, starts: u32, seed: u64) -> Result<Vec<CurvePoint>, BellError> {
    let ineq = by_name(name)?;
    let rows = sweep(&ineq, &grid(start, stop, step)?, &demo_config(starts, seed))?;
    Ok(rows
        .into_iter()
        .map(|(p, r)| CurvePoint {
            p,
            value: r.value,
            excess: r.excess,
            violated: r.violated(),
        })
        .collect())
}

pub fn threshold_summary(name: &str, starts: u32, seed: u64) -> Result<ThresholdSummary, BellError> {
    let ineq = by_name(name)?;
    match find_threshold(&ineq, &demo_config(starts, seed)) {
        Ok(t) => Ok(ThresholdSummary {
            inequality: ineq.name().to_string(),
            p_star: Some(t.p_star),
            bracket: Some(t.bracket),
            settings: t.evidence.settings.as_slice().iter().map(|s| (s.re, s.im)).collect(),
        }),
        Err(BellError::NoViolation { .. }) => Ok(ThresholdSummary {
            inequality: ineq.name().to_string(),
            p_star: None,
            bracket: None,
            settings: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

fn js_err(e: BellError) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serialises")
}

#[wasm_bindgen(js_name = jointHeatmap)]
pub fn joint_heatmap(p: f64, beta_re: f64, beta_im: f64, extent: f64, size: usize) -> Result<Vec<f64>, JsValue> {
    heatmap(p, (beta_re, beta_im), extent, size).map_err(js_err)
}

/// JSON array of `{p, value, excess, violated}`.
#[wasm_bindgen(js_name = sweepCurve)]
pub fn sweep_curve(name: &str, start: f64, stop: f64, step: f64, starts: u32, seed: u64) -> Result<String, JsValue> {
    curve(name, start, stop, step, starts, seed).map(|c| to_json(&c)).map_err(js_err)
}

#[wasm_bindgen(js_name = threshold)]
pub fn threshold_json(name: &str, starts: u32, seed: u64) -> Result<String, JsValue> {
    threshold_summary(name, starts, seed).map(|t| to_json(&t)).map_err(js_err)
}
