//! Closed-form vacuum-detection probabilities for the Werner-like state
//! `p |Ψ⟩⟨Ψ| + (1 - p)/4 · 𝕀` with `|Ψ⟩ = (|1,0⟩ - |0,1⟩)/√2`, measured with
//! on-off detectors behind a displacement (unbalanced homodyne detection).
//!
//! A "vacuum" event is the detector staying silent; its POVM element is the
//! coherent-state projector `|α⟩⟨α|`. Clicks are the complement.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

/// A local-oscillator setting: the complex displacement amplitude applied in
/// front of an on-off detector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalOscillatorSetting {
    pub re: f64,
    pub im: f64,
}

impl LocalOscillatorSetting {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn from_polar(modulus: f64, phase: f64) -> Self {
        Self::from(Complex64::from_polar(modulus, phase))
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(BellError::NonFiniteAmplitude {
                re: self.re,
                im: self.im,
            })
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Multiply by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        Self::from(self.as_complex() * Complex64::from_polar(1.0, theta))
    }

    /// Componentwise comparison with absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.re - other.re).abs() <= tol && (self.im - other.im).abs() <= tol
    }
}

impl From<Complex64> for LocalOscillatorSetting {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<LocalOscillatorSetting> for Complex64 {
    fn from(s: LocalOscillatorSetting) -> Self {
        s.as_complex()
    }
}

impl fmt::Display for LocalOscillatorSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.re, self.im)
    }
}

/// Weight `p ∈ [0, 1]` of the entangled component of the Werner-like state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WernerParameter(f64);

impl WernerParameter {
    /// The state is separable if and only if `p <= 1/3`.
    pub const SEPARABILITY_BOUND: f64 = 1.0 / 3.0;

    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Self(p))
        } else {
            Err(BellError::MixingOutOfRange(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_separable(self) -> bool {
        self.0 <= Self::SEPARABILITY_BOUND
    }
}

impl TryFrom<f64> for WernerParameter {
    type Error = BellError;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<WernerParameter> for f64 {
    fn from(p: WernerParameter) -> f64 {
        p.0
    }
}

/// Probability that both detectors stay silent, `Tr(|α⟩⟨α| ⊗ |β⟩⟨β| ρ)`.
pub fn joint_probability(
    p: WernerParameter,
    a: LocalOscillatorSetting,
    b: LocalOscillatorSetting,
) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(joint_unchecked(p.0, a, b))
}

/// Probability that one detector stays silent. The reduced state of either
/// mode is `𝕀/2` on the qubit block for every `p`, so no `p` appears.
pub fn single_probability(a: LocalOscillatorSetting) -> Result<f64> {
    a.validate()?;
    Ok(single_unchecked(a))
}

/// Probability of at least one photon being registered.
pub fn click_probability(a: LocalOscillatorSetting) -> Result<f64> {
    Ok(1.0 - single_probability(a)?)
}

pub(crate) fn joint_unchecked(p: f64, a: LocalOscillatorSetting, b: LocalOscillatorSetting) -> f64 {
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    let envelope = (-(na + nb)).exp();
    let dr = a.re - b.re;
    let di = a.im - b.im;
    let entangled = 0.5 * p * (dr * dr + di * di);
    let noise = 0.25 * (1.0 - p) * ((1.0 + na) * (1.0 + nb));
    envelope * (entangled + noise)
}

pub(crate) fn single_unchecked(a: LocalOscillatorSetting) -> f64 {
    let n = a.norm_sqr();
    0.5 * (-n).exp() * (1.0 + n)
}
