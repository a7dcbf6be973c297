//! Truncated two-mode Fock-space oracle.
//!
//! The Werner-like state is assembled as a dense matrix on the full
//! `(N+1)² × (N+1)²` space and probed with truncated coherent states, so the
//! closed forms in [`crate::analytic`] can be checked without reusing them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::analytic::{LocalOscillatorSetting, WernerParameter};
use crate::error::{BellError, Result};

/// Default number-state cutoff. Adequate for `|α| <= 2`.
pub const DEFAULT_TRUNCATION: usize = 32;

/// Largest neglected coherent-state weight the oracle accepts.
pub const TAIL_LIMIT: f64 = 1e-10;

/// Coefficients of a single-mode state on `|0⟩ … |N⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn truncation(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Dense density matrix of two truncated modes. Rows and columns are indexed
/// by `n_a * (N + 1) + n_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeDensityMatrix {
    entries: DMatrix<Complex64>,
    truncation: usize,
}

impl TwoModeDensityMatrix {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * (self.truncation + 1) + n_b
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.entries;
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
    }

    /// Eigenvalues in ascending order. Dense Hermitian diagonalisation, so
    /// keep `N` small.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.entries.clone().symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Reduced state of mode `a`.
    pub fn partial_trace_b(&self) -> DMatrix<Complex64> {
        let d = self.truncation + 1;
        DMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| self.entries[(i * d + k, j * d + k)])
                .sum::<Complex64>()
        })
    }
}

/// `D(α)|0⟩` expanded on `|0⟩ … |N⟩`: `c_n = e^{-|α|²/2} α^n / √(n!)`.
pub fn coherent_state_vector(a: LocalOscillatorSetting, truncation: usize) -> Result<FockVector> {
    if truncation < 1 {
        return Err(BellError::InvalidTruncation(truncation));
    }
    a.validate()?;
    let alpha = a.as_complex();
    let mut amplitudes = Vec::with_capacity(truncation + 1);
    let mut c = Complex64::new((-0.5 * a.norm_sqr()).exp(), 0.0);
    amplitudes.push(c);
    for n in 1..=truncation {
        c = c * alpha / (n as f64).sqrt();
        amplitudes.push(c);
    }
    Ok(FockVector { amplitudes })
}

/// `p |Ψ⟩⟨Ψ| + (1-p)/4 · Π` with `|Ψ⟩ = (|1,0⟩ - |0,1⟩)/√2` and `Π` the
/// projector onto the two-qubit block `{|00⟩, |01⟩, |10⟩, |11⟩}`.
pub fn werner_density_matrix(p: WernerParameter, truncation: usize) -> Result<TwoModeDensityMatrix> {
    if truncation < 1 {
        return Err(BellError::InvalidTruncation(truncation));
    }
    let d = truncation + 1;
    let dim = d * d;
    let idx = |n_a: usize, n_b: usize| n_a * d + n_b;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = DVector::<Complex64>::zeros(dim);
    psi[idx(1, 0)] = Complex64::new(h, 0.0);
    psi[idx(0, 1)] = Complex64::new(-h, 0.0);

    let p = p.value();
    let mut entries = (&psi * psi.adjoint()) * Complex64::new(p, 0.0);
    let noise = Complex64::new(0.25 * (1.0 - p), 0.0);
    for n_a in 0..2 {
        for n_b in 0..2 {
            let k = idx(n_a, n_b);
            entries[(k, k)] += noise;
        }
    }
    Ok(TwoModeDensityMatrix {
        entries,
        truncation,
    })
}

/// Coherent-state weight above `|N⟩`: `1 - Σ_{n≤N} e^{-|α|²}|α|^{2n}/n!`,
/// clamped to `[0, 1]`.
pub fn truncation_tail_bound(a: LocalOscillatorSetting, truncation: usize) -> f64 {
    let lambda = a.norm_sqr();
    if !lambda.is_finite() {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    let ln_lambda = lambda.ln();
    let ln_term = |n: usize| -> f64 {
        let mut acc = -lambda;
        for k in 1..=n {
            acc += ln_lambda - (k as f64).ln();
        }
        acc
    };
    let n = truncation as f64;
    let tail = if n + 1.0 > lambda {
        // Terms decrease past the mode; sum the upper tail directly.
        let mut ln_t = ln_term(truncation + 1);
        let mut sum = 0.0;
        let mut k = truncation + 1;
        loop {
            let t = ln_t.exp();
            sum += t;
            if t <= sum * 1e-17 || t == 0.0 {
                break;
            }
            k += 1;
            ln_t += ln_lambda - (k as f64).ln();
        }
        sum
    } else {
        let mut ln_t = -lambda;
        let mut sum = ln_t.exp();
        for k in 1..=truncation {
            ln_t += ln_lambda - (k as f64).ln();
            sum += ln_t.exp();
        }
        1.0 - sum
    };
    tail.clamp(0.0, 1.0)
}

fn check_tail(a: LocalOscillatorSetting, truncation: usize) -> Result<()> {
    a.validate()?;
    let tail = truncation_tail_bound(a, truncation);
    if tail > TAIL_LIMIT {
        return Err(BellError::TruncationTooSmall {
            truncation,
            tail,
            limit: TAIL_LIMIT,
        });
    }
    Ok(())
}

fn product_vector(a: &FockVector, b: &FockVector) -> DVector<Complex64> {
    let d = a.amplitudes.len();
    DVector::from_fn(d * d, |k, _| a.amplitudes[k / d] * b.amplitudes[k % d])
}

fn expectation(m: &DMatrix<Complex64>, v: &DVector<Complex64>) -> f64 {
    v.dotc(&(m * v)).re
}

/// `⟨α|⊗⟨β| ρ |α⟩⊗|β⟩` evaluated in the truncated space.
pub fn joint_vacuum_probability_oracle(
    p: WernerParameter,
    a: LocalOscillatorSetting,
    b: LocalOscillatorSetting,
    truncation: usize,
) -> Result<f64> {
    if truncation < 1 {
        return Err(BellError::InvalidTruncation(truncation));
    }
    check_tail(a, truncation)?;
    check_tail(b, truncation)?;
    let rho = werner_density_matrix(p, truncation)?;
    let va = coherent_state_vector(a, truncation)?;
    let vb = coherent_state_vector(b, truncation)?;
    Ok(expectation(&rho.entries, &product_vector(&va, &vb)))
}

/// `⟨α| Tr_b ρ |α⟩` evaluated in the truncated space.
pub fn single_vacuum_probability_oracle(
    p: WernerParameter,
    a: LocalOscillatorSetting,
    truncation: usize,
) -> Result<f64> {
    if truncation < 1 {
        return Err(BellError::InvalidTruncation(truncation));
    }
    check_tail(a, truncation)?;
    let rho = werner_density_matrix(p, truncation)?;
    let reduced = rho.partial_trace_b();
    let va = coherent_state_vector(a, truncation)?;
    let v = DVector::from_column_slice(va.amplitudes());
    Ok(expectation(&reduced, &v))
}
