//! Bell-type inequalities as linear functionals over single and pairwise
//! joint vacuum probabilities.
//!
//! Coefficients and bounds are exact rationals so the classical bounds can be
//! checked vertex by vertex on the correlation polytope without rounding.
//! Quantum evaluation converts them to `f64` once, at construction.

use std::fmt;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::analytic::{joint_unchecked, single_unchecked, LocalOscillatorSetting, WernerParameter};
use crate::error::{BellError, Result};

/// Enumeration is `2^n`; larger inequalities are refused.
pub const MAX_VERTEX_SETTINGS: usize = 20;

/// Names accepted by [`by_name`], in catalog order.
pub const BUILTIN_NAMES: [&str; 7] = ["ch", "w1", "j1", "j2", "j3", "j4", "j5"];

/// Which classical bound a value is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    Lower,
    Upper,
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Facet::Lower => f.write_str("lower"),
            Facet::Upper => f.write_str("upper"),
        }
    }
}

/// One local-oscillator setting per event of an inequality.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SettingsVector(pub Vec<LocalOscillatorSetting>);

impl SettingsVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![LocalOscillatorSetting::ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[LocalOscillatorSetting] {
        &self.0
    }

    pub fn rotated(&self, theta: f64) -> Self {
        Self(self.0.iter().map(|s| s.rotated(theta)).collect())
    }
}

impl From<Vec<LocalOscillatorSetting>> for SettingsVector {
    fn from(v: Vec<LocalOscillatorSetting>) -> Self {
        Self(v)
    }
}

/// `Σ_i c_i Q(s_i) + Σ_{i<j} c_ij Q(s_i, s_j)` together with its classical
/// bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BellInequality {
    name: String,
    single_coeffs: Vec<Rational64>,
    joint_coeffs: Vec<Vec<Rational64>>,
    lower_bound: Option<Rational64>,
    upper_bound: Option<Rational64>,
    single_f64: Vec<f64>,
    // Upper-triangle entries (i, j, c_ij) with c_ij != 0.
    pairs_f64: Vec<(usize, usize, f64)>,
}

impl BellInequality {
    /// `joint_coeffs` must be a symmetric `n × n` table with zero diagonal.
    pub fn new(
        name: impl Into<String>,
        single_coeffs: Vec<Rational64>,
        joint_coeffs: Vec<Vec<Rational64>>,
        lower_bound: Option<Rational64>,
        upper_bound: Option<Rational64>,
    ) -> Result<Self> {
        let name = name.into();
        let n = single_coeffs.len();
        let invalid = |msg: String| Err(BellError::InvalidInequality(format!("{name}: {msg}")));
        if n < 2 {
            return invalid(format!("needs at least 2 settings, got {n}"));
        }
        if joint_coeffs.len() != n || joint_coeffs.iter().any(|row| row.len() != n) {
            return invalid(format!("joint coefficient table must be {n}x{n}"));
        }
        for i in 0..n {
            if !joint_coeffs[i][i].is_zero() {
                return invalid(format!("nonzero diagonal joint coefficient at {i}"));
            }
            for j in 0..i {
                if joint_coeffs[i][j] != joint_coeffs[j][i] {
                    return invalid(format!("joint coefficients not symmetric at ({j}, {i})"));
                }
            }
        }
        if lower_bound.is_none() && upper_bound.is_none() {
            return invalid("no bound given".into());
        }
        if let (Some(lo), Some(hi)) = (lower_bound, upper_bound) {
            if lo > hi {
                return invalid(format!("lower bound {lo} exceeds upper bound {hi}"));
            }
        }
        let single_f64 = single_coeffs.iter().map(to_f64).collect();
        let mut pairs_f64 = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if !joint_coeffs[i][j].is_zero() {
                    pairs_f64.push((i, j, to_f64(&joint_coeffs[i][j])));
                }
            }
        }
        Ok(Self {
            name,
            single_coeffs,
            joint_coeffs,
            lower_bound,
            upper_bound,
            single_f64,
            pairs_f64,
        })
    }

    /// Build from integer singles and a list of `(i, j, c_ij)` pair terms.
    pub fn from_terms(
        name: &str,
        singles: &[i64],
        pairs: &[(usize, usize, i64)],
        lower_bound: Option<i64>,
        upper_bound: Option<i64>,
    ) -> Result<Self> {
        let n = singles.len();
        let mut joint = vec![vec![Rational64::zero(); n]; n];
        for &(i, j, c) in pairs {
            if i == j || i >= n || j >= n {
                return Err(BellError::InvalidInequality(format!(
                    "{name}: bad pair index ({i}, {j})"
                )));
            }
            joint[i][j] += Rational64::from_integer(c);
            joint[j][i] = joint[i][j];
        }
        Self::new(
            name,
            singles.iter().map(|&c| Rational64::from_integer(c)).collect(),
            joint,
            lower_bound.map(Rational64::from_integer),
            upper_bound.map(Rational64::from_integer),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of settings (events).
    pub fn n(&self) -> usize {
        self.single_coeffs.len()
    }

    pub fn single_coeffs(&self) -> &[Rational64] {
        &self.single_coeffs
    }

    pub fn joint_coeff(&self, i: usize, j: usize) -> Rational64 {
        self.joint_coeffs[i][j]
    }

    pub fn lower_bound(&self) -> Option<Rational64> {
        self.lower_bound
    }

    pub fn upper_bound(&self) -> Option<Rational64> {
        self.upper_bound
    }

    pub fn bound(&self, facet: Facet) -> Option<Rational64> {
        match facet {
            Facet::Lower => self.lower_bound,
            Facet::Upper => self.upper_bound,
        }
    }

    /// Facets carrying a bound, lower first.
    pub fn facets(&self) -> Vec<Facet> {
        let mut out = Vec::with_capacity(2);
        if self.lower_bound.is_some() {
            out.push(Facet::Lower);
        }
        if self.upper_bound.is_some() {
            out.push(Facet::Upper);
        }
        out
    }

    /// Copy with a different upper bound. Used to build deliberately broken
    /// inequalities in tests and diagnostics.
    pub fn with_upper_bound(&self, upper: Option<Rational64>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.single_coeffs.clone(),
            self.joint_coeffs.clone(),
            self.lower_bound,
            upper,
        )
    }

    /// Relabel events: event `k` of the result is event `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(BellError::InvalidInequality(format!(
                "{}: {perm:?} is not a permutation of 0..{n}",
                self.name
            )));
        }
        Self::new(
            self.name.clone(),
            perm.iter().map(|&k| self.single_coeffs[k]).collect(),
            perm.iter()
                .map(|&k| perm.iter().map(|&l| self.joint_coeffs[k][l]).collect())
                .collect(),
            self.lower_bound,
            self.upper_bound,
        )
    }

    /// Quantum value at mixing `p` for the given settings.
    pub fn evaluate(&self, p: WernerParameter, settings: &SettingsVector) -> Result<f64> {
        self.check_len(settings.len())?;
        for s in settings.as_slice() {
            s.validate()?;
        }
        Ok(self.evaluate_unchecked(p.value(), settings.as_slice()))
    }

    /// Signed violation: `max(value - upper, lower - value)` over the bounds
    /// present. Positive iff a classical bound is broken.
    pub fn excess(&self, p: WernerParameter, settings: &SettingsVector) -> Result<f64> {
        let value = self.evaluate(p, settings)?;
        Ok(self.excess_of_value(value))
    }

    pub fn excess_of_value(&self, value: f64) -> f64 {
        self.facets()
            .into_iter()
            .map(|f| self.facet_excess(f, value))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Signed distance past one facet; `-inf` if that bound is absent.
    pub fn facet_excess(&self, facet: Facet, value: f64) -> f64 {
        match (facet, self.bound(facet)) {
            (Facet::Upper, Some(b)) => value - to_f64(&b),
            (Facet::Lower, Some(b)) => to_f64(&b) - value,
            (_, None) => f64::NEG_INFINITY,
        }
    }

    pub(crate) fn evaluate_unchecked(&self, p: f64, s: &[LocalOscillatorSetting]) -> f64 {
        let singles: f64 = self
            .single_f64
            .iter()
            .zip(s)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, a)| c * single_unchecked(*a))
            .sum();
        let joints: f64 = self
            .pairs_f64
            .iter()
            .map(|&(i, j, c)| c * joint_unchecked(p, s[i], s[j]))
            .sum();
        singles + joints
    }

    /// Exact value at a deterministic vertex: `s_i = t_i`, `s_ij = t_i t_j`.
    pub fn vertex_value(&self, assignment: &[bool]) -> Result<Rational64> {
        self.check_len(assignment.len())?;
        let mut v = Rational64::zero();
        for i in 0..self.n() {
            if !assignment[i] {
                continue;
            }
            v += self.single_coeffs[i];
            for j in i + 1..self.n() {
                if assignment[j] {
                    v += self.joint_coeffs[i][j];
                }
            }
        }
        Ok(v)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(BellError::SettingsLength {
                name: self.name.clone(),
                expected: self.n(),
                got,
            });
        }
        Ok(())
    }
}

fn to_f64(r: &Rational64) -> f64 {
    r.to_f64().expect("rational coefficient fits in f64")
}

/// Outcome of checking an inequality at every deterministic vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LhvVerdict {
    Holds,
    ViolatedAt {
        assignment: Vec<u8>,
        facet: Facet,
        value: String,
        bound: String,
    },
}

impl LhvVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, LhvVerdict::Holds)
    }
}

/// Vertex enumeration summary. Vertices are visited in descending
/// lexicographic order starting at `(1, …, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvReport {
    pub name: String,
    pub vertices: usize,
    pub verdict: LhvVerdict,
    pub min_value: String,
    pub max_value: String,
    /// Vertices sitting exactly on the lower bound.
    pub lower_attained: Vec<Vec<u8>>,
    /// Vertices sitting exactly on the upper bound.
    pub upper_attained: Vec<Vec<u8>>,
}

impl LhvReport {
    /// Every declared bound is reached by some vertex.
    pub fn is_tight(&self, ineq: &BellInequality) -> bool {
        (ineq.lower_bound.is_none() || !self.lower_attained.is_empty())
            && (ineq.upper_bound.is_none() || !self.upper_attained.is_empty())
    }
}

/// Check the classical bounds at all `2^n` deterministic assignments using
/// exact arithmetic.
pub fn verify_lhv_bounds(ineq: &BellInequality) -> Result<LhvReport> {
    let n = ineq.n();
    if n > MAX_VERTEX_SETTINGS {
        return Err(BellError::TooManySettings(n));
    }
    let count = 1usize << n;
    let mut verdict = LhvVerdict::Holds;
    let mut min_value: Option<Rational64> = None;
    let mut max_value: Option<Rational64> = None;
    let mut lower_attained = Vec::new();
    let mut upper_attained = Vec::new();
    let mut assignment = vec![false; n];
    for code in (0..count).rev() {
        for (i, t) in assignment.iter_mut().enumerate() {
            *t = code >> (n - 1 - i) & 1 == 1;
        }
        let value = ineq.vertex_value(&assignment)?;
        min_value = Some(min_value.map_or(value, |m| m.min(value)));
        max_value = Some(max_value.map_or(value, |m| m.max(value)));
        let bits = || assignment.iter().map(|&t| t as u8).collect::<Vec<u8>>();
        if let Some(lo) = ineq.lower_bound {
            if value == lo {
                lower_attained.push(bits());
            } else if value < lo && verdict.holds() {
                verdict = LhvVerdict::ViolatedAt {
                    assignment: bits(),
                    facet: Facet::Lower,
                    value: value.to_string(),
                    bound: lo.to_string(),
                };
            }
        }
        if let Some(hi) = ineq.upper_bound {
            if value == hi {
                upper_attained.push(bits());
            } else if value > hi && verdict.holds() {
                verdict = LhvVerdict::ViolatedAt {
                    assignment: bits(),
                    facet: Facet::Upper,
                    value: value.to_string(),
                    bound: hi.to_string(),
                };
            }
        }
    }
    Ok(LhvReport {
        name: ineq.name.clone(),
        vertices: count,
        verdict,
        min_value: min_value.unwrap_or_default().to_string(),
        max_value: max_value.unwrap_or_default().to_string(),
        lower_attained,
        upper_attained,
    })
}

/// Clauser-Horne: `Q(α,β) - Q(α,β') + Q(α',β) + Q(α',β') - Q(α') - Q(β)`
/// with `-1 <= I_CH <= 0`. Settings are ordered `(α, α', β, β')`.
pub fn ch() -> BellInequality {
    BellInequality::from_terms(
        "ch",
        &[0, -1, -1, 0],
        &[(0, 2, 1), (0, 3, -1), (1, 2, 1), (1, 3, 1)],
        Some(-1),
        Some(0),
    )
    .expect("valid built-in")
}

/// Bell-Wigner: `Q(α) + Q(β) + Q(γ) - Q(α,β) - Q(α,γ) - Q(β,γ) <= 1`.
pub fn wigner_w1() -> BellInequality {
    BellInequality::from_terms("w1", &[1, 1, 1], &[(0, 1, -1), (0, 2, -1), (1, 2, -1)], None, Some(1))
        .expect("valid built-in")
}

/// Janssens inequalities on four events `(i, j, k, ℓ) -> (0, 1, 2, 3)`.
pub fn janssens(k: u8) -> Result<BellInequality> {
    let all_pairs = |c: i64| [(0, 1, c), (0, 2, c), (0, 3, c), (1, 2, c), (1, 3, c), (2, 3, c)];
    match k {
        1 => BellInequality::from_terms(
            "j1",
            &[1, 1, 0, 0],
            &[(0, 1, 1), (0, 2, -1), (0, 3, -1), (1, 3, -1), (1, 2, -1), (2, 3, 1)],
            Some(0),
            None,
        ),
        2 => BellInequality::from_terms("j2", &[1, 1, 1, 1], &all_pairs(-1), None, Some(1)),
        3 => BellInequality::from_terms("j3", &[2, 2, 2, 2], &all_pairs(-1), None, Some(3)),
        4 => BellInequality::from_terms(
            "j4",
            &[1, 0, 0, 0],
            &[(0, 1, -1), (0, 2, -1), (0, 3, -1), (1, 2, 1), (1, 3, 1), (2, 3, 1)],
            Some(0),
            None,
        ),
        5 => BellInequality::from_terms(
            "j5",
            &[1, 1, 1, -2],
            &[(0, 1, -1), (0, 2, -1), (0, 3, 1), (1, 2, -1), (1, 3, 1), (2, 3, 1)],
            None,
            Some(1),
        ),
        _ => Err(BellError::JanssensIndex(k)),
    }
}

/// Look up a built-in by its CLI name.
pub fn by_name(name: &str) -> Result<BellInequality> {
    match name {
        "ch" => Ok(ch()),
        "w1" => Ok(wigner_w1()),
        "j1" => janssens(1),
        "j2" => janssens(2),
        "j3" => janssens(3),
        "j4" => janssens(4),
        "j5" => janssens(5),
        other => Err(BellError::UnknownInequality(other.to_string())),
    }
}

/// All seven built-ins in catalog order.
pub fn builtins() -> Vec<BellInequality> {
    BUILTIN_NAMES
        .iter()
        .map(|n| by_name(n).expect("built-in name"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn w(p: f64) -> WernerParameter {
        WernerParameter::new(p).unwrap()
    }

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn vertex(ineq: &BellInequality, bits: &[u8]) -> Rational64 {
        let a: Vec<bool> = bits.iter().map(|&b| b == 1).collect();
        ineq.vertex_value(&a).unwrap()
    }

    #[test]
    fn evaluate_at_coincident_zero_settings() {
        let w1 = wigner_w1();
        assert_eq!(w1.evaluate(w(1.0), &SettingsVector::zeros(3)).unwrap(), 1.5);
        // 3/2 - 3 (1 - p)/4 at p = 1/3
        assert_abs_diff_eq!(
            w1.evaluate(w(1.0 / 3.0), &SettingsVector::zeros(3)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(ch().evaluate(w(0.0), &SettingsVector::zeros(4)).unwrap(), -0.5);
        let j3 = janssens(3).unwrap();
        assert_abs_diff_eq!(
            j3.evaluate(w(1.0 / 3.0), &SettingsVector::zeros(4)).unwrap(),
            3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn excess_examples() {
        let w1 = wigner_w1();
        assert_eq!(w1.excess(w(1.0), &SettingsVector::zeros(3)).unwrap(), 0.5);
        assert_abs_diff_eq!(
            w1.excess(w(1.0 / 3.0), &SettingsVector::zeros(3)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(ch().excess(w(0.0), &SettingsVector::zeros(4)).unwrap(), -0.5);
        assert_eq!(ch().facet_excess(Facet::Lower, -0.5), -0.5);
        assert_eq!(wigner_w1().facet_excess(Facet::Lower, 0.3), f64::NEG_INFINITY);
    }

    #[test]
    fn length_mismatch() {
        let err = ch().evaluate(w(0.5), &SettingsVector::zeros(3)).unwrap_err();
        assert_eq!(
            err,
            BellError::SettingsLength {
                name: "ch".into(),
                expected: 4,
                got: 3
            }
        );
        assert!(wigner_w1().vertex_value(&[true]).is_err());
    }

    #[test]
    fn non_finite_settings_rejected() {
        let s = SettingsVector(vec![
            LocalOscillatorSetting::new(f64::NAN, 0.0),
            LocalOscillatorSetting::ZERO,
            LocalOscillatorSetting::ZERO,
        ]);
        assert!(wigner_w1().evaluate(w(0.5), &s).is_err());
    }

    #[test]
    fn ch_coefficients() {
        let ch = ch();
        assert_eq!(ch.n(), 4);
        assert_eq!(ch.single_coeffs(), &[r(0), r(-1), r(-1), r(0)]);
        assert_eq!(ch.joint_coeff(0, 2), r(1));
        assert_eq!(ch.joint_coeff(3, 0), r(-1));
        assert_eq!(ch.joint_coeff(1, 2), r(1));
        assert_eq!(ch.joint_coeff(1, 3), r(1));
        assert_eq!(ch.joint_coeff(0, 1), r(0));
        assert_eq!(ch.joint_coeff(2, 3), r(0));
        assert_eq!(ch.lower_bound(), Some(r(-1)));
        assert_eq!(ch.upper_bound(), Some(r(0)));
    }

    #[test]
    fn vertex_examples() {
        assert_eq!(vertex(&ch(), &[1, 1, 1, 1]), r(0));
        assert_eq!(vertex(&ch(), &[0, 1, 1, 0]), r(-1));
        assert_eq!(vertex(&ch(), &[0, 0, 0, 0]), r(0));
        let w1 = wigner_w1();
        assert_eq!(vertex(&w1, &[1, 1, 1]), r(0));
        assert_eq!(vertex(&w1, &[1, 1, 0]), r(1));
        assert_eq!(vertex(&w1, &[1, 0, 0]), r(1));
        assert_eq!(vertex(&janssens(1).unwrap(), &[1, 1, 1, 1]), r(0));
        assert_eq!(vertex(&janssens(3).unwrap(), &[1, 1, 1, 1]), r(2));
        assert_eq!(vertex(&janssens(5).unwrap(), &[1, 1, 1, 0]), r(0));
    }

    #[test]
    fn janssens_bounds() {
        let expect = [
            (1, Some(0), None),
            (2, None, Some(1)),
            (3, None, Some(3)),
            (4, Some(0), None),
            (5, None, Some(1)),
        ];
        for (k, lo, hi) in expect {
            let j = janssens(k).unwrap();
            assert_eq!(j.name(), format!("j{k}"));
            assert_eq!(j.n(), 4);
            assert_eq!(j.lower_bound(), lo.map(r));
            assert_eq!(j.upper_bound(), hi.map(r));
        }
        assert_eq!(janssens(0).unwrap_err(), BellError::JanssensIndex(0));
        assert_eq!(janssens(6).unwrap_err(), BellError::JanssensIndex(6));
    }

    #[test]
    fn builtins_hold_and_are_tight() {
        for ineq in builtins() {
            let report = verify_lhv_bounds(&ineq).unwrap();
            assert!(report.verdict.holds(), "{}: {:?}", ineq.name(), report.verdict);
            assert!(report.is_tight(&ineq), "{} not tight", ineq.name());
            assert_eq!(report.vertices, 1 << ineq.n());
        }
    }

    #[test]
    fn ch_attains_both_bounds() {
        let report = verify_lhv_bounds(&ch()).unwrap();
        assert_eq!(report.vertices, 16);
        assert!(report.lower_attained.contains(&vec![0, 1, 1, 0]));
        assert!(report.upper_attained.contains(&vec![0, 0, 0, 0]));
        assert_eq!(report.min_value, "-1");
        assert_eq!(report.max_value, "0");
    }

    #[test]
    fn w1_attains_bound_first_at_110() {
        let report = verify_lhv_bounds(&wigner_w1()).unwrap();
        assert_eq!(report.vertices, 8);
        assert_eq!(report.upper_attained[0], vec![1, 1, 0]);
    }

    #[test]
    fn corrupted_w1_is_caught() {
        let broken = wigner_w1().with_upper_bound(Some(Rational64::new(1, 2))).unwrap();
        let report = verify_lhv_bounds(&broken).unwrap();
        match report.verdict {
            LhvVerdict::ViolatedAt {
                assignment,
                facet,
                value,
                bound,
            } => {
                assert_eq!(assignment, vec![1, 1, 0]);
                assert_eq!(facet, Facet::Upper);
                assert_eq!(value, "1");
                assert_eq!(bound, "1/2");
            }
            LhvVerdict::Holds => panic!("corrupted inequality reported as valid"),
        }
    }

    #[test]
    fn too_many_settings() {
        let n = MAX_VERTEX_SETTINGS + 1;
        let big = BellInequality::from_terms("big", &vec![1; n], &[(0, 1, -1)], None, Some(100)).unwrap();
        assert_eq!(verify_lhv_bounds(&big).unwrap_err(), BellError::TooManySettings(n));
    }

    #[test]
    fn construction_errors() {
        assert!(BellInequality::from_terms("x", &[1], &[], None, Some(1)).is_err());
        assert!(BellInequality::from_terms("x", &[1, 1], &[(0, 1, 1)], None, None).is_err());
        assert!(BellInequality::from_terms("x", &[1, 1], &[(0, 0, 1)], None, Some(1)).is_err());
        assert!(BellInequality::from_terms("x", &[1, 1], &[(0, 2, 1)], None, Some(1)).is_err());
        assert!(BellInequality::from_terms("x", &[1, 1], &[], Some(2), Some(1)).is_err());
        let asym = vec![vec![r(0), r(1)], vec![r(2), r(0)]];
        assert!(BellInequality::new("x", vec![r(1), r(1)], asym, None, Some(r(1))).is_err());
        assert!(by_name("nosuch").is_err());
        assert!(ch().permuted(&[0, 0, 1, 2]).is_err());
    }

    fn settings_strategy(n: usize) -> impl Strategy<Value = SettingsVector> {
        proptest::collection::vec((-2.5..2.5f64, -2.5..2.5f64), n).prop_map(|v| {
            SettingsVector(v.into_iter().map(|(a, b)| LocalOscillatorSetting::new(a, b)).collect())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn evaluate_is_affine_in_p(k in 0usize..7, s in settings_strategy(4)) {
            let ineq = &builtins()[k];
            let s = SettingsVector(s.0[..ineq.n()].to_vec());
            let v0 = ineq.evaluate(w(0.0), &s).unwrap();
            let vh = ineq.evaluate(w(0.5), &s).unwrap();
            let v1 = ineq.evaluate(w(1.0), &s).unwrap();
            prop_assert!((vh - 0.5 * (v0 + v1)).abs() <= 1e-12);
            prop_assert!(ineq.excess(w(0.5), &s).unwrap().is_finite());
        }

        #[test]
        fn permutation_covariance(p in 0.0..=1.0f64, s in settings_strategy(4), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
            for ineq in builtins().into_iter().filter(|i| i.n() == 4) {
                let permuted = ineq.permuted(&perm).unwrap();
                let mut original = vec![LocalOscillatorSetting::ZERO; 4];
                for (k, &src) in perm.iter().enumerate() {
                    original[src] = s.0[k];
                }
                let a = permuted.evaluate(w(p), &s).unwrap();
                let b = ineq.evaluate(w(p), &SettingsVector(original)).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn excess_is_gauge_invariant(p in 0.0..=1.0f64, s in settings_strategy(4), theta in -3.2..3.2f64) {
            for ineq in builtins() {
                let s = SettingsVector(s.0[..ineq.n()].to_vec());
                let a = ineq.excess(w(p), &s).unwrap();
                let b = ineq.excess(w(p), &s.rotated(theta)).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
