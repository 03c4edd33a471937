//! KMS spectrum data and the Sabbah-Mochizuki flow.
//!
//! A KMS point is a pair `(a, α)` of a parabolic level and a residual
//! eigenvalue of the Higgs field, measured at λ = 0. The flow transports it to
//! the data `(p, e)` of the parabolic λ-connection at any λ:
//!
//! ```text
//! p = a + 2 Re(λ ᾱ)
//! e = α − a λ + ᾱ λ²
//! ```
//!
//! and sends the lattice `ℤ·(1, 0)` to `ℤ·(1, −λ)`.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmsPoint {
    pub a: f64,
    #[serde(with = "crate::kms::complex_pair")]
    pub alpha: Complex64,
}

impl KmsPoint {
    pub fn new(a: f64, alpha: Complex64) -> Self {
        Self { a, alpha }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.alpha.re.is_finite() && self.alpha.im.is_finite()
    }

    /// Moves the level by `k`, leaving the eigenvalue alone.
    pub fn lattice_shift(self, k: i64) -> Self {
        Self {
            a: self.a + k as f64,
            alpha: self.alpha,
        }
    }
}

impl fmt::Display for KmsPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}{:+}i)", self.a, self.alpha.re, self.alpha.im)
    }
}

/// Parabolic level `p` and residual eigenvalue `e` at a given λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowValue {
    pub p: f64,
    pub e: Complex64,
}

pub fn flow(x: KmsPoint, lambda: Complex64) -> FlowValue {
    let conj = x.alpha.conj();
    FlowValue {
        p: x.a + 2.0 * (lambda * conj).re,
        e: x.alpha - lambda * x.a + conj * lambda * lambda,
    }
}

/// Reduces a real number modulo 1 into `(-0.5, 0.5]`.
pub fn reduce_mod_one(d: f64) -> f64 {
    d - (d - 0.5).ceil()
}

/// Equality of two KMS points as elements of `(ℝ/ℤ) × ℂ`.
pub fn same_mod_lattice(x: KmsPoint, y: KmsPoint, eps: f64) -> bool {
    reduce_mod_one(x.a - y.a).abs() <= eps && (x.alpha - y.alpha).norm() <= eps
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumViolation {
    #[error("expected {expected} points, found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("point {index} has a non-finite component")]
    NonFinite { index: usize },
    #[error("point {index} has level {a} outside (-1, 0]")]
    LevelOutOfRange { index: usize, a: f64 },
    #[error("points {first} and {second} coincide in (R/Z) x C: {x} ~ {y}")]
    Duplicate {
        first: usize,
        second: usize,
        x: KmsPoint,
        y: KmsPoint,
    },
}

/// The KMS spectrum at one puncture: `r` points with levels in `(-1, 0]`,
/// pairwise distinct modulo the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KmsSpectrum {
    pub points: Vec<KmsPoint>,
}

impl KmsSpectrum {
    pub fn new(points: Vec<KmsPoint>) -> Self {
        Self { points }
    }

    pub fn rank(&self) -> usize {
        self.points.len()
    }
}

/// Checks that a spectrum has the expected rank, finite entries, canonical
/// levels and pairwise distinct points.
pub fn validate_spectrum(s: &KmsSpectrum, rank: usize, eps: f64) -> Result<(), SpectrumViolation> {
    if s.points.len() != rank {
        return Err(SpectrumViolation::WrongCount {
            expected: rank,
            found: s.points.len(),
        });
    }
    for (index, x) in s.points.iter().enumerate() {
        if !x.is_finite() {
            return Err(SpectrumViolation::NonFinite { index });
        }
        if !(x.a > -1.0 && x.a <= 0.0) {
            return Err(SpectrumViolation::LevelOutOfRange { index, a: x.a });
        }
    }
    for i in 0..s.points.len() {
        for j in i + 1..s.points.len() {
            if same_mod_lattice(s.points[i], s.points[j], eps) {
                return Err(SpectrumViolation::Duplicate {
                    first: i,
                    second: j,
                    x: s.points[i],
                    y: s.points[j],
                });
            }
        }
    }
    Ok(())
}

/// Every total order of `pairs` (as index lists) in which pairs sharing an
/// eigenvalue appear with strictly increasing levels.
///
/// Orders come out lexicographically sorted. Empty input yields the single
/// empty order.
pub fn valid_orderings(pairs: &[(f64, Complex64)], eps: f64) -> Vec<Vec<usize>> {
    let n = pairs.len();
    // must_precede[j] lists the indices that have to be placed before j.
    let must_precede: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| {
                    i != j && (pairs[i].1 - pairs[j].1).norm() <= eps && pairs[i].0 < pairs[j].0
                })
                .collect()
        })
        .collect();

    fn extend(
        prefix: &mut Vec<usize>,
        placed: &mut [bool],
        must_precede: &[Vec<usize>],
        out: &mut Vec<Vec<usize>>,
    ) {
        if prefix.len() == placed.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..placed.len() {
            if placed[j] || must_precede[j].iter().any(|&i| !placed[i]) {
                continue;
            }
            placed[j] = true;
            prefix.push(j);
            extend(prefix, placed, must_precede, out);
            prefix.pop();
            placed[j] = false;
        }
    }

    let mut out = Vec::new();
    extend(
        &mut Vec::new(),
        &mut vec![false; n],
        &must_precede,
        &mut out,
    );
    out
}

/// Condition (O) on an explicit order: equal eigenvalues come with strictly
/// increasing levels.
pub fn satisfies_order_condition(pairs: &[(f64, Complex64)], order: &[usize], eps: f64) -> bool {
    for (pos, &j) in order.iter().enumerate() {
        for &k in &order[pos + 1..] {
            if (pairs[j].1 - pairs[k].1).norm() <= eps && pairs[j].0 >= pairs[k].0 {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Puncture {
    pub label: String,
    pub spectrum: KmsSpectrum,
}

/// Input datum standing in for a tame harmonic bundle: its rank and the KMS
/// spectrum at every puncture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicShadow {
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genus: Option<u32>,
    pub punctures: Vec<Puncture>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: puncture `{label}` violates spectrum distinctness: {violation}")]
    Hypothesis {
        line: usize,
        label: String,
        violation: SpectrumViolation,
    },
}

impl HarmonicShadow {
    pub fn labels(&self) -> Vec<String> {
        self.punctures.iter().map(|p| p.label.clone()).collect()
    }

    /// Structural and distinctness checks. Returns the offending puncture
    /// index alongside the problem.
    pub fn validate(&self, eps: f64) -> Result<(), (usize, ShadowProblem)> {
        if self.rank == 0 {
            return Err((0, ShadowProblem::ZeroRank));
        }
        let mut seen = HashSet::new();
        for (idx, p) in self.punctures.iter().enumerate() {
            if !seen.insert(p.label.as_str()) {
                return Err((idx, ShadowProblem::DuplicateLabel(p.label.clone())));
            }
            if !valid_label(&p.label) {
                return Err((idx, ShadowProblem::BadLabel(p.label.clone())));
            }
            validate_spectrum(&p.spectrum, self.rank, eps)
                .map_err(|v| (idx, ShadowProblem::Spectrum(v)))?;
        }
        Ok(())
    }

    /// Parses and validates the JSON form, anchoring errors to source lines.
    pub fn from_json_str(text: &str, eps: f64) -> Result<Self, LoadError> {
        let shadow: HarmonicShadow = serde_json::from_str(text).map_err(|e| LoadError::Schema {
            line: e.line(),
            message: e.to_string(),
        })?;
        match shadow.validate(eps) {
            Ok(()) => Ok(shadow),
            Err((idx, problem)) => {
                let line = shadow
                    .punctures
                    .get(idx)
                    .map(|p| label_line(text, &p.label))
                    .unwrap_or(1);
                let label = shadow
                    .punctures
                    .get(idx)
                    .map(|p| p.label.clone())
                    .unwrap_or_default();
                Err(match problem {
                    ShadowProblem::Spectrum(v @ SpectrumViolation::Duplicate { .. }) => {
                        LoadError::Hypothesis {
                            line,
                            label,
                            violation: v,
                        }
                    }
                    other => LoadError::Schema {
                        line,
                        message: other.to_string(),
                    },
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShadowProblem {
    #[error("rank must be positive")]
    ZeroRank,
    #[error("duplicate puncture label `{0}`")]
    DuplicateLabel(String),
    #[error("puncture label `{0}` must be non-empty and free of whitespace, parentheses, commas and `^`")]
    BadLabel(String),
    #[error("{0}")]
    Spectrum(SpectrumViolation),
}

/// Labels are embedded in word strings like `T(t1,2)`.
pub fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '^'))
}

fn label_line(text: &str, label: &str) -> usize {
    let needle = format!("\"{label}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|i| i + 1)
        .unwrap_or(1)
}

/// `[re, im]` encoding for complex numbers.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn flow_examples() {
        let z = flow(KmsPoint::new(0.0, c(0.0, 0.0)), c(1.3, -0.7));
        assert_eq!((z.p, z.e), (0.0, c(0.0, 0.0)));

        let x = KmsPoint::new(-0.3, c(0.2, 1.1));
        let id = flow(x, c(0.0, 0.0));
        assert_eq!((id.p, id.e), (x.a, x.alpha));

        let v = flow(KmsPoint::new(-0.5, c(3.0, 4.0)), c(2.0, 0.0));
        assert!((v.p - 11.5).abs() < 1e-12);
        assert!((v.e - c(16.0, -12.0)).norm() < 1e-12);
    }

    #[test]
    fn lattice_shift_examples() {
        let lambda = c(0.4, -1.2);
        let z = flow(KmsPoint::new(0.0, c(0.0, 0.0)).lattice_shift(1), lambda);
        assert!((z.p - 1.0).abs() < 1e-15);
        assert!((z.e + lambda).norm() < 1e-15);

        let x = KmsPoint::new(0.3, c(0.0, 1.0));
        let base = flow(x, c(2.0, 0.0));
        let up = flow(x.lattice_shift(1), c(2.0, 0.0));
        assert!((base.p - 0.3).abs() < 1e-12);
        assert!((base.e - c(-0.6, -3.0)).norm() < 1e-12);
        assert!((up.p - 1.3).abs() < 1e-12);
        assert!((up.e - c(-2.6, -3.0)).norm() < 1e-12);
        assert_eq!(x.lattice_shift(0), x);
    }

    #[test]
    fn validate_examples() {
        let ok = KmsSpectrum::new(vec![
            KmsPoint::new(0.0, c(0.0, 0.0)),
            KmsPoint::new(0.0, c(1.0, 0.0)),
        ]);
        assert_eq!(validate_spectrum(&ok, 2, 1e-9), Ok(()));

        let dup = KmsSpectrum::new(vec![
            KmsPoint::new(-0.5, c(1.0, 0.0)),
            KmsPoint::new(-0.5, c(1.0, 0.0)),
        ]);
        assert!(matches!(
            validate_spectrum(&dup, 2, 1e-9),
            Err(SpectrumViolation::Duplicate {
                first: 0,
                second: 1,
                ..
            })
        ));

        let wrap = KmsSpectrum::new(vec![
            KmsPoint::new(0.0, c(1.0, 0.0)),
            KmsPoint::new(-1.0 + 1e-15, c(1.0, 0.0)),
        ]);
        assert!(matches!(
            validate_spectrum(&wrap, 2, 1e-9),
            Err(SpectrumViolation::Duplicate { .. })
        ));

        let out = KmsSpectrum::new(vec![KmsPoint::new(0.5, c(0.0, 0.0))]);
        assert!(matches!(
            validate_spectrum(&out, 1, 1e-9),
            Err(SpectrumViolation::LevelOutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            validate_spectrum(&out, 2, 1e-9),
            Err(SpectrumViolation::WrongCount {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn reduce_mod_one_range() {
        assert_eq!(reduce_mod_one(0.5), 0.5);
        assert_eq!(reduce_mod_one(-0.5), 0.5);
        assert!((reduce_mod_one(1.25) - 0.25).abs() < 1e-15);
        assert!((reduce_mod_one(-0.75) - 0.25).abs() < 1e-15);
    }

    /// Brute-force oracle: every permutation, filtered by condition (O).
    fn brute_orderings(pairs: &[(f64, Complex64)]) -> Vec<Vec<usize>> {
        fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.is_empty() {
                return vec![vec![]];
            }
            let mut out = vec![];
            for (i, &x) in items.iter().enumerate() {
                let mut rest = items.clone();
                rest.remove(i);
                for mut p in perms(rest) {
                    p.insert(0, x);
                    out.push(p);
                }
            }
            out
        }
        perms((0..pairs.len()).collect())
            .into_iter()
            .filter(|o| satisfies_order_condition(pairs, o, 1e-9))
            .collect()
    }

    #[test]
    fn orderings_examples() {
        let pairs = [
            (-0.5, c(2.0, 0.0)),
            (-0.2, c(2.0, 0.0)),
            (-0.7, c(5.0, 0.0)),
        ];
        let got = valid_orderings(&pairs, 1e-9);
        assert_eq!(got.len(), 3);
        assert_eq!(got, brute_orderings(&pairs));

        let distinct: Vec<_> = (0..4)
            .map(|i| (-0.1 * i as f64, c(i as f64, 0.0)))
            .collect();
        assert_eq!(valid_orderings(&distinct, 1e-9).len(), 24);

        let equal: Vec<_> = [-0.1, -0.6, -0.3]
            .iter()
            .map(|&a| (a, c(1.0, 1.0)))
            .collect();
        assert_eq!(valid_orderings(&equal, 1e-9), vec![vec![1, 2, 0]]);

        assert_eq!(valid_orderings(&[], 1e-9), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn loader_reports_lines() {
        let text = r#"{
  "rank": 2,
  "punctures": [
    {"label": "t1", "spectrum": [{"a": 0.0, "alpha": [0.0, 0.0]}, {"a": 0.0, "alpha": [1.0, 0.0]}]},
    {"label": "t2", "spectrum": [{"a": -0.5, "alpha": [1.0, 0.0]}, {"a": -0.5, "alpha": [1.0, 0.0]}]}
  ]
}"#;
        match HarmonicShadow::from_json_str(text, 1e-9) {
            Err(LoadError::Hypothesis { line, label, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(label, "t2");
            }
            other => panic!("unexpected {other:?}"),
        }

        let bad = "{\n  \"rank\": 1,\n  \"punctures\": [{\"label\": \"t\", \"spectrum\": [{\"a\": \"x\"}]}]\n}";
        assert!(matches!(
            HarmonicShadow::from_json_str(bad, 1e-9),
            Err(LoadError::Schema { line: 3, .. })
        ));

        let mismatch = "{\"rank\": 2, \"punctures\": [{\"label\": \"t\", \"spectrum\": [{\"a\": 0.0, \"alpha\": [0.0, 0.0]}]}]}";
        assert!(matches!(
            HarmonicShadow::from_json_str(mismatch, 1e-9),
            Err(LoadError::Schema { .. })
        ));
    }

    proptest! {
        #[test]
        fn lattice_equivariance(a in -1.0f64..0.0, ar in -3.0f64..3.0, ai in -3.0f64..3.0,
                                k in -5i64..5, lr in -3.0f64..3.0, li in -3.0f64..3.0) {
            let x = KmsPoint::new(a, c(ar, ai));
            let lambda = c(lr, li);
            let base = flow(x, lambda);
            let shifted = flow(x.lattice_shift(k), lambda);
            prop_assert!((shifted.p - base.p - k as f64).abs() < 1e-12);
            prop_assert!((shifted.e - base.e + lambda * k as f64).norm() < 1e-12);
        }

        #[test]
        fn e_is_holomorphic(a in -1.0f64..0.0, ar in -2.0f64..2.0, ai in -2.0f64..2.0,
                            lr in -2.0f64..2.0, li in -2.0f64..2.0) {
            let x = KmsPoint::new(a, c(ar, ai));
            let h = 1e-4;
            let l = c(lr, li);
            let d_re = (flow(x, l + h).e - flow(x, l - h).e) / (2.0 * h);
            let d_im = (flow(x, l + c(0.0, h)).e - flow(x, l - c(0.0, h)).e) / (2.0 * h);
            // ∂/∂λ̄ = (∂_x + i ∂_y) / 2
            let dbar = (d_re + c(0.0, 1.0) * d_im) * 0.5;
            prop_assert!(dbar.norm() < 1e-6);
        }

        #[test]
        fn orderings_satisfy_condition(levels in prop::collection::vec(-1.0f64..0.0, 0..6),
                                       eig in prop::collection::vec(0u8..3, 6)) {
            let pairs: Vec<_> = levels.iter().zip(&eig).map(|(&a, &e)| (a, c(e as f64, 0.0))).collect();
            let got = valid_orderings(&pairs, 1e-9);
            prop_assert!(!got.is_empty());
            for o in &got {
                prop_assert!(satisfies_order_condition(&pairs, o, 1e-9));
            }
            prop_assert_eq!(got, brute_orderings(&pairs));
        }
    }
}
