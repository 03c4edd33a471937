//! Concrete filtered local systems: monodromy matrices with invariant
//! complete flags at each puncture.
//!
//! Flags are stored as ordered bases whose first `j` columns span `V_j`.
//! Internally every flag is orthonormalized, so the matrix of `γ_t` in the
//! adapted basis is `Qᴴ γ_t Q`, upper triangular when the flag is invariant.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BettiError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("matrix `{0}` is not invertible")]
    NotInvertible(String),
    #[error("surface relation fails: residual {0:e}")]
    SurfaceRelation(f64),
    #[error("flag at `{0}` does not span a complete flag")]
    FlagDimension(String),
    #[error("flag at `{puncture}` is not invariant (residual {residual:e})")]
    FlagNotInvariant { puncture: String, residual: f64 },
    #[error("swap at position {position} of `{puncture}` meets equal eigenvalues (gap {gap:e})")]
    DomainViolation {
        puncture: String,
        position: usize,
        gap: f64,
    },
    #[error("invalid permutation at `{0}`")]
    BadPermutation(String),
}

/// A point of the Betti side: generators `a_i, b_i`, one loop matrix per
/// puncture, a complete invariant flag per puncture, and a framing.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredLocalSystem {
    pub rank: usize,
    pub genus: usize,
    pub a: Vec<CMatrix>,
    pub b: Vec<CMatrix>,
    pub labels: Vec<String>,
    pub gammas: Vec<CMatrix>,
    /// Orthonormal flag bases, one per puncture.
    pub flags: Vec<CMatrix>,
    pub framing: CMatrix,
}

/// Per puncture, the scalars by which `γ_t` acts on the graded lines.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueVector {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Complex64>>,
}

/// One permutation per puncture; `perms[t][i]` is the new position of slot `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPermutation {
    pub perms: Vec<Vec<usize>>,
}

impl MultiPermutation {
    pub fn identity(punctures: usize, rank: usize) -> Self {
        Self {
            perms: vec![(0..rank).collect(); punctures],
        }
    }

    pub fn is_valid(&self, rank: usize) -> bool {
        self.perms.iter().all(|p| is_permutation(p, rank))
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn after(&self, inner: &MultiPermutation) -> MultiPermutation {
        MultiPermutation {
            perms: self
                .perms
                .iter()
                .zip(&inner.perms)
                .map(|(outer, inner)| inner.iter().map(|&p| outer[p]).collect())
                .collect(),
        }
    }
}

fn is_permutation(p: &[usize], rank: usize) -> bool {
    let mut seen = vec![false; rank];
    p.len() == rank
        && p.iter().all(|&x| {
            if x >= rank || seen[x] {
                false
            } else {
                seen[x] = true;
                true
            }
        })
}

/// Orthonormal basis with the same nested spans as the columns of `m`.
pub fn orthonormal_flag(m: &CMatrix) -> CMatrix {
    m.clone().qr().q()
}

/// Extends `vectors` (columns) to a basis of ℂ^r with standard vectors,
/// keeping the spans of the leading columns. Returns `None` if the given
/// vectors are dependent.
pub fn complete_basis(vectors: &CMatrix, rank: usize, eps: f64) -> Option<CMatrix> {
    let given = vectors.ncols();
    if given > rank || vectors.nrows() != rank {
        return None;
    }
    let mut basis = vectors.clone();
    if given > 0 {
        let sv = basis.clone().svd(false, false).singular_values;
        let max = sv.max();
        if sv.min() <= eps * max.max(1.0) {
            return None;
        }
    }
    for e in 0..rank {
        if basis.ncols() == rank {
            break;
        }
        let mut candidate = basis
            .clone()
            .insert_column(basis.ncols(), Complex64::new(0.0, 0.0));
        let last = candidate.ncols() - 1;
        candidate[(e, last)] = Complex64::new(1.0, 0.0);
        let sv = candidate.clone().svd(false, false).singular_values;
        if sv.min() > 1e-6 {
            basis = candidate;
        }
    }
    Some(basis)
}

/// `Qᴴ γ Q` and the size of its strictly lower part.
fn adapted_matrix(gamma: &CMatrix, q: &CMatrix) -> (CMatrix, f64) {
    let m = q.adjoint() * gamma * q;
    let mut lower = 0.0_f64;
    for j in 0..m.ncols() {
        for i in j + 1..m.nrows() {
            lower = lower.max(m[(i, j)].norm());
        }
    }
    (m, lower)
}

fn invariance_scale(gamma: &CMatrix) -> f64 {
    gamma.norm().max(1.0)
}

impl FilteredLocalSystem {
    /// Builds a system, orthonormalizing flags and checking every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rank: usize,
        genus: usize,
        a: Vec<CMatrix>,
        b: Vec<CMatrix>,
        labels: Vec<String>,
        gammas: Vec<CMatrix>,
        flags: Vec<CMatrix>,
        framing: Option<CMatrix>,
        tol: &Tolerances,
    ) -> Result<Self, BettiError> {
        if a.len() != genus || b.len() != genus {
            return Err(BettiError::Schema(format!(
                "expected {genus} matrices for each of a and b"
            )));
        }
        if labels.len() != gammas.len() || labels.len() != flags.len() {
            return Err(BettiError::Schema(
                "each puncture needs one gamma and one flag".into(),
            ));
        }
        let mut ortho = Vec::with_capacity(flags.len());
        for (label, f) in labels.iter().zip(&flags) {
            let full = complete_basis(f, rank, tol.eps_eq)
                .ok_or_else(|| BettiError::FlagDimension(label.clone()))?;
            ortho.push(orthonormal_flag(&full));
        }
        let system = Self {
            rank,
            genus,
            a,
            b,
            labels,
            gammas,
            flags: ortho,
            framing: framing.unwrap_or_else(|| CMatrix::identity(rank, rank)),
        };
        system.validate(tol)?;
        Ok(system)
    }

    fn named_matrices(&self) -> impl Iterator<Item = (String, &CMatrix)> {
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("a{}", i + 1), m));
        let b = self
            .b
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("b{}", i + 1), m));
        let g = self
            .labels
            .iter()
            .zip(&self.gammas)
            .map(|(l, m)| (format!("gamma[{l}]"), m));
        a.chain(b)
            .chain(g)
            .chain(std::iter::once(("framing".to_string(), &self.framing)))
    }

    /// `∏[a_i, b_i] · ∏ γ_j − 1` in Frobenius norm.
    pub fn surface_residual(&self) -> Option<f64> {
        let r = self.rank;
        let mut prod = CMatrix::identity(r, r);
        for (a, b) in self.a.iter().zip(&self.b) {
            let ai = a.clone().try_inverse()?;
            let bi = b.clone().try_inverse()?;
            prod = prod * a * b * ai * bi;
        }
        for g in &self.gammas {
            prod *= g;
        }
        Some((prod - CMatrix::identity(r, r)).norm())
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<(), BettiError> {
        let r = self.rank;
        if r == 0 {
            return Err(BettiError::Schema("rank must be positive".into()));
        }
        for (name, m) in self.named_matrices() {
            if m.nrows() != r || m.ncols() != r {
                return Err(BettiError::Schema(format!(
                    "matrix `{name}` is not {r}×{r}"
                )));
            }
            if m.clone().try_inverse().is_none() || m.determinant().norm() <= f64::EPSILON {
                return Err(BettiError::NotInvertible(name));
            }
        }
        let residual = self
            .surface_residual()
            .ok_or_else(|| BettiError::NotInvertible("a/b".into()))?;
        if residual > tol.eps_rel * (r as f64).sqrt().max(1.0) {
            return Err(BettiError::SurfaceRelation(residual));
        }
        for ((label, gamma), q) in self.labels.iter().zip(&self.gammas).zip(&self.flags) {
            if q.nrows() != r || q.ncols() != r {
                return Err(BettiError::FlagDimension(label.clone()));
            }
            let (_, lower) = adapted_matrix(gamma, q);
            if lower > tol.eps_eq * invariance_scale(gamma) {
                return Err(BettiError::FlagNotInvariant {
                    puncture: label.clone(),
                    residual: lower,
                });
            }
        }
        Ok(())
    }

    pub fn with_flags(&self, flags: Vec<CMatrix>) -> Self {
        Self {
            flags,
            ..self.clone()
        }
    }

    pub fn from_json_str(text: &str, tol: &Tolerances) -> Result<Self, BettiError> {
        let raw: RawSystem =
            serde_json::from_str(text).map_err(|e| BettiError::Schema(e.to_string()))?;
        raw.into_system(tol)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let raw = RawSystem {
            rank: self.rank,
            genus: self.genus,
            a: self.a.iter().map(matrix_to_rows).collect(),
            b: self.b.iter().map(matrix_to_rows).collect(),
            punctures: self
                .labels
                .iter()
                .zip(&self.gammas)
                .zip(&self.flags)
                .map(|((l, g), f)| RawPuncture {
                    label: l.clone(),
                    gamma: matrix_to_rows(g),
                    flag: (0..f.ncols())
                        .map(|j| f.column(j).iter().map(|z| [z.re, z.im]).collect())
                        .collect(),
                })
                .collect(),
            framing: Some(matrix_to_rows(&self.framing)),
        };
        serde_json::to_value(raw).expect("serializable")
    }
}

type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPuncture {
    label: String,
    gamma: Rows,
    /// Basis vectors, `V_j` = span of the first `j`.
    flag: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    rank: usize,
    #[serde(default)]
    genus: usize,
    #[serde(default)]
    a: Vec<Rows>,
    #[serde(default)]
    b: Vec<Rows>,
    punctures: Vec<RawPuncture>,
    #[serde(default)]
    framing: Option<Rows>,
}

fn matrix_to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn rows_to_matrix(rows: &Rows, rank: usize, name: &str) -> Result<CMatrix, BettiError> {
    if rows.len() != rank || rows.iter().any(|row| row.len() != rank) {
        return Err(BettiError::Schema(format!(
            "matrix `{name}` is not {rank}×{rank}"
        )));
    }
    Ok(CMatrix::from_fn(rank, rank, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl RawSystem {
    fn into_system(self, tol: &Tolerances) -> Result<FilteredLocalSystem, BettiError> {
        let r = self.rank;
        let conv = |list: &[Rows], prefix: &str| -> Result<Vec<CMatrix>, BettiError> {
            list.iter()
                .enumerate()
                .map(|(i, m)| rows_to_matrix(m, r, &format!("{prefix}{}", i + 1)))
                .collect()
        };
        let a = conv(&self.a, "a")?;
        let b = conv(&self.b, "b")?;
        let mut labels = Vec::new();
        let mut gammas = Vec::new();
        let mut flags = Vec::new();
        for p in &self.punctures {
            gammas.push(rows_to_matrix(&p.gamma, r, &p.label)?);
            if p.flag.iter().any(|v| v.len() != r) {
                return Err(BettiError::Schema(format!(
                    "flag vectors at `{}` must have length {r}",
                    p.label
                )));
            }
            let cols = p.flag.len();
            flags.push(CMatrix::from_fn(r, cols, |i, j| {
                Complex64::new(p.flag[j][i][0], p.flag[j][i][1])
            }));
            labels.push(p.label.clone());
        }
        let framing = self
            .framing
            .as_ref()
            .map(|m| rows_to_matrix(m, r, "framing"))
            .transpose()?;
        FilteredLocalSystem::new(r, self.genus, a, b, labels, gammas, flags, framing, tol)
    }
}

/// Reads the graded eigenvalues off the triangularized `γ_t`.
pub fn eigenvalue_map(l: &FilteredLocalSystem, eps: f64) -> Result<EigenvalueVector, BettiError> {
    let mut values = Vec::with_capacity(l.labels.len());
    for ((label, gamma), q) in l.labels.iter().zip(&l.gammas).zip(&l.flags) {
        let (m, lower) = adapted_matrix(gamma, q);
        if lower > eps * invariance_scale(gamma) {
            return Err(BettiError::FlagNotInvariant {
                puncture: label.clone(),
                residual: lower,
            });
        }
        values.push(m.diagonal().iter().copied().collect());
    }
    Ok(EigenvalueVector {
        labels: l.labels.clone(),
        values,
    })
}

/// True iff every inversion of every `σ(t)` pairs distinct eigenvalues.
pub fn in_domain(sigma: &MultiPermutation, eigen: &EigenvalueVector, eps: f64) -> bool {
    sigma.perms.iter().zip(&eigen.values).all(|(p, vals)| {
        (0..p.len())
            .all(|i| (i + 1..p.len()).all(|j| p[i] < p[j] || (vals[i] - vals[j]).norm() > eps))
    })
}

/// Ways of sorting a permutation into adjacent swaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BubbleOrder {
    /// Passes sweep left to right.
    Forward,
    /// Passes sweep right to left.
    Backward,
    /// Alternating even and odd positions (odd-even transposition sort).
    OddEven,
}

/// Adjacent swap positions `p` (swapping `p`, `p+1`, 0-based), in
/// application order, that carry slot `i` to position `sigma[i]`.
pub fn bubble_swaps(sigma: &[usize], order: BubbleOrder) -> Vec<usize> {
    let n = sigma.len();
    let mut keys: Vec<usize> = sigma.to_vec();
    let mut out = Vec::new();
    let try_swap = |keys: &mut Vec<usize>, p: usize, out: &mut Vec<usize>| -> bool {
        if keys[p] > keys[p + 1] {
            keys.swap(p, p + 1);
            out.push(p);
            true
        } else {
            false
        }
    };
    if n < 2 {
        return out;
    }
    match order {
        BubbleOrder::Forward => loop {
            let mut any = false;
            for p in 0..n - 1 {
                any |= try_swap(&mut keys, p, &mut out);
            }
            if !any {
                break;
            }
        },
        BubbleOrder::Backward => loop {
            let mut any = false;
            for p in (0..n - 1).rev() {
                any |= try_swap(&mut keys, p, &mut out);
            }
            if !any {
                break;
            }
        },
        BubbleOrder::OddEven => {
            let mut clean_rounds = 0;
            let mut parity = 0;
            while clean_rounds < 2 {
                let mut any = false;
                let mut p = parity;
                while p + 1 < n {
                    any |= try_swap(&mut keys, p, &mut out);
                    p += 2;
                }
                clean_rounds = if any { 0 } else { clean_rounds + 1 };
                parity ^= 1;
            }
        }
    }
    out
}

/// Exchanges the graded lines at positions `p` and `p+1` of an invariant flag.
pub fn adjacent_swap(
    gamma: &CMatrix,
    q: &CMatrix,
    p: usize,
    eps: f64,
    label: &str,
) -> Result<CMatrix, BettiError> {
    let m = q.adjoint() * gamma * q;
    let a = m[(p, p)];
    let b = m[(p, p + 1)];
    let c = m[(p + 1, p + 1)];
    let gap = (a - c).norm();
    if gap <= eps {
        return Err(BettiError::DomainViolation {
            puncture: label.to_string(),
            position: p,
            gap,
        });
    }
    // Eigenline of c in the quotient V_{p+2}/V_p.
    let w = q.column(p) * b + q.column(p + 1) * (c - a);
    let w = &w / Complex64::new(w.norm(), 0.0);
    let mut next = q.clone();
    let old = q.column(p).clone_owned();
    next.set_column(p, &w);
    next.set_column(p + 1, &old);
    Ok(orthonormal_flag(&next))
}

pub fn flag_surgery(
    sigma: &MultiPermutation,
    l: &FilteredLocalSystem,
    eps: f64,
) -> Result<FilteredLocalSystem, BettiError> {
    flag_surgery_with(sigma, l, BubbleOrder::Forward, eps)
}

pub fn flag_surgery_with(
    sigma: &MultiPermutation,
    l: &FilteredLocalSystem,
    order: BubbleOrder,
    eps: f64,
) -> Result<FilteredLocalSystem, BettiError> {
    if sigma.perms.len() != l.labels.len() {
        return Err(BettiError::Schema(
            "one permutation per puncture required".into(),
        ));
    }
    let mut flags = Vec::with_capacity(l.flags.len());
    for (((label, gamma), q), perm) in l
        .labels
        .iter()
        .zip(&l.gammas)
        .zip(&l.flags)
        .zip(&sigma.perms)
    {
        if !is_permutation(perm, l.rank) {
            return Err(BettiError::BadPermutation(label.clone()));
        }
        let mut cur = q.clone();
        for p in bubble_swaps(perm, order) {
            cur = adjacent_swap(gamma, &cur, p, eps, label)?;
        }
        flags.push(cur);
    }
    Ok(l.with_flags(flags))
}

/// Largest sine of a principal angle between `span(q1[..j])` and
/// `span(q2[..j])` over all `j`. Both inputs must be orthonormal.
pub fn flag_distance(q1: &CMatrix, q2: &CMatrix) -> f64 {
    let r = q1.ncols();
    let mut worst = 0.0_f64;
    for j in 1..r {
        let a = q1.columns(0, j);
        let b = q2.columns(0, j);
        let residual = b - a * (a.adjoint() * b);
        let s = residual.svd(false, false).singular_values.max();
        worst = worst.max(s);
    }
    worst
}

/// Largest flag distance over all punctures.
pub fn system_flag_distance(l1: &FilteredLocalSystem, l2: &FilteredLocalSystem) -> f64 {
    l1.flags
        .iter()
        .zip(&l2.flags)
        .map(|(a, b)| flag_distance(a, b))
        .fold(0.0, f64::max)
}

/// Dimension of the space of matrices commuting with every generator and
/// preserving every flag.
pub fn commutant_dimension(l: &FilteredLocalSystem, rank_tol: f64) -> usize {
    let r = l.rank;
    let n = r * r;
    let idx = |row: usize, col: usize| row + col * r;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let zero = Complex64::new(0.0, 0.0);
    let generators = l.a.iter().chain(&l.b).chain(&l.gammas);
    for g in generators {
        for i in 0..r {
            for j in 0..r {
                // (Xg − gX)_{ij}
                let mut row = vec![zero; n];
                for k in 0..r {
                    row[idx(i, k)] += g[(k, j)];
                    row[idx(k, j)] -= g[(i, k)];
                }
                rows.push(row);
            }
        }
    }
    for q in &l.flags {
        for i in 0..r {
            for j in 0..i {
                // (Qᴴ X Q)_{ij} = 0 below the diagonal
                let mut row = vec![zero; n];
                for k in 0..r {
                    for m in 0..r {
                        row[idx(k, m)] += q[(k, i)].conj() * q[(m, j)];
                    }
                }
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return n;
    }
    let system = CMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let sv = system.svd(false, false).singular_values;
    let scale = sv.max().max(1.0);
    let rank = sv.iter().filter(|&&s| s > rank_tol * scale).count();
    n - rank
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeReport {
    pub pass: bool,
    pub max_angle: f64,
}

/// Compares `τ` after `σ` with the surgery for the composite `τσ`.
pub fn compose_check(
    tau: &MultiPermutation,
    sigma: &MultiPermutation,
    l: &FilteredLocalSystem,
    eps: f64,
    eps_flag: f64,
) -> Result<ComposeReport, BettiError> {
    let stepwise = flag_surgery(tau, &flag_surgery(sigma, l, eps)?, eps)?;
    let direct = flag_surgery(&tau.after(sigma), l, eps);
    match direct {
        Ok(direct) => {
            let max_angle = system_flag_distance(&stepwise, &direct);
            Ok(ComposeReport {
                pass: max_angle <= eps_flag,
                max_angle,
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mat(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_fn(rows.len(), rows.len(), |i, j| c(rows[i][j]))
    }

    fn single(gamma: CMatrix, flag: CMatrix) -> FilteredLocalSystem {
        let r = gamma.nrows();
        let inv = gamma.clone().try_inverse().unwrap();
        let flag_inv = flag.clone();
        FilteredLocalSystem::new(
            r,
            0,
            vec![],
            vec![],
            vec!["t1".into(), "t2".into()],
            vec![gamma, inv],
            vec![flag, flag_inv],
            None,
            &Tolerances::default(),
        )
        .unwrap()
    }

    fn swap() -> MultiPermutation {
        MultiPermutation {
            perms: vec![vec![1, 0], vec![1, 0]],
        }
    }

    fn line_is(q: &CMatrix, v: &[f64]) -> bool {
        let target = CMatrix::from_fn(v.len(), 1, |i, _| c(v[i]));
        let target = orthonormal_flag(&target);
        let first = q.columns(0, 1);
        let residual = &target - first * (first.adjoint() * &target);
        residual.norm() < 1e-10
    }

    #[test]
    fn eigenvalue_examples() {
        let l = single(mat(&[&[2.0, 0.0], &[0.0, 3.0]]), CMatrix::identity(2, 2));
        let ev = eigenvalue_map(&l, 1e-9).unwrap();
        assert!((ev.values[0][0] - c(2.0)).norm() < 1e-12);
        assert!((ev.values[0][1] - c(3.0)).norm() < 1e-12);

        let l = single(mat(&[&[2.0, 1.0], &[0.0, 3.0]]), CMatrix::identity(2, 2));
        let ev = eigenvalue_map(&l, 1e-9).unwrap();
        assert!((ev.values[0][0] - c(2.0)).norm() < 1e-12);
        assert!((ev.values[0][1] - c(3.0)).norm() < 1e-12);

        let l = single(CMatrix::identity(3, 3), CMatrix::identity(3, 3));
        let ev = eigenvalue_map(&l, 1e-9).unwrap();
        assert!(ev.values[0].iter().all(|z| (z - c(1.0)).norm() < 1e-12));
    }

    #[test]
    fn non_invariant_flag_rejected() {
        let gamma = mat(&[&[2.0, 0.0], &[1.0, 3.0]]);
        let inv = gamma.clone().try_inverse().unwrap();
        let res = FilteredLocalSystem::new(
            2,
            0,
            vec![],
            vec![],
            vec!["t1".into(), "t2".into()],
            vec![gamma, inv],
            vec![CMatrix::identity(2, 2), CMatrix::identity(2, 2)],
            None,
            &Tolerances::default(),
        );
        assert!(matches!(res, Err(BettiError::FlagNotInvariant { .. })));
    }

    #[test]
    fn domain_examples() {
        let ev = |v: &[f64]| EigenvalueVector {
            labels: vec!["t".into()],
            values: vec![v.iter().map(|&x| c(x)).collect()],
        };
        let id = MultiPermutation::identity(1, 2);
        assert!(in_domain(&id, &ev(&[5.0, 5.0]), 1e-9));
        let sw = MultiPermutation {
            perms: vec![vec![1, 0]],
        };
        assert!(!in_domain(&sw, &ev(&[5.0, 5.0]), 1e-9));
        let rev = MultiPermutation {
            perms: vec![vec![2, 1, 0]],
        };
        assert!(!in_domain(&rev, &ev(&[1.0, 1.0, 2.0]), 1e-9));
        assert!(in_domain(&rev, &ev(&[1.0, 3.0, 2.0]), 1e-9));
    }

    #[test]
    fn surgery_examples() {
        let l = single(mat(&[&[2.0, 0.0], &[0.0, 3.0]]), CMatrix::identity(2, 2));
        let out = flag_surgery(&swap(), &l, 1e-9).unwrap();
        assert!(line_is(&out.flags[0], &[0.0, 1.0]));
        let ev = eigenvalue_map(&out, 1e-9).unwrap();
        assert!((ev.values[0][0] - c(3.0)).norm() < 1e-12);
        assert!((ev.values[0][1] - c(2.0)).norm() < 1e-12);

        let l = single(mat(&[&[2.0, 1.0], &[0.0, 3.0]]), CMatrix::identity(2, 2));
        let out = flag_surgery(&swap(), &l, 1e-9).unwrap();
        assert!(line_is(&out.flags[0], &[1.0, 1.0]));
        let ev = eigenvalue_map(&out, 1e-9).unwrap();
        assert!((ev.values[0][0] - c(3.0)).norm() < 1e-12);

        let same = flag_surgery(&MultiPermutation::identity(2, 2), &l, 1e-9).unwrap();
        assert_eq!(same, l);

        let scalar = single(CMatrix::identity(2, 2), CMatrix::identity(2, 2));
        assert!(matches!(
            flag_surgery(&swap(), &scalar, 1e-9),
            Err(BettiError::DomainViolation { position: 0, .. })
        ));
    }

    #[test]
    fn bubble_orders_sort() {
        let sigma = [3, 0, 4, 1, 2];
        for order in [
            BubbleOrder::Forward,
            BubbleOrder::Backward,
            BubbleOrder::OddEven,
        ] {
            let mut keys = sigma.to_vec();
            for p in bubble_swaps(&sigma, order) {
                assert!(keys[p] > keys[p + 1]);
                keys.swap(p, p + 1);
            }
            assert_eq!(keys, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn commutant_small_cases() {
        let trivial = single(CMatrix::identity(3, 3), CMatrix::identity(3, 3));
        assert_eq!(commutant_dimension(&trivial, 1e-10), 6);
        let one = single(mat(&[&[2.0]]), CMatrix::identity(1, 1));
        assert_eq!(commutant_dimension(&one, 1e-10), 1);
    }

    #[test]
    fn involution_of_swap() {
        let l = single(mat(&[&[2.0, 1.0], &[0.0, 3.0]]), CMatrix::identity(2, 2));
        let report = compose_check(&swap(), &swap(), &l, 1e-9, 1e-8).unwrap();
        assert!(report.pass);
        let twice = flag_surgery(&swap(), &flag_surgery(&swap(), &l, 1e-9).unwrap(), 1e-9).unwrap();
        assert!(system_flag_distance(&twice, &l) < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{
            "rank": 2,
            "punctures": [
                {"label": "t1", "gamma": [[[2,0],[1,0]],[[0,0],[3,0]]], "flag": [[[1,0],[0,0]]]},
                {"label": "t2", "gamma": [[[0.5,0],[-0.16666666666666666,0]],[[0,0],[0.3333333333333333,0]]], "flag": [[[1,0],[0,0]]]}
            ]
        }"#;
        let l = FilteredLocalSystem::from_json_str(text, &Tolerances::default()).unwrap();
        let back =
            FilteredLocalSystem::from_json_str(&l.to_json().to_string(), &Tolerances::default())
                .unwrap();
        assert!(system_flag_distance(&l, &back) < 1e-12);
        let bad = text.replace("\"rank\": 2", "\"rank\": 3");
        assert!(matches!(
            FilteredLocalSystem::from_json_str(&bad, &Tolerances::default()),
            Err(BettiError::Schema(_))
        ));
    }
}
