//! The Hecke gauge groupoid at the level of residual-eigenvalue shadows.
//!
//! A shadow is λ together with an ordered tuple θ_{t,1..r} of residual
//! eigenvalues at every puncture t, plus a degree counter. The generators act
//! by
//!
//! ```text
//! H(t):    (θ_1, …, θ_r) ↦ (θ_r + λ, θ_1, …, θ_{r−1}),   degree − 1
//! T(t,i):  swap θ_i and θ_{i+1},  defined only where θ_i ≠ θ_{i+1}
//! U(t):    θ_j ↦ θ_j − λ for all j,                     degree + r
//! ```
//!
//! Words are written left to right and applied right to left, so
//! `U(t) H(t)^3` first applies `H(t)` three times and then `U(t)`.
//!
//! Every word acts affinely: slot `i` moves to position `σ(i)` and picks up
//! `m_i·λ`. [`NormalForm`] records `(σ, m, d)` per puncture together with the
//! finitely many hyperplane conditions `θ_i − θ_j ≠ c·λ` cutting out its domain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeckeError {
    #[error("unknown puncture `{0}`")]
    UnknownPuncture(String),
    #[error("transposition index {index} out of range 1..{rank} at puncture `{puncture}`")]
    IndexOutOfRange {
        puncture: String,
        index: usize,
        rank: usize,
    },
    #[error("factor {factor} ({generator}) undefined: θ_{i} and θ_{j} coincide at `{puncture}` (gap {gap:e})", i = slot + 1, j = slot + 2)]
    DomainViolation {
        factor: usize,
        generator: String,
        puncture: String,
        slot: usize,
        gap: f64,
    },
    #[error("λ = 0 is not allowed here")]
    LambdaZero,
    #[error("shadow tuples must all have length {expected}, `{puncture}` has {found}")]
    RankMismatch {
        puncture: String,
        expected: usize,
        found: usize,
    },
    #[error("normalization did not converge after {0} rounds")]
    NotNormalizable(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot parse word at `{token}`: {reason}")]
pub struct ParseWordError {
    pub token: String,
    pub reason: String,
}

/// λ, ordered residual eigenvalues per puncture, and a degree counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueShadow {
    pub lambda: Complex64,
    pub labels: Vec<String>,
    pub theta: Vec<Vec<Complex64>>,
    pub degree_offset: i64,
}

impl ResidueShadow {
    pub fn new(
        lambda: Complex64,
        punctures: Vec<(String, Vec<Complex64>)>,
        degree_offset: i64,
    ) -> Result<Self, HeckeError> {
        let rank = punctures.first().map(|p| p.1.len()).unwrap_or(0);
        for (label, t) in &punctures {
            if t.len() != rank {
                return Err(HeckeError::RankMismatch {
                    puncture: label.clone(),
                    expected: rank,
                    found: t.len(),
                });
            }
        }
        let (labels, theta) = punctures.into_iter().unzip();
        Ok(Self {
            lambda,
            labels,
            theta,
            degree_offset,
        })
    }

    pub fn rank(&self) -> usize {
        self.theta.first().map(Vec::len).unwrap_or(0)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn theta_at(&self, label: &str) -> Option<&[Complex64]> {
        self.index_of(label).map(|i| self.theta[i].as_slice())
    }

    /// Same λ, same degree, same labels, and θ entries within `eps`.
    pub fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        self.labels == other.labels
            && self.degree_offset == other.degree_offset
            && (self.lambda - other.lambda).norm() <= eps
            && self.theta.iter().zip(&other.theta).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= eps)
            })
    }

    /// True when no two entries at a puncture differ by an integer multiple
    /// of λ (within `eps`), checking multiples up to `max_c`.
    pub fn is_generic(&self, max_c: i64, eps: f64) -> bool {
        self.theta.iter().all(|t| {
            (0..t.len()).all(|i| {
                (i + 1..t.len()).all(|j| {
                    (-max_c..=max_c).all(|c| (t[i] - t[j] - self.lambda * c as f64).norm() > eps)
                })
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GeneratorKind {
    /// Hecke rotation `H(t)`.
    Hecke,
    /// Adjacent transposition `T(t,i)`, 1-based `i`.
    Transpose(usize),
    /// Twist by 𝒪(t), `U(t)`.
    Twist,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub puncture: String,
}

impl Generator {
    pub fn h(t: &str) -> Self {
        Self {
            kind: GeneratorKind::Hecke,
            puncture: t.to_string(),
        }
    }

    pub fn t(t: &str, i: usize) -> Self {
        Self {
            kind: GeneratorKind::Transpose(i),
            puncture: t.to_string(),
        }
    }

    pub fn u(t: &str) -> Self {
        Self {
            kind: GeneratorKind::Twist,
            puncture: t.to_string(),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GeneratorKind::Hecke => write!(f, "H({})", self.puncture),
            GeneratorKind::Transpose(i) => write!(f, "T({},{})", self.puncture, i),
            GeneratorKind::Twist => write!(f, "U({})", self.puncture),
        }
    }
}

/// A generator or its formal inverse.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub gen: Generator,
    pub inverse: bool,
}

impl Factor {
    pub fn new(gen: Generator) -> Self {
        Self {
            gen,
            inverse: false,
        }
    }

    pub fn inv(gen: Generator) -> Self {
        Self { gen, inverse: true }
    }

    pub fn inverted(&self) -> Self {
        // T is an involution where defined.
        let inverse = match self.gen.kind {
            GeneratorKind::Transpose(_) => false,
            _ => !self.inverse,
        };
        Self {
            gen: self.gen.clone(),
            inverse,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.gen)
        } else {
            write!(f, "{}", self.gen)
        }
    }
}

/// A word in the generators, written left to right and applied right to left.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct GroupoidWord {
    pub factors: Vec<Factor>,
}

impl GroupoidWord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_factors(factors: Vec<Factor>) -> Self {
        Self { factors }
    }

    /// Builds a word from factors listed in the order they are applied.
    pub fn from_application_order(mut applied: Vec<Factor>) -> Self {
        applied.reverse();
        Self { factors: applied }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn after(&self, inner: &GroupoidWord) -> GroupoidWord {
        let mut factors = self.factors.clone();
        factors.extend(inner.factors.iter().cloned());
        Self { factors }
    }

    pub fn pow(&self, n: usize) -> GroupoidWord {
        let mut out = GroupoidWord::empty();
        for _ in 0..n {
            out = out.after(self);
        }
        out
    }

    pub fn inverse(&self) -> GroupoidWord {
        Self {
            factors: self.factors.iter().rev().map(Factor::inverted).collect(),
        }
    }

    /// Factors with their written-order index, in application order.
    pub fn applied(&self) -> impl Iterator<Item = (usize, &Factor)> {
        self.factors.iter().enumerate().rev()
    }

    /// −(#H) + r·(#U), inverses counted negatively.
    pub fn degree_count(&self, rank: usize) -> i64 {
        self.factors
            .iter()
            .map(|f| {
                let sign = if f.inverse { -1 } else { 1 };
                match f.gen.kind {
                    GeneratorKind::Hecke => -sign,
                    GeneratorKind::Twist => sign * rank as i64,
                    GeneratorKind::Transpose(_) => 0,
                }
            })
            .sum()
    }
}

impl fmt::Display for GroupoidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "id");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.factors.len() {
            let cur = &self.factors[i];
            let mut run = 1;
            while i + run < self.factors.len() && self.factors[i + run] == *cur {
                run += 1;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            match (run, cur.inverse) {
                (1, false) => write!(f, "{}", cur.gen)?,
                (n, false) => write!(f, "{}^{}", cur.gen, n)?,
                (n, true) => write!(f, "{}^-{}", cur.gen, n)?,
            }
            i += run;
        }
        Ok(())
    }
}

impl FromStr for GroupoidWord {
    type Err = ParseWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |token: &str, reason: &str| ParseWordError {
            token: token.to_string(),
            reason: reason.to_string(),
        };
        let s = s.trim();
        if s.is_empty() || s == "id" {
            return Ok(Self::empty());
        }
        let mut factors = Vec::new();
        for token in s
            .split(|c: char| c.is_whitespace() || c == '∘' || c == '*')
            .filter(|t| !t.is_empty())
        {
            let open = token.find('(').ok_or_else(|| err(token, "expected `(`"))?;
            let close = token.find(')').ok_or_else(|| err(token, "expected `)`"))?;
            if close < open {
                return Err(err(token, "misplaced `)`"));
            }
            let name = &token[..open];
            let args: Vec<&str> = token[open + 1..close].split(',').map(str::trim).collect();
            let rest = &token[close + 1..];
            let power: i64 = if rest.is_empty() {
                1
            } else if let Some(p) = rest.strip_prefix('^') {
                p.parse().map_err(|_| err(token, "bad exponent"))?
            } else {
                return Err(err(token, "trailing characters"));
            };
            let label = args[0];
            if label.is_empty() {
                return Err(err(token, "empty puncture label"));
            }
            let gen = match (name, args.len()) {
                ("H", 1) => Generator::h(label),
                ("U", 1) => Generator::u(label),
                ("T", 2) => {
                    let i: usize = args[1].parse().map_err(|_| err(token, "bad index"))?;
                    if i == 0 {
                        return Err(err(token, "transposition index is 1-based"));
                    }
                    Generator::t(label, i)
                }
                _ => return Err(err(token, "expected H(t), U(t) or T(t,i)")),
            };
            let f = if power < 0 {
                Factor::inv(gen)
            } else {
                Factor::new(gen)
            };
            for _ in 0..power.unsigned_abs() {
                factors.push(f.clone());
            }
        }
        Ok(Self { factors })
    }
}

fn check_lambda_rank(s: &ResidueShadow, label: &str) -> Result<usize, HeckeError> {
    s.index_of(label)
        .ok_or_else(|| HeckeError::UnknownPuncture(label.to_string()))
}

/// Applies one factor in place. `factor_index` is only used for error reports.
fn act(f: &Factor, s: &mut ResidueShadow, eps: f64, factor_index: usize) -> Result<(), HeckeError> {
    let idx = check_lambda_rank(s, &f.gen.puncture)?;
    let r = s.rank();
    let lambda = s.lambda;
    let theta = &mut s.theta[idx];
    match (f.gen.kind, f.inverse) {
        (GeneratorKind::Hecke, false) => {
            if r > 0 {
                theta.rotate_right(1);
                theta[0] += lambda;
            }
            s.degree_offset -= 1;
        }
        (GeneratorKind::Hecke, true) => {
            if r > 0 {
                theta[0] -= lambda;
                theta.rotate_left(1);
            }
            s.degree_offset += 1;
        }
        (GeneratorKind::Twist, inv) => {
            let sign = if inv { -1.0 } else { 1.0 };
            for v in theta.iter_mut() {
                *v -= lambda * sign;
            }
            s.degree_offset += if inv { -(r as i64) } else { r as i64 };
        }
        (GeneratorKind::Transpose(i), _) => {
            if i == 0 || i >= r {
                return Err(HeckeError::IndexOutOfRange {
                    puncture: f.gen.puncture.clone(),
                    index: i,
                    rank: r,
                });
            }
            let gap = (theta[i - 1] - theta[i]).norm();
            if gap <= eps {
                return Err(HeckeError::DomainViolation {
                    factor: factor_index,
                    generator: f.to_string(),
                    puncture: f.gen.puncture.clone(),
                    slot: i - 1,
                    gap,
                });
            }
            theta.swap(i - 1, i);
        }
    }
    Ok(())
}

pub fn apply_generator(
    f: &Factor,
    s: &ResidueShadow,
    eps: f64,
) -> Result<ResidueShadow, HeckeError> {
    let mut out = s.clone();
    act(f, &mut out, eps, 0)?;
    Ok(out)
}

/// Applies a word right to left; a domain failure names the written-order
/// index of the offending factor.
pub fn apply_word(
    w: &GroupoidWord,
    s: &ResidueShadow,
    eps: f64,
) -> Result<ResidueShadow, HeckeError> {
    let mut out = s.clone();
    for (i, f) in w.applied() {
        act(f, &mut out, eps, i)?;
    }
    Ok(out)
}

pub fn words_agree_at(
    w1: &GroupoidWord,
    w2: &GroupoidWord,
    s: &ResidueShadow,
    eps: f64,
) -> Result<bool, HeckeError> {
    let a = apply_word(w1, s, eps)?;
    let b = apply_word(w2, s, eps)?;
    Ok(a.approx_eq(&b, eps))
}

/// `θ_{t,i} − θ_{t,j} ≠ c·λ` with `i < j` (0-based slots).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainConstraint {
    pub puncture: String,
    pub i: usize,
    pub j: usize,
    pub c: i64,
}

impl DomainConstraint {
    /// Canonical form of `θ_p − θ_q ≠ c·λ`.
    pub fn canonical(puncture: &str, p: usize, q: usize, c: i64) -> Self {
        debug_assert_ne!(p, q);
        if p < q {
            Self {
                puncture: puncture.to_string(),
                i: p,
                j: q,
                c,
            }
        } else {
            Self {
                puncture: puncture.to_string(),
                i: q,
                j: p,
                c: -c,
            }
        }
    }

    /// Distance of `θ_i − θ_j − c·λ` from zero at `s`.
    pub fn gap(&self, s: &ResidueShadow) -> Option<f64> {
        let t = s.theta_at(&self.puncture)?;
        Some((t[self.i] - t[self.j] - s.lambda * self.c as f64).norm())
    }
}

impl fmt::Display for DomainConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "θ({},{}) − θ({},{}) ≠ {}λ",
            self.puncture,
            self.i + 1,
            self.puncture,
            self.j + 1,
            self.c
        )
    }
}

/// Affine action at one puncture: slot `i` goes to position `sigma[i]` with
/// value `θ_i + shift[i]·λ`; `degree` is this puncture's contribution to the
/// degree counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PunctureAction {
    pub sigma: Vec<usize>,
    pub shift: Vec<i64>,
    pub degree: i64,
}

impl PunctureAction {
    pub fn identity(rank: usize) -> Self {
        Self {
            sigma: (0..rank).collect(),
            shift: vec![0; rank],
            degree: 0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.degree == 0
            && self.shift.iter().all(|&m| m == 0)
            && self.sigma.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Canonical representative of a word: per-puncture `(σ, m, d)` plus domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub rank: usize,
    pub actions: BTreeMap<String, PunctureAction>,
    pub domain: BTreeSet<DomainConstraint>,
}

/// Symbolic state while composing a word.
struct Tracker {
    slot_at: Vec<usize>,
    shift: Vec<i64>,
    degree: i64,
}

impl NormalForm {
    pub fn identity(rank: usize, labels: &[String]) -> Self {
        Self {
            rank,
            actions: labels
                .iter()
                .map(|l| (l.clone(), PunctureAction::identity(rank)))
                .collect(),
            domain: BTreeSet::new(),
        }
    }

    pub fn total_degree(&self) -> i64 {
        self.actions.values().map(|a| a.degree).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.actions.values().all(PunctureAction::is_identity)
    }

    /// Equality of `(σ, m, d)` at every puncture, ignoring the domain.
    pub fn same_action(&self, other: &NormalForm) -> bool {
        self.rank == other.rank && self.actions == other.actions
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &NormalForm) -> NormalForm {
        assert_eq!(self.rank, inner.rank, "rank mismatch in composition");
        let mut actions = BTreeMap::new();
        for (label, f) in &inner.actions {
            let g = match self.actions.get(label) {
                Some(g) => g,
                None => {
                    actions.insert(label.clone(), f.clone());
                    continue;
                }
            };
            let sigma = f.sigma.iter().map(|&p| g.sigma[p]).collect();
            let shift = f
                .shift
                .iter()
                .zip(&f.sigma)
                .map(|(&m, &p)| m + g.shift[p])
                .collect();
            actions.insert(
                label.clone(),
                PunctureAction {
                    sigma,
                    shift,
                    degree: f.degree + g.degree,
                },
            );
        }
        for (label, g) in &self.actions {
            actions.entry(label.clone()).or_insert_with(|| g.clone());
        }

        let mut domain = inner.domain.clone();
        for con in &self.domain {
            match inner.actions.get(&con.puncture) {
                Some(f) => {
                    // θ'_p − θ'_q ≠ cλ with θ'_{σ(a)} = θ_a + m_a λ.
                    let a = f.sigma.iter().position(|&p| p == con.i).unwrap();
                    let b = f.sigma.iter().position(|&p| p == con.j).unwrap();
                    let c = con.c - f.shift[a] + f.shift[b];
                    domain.insert(DomainConstraint::canonical(&con.puncture, a, b, c));
                }
                None => {
                    domain.insert(con.clone());
                }
            }
        }
        NormalForm {
            rank: self.rank,
            actions,
            domain,
        }
    }

    pub fn inverse(&self) -> NormalForm {
        let mut actions = BTreeMap::new();
        for (label, a) in &self.actions {
            let r = a.sigma.len();
            let mut sigma = vec![0; r];
            let mut shift = vec![0; r];
            for i in 0..r {
                sigma[a.sigma[i]] = i;
                shift[a.sigma[i]] = -a.shift[i];
            }
            actions.insert(
                label.clone(),
                PunctureAction {
                    sigma,
                    shift,
                    degree: -a.degree,
                },
            );
        }
        // The inverse is defined on the image of the domain.
        let domain = self
            .domain
            .iter()
            .map(|con| {
                let a = &self.actions[&con.puncture];
                let p = a.sigma[con.i];
                let q = a.sigma[con.j];
                let c = con.c + a.shift[con.i] - a.shift[con.j];
                DomainConstraint::canonical(&con.puncture, p, q, c)
            })
            .collect();
        NormalForm {
            rank: self.rank,
            actions,
            domain,
        }
    }

    /// Largest-violation check of the domain at `s`; returns the first
    /// violated constraint.
    pub fn domain_violation(&self, s: &ResidueShadow, eps: f64) -> Option<&DomainConstraint> {
        self.domain
            .iter()
            .find(|c| c.gap(s).map(|g| g <= eps).unwrap_or(false))
    }

    /// Evaluates the affine action (no domain check).
    pub fn apply(&self, s: &ResidueShadow) -> Result<ResidueShadow, HeckeError> {
        let mut out = s.clone();
        for (label, a) in &self.actions {
            let idx = s
                .index_of(label)
                .ok_or_else(|| HeckeError::UnknownPuncture(label.clone()))?;
            let src = &s.theta[idx];
            if src.len() != a.sigma.len() {
                return Err(HeckeError::RankMismatch {
                    puncture: label.clone(),
                    expected: a.sigma.len(),
                    found: src.len(),
                });
            }
            let dst = &mut out.theta[idx];
            for i in 0..src.len() {
                dst[a.sigma[i]] = src[i] + s.lambda * a.shift[i] as f64;
            }
            out.degree_offset += a.degree;
        }
        Ok(out)
    }

    /// JSON with 1-based `sigma` and domain indices:
    /// `{puncture: {"sigma": [..], "m": [..]}, "degree": d, "domain": [[t,i,j,c], ...]}`.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (label, a) in &self.actions {
            let sigma: Vec<usize> = a.sigma.iter().map(|p| p + 1).collect();
            map.insert(label.clone(), json!({"sigma": sigma, "m": a.shift}));
        }
        map.insert("degree".into(), json!(self.total_degree()));
        let domain: Vec<Value> = self
            .domain
            .iter()
            .map(|c| json!([c.puncture, c.i + 1, c.j + 1, c.c]))
            .collect();
        map.insert("domain".into(), Value::Array(domain));
        Value::Object(map)
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// Composes a word symbolically into its normal form over the given punctures.
pub fn normal_form(
    w: &GroupoidWord,
    rank: usize,
    labels: &[String],
) -> Result<NormalForm, HeckeError> {
    let mut trackers: BTreeMap<&str, Tracker> = labels
        .iter()
        .map(|l| {
            (
                l.as_str(),
                Tracker {
                    slot_at: (0..rank).collect(),
                    shift: vec![0; rank],
                    degree: 0,
                },
            )
        })
        .collect();
    let mut domain = BTreeSet::new();

    for (_, f) in w.applied() {
        let label = f.gen.puncture.as_str();
        let tr = trackers
            .get_mut(label)
            .ok_or_else(|| HeckeError::UnknownPuncture(label.to_string()))?;
        match (f.gen.kind, f.inverse) {
            (GeneratorKind::Hecke, false) => {
                if rank > 0 {
                    tr.slot_at.rotate_right(1);
                    tr.shift[tr.slot_at[0]] += 1;
                }
                tr.degree -= 1;
            }
            (GeneratorKind::Hecke, true) => {
                if rank > 0 {
                    tr.shift[tr.slot_at[0]] -= 1;
                    tr.slot_at.rotate_left(1);
                }
                tr.degree += 1;
            }
            (GeneratorKind::Twist, inv) => {
                let d = if inv { 1 } else { -1 };
                for m in tr.shift.iter_mut() {
                    *m += d;
                }
                tr.degree -= d * rank as i64;
            }
            (GeneratorKind::Transpose(i), _) => {
                if i == 0 || i >= rank {
                    return Err(HeckeError::IndexOutOfRange {
                        puncture: label.to_string(),
                        index: i,
                        rank,
                    });
                }
                let a = tr.slot_at[i - 1];
                let b = tr.slot_at[i];
                // θ_a + m_a λ ≠ θ_b + m_b λ
                let c = tr.shift[b] - tr.shift[a];
                domain.insert(DomainConstraint::canonical(label, a, b, c));
                tr.slot_at.swap(i - 1, i);
            }
        }
    }

    let actions = trackers
        .into_iter()
        .map(|(label, tr)| {
            let mut sigma = vec![0; rank];
            for (pos, &slot) in tr.slot_at.iter().enumerate() {
                sigma[slot] = pos;
            }
            (
                label.to_string(),
                PunctureAction {
                    sigma,
                    shift: tr.shift,
                    degree: tr.degree,
                },
            )
        })
        .collect();
    Ok(NormalForm {
        rank,
        actions,
        domain,
    })
}

/// Word adding `+λ` (`up`) or `−λ` to the entry at 0-based position `pos`
/// without moving anything, listed in application order.
pub fn shift_gadget(label: &str, pos: usize, rank: usize, up: bool) -> Vec<Factor> {
    let mut out = Vec::new();
    if up {
        // Carry the entry to the end, rotate it to the front with +λ, carry it back.
        for i in pos + 1..rank {
            out.push(Factor::new(Generator::t(label, i)));
        }
        out.push(Factor::new(Generator::h(label)));
        for i in 1..=pos {
            out.push(Factor::new(Generator::t(label, i)));
        }
    } else {
        for i in (1..=pos).rev() {
            out.push(Factor::new(Generator::t(label, i)));
        }
        out.push(Factor::inv(Generator::h(label)));
        for i in (pos + 1..rank).rev() {
            out.push(Factor::new(Generator::t(label, i)));
        }
    }
    out
}

/// Word (application order) realizing the permutation `sigma` at one
/// puncture by left-to-right bubble sort.
pub fn permutation_word(label: &str, sigma: &[usize]) -> Vec<Factor> {
    let mut slot_at: Vec<usize> = (0..sigma.len()).collect();
    let mut out = Vec::new();
    let n = sigma.len();
    for pass in 0..n {
        let mut swapped = false;
        for p in 0..n.saturating_sub(1 + pass) {
            if sigma[slot_at[p]] > sigma[slot_at[p + 1]] {
                slot_at.swap(p, p + 1);
                out.push(Factor::new(Generator::t(label, p + 1)));
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    out
}

/// Word (application order) realizing per-slot shifts `m` followed by the
/// permutation `sigma` at one puncture. A common shift is taken by `U`.
pub fn realize_action(label: &str, action: &PunctureAction) -> Vec<Factor> {
    let rank = action.sigma.len();
    let g = common_shift(&action.shift);
    let mut out = Vec::new();
    // U shifts everything by −λ.
    let twist = if g > 0 {
        Factor::inv(Generator::u(label))
    } else {
        Factor::new(Generator::u(label))
    };
    for _ in 0..g.unsigned_abs() {
        out.push(twist.clone());
    }
    for (pos, &m) in action.shift.iter().enumerate() {
        let k = m - g;
        for _ in 0..k.unsigned_abs() {
            out.extend(shift_gadget(label, pos, rank, k > 0));
        }
    }
    out.extend(permutation_word(label, &action.sigma));
    out
}

/// Most frequent value, ties broken toward smaller magnitude then smaller value.
fn common_shift(ks: &[i64]) -> i64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &k in ks {
        *counts.entry(k).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| {
            a.1.cmp(&b.1)
                .then_with(|| b.0.abs().cmp(&a.0.abs()))
                .then_with(|| b.0.cmp(&a.0))
        })
        .map(|(k, _)| k)
        .unwrap_or(0)
}

/// Moves every `Re(θ/λ)` into the window `(−1, 0]` using groupoid moves.
///
/// Returns the word (written order) and the normalized shadow.
pub fn deligne_normalize(
    s: &ResidueShadow,
    eps: f64,
) -> Result<(GroupoidWord, ResidueShadow), HeckeError> {
    if s.lambda.norm() == 0.0 {
        return Err(HeckeError::LambdaZero);
    }
    const MAX_ROUNDS: usize = 4;
    let rank = s.rank();
    let mut applied: Vec<Factor> = Vec::new();
    let mut cur = s.clone();
    for _ in 0..MAX_ROUNDS {
        let mut done = true;
        for (idx, label) in s.labels.iter().enumerate() {
            let ks: Vec<i64> = cur.theta[idx]
                .iter()
                .map(|t| window_shift((t / cur.lambda).re))
                .collect();
            if ks.iter().all(|&k| k == 0) {
                continue;
            }
            done = false;
            let action = PunctureAction {
                sigma: (0..rank).collect(),
                shift: ks,
                degree: 0,
            };
            for f in realize_action(label, &action) {
                let written_index = applied.len();
                act(&f, &mut cur, eps, written_index)?;
                applied.push(f);
            }
        }
        if done {
            // Written-order indices in errors above count in application order;
            // callers only see successful words here.
            return Ok((GroupoidWord::from_application_order(applied), cur));
        }
    }
    Err(HeckeError::NotNormalizable(MAX_ROUNDS))
}

/// Integer `k` with `x + k ∈ (−1, 0]`.
fn window_shift(x: f64) -> i64 {
    let mut k = -(x.ceil()) as i64;
    // Guard against rounding at the window edges.
    while x + (k as f64) > 0.0 {
        k -= 1;
    }
    while x + (k as f64) <= -1.0 {
        k += 1;
    }
    k
}

/// One orbit element with a word reaching it.
#[derive(Debug, Clone)]
pub struct OrbitEntry {
    pub shadow: ResidueShadow,
    pub word: GroupoidWord,
    pub witness: NormalForm,
}

/// All generators and inverses, in a fixed order.
pub fn all_factors(labels: &[String], rank: usize) -> Vec<Factor> {
    let mut out = Vec::new();
    for l in labels {
        out.push(Factor::new(Generator::h(l)));
        out.push(Factor::inv(Generator::h(l)));
        out.push(Factor::new(Generator::u(l)));
        out.push(Factor::inv(Generator::u(l)));
        for i in 1..rank {
            out.push(Factor::new(Generator::t(l, i)));
        }
    }
    out
}

/// Breadth-first orbit of `s` under in-domain generator applications, up to
/// `max_word_length` letters, deduplicated within `eps`. Deterministic.
pub fn orbit(s: &ResidueShadow, max_word_length: usize, eps: f64) -> Vec<OrbitEntry> {
    let rank = s.rank();
    let gens = all_factors(&s.labels, rank);
    let gen_nf: Vec<NormalForm> = gens
        .iter()
        .map(|f| {
            normal_form(
                &GroupoidWord::from_factors(vec![f.clone()]),
                rank,
                &s.labels,
            )
            .unwrap()
        })
        .collect();
    let mut found = vec![OrbitEntry {
        shadow: s.clone(),
        word: GroupoidWord::empty(),
        witness: NormalForm::identity(rank, &s.labels),
    }];
    let mut frontier = vec![0usize];
    for _ in 0..max_word_length {
        let mut next = Vec::new();
        for &parent in &frontier {
            for (f, nf) in gens.iter().zip(&gen_nf) {
                let Ok(child) = apply_generator(f, &found[parent].shadow, eps) else {
                    continue;
                };
                if found.iter().any(|e| e.shadow.approx_eq(&child, eps)) {
                    continue;
                }
                let word = GroupoidWord::from_factors(vec![f.clone()]).after(&found[parent].word);
                let witness = nf.compose(&found[parent].witness);
                found.push(OrbitEntry {
                    shadow: child,
                    word,
                    witness,
                });
                next.push(found.len() - 1);
            }
        }
        frontier = next;
    }
    found
}
