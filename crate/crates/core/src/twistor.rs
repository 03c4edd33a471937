//! Weight bookkeeping for the truncated completion algebras.
//!
//! Coordinates come in three kinds: `n0` of weight 0, `n1` of weight −1 and
//! `n2` of weight −2. A monomial `x^P y^Q z^R` has degree `|P|+|Q|+|R|` and
//! lies in weight `−(|Q| + 2|R|)`. All counts are exact integers.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwistorError {
    #[error("weight profile must have at least one coordinate")]
    EmptyProfile,
    #[error("weight key {0} is negative")]
    NegativeWeight(i64),
    #[error("count overflow")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WeightProfile {
    pub n0: u32,
    pub n1: u32,
    pub n2: u32,
}

impl WeightProfile {
    pub fn new(n0: u32, n1: u32, n2: u32) -> Result<Self, TwistorError> {
        if n0 == 0 && n1 == 0 && n2 == 0 {
            return Err(TwistorError::EmptyProfile);
        }
        Ok(Self { n0, n1, n2 })
    }

    pub fn variables(&self) -> u32 {
        self.n0 + self.n1 + self.n2
    }

    /// Weight (as a nonnegative `k`, meaning weight `−k`) of each coordinate.
    fn coordinate_weights(&self) -> Vec<u32> {
        let mut w = vec![0; self.n0 as usize];
        w.extend(std::iter::repeat_n(1, self.n1 as usize));
        w.extend(std::iter::repeat_n(2, self.n2 as usize));
        w
    }
}

/// Suggested profile for rank `r` with `k` punctures: `n0 = r²`, `n2 = r·k`
/// and a caller-supplied `n1`. These are heuristics, not derived values.
pub fn default_profile(rank: u32, punctures: u32, n1: u32) -> (WeightProfile, &'static str) {
    (
        WeightProfile {
            n0: rank * rank,
            n1,
            n2: rank * punctures,
        },
        "n0 = r^2 and n2 = r*k are default hints, not derived dimensions",
    )
}

/// `k ↦ dim gr^W_{−k}` of the degree-`d` piece.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightTable {
    pub degree: u32,
    pub entries: BTreeMap<u32, u128>,
}

impl WeightTable {
    pub fn total(&self) -> u128 {
        self.entries.values().sum()
    }

    pub fn get(&self, k: u32) -> u128 {
        self.entries.get(&k).copied().unwrap_or(0)
    }
}

/// Monomials of degree `k` in `n` variables, `C(n + k − 1, k)`.
pub fn multichoose(n: u32, k: u32) -> u128 {
    if k == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    binomial(n as u128 + k as u128 - 1, k as u128)
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Counts monomials of degree `d` by weight, splitting `d = p + q + r` and
/// weighing `k = q + 2r`.
pub fn weight_table(profile: &WeightProfile, d: u32) -> WeightTable {
    let mut entries = BTreeMap::new();
    for r in 0..=d {
        for q in 0..=(d - r) {
            let p = d - r - q;
            let count = multichoose(profile.n0, p)
                * multichoose(profile.n1, q)
                * multichoose(profile.n2, r);
            if count > 0 {
                *entries.entry(q + 2 * r).or_insert(0) += count;
            }
        }
    }
    WeightTable { degree: d, entries }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymReport {
    pub profile: WeightProfile,
    pub degree: u32,
    pub table: WeightTable,
    pub symmetric_power: BTreeMap<u32, u128>,
    pub pass: bool,
}

/// Weights of `Sym^d` of the graded space with `n0, n1, n2` basis vectors at
/// weights `0, −1, −2`, by enumerating multisets of basis vectors.
pub fn symmetric_power_weights(profile: &WeightProfile, d: u32) -> BTreeMap<u32, u128> {
    let weights = profile.coordinate_weights();
    let mut out = BTreeMap::new();
    fn walk(weights: &[u32], start: usize, left: u32, acc: u32, out: &mut BTreeMap<u32, u128>) {
        if left == 0 {
            *out.entry(acc).or_insert(0) += 1;
            return;
        }
        for i in start..weights.len() {
            walk(weights, i, left - 1, acc + weights[i], out);
        }
    }
    walk(&weights, 0, d, 0, &mut out);
    out
}

pub fn sym_check(profile: &WeightProfile, d: u32) -> SymReport {
    let table = weight_table(profile, d);
    let symmetric_power = symmetric_power_weights(profile, d);
    let pass = table.entries == symmetric_power;
    SymReport {
        profile: *profile,
        degree: d,
        table,
        symmetric_power,
        pass,
    }
}

/// `Σ (k + 1)·n_k`, the global sections of `⊕ 𝒪(k)^{n_k}`.
pub fn twistor_h0(weights: &BTreeMap<i64, u64>) -> Result<u128, TwistorError> {
    let mut total: u128 = 0;
    for (&k, &n) in weights {
        if k < 0 {
            return Err(TwistorError::NegativeWeight(k));
        }
        let term = (k as u128 + 1)
            .checked_mul(n as u128)
            .ok_or(TwistorError::Overflow)?;
        total = total.checked_add(term).ok_or(TwistorError::Overflow)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductReport {
    pub pairs_checked: u64,
    pub truncated: u64,
    pub failures: u64,
    pub pass: bool,
}

fn monomials_up_to(vars: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; vars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, max_degree, &mut cur, &mut out);
    out
}

/// Checks `weight(m1·m2) = weight(m1) + weight(m2)` for all monomial pairs of
/// degree at most `n`, and that truncation at degree `n` only drops products.
pub fn filtration_product_check(profile: &WeightProfile, n: u32) -> ProductReport {
    let weights = profile.coordinate_weights();
    let weight = |m: &[u32]| -> i64 {
        -(m.iter()
            .zip(&weights)
            .map(|(e, w)| (e * w) as i64)
            .sum::<i64>())
    };
    let degree = |m: &[u32]| -> u32 { m.iter().sum() };
    let monos = monomials_up_to(weights.len(), n);
    let mut report = ProductReport {
        pairs_checked: 0,
        truncated: 0,
        failures: 0,
        pass: true,
    };
    for a in &monos {
        for b in &monos {
            report.pairs_checked += 1;
            let prod: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            if weight(&prod) != weight(a) + weight(b) {
                report.failures += 1;
            }
            if degree(&prod) > n {
                report.truncated += 1;
            }
        }
    }
    report.pass = report.failures == 0;
    report
}
