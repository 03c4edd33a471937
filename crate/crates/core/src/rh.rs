//! From residual eigenvalues to Betti data: level choices, real jumps and
//! local monodromy, plus the comparison with the conjugate-curve chart.
//!
//! Monodromy eigenvalues are `exp(−2πi·θ/λ)`, the exponential of the residue
//! of the rescaled connection `λ⁻¹∇`. Real jumps are `b_j + Re(θ_j/λ)`.
//!
//! The conjugate chart uses `μ = 1/λ` on the conjugate curve. A flat section
//! of the λ-connection on the curve is also flat for the μ-connection on the
//! conjugate curve; its growth is unchanged and its loop runs the other way.
//! On residues this is `θ ↦ −θ/λ²` (so `θ/λ ↦ −θ/λ`), and on KMS data it is
//! `(a, α) ↦ (−a, −ᾱ)`.

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::hecke::ResidueShadow;
use crate::kms::{flow, KmsPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RhError {
    #[error("λ = 0 is not allowed here")]
    LambdaZero,
    #[error("no level choice separates slots {i} and {j} at puncture {puncture} for radius {radius}", i = i + 1, j = j + 1)]
    InfeasibleBall {
        puncture: usize,
        i: usize,
        j: usize,
        radius: f64,
    },
    #[error("negative ball radius {0}")]
    NegativeRadius(f64),
    #[error("level choice does not match the shadow's shape")]
    LengthMismatch,
    #[error("invalid level choice: {0}")]
    InvalidLevels(String),
}

/// Per puncture, strictly increasing levels in `(−1, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelChoice {
    levels: Vec<Vec<f64>>,
}

impl LevelChoice {
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self, RhError> {
        for (t, b) in levels.iter().enumerate() {
            if b.iter().any(|&x| !(x > -1.0 && x <= 0.0)) {
                return Err(RhError::InvalidLevels(format!(
                    "puncture {t}: outside (-1, 0]"
                )));
            }
            if b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(RhError::InvalidLevels(format!(
                    "puncture {t}: not increasing"
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// The evenly spaced default `b_j = (j − r − 1)/(2r)`, 1-based `j`.
    pub fn default_for(rank: usize, punctures: usize) -> Self {
        Self {
            levels: vec![default_levels(rank); punctures],
        }
    }
}

fn default_levels(rank: usize) -> Vec<f64> {
    let r = rank as f64;
    (1..=rank)
        .map(|j| (j as f64 - r - 1.0) / (2.0 * r))
        .collect()
}

/// Minimum gap demanded between jumps on top of the ball diameter.
const SEPARATION: f64 = 1e-9;
const SEARCH_BUDGET: usize = 200_000;

/// Finds levels keeping `b_j + Re(η_j)` pairwise distinct for every `η`
/// within `ball_radius` of `thetas` in the sup norm on real parts.
///
/// Candidates lie on the grid `−m/(8r²)`, tried in order of distance from
/// the default levels; the search is depth first and deterministic.
pub fn choose_levels(thetas: &[Vec<Complex64>], ball_radius: f64) -> Result<LevelChoice, RhError> {
    if ball_radius.is_nan() || ball_radius < 0.0 {
        return Err(RhError::NegativeRadius(ball_radius));
    }
    let mut levels = Vec::with_capacity(thetas.len());
    for (t, theta) in thetas.iter().enumerate() {
        let re: Vec<f64> = theta.iter().map(|z| z.re).collect();
        levels.push(choose_for_puncture(&re, ball_radius).map_err(|(i, j)| {
            RhError::InfeasibleBall {
                puncture: t,
                i,
                j,
                radius: ball_radius,
            }
        })?);
    }
    Ok(LevelChoice { levels })
}

fn choose_for_puncture(re: &[f64], radius: f64) -> Result<Vec<f64>, (usize, usize)> {
    let r = re.len();
    if r == 0 {
        return Ok(Vec::new());
    }
    let steps = 8 * r * r;
    let h = 1.0 / steps as f64;
    let grid: Vec<f64> = (0..steps).map(|m| -(m as f64) * h).collect();
    let start = default_levels(r);
    let orders: Vec<Vec<usize>> = start
        .iter()
        .map(|&s| {
            let mut idx: Vec<usize> = (0..steps).collect();
            idx.sort_by(|&x, &y| {
                (grid[x] - s)
                    .abs()
                    .total_cmp(&(grid[y] - s).abs())
                    .then(x.cmp(&y))
            });
            idx
        })
        .collect();
    let need = 2.0 * radius + SEPARATION;

    struct Search<'a> {
        re: &'a [f64],
        grid: &'a [f64],
        orders: &'a [Vec<usize>],
        need: f64,
        chosen: Vec<f64>,
        budget: usize,
        blocking: (usize, usize),
    }

    impl Search<'_> {
        fn go(&mut self, j: usize) -> bool {
            if j == self.re.len() {
                return true;
            }
            for &m in &self.orders[j] {
                if self.budget == 0 {
                    return false;
                }
                self.budget -= 1;
                let b = self.grid[m];
                if j > 0 && b <= self.chosen[j - 1] {
                    continue;
                }
                let jump = b + self.re[j];
                let clash =
                    (0..j).find(|&i| (self.chosen[i] + self.re[i] - jump).abs() <= self.need);
                if let Some(i) = clash {
                    self.blocking = (i, j);
                    continue;
                }
                self.chosen.push(b);
                if self.go(j + 1) {
                    return true;
                }
                self.chosen.pop();
            }
            false
        }
    }

    let mut search = Search {
        re,
        grid: &grid,
        orders: &orders,
        need,
        chosen: Vec::with_capacity(r),
        budget: SEARCH_BUDGET,
        blocking: (0, 1.min(r - 1)),
    };
    if search.go(0) {
        Ok(search.chosen)
    } else {
        Err(search.blocking)
    }
}

/// `b_j + Re(θ_j)` per slot.
pub fn real_jumps(b: &LevelChoice, thetas: &[Vec<Complex64>]) -> Result<Vec<Vec<f64>>, RhError> {
    jumps_raw(&b.levels, thetas)
}

fn jumps_raw(levels: &[Vec<f64>], thetas: &[Vec<Complex64>]) -> Result<Vec<Vec<f64>>, RhError> {
    if levels.len() != thetas.len() || levels.iter().zip(thetas).any(|(b, t)| b.len() != t.len()) {
        return Err(RhError::LengthMismatch);
    }
    Ok(levels
        .iter()
        .zip(thetas)
        .map(|(b, t)| b.iter().zip(t).map(|(b, z)| b + z.re).collect())
        .collect())
}

pub fn monodromy_shadow(theta: Complex64, lambda: Complex64) -> Result<Complex64, RhError> {
    if lambda.norm() == 0.0 {
        return Err(RhError::LambdaZero);
    }
    Ok((Complex64::new(0.0, -2.0 * std::f64::consts::PI) * theta / lambda).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BettiPair {
    pub mu: Complex64,
    pub jump: f64,
}

/// Monodromy eigenvalues with filtration jumps, sorted by jump, per puncture.
#[derive(Debug, Clone, PartialEq)]
pub struct BettiShadow {
    pub labels: Vec<String>,
    pub pairs: Vec<Vec<BettiPair>>,
}

impl BettiShadow {
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (label, pairs) in self.labels.iter().zip(&self.pairs) {
            let list: Vec<Value> = pairs
                .iter()
                .map(|p| json!({"mu": [p.mu.re, p.mu.im], "jump": p.jump}))
                .collect();
            map.insert(label.clone(), Value::Array(list));
        }
        Value::Object(map)
    }

    pub fn monodromies(&self, puncture: usize) -> Vec<Complex64> {
        self.pairs[puncture].iter().map(|p| p.mu).collect()
    }
}

/// Residues of `λ⁻¹∇`, i.e. `θ/λ`, per puncture.
pub fn rescaled_residues(s: &ResidueShadow) -> Result<Vec<Vec<Complex64>>, RhError> {
    if s.lambda.norm() == 0.0 {
        return Err(RhError::LambdaZero);
    }
    Ok(s.theta
        .iter()
        .map(|t| t.iter().map(|z| z / s.lambda).collect())
        .collect())
}

/// Betti shadow of a residual shadow; `b` must separate the jumps of `θ/λ`.
pub fn betti_shadow(s: &ResidueShadow, b: &LevelChoice) -> Result<BettiShadow, RhError> {
    betti_shadow_with_levels(s, &b.levels)
}

/// As [`betti_shadow`] with arbitrary real levels, e.g. transported ones.
pub fn betti_shadow_with_levels(
    s: &ResidueShadow,
    levels: &[Vec<f64>],
) -> Result<BettiShadow, RhError> {
    let rescaled = rescaled_residues(s)?;
    let jumps = jumps_raw(levels, &rescaled)?;
    let mut pairs = Vec::with_capacity(s.theta.len());
    for (theta, jumps) in s.theta.iter().zip(jumps) {
        let mut list = theta
            .iter()
            .zip(jumps)
            .map(|(&z, jump)| {
                Ok(BettiPair {
                    mu: monodromy_shadow(z, s.lambda)?,
                    jump,
                })
            })
            .collect::<Result<Vec<_>, RhError>>()?;
        list.sort_by(|x, y| x.jump.total_cmp(&y.jump));
        pairs.push(list);
    }
    Ok(BettiShadow {
        labels: s.labels.clone(),
        pairs,
    })
}

/// The shadow at `μ = 1/λ` in the conjugate-curve chart.
pub fn conjugate_shadow(s: &ResidueShadow) -> Result<ResidueShadow, RhError> {
    if s.lambda.norm() == 0.0 {
        return Err(RhError::LambdaZero);
    }
    let l2 = s.lambda * s.lambda;
    Ok(ResidueShadow {
        lambda: s.lambda.inv(),
        labels: s.labels.clone(),
        theta: s
            .theta
            .iter()
            .map(|t| t.iter().map(|z| -z / l2).collect())
            .collect(),
        degree_offset: s.degree_offset,
    })
}

/// KMS data of the same harmonic bundle viewed on the conjugate curve.
pub fn conjugate_kms(x: KmsPoint) -> KmsPoint {
    KmsPoint::new(-x.a, -x.alpha.conj())
}

/// Levels on the conjugate side matching `levels` on the original side:
/// `b'_j = b_j + 2 Re(θ_j/λ)`.
pub fn transported_levels(
    s: &ResidueShadow,
    levels: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, RhError> {
    let rescaled = rescaled_residues(s)?;
    if levels.len() != rescaled.len() {
        return Err(RhError::LengthMismatch);
    }
    Ok(levels
        .iter()
        .zip(&rescaled)
        .map(|(b, t)| b.iter().zip(t).map(|(b, z)| b + 2.0 * z.re).collect())
        .collect())
}

/// Residual shadow at λ for the flowed points (no lattice shifts).
pub fn flowed_shadow(
    labels: &[String],
    points: &[Vec<KmsPoint>],
    lambda: Complex64,
) -> ResidueShadow {
    ResidueShadow {
        lambda,
        labels: labels.to_vec(),
        theta: points
            .iter()
            .map(|pts| pts.iter().map(|&x| flow(x, lambda).e).collect())
            .collect(),
        degree_offset: 0,
    }
}

/// Whether two lists agree as multisets within `eps` (greedy matching).
pub fn multiset_eq(a: &[Complex64], b: &[Complex64], eps: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let hit = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|(_, p), (_, q)| (*p - x).norm().total_cmp(&(*q - x).norm()));
        match hit {
            Some((i, y)) if (y - x).norm() <= eps => {
                used[i] = true;
                true
            }
            _ => false,
        }
    })
}
