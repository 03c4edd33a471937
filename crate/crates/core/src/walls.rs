//! Walls in the λ-plane.
//!
//! Two KMS points `x, y` at one puncture have flowed eigenvalues congruent
//! modulo `λℤ` exactly when
//!
//! ```text
//! f(λ) = (e_λ(x) − e_λ(y)) / λ = A/λ + B + Cλ  ∈ ℤ,
//! A = α_x − α_y,   B = −(a_x − a_y),   C = conj(α_x) − conj(α_y).
//! ```
//!
//! For each integer `n` the equation `f(λ) = n` is the quadratic
//! `Cλ² + (B − n)λ + A = 0`, and only finitely many `n` can have roots in an
//! annulus. Level walls, where `p_λ(x) − p_λ(y)` is an integer, are straight
//! lines in the λ-plane.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::kms::{flow, HarmonicShadow, KmsPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WallError {
    #[error("invalid region: need 0 < r_min <= r_max, got {r_min}..{r_max}")]
    BadRegion { r_min: f64, r_max: f64 },
    #[error("slots {i} and {j} at `{puncture}` collide for every λ", i = i + 1, j = j + 1)]
    DegenerateFamily {
        puncture: String,
        i: usize,
        j: usize,
    },
    #[error("root {lambda} for n = {n} fails verification (residual {residual:e})")]
    RootVerification {
        lambda: Complex64,
        n: i64,
        residual: f64,
    },
    #[error("cover needs a disc of radius {radius:e} near {center}, below the limit {limit:e}")]
    CoverFailure {
        center: Complex64,
        radius: f64,
        limit: f64,
    },
}

/// Closed annulus `r_min ≤ |λ| ≤ r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub r_min: f64,
    pub r_max: f64,
}

impl Region {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self, WallError> {
        if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
            return Err(WallError::BadRegion { r_min, r_max });
        }
        Ok(Self { r_min, r_max })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r >= self.r_min && r <= self.r_max
    }
}

/// `f(λ) = A/λ + B + Cλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub a: Complex64,
    pub b: f64,
    pub c: Complex64,
}

impl Collision {
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        self.a / lambda + self.b + self.c * lambda
    }

    /// Roots of `f(λ) = n` other than `λ = 0`, at most two.
    pub fn solve(&self, n: i64) -> Vec<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        let lin = Complex64::new(self.b - n as f64, 0.0);
        let (a, c) = (self.a, self.c);
        if c == zero {
            if lin == zero {
                return Vec::new();
            }
            return if a == zero {
                Vec::new()
            } else {
                vec![-a / lin]
            };
        }
        if a == zero {
            // λ (Cλ + lin) = 0; drop λ = 0.
            return if lin == zero {
                Vec::new()
            } else {
                vec![-lin / c]
            };
        }
        let disc = (lin * lin - 4.0 * a * c).sqrt();
        let plus = lin + disc;
        let minus = lin - disc;
        let big = if plus.norm() >= minus.norm() {
            plus
        } else {
            minus
        };
        let q = -0.5 * big;
        if q == zero {
            // lin = 0 and disc = 0 cannot both hold with a, c ≠ 0.
            return Vec::new();
        }
        vec![q / c, a / q]
    }
}

pub fn collision_function(x: KmsPoint, y: KmsPoint) -> Collision {
    Collision {
        a: x.alpha - y.alpha,
        b: -(x.a - y.a),
        c: x.alpha.conj() - y.alpha.conj(),
    }
}

/// Puncture, slot pair `i < j` (0-based) and the integer value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Witness {
    pub puncture: String,
    pub i: usize,
    pub j: usize,
    pub n: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPoint {
    pub lambda: Complex64,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallCurve {
    pub id: usize,
    pub puncture: String,
    pub i: usize,
    pub j: usize,
    pub m: i64,
    pub points: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WallSet {
    pub delta_points: Vec<DeltaPoint>,
    pub level_walls: Vec<WallCurve>,
}

fn for_each_pair<F: FnMut(&str, usize, usize, KmsPoint, KmsPoint) -> Result<(), WallError>>(
    shadow: &HarmonicShadow,
    mut f: F,
) -> Result<(), WallError> {
    for p in &shadow.punctures {
        let pts = &p.spectrum.points;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                f(&p.label, i, j, pts[i], pts[j])?;
            }
        }
    }
    Ok(())
}

/// Largest `|n|` for which `f(λ) = n` can have a root in the region.
pub fn n_max(col: &Collision, region: &Region) -> i64 {
    (col.a.norm() / region.r_min + col.b.abs() + col.c.norm() * region.r_max).ceil() as i64
}

fn cmp_delta(x: &DeltaPoint, y: &DeltaPoint) -> Ordering {
    x.lambda
        .norm()
        .total_cmp(&y.lambda.norm())
        .then(x.lambda.arg().total_cmp(&y.lambda.arg()))
        .then_with(|| x.witness.cmp(&y.witness))
}

/// All collision points of the shadow in the region, sorted by
/// `(|λ|, arg λ, witness)`.
pub fn delta_in_region(
    shadow: &HarmonicShadow,
    region: &Region,
    eps_root: f64,
    eps_eq: f64,
) -> Result<Vec<DeltaPoint>, WallError> {
    let mut out: Vec<DeltaPoint> = Vec::new();
    for_each_pair(shadow, |label, i, j, x, y| {
        let col = collision_function(x, y);
        if col.a.norm() <= eps_eq && col.c.norm() <= eps_eq {
            if (col.b - col.b.round()).abs() <= eps_eq {
                return Err(WallError::DegenerateFamily {
                    puncture: label.to_string(),
                    i,
                    j,
                });
            }
            return Ok(());
        }
        let nm = n_max(&col, region);
        for n in -nm..=nm {
            let mut found: Vec<Complex64> = Vec::new();
            for mut root in col.solve(n) {
                if !region.contains(root) {
                    continue;
                }
                let mut residual = (col.eval(root) - n as f64).norm();
                if residual > eps_root {
                    root = polish(&col, n, root);
                    residual = (col.eval(root) - n as f64).norm();
                }
                if residual > eps_root {
                    return Err(WallError::RootVerification {
                        lambda: root,
                        n,
                        residual,
                    });
                }
                if found.iter().any(|r| (r - root).norm() <= 1e3 * eps_root) {
                    continue;
                }
                found.push(root);
                out.push(DeltaPoint {
                    lambda: root,
                    witness: Witness {
                        puncture: label.to_string(),
                        i,
                        j,
                        n,
                    },
                });
            }
        }
        Ok(())
    })?;
    out.sort_by(cmp_delta);
    Ok(out)
}

fn polish(col: &Collision, n: i64, mut z: Complex64) -> Complex64 {
    let lin = Complex64::new(col.b - n as f64, 0.0);
    for _ in 0..3 {
        let g = col.c * z * z + lin * z + col.a;
        let dg = 2.0 * col.c * z + lin;
        if dg.norm() == 0.0 {
            break;
        }
        z -= g / dg;
    }
    z
}

/// Sampled level walls `p_λ(x) − p_λ(y) = m` inside the region.
///
/// The grid has `samples` points per side over `[−r_max, r_max]²`; crossings
/// are located on grid edges, ordered along the line and split where the
/// line leaves the region.
pub fn level_walls(shadow: &HarmonicShadow, region: &Region, samples: usize) -> Vec<WallCurve> {
    let samples = samples.max(2);
    let mut curves = Vec::new();
    let _ = for_each_pair(shadow, |label, i, j, x, y| {
        let da = x.a - y.a;
        let delta = x.alpha - y.alpha;
        if delta.norm() == 0.0 {
            return Ok(());
        }
        let bound = (da.abs() + 2.0 * delta.norm() * region.r_max).ceil() as i64;
        for m in -bound..=bound {
            let pts = sample_line(da, delta, m as f64, region, samples);
            for poly in split_polyline(pts, region, samples) {
                curves.push(WallCurve {
                    id: curves.len(),
                    puncture: label.to_string(),
                    i,
                    j,
                    m,
                    points: poly,
                });
            }
        }
        Ok(())
    });
    curves
}

/// Zeros of `da + 2 Re(λ·conj δ) − m` on the edges of the sample grid.
fn sample_line(
    da: f64,
    delta: Complex64,
    m: f64,
    region: &Region,
    samples: usize,
) -> Vec<Complex64> {
    let g = |z: Complex64| da + 2.0 * (z * delta.conj()).re - m;
    let step = 2.0 * region.r_max / (samples - 1) as f64;
    let coord = |k: usize| -region.r_max + k as f64 * step;
    let mut pts = Vec::new();
    let mut edge = |p: Complex64, q: Complex64| {
        let (gp, gq) = (g(p), g(q));
        if gp == 0.0 {
            pts.push(p);
        } else if gp * gq < 0.0 {
            let t = gp / (gp - gq);
            pts.push(p + (q - p) * t);
        }
    };
    for a in 0..samples {
        for b in 0..samples {
            let p = Complex64::new(coord(a), coord(b));
            if a + 1 < samples {
                edge(p, Complex64::new(coord(a + 1), coord(b)));
            }
            if b + 1 < samples {
                edge(p, Complex64::new(coord(a), coord(b + 1)));
            }
        }
    }
    let tangent = Complex64::new(-delta.im, delta.re);
    pts.retain(|z| region.contains(*z));
    pts.sort_by(|p, q| {
        let sp = (p * tangent.conj()).re;
        let sq = (q * tangent.conj()).re;
        sp.total_cmp(&sq)
    });
    pts.dedup_by(|p, q| (*p - *q).norm() < 1e-12);
    pts
}

fn split_polyline(pts: Vec<Complex64>, region: &Region, samples: usize) -> Vec<Vec<Complex64>> {
    let step = 2.0 * region.r_max / (samples - 1) as f64;
    let gap = 2.0 * std::f64::consts::SQRT_2 * step;
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    let mut cur: Vec<Complex64> = Vec::new();
    for z in pts {
        if let Some(&last) = cur.last() {
            if (z - last).norm() > gap || !region.contains((z + last) * 0.5) {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.push(z);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Checks a Δ-point against the flow: `e_λ(x) − e_λ(y) = nλ`.
pub fn flow_gap(x: KmsPoint, y: KmsPoint, d: &DeltaPoint) -> f64 {
    let ex = flow(x, d.lambda).e;
    let ey = flow(y, d.lambda).e;
    (ex - ey - d.lambda * d.witness.n as f64).norm()
}

/// Grid-scan completeness check: local minima of `|f − round f|` below
/// `threshold` on a `res × res` grid over the region, each polished by
/// Newton's method, must lie near a reported Δ-point. Returns the unexplained
/// minima.
pub fn scan_for_missed(
    shadow: &HarmonicShadow,
    region: &Region,
    delta: &[DeltaPoint],
    res: usize,
    threshold: f64,
) -> Vec<Complex64> {
    let res = res.max(3);
    let step = 2.0 * region.r_max / (res - 1) as f64;
    let tol = std::f64::consts::SQRT_2 * step;
    let coord = |k: usize| -region.r_max + k as f64 * step;
    let mut missed = Vec::new();
    let _ = for_each_pair(shadow, |label, i, j, x, y| {
        let col = collision_function(x, y);
        let dist = |z: Complex64| {
            let v = col.eval(z);
            (v - v.re.round()).norm()
        };
        let mut values = vec![f64::INFINITY; res * res];
        for a in 0..res {
            for b in 0..res {
                let z = Complex64::new(coord(a), coord(b));
                if z.norm() > 0.0 {
                    values[a * res + b] = dist(z);
                }
            }
        }
        for a in 1..res - 1 {
            for b in 1..res - 1 {
                let v = values[a * res + b];
                if v >= threshold {
                    continue;
                }
                let z = Complex64::new(coord(a), coord(b));
                if !region.contains(z) {
                    continue;
                }
                let is_min = (-1i64..=1).all(|da| {
                    (-1i64..=1).all(|db| {
                        let n = ((a as i64 + da) as usize) * res + (b as i64 + db) as usize;
                        values[n] >= v
                    })
                });
                if !is_min {
                    continue;
                }
                let n = col.eval(z).re.round() as i64;
                let polished = polish(&col, n, z);
                let explained = delta.iter().any(|d| {
                    d.witness.puncture == label
                        && d.witness.i == i
                        && d.witness.j == j
                        && ((d.lambda - z).norm() <= tol || (d.lambda - polished).norm() <= tol)
                });
                let genuine =
                    (col.eval(polished) - n as f64).norm() <= 1e-8 && region.contains(polished);
                if !explained && genuine {
                    missed.push(polished);
                }
            }
        }
        Ok(())
    });
    missed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscKind {
    /// The neighborhood of λ = 0.
    Origin,
    /// A small disc around a Δ-point (index into the delta list).
    Delta(usize),
    /// A disc avoiding Δ ∪ {0} entirely.
    Regular,
}

/// Open disc `|λ − center| < radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Complex64,
    pub radius: f64,
    pub kind: DiscKind,
}

impl Disc {
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    pub fn overlaps(&self, other: &Disc) -> bool {
        (self.center - other.center).norm() < self.radius + other.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverOptions {
    /// Largest radius of a regular disc; defaults to `r_max / 4`.
    pub max_radius: Option<f64>,
    /// Radius of the origin disc; chosen automatically when `None`.
    pub origin_radius: Option<f64>,
    /// Smallest acceptable disc radius relative to `r_max`.
    pub min_relative_radius: f64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            max_radius: None,
            origin_radius: None,
            min_relative_radius: 1e-6,
        }
    }
}

/// Open cover of the disc `|λ| ≤ r_max` adapted to Δ.
///
/// Δ must hold every collision point with `r_min ≤ |λ| ≤ r_max`; points
/// closer to the origin than `r_min` are unknown and all lie inside the
/// origin disc, which is the only disc reaching into `|λ| < r_min`. Every
/// other disc contains at most its own Δ-center, so pairwise intersections
/// avoid Δ ∪ {0}.
pub fn build_cover(
    region: &Region,
    delta: &[DeltaPoint],
    options: &CoverOptions,
) -> Result<Vec<Disc>, WallError> {
    let hmax = options.max_radius.unwrap_or(region.r_max / 4.0);
    let limit = options.min_relative_radius * region.r_max;
    let mut points: Vec<Complex64> = Vec::new();
    for d in delta {
        if !points.iter().any(|p| (p - d.lambda).norm() == 0.0) {
            points.push(d.lambda);
        }
    }
    let rho0 = options
        .origin_radius
        .unwrap_or_else(|| origin_radius(region, &points))
        .max(region.r_min * (1.0 + 1e-9));

    // Distance to the excluded set for discs other than the origin disc.
    let clearance = |z: Complex64, skip: Option<usize>| -> f64 {
        let mut d = z.norm() - region.r_min;
        for (k, p) in points.iter().enumerate() {
            if Some(k) != skip {
                d = d.min((z - p).norm());
            }
        }
        d
    };

    let mut discs = vec![Disc {
        center: Complex64::new(0.0, 0.0),
        radius: rho0,
        kind: DiscKind::Origin,
    }];
    for (k, &p) in points.iter().enumerate() {
        if p.norm() < rho0 {
            continue;
        }
        let radius = (0.5 * clearance(p, Some(k))).min(hmax);
        if radius < limit {
            return Err(WallError::CoverFailure {
                center: p,
                radius,
                limit,
            });
        }
        let idx = delta.iter().position(|d| d.lambda == p).unwrap();
        discs.push(Disc {
            center: p,
            radius,
            kind: DiscKind::Delta(idx),
        });
    }

    let half0 = hmax / 4.0;
    let cells = (region.r_max / (2.0 * half0)).ceil() as i64;
    let mut stack: Vec<(Complex64, f64)> = Vec::new();
    for a in (-cells..cells).rev() {
        for b in (-cells..cells).rev() {
            let center = Complex64::new(
                (a as f64 + 0.5) * 2.0 * half0,
                (b as f64 + 0.5) * 2.0 * half0,
            );
            stack.push((center, half0));
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    while let Some((z, half)) = stack.pop() {
        let reach = half * sqrt2;
        if z.norm() - reach > region.r_max {
            continue;
        }
        if z.norm() + reach < rho0 * (1.0 - 1e-12) {
            continue;
        }
        if discs
            .iter()
            .any(|d| (z - d.center).norm() + reach < d.radius)
        {
            continue;
        }
        let radius = (0.5 * clearance(z, None)).min(hmax);
        if radius > 2.0 * reach {
            discs.push(Disc {
                center: z,
                radius,
                kind: DiscKind::Regular,
            });
            continue;
        }
        if half < limit {
            return Err(WallError::CoverFailure {
                center: z,
                radius,
                limit,
            });
        }
        let q = half / 2.0;
        for (dx, dy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            stack.push((z + Complex64::new(dx * q, dy * q), q));
        }
    }
    Ok(discs)
}

/// Picks a radius in `[1.5, 3]·r_min` whose circle stays farthest from Δ.
fn origin_radius(region: &Region, points: &[Complex64]) -> f64 {
    let mut best = (f64::NEG_INFINITY, 2.0 * region.r_min);
    for k in 0..=64 {
        let rho = region.r_min * (1.5 + 1.5 * k as f64 / 64.0);
        let gap = points
            .iter()
            .map(|p| (p.norm() - rho).abs())
            .fold(f64::INFINITY, f64::min);
        if gap > best.0 + 1e-15 {
            best = (gap, rho);
        }
    }
    best.1
}

/// A point in the intersection of two overlapping discs, plus a few more
/// along the common chord, all inside both.
pub fn overlap_witnesses(d1: &Disc, d2: &Disc) -> Vec<Complex64> {
    let dist = (d2.center - d1.center).norm();
    if dist >= d1.radius + d2.radius {
        return Vec::new();
    }
    let (inner, outer) = if d1.radius <= d2.radius {
        (d1, d2)
    } else {
        (d2, d1)
    };
    if dist + inner.radius <= outer.radius {
        let c = inner.center;
        let r = inner.radius * 0.5;
        return vec![c, c + r, c - Complex64::new(0.0, r)];
    }
    let u = (d2.center - d1.center) / dist;
    // Midpoint of the lens along the center line.
    let lo = dist - d2.radius;
    let hi = d1.radius;
    let mid_t = 0.5 * (lo.max(-d1.radius) + hi);
    let mid = d1.center + u * mid_t;
    let half_width = 0.5 * (hi - lo.max(-d1.radius));
    let normal = u * Complex64::new(0.0, 1.0);
    let mut out = vec![mid];
    for s in [0.3, -0.3] {
        let p = mid + normal * (s * half_width);
        if d1.contains(p) && d2.contains(p) {
            out.push(p);
        }
    }
    out
}

/// A point in the common intersection of three open discs, if any.
pub fn triple_witness(d: [&Disc; 3]) -> Option<Complex64> {
    let inside_all = |z: Complex64| d.iter().all(|x| x.contains(z));
    let mut candidates: Vec<Complex64> = d.iter().map(|x| x.center).collect();
    for a in 0..3 {
        for b in a + 1..3 {
            for w in overlap_witnesses(d[a], d[b]) {
                candidates.push(w);
            }
            candidates.extend(circle_intersections(d[a], d[b], 1.0 - 1e-9));
        }
    }
    let n = candidates.len();
    // Averages of candidate pairs fill in thin triple lenses.
    for a in 0..n {
        for b in a + 1..n {
            candidates.push((candidates[a] + candidates[b]) * 0.5);
        }
    }
    candidates.into_iter().find(|&z| inside_all(z))
}

fn circle_intersections(d1: &Disc, d2: &Disc, shrink: f64) -> Vec<Complex64> {
    let (r1, r2) = (d1.radius * shrink, d2.radius * shrink);
    let delta = d2.center - d1.center;
    let dist = delta.norm();
    if dist == 0.0 || dist > r1 + r2 || dist < (r1 - r2).abs() {
        return Vec::new();
    }
    let a = (r1 * r1 - r2 * r2 + dist * dist) / (2.0 * dist);
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    let u = delta / dist;
    let base = d1.center + u * a;
    let normal = u * Complex64::new(0.0, 1.0);
    vec![base + normal * h, base - normal * h]
}

/// `delta.csv`: `re,im,puncture,i,j,n` with 1-based slots.
pub fn delta_csv(points: &[DeltaPoint]) -> String {
    let mut out = String::from("re,im,puncture,i,j,n\n");
    for d in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.lambda.re,
            d.lambda.im,
            d.witness.puncture,
            d.witness.i + 1,
            d.witness.j + 1,
            d.witness.n
        );
    }
    out
}

/// `walls.csv`: `curve_id,re,im,puncture,i,j,m` with 1-based slots.
pub fn walls_csv(curves: &[WallCurve]) -> String {
    let mut out = String::from("curve_id,re,im,puncture,i,j,m\n");
    for c in curves {
        for z in &c.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.id,
                z.re,
                z.im,
                c.puncture,
                c.i + 1,
                c.j + 1,
                c.m
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kms::{KmsSpectrum, Puncture};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shadow(points: &[(f64, Complex64)]) -> HarmonicShadow {
        HarmonicShadow {
            rank: points.len(),
            genus: None,
            punctures: vec![Puncture {
                label: "t".into(),
                spectrum: KmsSpectrum::new(
                    points.iter().map(|&(a, z)| KmsPoint::new(a, z)).collect(),
                ),
            }],
        }
    }

    #[test]
    fn collision_examples() {
        let col = collision_function(
            KmsPoint::new(0.0, c(1.0, 0.0)),
            KmsPoint::new(0.0, c(0.0, 0.0)),
        );
        assert_eq!((col.a, col.b, col.c), (c(1.0, 0.0), 0.0, c(1.0, 0.0)));

        let col = collision_function(
            KmsPoint::new(-0.2, c(0.5, 1.0)),
            KmsPoint::new(-0.2, c(-0.25, 1.0)),
        );
        assert_eq!(col.a, c(0.75, 0.0));
        assert_eq!(col.c, c(0.75, 0.0));
        assert_eq!(col.b, 0.0);

        let col = collision_function(
            KmsPoint::new(0.5, c(0.0, 0.0)),
            KmsPoint::new(0.0, c(0.0, 0.0)),
        );
        assert_eq!((col.a, col.b, col.c), (c(0.0, 0.0), -0.5, c(0.0, 0.0)));
    }

    #[test]
    fn solve_cases() {
        let col = Collision {
            a: c(1.0, 0.0),
            b: 0.0,
            c: c(1.0, 0.0),
        };
        let mut roots = col.solve(0);
        roots.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((roots[0] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((roots[1] - c(0.0, 1.0)).norm() < 1e-15);
        let lin = Collision {
            a: c(2.0, 0.0),
            b: 1.0,
            c: c(0.0, 0.0),
        };
        assert_eq!(lin.solve(3), vec![c(1.0, 0.0)]);
        let no_a = Collision {
            a: c(0.0, 0.0),
            b: 1.0,
            c: c(2.0, 0.0),
        };
        assert_eq!(no_a.solve(3), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn rank_two_model_delta() {
        let s = shadow(&[(0.0, c(0.0, 0.0)), (0.0, c(1.0, 0.0))]);
        let region = Region::new(0.1, 3.0).unwrap();
        let delta = delta_in_region(&s, &region, 1e-10, 1e-9).unwrap();
        let has = |z: Complex64| delta.iter().any(|d| (d.lambda - z).norm() < 1e-12);
        let r5 = 5f64.sqrt();
        for z in [
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, 1.0),
            c(0.0, -1.0),
            c((3.0 + r5) / 2.0, 0.0),
            c((3.0 - r5) / 2.0, 0.0),
            c((-3.0 + r5) / 2.0, 0.0),
            c((-3.0 - r5) / 2.0, 0.0),
        ] {
            assert!(has(z), "missing {z}");
        }
        for d in &delta {
            let pts = &s.punctures[0].spectrum.points;
            assert!(flow_gap(pts[0], pts[1], d) < 1e-9);
        }
    }

    #[test]
    fn empty_delta_cases() {
        let region = Region::new(0.1, 3.0).unwrap();
        let s = shadow(&[(0.0, c(0.5, 0.5)), (-0.5, c(0.5, 0.5))]);
        assert!(delta_in_region(&s, &region, 1e-10, 1e-9)
            .unwrap()
            .is_empty());
        let s = shadow(&[(0.0, c(0.5, 0.5))]);
        assert!(delta_in_region(&s, &region, 1e-10, 1e-9)
            .unwrap()
            .is_empty());
        let s = shadow(&[(0.0, c(0.5, 0.5)), (0.0, c(0.5, 0.5))]);
        assert!(matches!(
            delta_in_region(&s, &region, 1e-10, 1e-9),
            Err(WallError::DegenerateFamily { .. })
        ));
    }

    #[test]
    fn level_wall_examples() {
        let s = shadow(&[(0.0, c(1.0, 0.0)), (0.0, c(0.0, 0.0))]);
        let region = Region::new(0.1, 3.0).unwrap();
        let walls = level_walls(&s, &region, 41);
        let zero: Vec<&WallCurve> = walls.iter().filter(|w| w.m == 0).collect();
        assert_eq!(zero.len(), 2, "line Re λ = 0 split by the hole");
        for w in &zero {
            assert!(w.points.iter().all(|z| z.re.abs() < 1e-12));
        }
        assert!(walls.iter().all(|w| w.m.abs() <= 6));

        let same = shadow(&[(0.0, c(1.0, 0.0)), (-0.5, c(1.0, 0.0))]);
        assert!(level_walls(&same, &region, 41).is_empty());
    }

    #[test]
    fn cover_without_delta() {
        let region = Region::new(0.1, 2.0).unwrap();
        let discs = build_cover(&region, &[], &CoverOptions::default()).unwrap();
        assert_eq!(discs[0].kind, DiscKind::Origin);
        assert!(discs[1..].iter().all(|d| !d.contains(c(0.0, 0.0))));
        assert_covers(&discs, &region);
    }

    fn assert_covers(discs: &[Disc], region: &Region) {
        for a in 0..60 {
            for b in 0..60 {
                let z = c(
                    -region.r_max + a as f64 * region.r_max / 29.5,
                    -region.r_max + b as f64 * region.r_max / 29.5,
                );
                if z.norm() <= region.r_max {
                    assert!(discs.iter().any(|d| d.contains(z)), "uncovered {z}");
                }
            }
        }
    }

    #[test]
    fn cover_with_one_point() {
        let region = Region::new(0.1, 2.0).unwrap();
        let delta = vec![DeltaPoint {
            lambda: c(1.0, 0.0),
            witness: Witness {
                puncture: "t".into(),
                i: 0,
                j: 1,
                n: 2,
            },
        }];
        let discs = build_cover(&region, &delta, &CoverOptions::default()).unwrap();
        let holders: Vec<&Disc> = discs.iter().filter(|d| d.contains(c(1.0, 0.0))).collect();
        assert_eq!(holders.len(), 1);
        assert_eq!(holders[0].kind, DiscKind::Delta(0));
        for (k, d1) in discs.iter().enumerate() {
            for d2 in &discs[k + 1..] {
                for w in [c(0.0, 0.0), c(1.0, 0.0)] {
                    assert!(!(d1.contains(w) && d2.contains(w)));
                }
            }
        }
        assert_covers(&discs, &region);
    }

    #[test]
    fn absorbed_point() {
        let region = Region::new(0.1, 2.0).unwrap();
        let delta = vec![DeltaPoint {
            lambda: c(0.15, 0.0),
            witness: Witness {
                puncture: "t".into(),
                i: 0,
                j: 1,
                n: 7,
            },
        }];
        let options = CoverOptions {
            origin_radius: Some(0.3),
            ..CoverOptions::default()
        };
        let discs = build_cover(&region, &delta, &options).unwrap();
        assert!(discs.iter().all(|d| d.kind != DiscKind::Delta(0)));
        let holders = discs.iter().filter(|d| d.contains(c(0.15, 0.0))).count();
        assert_eq!(holders, 1);
    }

    #[test]
    fn csv_headers() {
        assert_eq!(delta_csv(&[]), "re,im,puncture,i,j,n\n");
        assert_eq!(walls_csv(&[]), "curve_id,re,im,puncture,i,j,m\n");
    }

    #[test]
    fn witnesses_lie_in_both() {
        let d1 = Disc {
            center: c(0.0, 0.0),
            radius: 1.0,
            kind: DiscKind::Regular,
        };
        let d2 = Disc {
            center: c(1.5, 0.2),
            radius: 0.7,
            kind: DiscKind::Regular,
        };
        let w = overlap_witnesses(&d1, &d2);
        assert!(!w.is_empty());
        assert!(w.iter().all(|z| d1.contains(*z) && d2.contains(*z)));
        let d3 = Disc {
            center: c(0.9, 1.0),
            radius: 0.8,
            kind: DiscKind::Regular,
        };
        let t = triple_witness([&d1, &d2, &d3]);
        assert!(t
            .map(|z| d1.contains(z) && d2.contains(z) && d3.contains(z))
            .unwrap_or(true));
        let far = Disc {
            center: c(10.0, 0.0),
            radius: 1.0,
            kind: DiscKind::Regular,
        };
        assert!(triple_witness([&d1, &d2, &far]).is_none());
    }
}
