//! Shadow of the preferred section: ordered `(p, e)` data at each λ, the
//! groupoid transitions between nearby orderings, cocycles on covers, and the
//! comparison with the conjugate chart.
//!
//! A sample fixes, for every slot, which KMS point it carries (`kms_index`)
//! and which lattice representative (`rep_shift = k`), so that
//! `p = p_λ(a + k, α)` lies in the window `(c − 1, c]`. The labels of a sample
//! define a holomorphic family of residual tuples `θ_i(λ) = e_λ(x_κ) − kλ`
//! that can be evaluated anywhere.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::hecke::{
    normal_form, realize_action, GroupoidWord, HeckeError, NormalForm, PunctureAction,
    ResidueShadow,
};
use crate::kms::{flow, satisfies_order_condition, HarmonicShadow, KmsPoint};
use crate::rh::{
    betti_shadow, betti_shadow_with_levels, choose_levels, conjugate_kms, conjugate_shadow,
    multiset_eq, rescaled_residues, transported_levels, BettiShadow, RhError,
};
use crate::walls::{
    delta_in_region, overlap_witnesses, triple_witness, DeltaPoint, Disc, Region, WallError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectionError {
    #[error("slots {i} and {j} at `{puncture}` tie in both level and eigenvalue at λ = {lambda}", i = i + 1, j = j + 1)]
    OrderingAmbiguous {
        puncture: String,
        lambda: Complex64,
        i: usize,
        j: usize,
    },
    #[error(
        "ordering at `{puncture}`, λ = {lambda} violates the level condition for equal eigenvalues"
    )]
    OrderCondition { puncture: String, lambda: Complex64 },
    #[error("transition leaves its domain at λ = {lambda}: {detail}")]
    DomainViolation { lambda: Complex64, detail: String },
    #[error("path passes within {distance:e} of the collision point {lambda}")]
    PathThroughWall { lambda: Complex64, distance: f64 },
    #[error("samples do not carry the same KMS points")]
    Mismatch,
    #[error("λ must be finite")]
    NonFinite,
    #[error(transparent)]
    Hecke(#[from] HeckeError),
    #[error(transparent)]
    Rh(#[from] RhError),
    #[error(transparent)]
    Wall(#[from] WallError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub kms_index: usize,
    pub rep_shift: i64,
    pub p: f64,
    pub e: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionSample {
    pub lambda: Complex64,
    pub labels: Vec<String>,
    pub slots: Vec<Vec<Slot>>,
}

impl SectionSample {
    pub fn residue_shadow(&self) -> ResidueShadow {
        ResidueShadow {
            lambda: self.lambda,
            labels: self.labels.clone(),
            theta: self
                .slots
                .iter()
                .map(|s| s.iter().map(|slot| slot.e).collect())
                .collect(),
            degree_offset: 0,
        }
    }

    /// The same slot labels evaluated at another λ.
    pub fn continued(&self, shadow: &HarmonicShadow, lambda: Complex64) -> SectionSample {
        let slots = self
            .slots
            .iter()
            .zip(&shadow.punctures)
            .map(|(slots, punct)| {
                slots
                    .iter()
                    .map(|s| {
                        labelled_slot(
                            punct.spectrum.points[s.kms_index],
                            s.kms_index,
                            s.rep_shift,
                            lambda,
                        )
                    })
                    .collect()
            })
            .collect();
        SectionSample {
            lambda,
            labels: self.labels.clone(),
            slots,
        }
    }
}

fn labelled_slot(x: KmsPoint, kms_index: usize, k: i64, lambda: Complex64) -> Slot {
    let fv = flow(x.lattice_shift(k), lambda);
    Slot {
        kms_index,
        rep_shift: k,
        p: fv.p,
        e: fv.e,
    }
}

/// Shift `k` with `p_λ(a + k, α) ∈ (anchor − 1, anchor]`.
fn window_slot(x: KmsPoint, kms_index: usize, lambda: Complex64, anchor: f64) -> Slot {
    let p0 = flow(x, lambda).p;
    let mut k = -((p0 - anchor).ceil()) as i64;
    let mut slot = labelled_slot(x, kms_index, k, lambda);
    for _ in 0..4 {
        if slot.p > anchor {
            k -= 1;
        } else if slot.p <= anchor - 1.0 {
            k += 1;
        } else {
            break;
        }
        slot = labelled_slot(x, kms_index, k, lambda);
    }
    slot
}

/// Window representatives ordered by `p`, ties broken by `(Re e, Im e)`.
pub fn local_order(
    shadow: &HarmonicShadow,
    lambda: Complex64,
    anchor: f64,
    eps: f64,
) -> Result<SectionSample, SectionError> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(SectionError::NonFinite);
    }
    let mut all = Vec::with_capacity(shadow.punctures.len());
    for punct in &shadow.punctures {
        let mut slots: Vec<Slot> = punct
            .spectrum
            .points
            .iter()
            .enumerate()
            .map(|(i, &x)| window_slot(x, i, lambda, anchor))
            .collect();
        slots.sort_by(|a, b| a.p.total_cmp(&b.p));
        // Chains of p-values within eps form tie clusters.
        let mut start = 0;
        while start < slots.len() {
            let mut end = start + 1;
            while end < slots.len() && slots[end].p - slots[end - 1].p <= eps {
                end += 1;
            }
            let cluster = &mut slots[start..end];
            cluster.sort_by(|a, b| a.e.re.total_cmp(&b.e.re).then(a.e.im.total_cmp(&b.e.im)));
            for w in 0..cluster.len() {
                for v in w + 1..cluster.len() {
                    if (cluster[w].e - cluster[v].e).norm() <= eps {
                        return Err(SectionError::OrderingAmbiguous {
                            puncture: punct.label.clone(),
                            lambda,
                            i: cluster[w].kms_index,
                            j: cluster[v].kms_index,
                        });
                    }
                }
            }
            start = end;
        }
        let pairs: Vec<(f64, Complex64)> = slots.iter().map(|s| (s.p, s.e)).collect();
        let order: Vec<usize> = (0..pairs.len()).collect();
        if !satisfies_order_condition(&pairs, &order, eps) {
            return Err(SectionError::OrderCondition {
                puncture: punct.label.clone(),
                lambda,
            });
        }
        all.push(slots);
    }
    Ok(SectionSample {
        lambda,
        labels: shadow.labels(),
        slots: all,
    })
}

/// Normal form carrying the tuple of `from` to the tuple of `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub word: GroupoidWord,
    pub normal_form: NormalForm,
}

/// The normal form relating two label sets, with a realizing word.
pub fn transition_word(
    s1: &SectionSample,
    s2: &SectionSample,
) -> Result<(GroupoidWord, NormalForm), SectionError> {
    if s1.labels != s2.labels || s1.slots.len() != s2.slots.len() {
        return Err(SectionError::Mismatch);
    }
    let rank = s1.slots.first().map(Vec::len).unwrap_or(0);
    let mut applied = Vec::new();
    let mut expected = BTreeMap::new();
    for ((label, a), b) in s1.labels.iter().zip(&s1.slots).zip(&s2.slots) {
        if a.len() != b.len() {
            return Err(SectionError::Mismatch);
        }
        let mut sigma = vec![0; a.len()];
        let mut shift = vec![0; a.len()];
        for (i, slot) in a.iter().enumerate() {
            let j = b
                .iter()
                .position(|t| t.kms_index == slot.kms_index)
                .ok_or(SectionError::Mismatch)?;
            sigma[i] = j;
            shift[i] = slot.rep_shift - b[j].rep_shift;
        }
        let action = PunctureAction {
            degree: -shift.iter().sum::<i64>(),
            sigma,
            shift,
        };
        applied.extend(realize_action(label, &action));
        expected.insert(label.clone(), action);
    }
    let word = GroupoidWord::from_application_order(applied);
    let nf = normal_form(&word, rank, &s1.labels)?;
    debug_assert!(
        nf.actions == expected,
        "realized word disagrees with its target"
    );
    if nf.actions != expected {
        return Err(SectionError::Mismatch);
    }
    Ok((word, nf))
}

/// Checks the transition's domain on the `from` labels at `lambda`.
fn check_domain(
    nf: &NormalForm,
    shadow: &HarmonicShadow,
    from: &SectionSample,
    lambda: Complex64,
    eps: f64,
) -> Result<(), SectionError> {
    let at = from.continued(shadow, lambda).residue_shadow();
    if let Some(c) = nf.domain_violation(&at, eps) {
        return Err(SectionError::DomainViolation {
            lambda,
            detail: c.to_string(),
        });
    }
    Ok(())
}

/// Transition between two samples, domain-checked at both sample points.
pub fn transition(
    shadow: &HarmonicShadow,
    s1: &SectionSample,
    s2: &SectionSample,
    ids: (usize, usize),
    eps: f64,
) -> Result<Transition, SectionError> {
    let (word, nf) = transition_word(s1, s2)?;
    check_domain(&nf, shadow, s1, s1.lambda, eps)?;
    if s2.lambda != s1.lambda {
        check_domain(&nf, shadow, s1, s2.lambda, eps)?;
    }
    Ok(Transition {
        from: ids.0,
        to: ids.1,
        word,
        normal_form: nf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub anchor: f64,
    pub eps: f64,
    pub eps_root: f64,
    /// Minimum allowed distance from the path to a collision point.
    pub eps_path: f64,
    /// Radius below which collision points are not searched.
    pub inner_floor: f64,
    pub max_bisections: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            anchor: 0.0,
            eps: 1e-9,
            eps_root: 1e-10,
            eps_path: 1e-6,
            inner_floor: 1e-3,
            max_bisections: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathTrace {
    pub samples: Vec<SectionSample>,
    pub transitions: Vec<Transition>,
    pub holonomy: NormalForm,
    /// Largest relative monodromy-multiset discrepancy across a transition.
    pub max_monodromy_gap: f64,
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Collision points near the polyline's annulus.
fn path_deltas(
    shadow: &HarmonicShadow,
    path: &[Complex64],
    opts: &PathOptions,
) -> Result<Vec<DeltaPoint>, SectionError> {
    let zero = Complex64::new(0.0, 0.0);
    let mut d_min = path.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    for w in path.windows(2) {
        d_min = d_min.min(segment_distance(zero, w[0], w[1]));
    }
    let r_max = path.iter().map(|z| z.norm()).fold(0.0, f64::max) + 1.0;
    let r_min = (0.5 * d_min).max(opts.inner_floor).min(r_max);
    let region = Region::new(r_min, r_max)?;
    Ok(delta_in_region(shadow, &region, opts.eps_root, opts.eps)?)
}

pub fn monodromies(s: &SectionSample) -> Vec<Vec<Complex64>> {
    let two_pi_i = Complex64::new(0.0, -2.0 * std::f64::consts::PI);
    s.slots
        .iter()
        .map(|slots| {
            slots
                .iter()
                .map(|x| (two_pi_i * x.e / s.lambda).exp())
                .collect()
        })
        .collect()
}

/// Samples at every vertex, transitions between consecutive samples (with
/// bisection when a step leaves the domain) and the composed holonomy.
pub fn trace_path(
    shadow: &HarmonicShadow,
    path: &[Complex64],
    opts: &PathOptions,
) -> Result<PathTrace, SectionError> {
    let rank = shadow.rank;
    let labels = shadow.labels();
    if path.is_empty() {
        return Ok(PathTrace {
            samples: Vec::new(),
            transitions: Vec::new(),
            holonomy: NormalForm::identity(rank, &labels),
            max_monodromy_gap: 0.0,
        });
    }
    let deltas = path_deltas(shadow, path, opts)?;
    for w in path
        .windows(2)
        .map(|w| (w[0], w[1]))
        .chain(std::iter::once((path[0], path[0])))
    {
        for d in &deltas {
            let dist = segment_distance(d.lambda, w.0, w.1);
            if dist <= opts.eps_path {
                return Err(SectionError::PathThroughWall {
                    lambda: d.lambda,
                    distance: dist,
                });
            }
        }
    }

    let mut samples = vec![local_order(shadow, path[0], opts.anchor, opts.eps)?];
    let mut transitions = Vec::new();
    let mut max_gap = 0.0_f64;
    for &target in &path[1..] {
        step_to(
            shadow,
            target,
            opts,
            0,
            &mut samples,
            &mut transitions,
            &mut max_gap,
        )?;
    }
    let mut holonomy = NormalForm::identity(rank, &labels);
    for t in &transitions {
        holonomy = t.normal_form.compose(&holonomy);
    }
    Ok(PathTrace {
        samples,
        transitions,
        holonomy,
        max_monodromy_gap: max_gap,
    })
}

fn step_to(
    shadow: &HarmonicShadow,
    target: Complex64,
    opts: &PathOptions,
    depth: usize,
    samples: &mut Vec<SectionSample>,
    transitions: &mut Vec<Transition>,
    max_gap: &mut f64,
) -> Result<(), SectionError> {
    let from_id = samples.len() - 1;
    let from = samples[from_id].clone();
    let next = local_order(shadow, target, opts.anchor, opts.eps)?;
    match transition(shadow, &from, &next, (from_id, from_id + 1), opts.eps) {
        Ok(t) => {
            let carried = from.continued(shadow, target);
            let gap = monodromy_gap(&carried, &next);
            *max_gap = max_gap.max(gap);
            samples.push(next);
            transitions.push(t);
            Ok(())
        }
        Err(SectionError::DomainViolation { .. }) if depth < opts.max_bisections => {
            let mid = (from.lambda + target) * 0.5;
            step_to(shadow, mid, opts, depth + 1, samples, transitions, max_gap)?;
            step_to(
                shadow,
                target,
                opts,
                depth + 1,
                samples,
                transitions,
                max_gap,
            )
        }
        Err(e) => Err(e),
    }
}

/// Largest distance between matched monodromy multisets of two samples at the
/// same λ, relative to `max(1, |μ|)`; infinite when the sizes differ.
pub fn monodromy_gap(a: &SectionSample, b: &SectionSample) -> f64 {
    let ma = monodromies(a);
    let mb = monodromies(b);
    let mut worst = 0.0_f64;
    for (x, y) in ma.iter().zip(&mb) {
        let mut used = vec![false; y.len()];
        for u in x {
            let best = y
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|(_, p), (_, q)| (*p - u).norm().total_cmp(&(*q - u).norm()));
            match best {
                Some((i, v)) => {
                    used[i] = true;
                    worst = worst.max((v - u).norm() / u.norm().max(1.0));
                }
                None => return f64::INFINITY,
            }
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct OverlapTransition {
    pub first: usize,
    pub second: usize,
    pub witness: Complex64,
    pub normal_form: NormalForm,
}

#[derive(Debug, Clone, Default)]
pub struct CocycleReport {
    pub discs: usize,
    pub overlaps: Vec<OverlapTransition>,
    pub triples_checked: usize,
    /// Triples `(i, j, k)` whose product is not the identity.
    pub failures: Vec<(usize, usize, usize)>,
    /// Largest residual of `g·θ_U − θ_U′` over all witness points.
    pub max_residual: f64,
}

impl CocycleReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Residual of applying `nf` to the tuple of `from` against the tuple of `to`.
fn action_residual(
    nf: &NormalForm,
    from: &SectionSample,
    to: &SectionSample,
) -> Result<f64, SectionError> {
    let moved = nf.apply(&from.residue_shadow())?;
    let target = to.residue_shadow();
    let mut worst = 0.0_f64;
    for (a, b) in moved.theta.iter().zip(&target.theta) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}

/// Ordering at the disc center, or at a nearby interior point when the
/// center itself is ambiguous.
fn disc_labels(
    shadow: &HarmonicShadow,
    disc: &Disc,
    anchor: f64,
    eps: f64,
) -> Result<SectionSample, SectionError> {
    match local_order(shadow, disc.center, anchor, eps) {
        Err(SectionError::OrderingAmbiguous { .. }) => {
            let mut last = None;
            for k in 0..8 {
                let angle = std::f64::consts::PI * (2 * k + 1) as f64 / 8.0;
                let z = disc.center + Complex64::from_polar(0.25 * disc.radius, angle);
                match local_order(shadow, z, anchor, eps) {
                    Ok(s) => return Ok(s),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("eight attempts"))
        }
        other => other,
    }
}

/// Transitions on every pairwise overlap of the cover and the cocycle
/// identity on every triple overlap.
///
/// Each disc carries the labels of the ordering at its center. Overlaps that
/// contain a point of `delta` are rejected: the two local sections need not
/// be related by an in-domain move there.
pub fn cocycle_check(
    shadow: &HarmonicShadow,
    discs: &[Disc],
    delta: &[DeltaPoint],
    anchor: f64,
    eps: f64,
) -> Result<CocycleReport, SectionError> {
    let centers: Vec<SectionSample> = discs
        .iter()
        .map(|d| disc_labels(shadow, d, anchor, eps))
        .collect::<Result<_, _>>()?;
    let n = discs.len();
    let mut report = CocycleReport {
        discs: n,
        ..CocycleReport::default()
    };
    let mut pair_nf: BTreeMap<(usize, usize), NormalForm> = BTreeMap::new();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if !discs[i].overlaps(&discs[j]) {
                continue;
            }
            let witnesses = overlap_witnesses(&discs[i], &discs[j]);
            if witnesses.is_empty() {
                continue;
            }
            if let Some(d) = delta
                .iter()
                .find(|d| discs[i].contains(d.lambda) && discs[j].contains(d.lambda))
            {
                return Err(SectionError::DomainViolation {
                    lambda: d.lambda,
                    detail: format!("overlap of discs {i} and {j} contains a collision point"),
                });
            }
            let (_, nf) = transition_word(&centers[i], &centers[j])?;
            for &w in &witnesses {
                let from = centers[i].continued(shadow, w);
                let to = centers[j].continued(shadow, w);
                if let Some(c) = nf.domain_violation(&from.residue_shadow(), eps) {
                    return Err(SectionError::DomainViolation {
                        lambda: w,
                        detail: format!("discs {i} and {j}: {c}"),
                    });
                }
                report.max_residual = report.max_residual.max(action_residual(&nf, &from, &to)?);
            }
            report.overlaps.push(OverlapTransition {
                first: i,
                second: j,
                witness: witnesses[0],
                normal_form: nf.clone(),
            });
            pair_nf.insert((i, j), nf);
            neighbors[i].push(j);
        }
    }
    for i in 0..n {
        for (a, &j) in neighbors[i].iter().enumerate() {
            for &k in &neighbors[i][a + 1..] {
                let (j, k) = (j.min(k), j.max(k));
                let Some(g_jk) = pair_nf.get(&(j, k)) else {
                    continue;
                };
                if triple_witness([&discs[i], &discs[j], &discs[k]]).is_none() {
                    continue;
                }
                report.triples_checked += 1;
                let g_ij = &pair_nf[&(i, j)];
                let g_ik = &pair_nf[&(i, k)];
                let around = g_ik.inverse().compose(&g_jk.compose(g_ij));
                if !around.is_identity() {
                    report.failures.push((i, j, k));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct GlueReport {
    pub lambda: Complex64,
    pub original: BettiShadow,
    pub conjugate: BettiShadow,
    /// Largest `|μ' − conj μ|` after sorting by jump (only meaningful on `|λ| = 1`).
    pub conjugate_gap: f64,
    /// Largest `|μ'·μ − 1|`.
    pub inverse_gap: f64,
    pub jump_gap: f64,
    /// Agreement between conjugating residues and conjugating KMS data.
    pub chart_consistency: f64,
    pub on_unit_circle: bool,
    pub pass: bool,
}

/// Compares the Betti shadow at λ with the one computed in the conjugate
/// chart at `1/λ`.
pub fn glue_infinity(
    shadow: &HarmonicShadow,
    lambda: Complex64,
    anchor: f64,
    eps: f64,
    tol: f64,
) -> Result<GlueReport, SectionError> {
    if lambda.norm() == 0.0 {
        return Err(RhError::LambdaZero.into());
    }
    let sample = local_order(shadow, lambda, anchor, eps)?;
    let s = sample.residue_shadow();
    let levels = choose_levels(&rescaled_residues(&s)?, 0.0)?;
    let original = betti_shadow(&s, &levels)?;

    let cs = conjugate_shadow(&s)?;
    let mu = lambda.inv();
    let mut chart_consistency = 0.0_f64;
    for ((slots, punct), theta) in sample.slots.iter().zip(&shadow.punctures).zip(&cs.theta) {
        for (slot, t) in slots.iter().zip(theta) {
            let x = punct.spectrum.points[slot.kms_index].lattice_shift(slot.rep_shift);
            let via_kms = flow(conjugate_kms(x), mu).e;
            chart_consistency = chart_consistency.max((via_kms - t).norm());
        }
    }
    let moved = transported_levels(&s, levels.levels())?;
    let conjugate = betti_shadow_with_levels(&cs, &moved)?;

    let on_unit_circle = (lambda.norm() - 1.0).abs() <= 1e-12;
    let mut conjugate_gap = 0.0_f64;
    let mut inverse_gap = 0.0_f64;
    let mut jump_gap = 0.0_f64;
    let mut multisets_ok = true;
    for (a, b) in original.pairs.iter().zip(&conjugate.pairs) {
        for (x, y) in a.iter().zip(b) {
            conjugate_gap = conjugate_gap.max((y.mu - x.mu.conj()).norm());
            inverse_gap = inverse_gap.max((y.mu * x.mu - 1.0).norm());
            jump_gap = jump_gap.max((y.jump - x.jump).abs());
        }
        let conj: Vec<Complex64> = a.iter().map(|x| x.mu.conj()).collect();
        let other: Vec<Complex64> = b.iter().map(|x| x.mu).collect();
        if on_unit_circle && !multiset_eq(&conj, &other, tol) {
            multisets_ok = false;
        }
    }
    let pass = multisets_ok
        && inverse_gap <= tol
        && jump_gap <= tol
        && chart_consistency <= tol
        && (!on_unit_circle || conjugate_gap <= tol);
    Ok(GlueReport {
        lambda,
        original,
        conjugate,
        conjugate_gap,
        inverse_gap,
        jump_gap,
        chart_consistency,
        on_unit_circle,
        pass,
    })
}

/// `section.csv` rows for the given samples.
pub fn section_csv(samples: &[SectionSample]) -> String {
    let mut out = String::from(
        "sample_id,re_lambda,im_lambda,puncture,slot,kms_index,rep_shift,p,re_e,im_e\n",
    );
    for (id, s) in samples.iter().enumerate() {
        for (label, slots) in s.labels.iter().zip(&s.slots) {
            for (k, slot) in slots.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    id,
                    s.lambda.re,
                    s.lambda.im,
                    label,
                    k + 1,
                    slot.kms_index + 1,
                    slot.rep_shift,
                    slot.p,
                    slot.e.re,
                    slot.e.im
                );
            }
        }
    }
    out
}

/// `transitions.json`: one entry per transition, keyed by sample ids.
pub fn transitions_json(transitions: &[Transition]) -> Value {
    Value::Array(
        transitions
            .iter()
            .map(|t| {
                json!({
                    "from": t.from,
                    "to": t.to,
                    "word": t.word.to_string(),
                    "normal_form": t.normal_form.to_json(),
                })
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kms::{KmsSpectrum, Puncture};
    use crate::walls::{build_cover, CoverOptions};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model() -> HarmonicShadow {
        HarmonicShadow {
            rank: 2,
            genus: None,
            punctures: vec![Puncture {
                label: "t".into(),
                spectrum: KmsSpectrum::new(vec![
                    KmsPoint::new(0.0, c(0.0, 0.0)),
                    KmsPoint::new(0.0, c(1.0, 0.0)),
                ]),
            }],
        }
    }

    #[test]
    fn order_at_zero_follows_levels() {
        let s = HarmonicShadow {
            rank: 3,
            genus: None,
            punctures: vec![Puncture {
                label: "t".into(),
                spectrum: KmsSpectrum::new(vec![
                    KmsPoint::new(-0.1, c(2.0, 0.0)),
                    KmsPoint::new(-0.7, c(0.0, 1.0)),
                    KmsPoint::new(-0.4, c(1.0, 0.0)),
                ]),
            }],
        };
        let sample = local_order(&s, c(0.0, 0.0), 0.0, 1e-9).unwrap();
        let idx: Vec<usize> = sample.slots[0].iter().map(|x| x.kms_index).collect();
        assert_eq!(idx, vec![1, 2, 0]);
        assert!(sample.slots[0].iter().all(|x| x.rep_shift == 0));
    }

    #[test]
    fn order_example_at_one_tenth() {
        let sample = local_order(&model(), c(0.1, 0.0), 0.0, 1e-9).unwrap();
        let slots = &sample.slots[0];
        assert_eq!(slots[0].kms_index, 1);
        assert_eq!(slots[0].rep_shift, -1);
        assert!((slots[0].p + 0.8).abs() < 1e-12);
        assert_eq!(slots[1].kms_index, 0);
        assert_eq!(slots[1].p, 0.0);
    }

    #[test]
    fn rank_one_window() {
        let s = HarmonicShadow {
            rank: 1,
            genus: None,
            punctures: vec![Puncture {
                label: "t".into(),
                spectrum: KmsSpectrum::new(vec![KmsPoint::new(-0.3, c(1.3, -0.2))]),
            }],
        };
        for lambda in [c(0.0, 0.0), c(2.0, 1.0), c(-3.0, 0.5)] {
            let slot = local_order(&s, lambda, 0.0, 1e-9).unwrap().slots[0][0];
            assert!(slot.p > -1.0 && slot.p <= 0.0);
        }
    }

    #[test]
    fn transition_examples() {
        let shadow = model();
        let s = local_order(&shadow, c(0.3, 0.4), 0.0, 1e-9).unwrap();
        let t = transition(&shadow, &s, &s, (0, 0), 1e-9).unwrap();
        assert!(t.normal_form.is_identity());

        let left = local_order(&shadow, c(-0.05, 0.5), 0.0, 1e-9).unwrap();
        let right = local_order(&shadow, c(0.05, 0.5), 0.0, 1e-9).unwrap();
        let t = transition(&shadow, &left, &right, (0, 1), 1e-9).unwrap();
        let a = &t.normal_form.actions["t"];
        // The (0,1) slot re-enters the window with one less lattice shift
        // and keeps its position ahead of the (0,0) slot.
        assert_eq!(a.sigma, vec![0, 1]);
        assert_eq!(a.shift, vec![1, 0]);
        assert_eq!(a.degree, -1);
        let moved = t
            .normal_form
            .apply(&left.continued(&shadow, right.lambda).residue_shadow())
            .unwrap();
        for (x, y) in moved.theta[0].iter().zip(&right.residue_shadow().theta[0]) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn constant_path_and_small_loop() {
        let shadow = model();
        let p = c(0.5, 0.3);
        let trace = trace_path(&shadow, &[p, p, p], &PathOptions::default()).unwrap();
        assert!(trace
            .transitions
            .iter()
            .all(|t| t.normal_form.is_identity()));

        let center = c(2.0, 1.5);
        let loop_path: Vec<Complex64> = (0..=16)
            .map(|k| {
                center + Complex64::from_polar(0.05, 2.0 * std::f64::consts::PI * k as f64 / 16.0)
            })
            .collect();
        let trace = trace_path(&shadow, &loop_path, &PathOptions::default()).unwrap();
        assert!(trace.holonomy.is_identity());
    }

    #[test]
    fn path_through_wall_rejected() {
        let shadow = model();
        let err = trace_path(
            &shadow,
            &[c(0.5, 0.0), c(1.5, 0.0)],
            &PathOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SectionError::PathThroughWall { .. }));
    }

    #[test]
    fn cocycle_on_model_cover() {
        let shadow = model();
        let region = Region::new(0.1, 2.0).unwrap();
        let delta = delta_in_region(&shadow, &region, 1e-10, 1e-9).unwrap();
        let discs = build_cover(&region, &delta, &CoverOptions::default()).unwrap();
        let report = cocycle_check(&shadow, &discs, &delta, 0.0, 1e-9)
            .map_err(|e| e.to_string())
            .unwrap();
        assert!(report.pass());
        assert!(report.triples_checked > 0);
        assert!(report.max_residual < 1e-9);
    }

    #[test]
    fn cocycle_rejects_bad_cover() {
        let shadow = model();
        let region = Region::new(0.1, 2.0).unwrap();
        let delta = delta_in_region(&shadow, &region, 1e-10, 1e-9).unwrap();
        let bad = vec![
            Disc {
                center: c(0.9, 0.0),
                radius: 0.3,
                kind: crate::walls::DiscKind::Regular,
            },
            Disc {
                center: c(1.1, 0.0),
                radius: 0.3,
                kind: crate::walls::DiscKind::Regular,
            },
        ];
        let err = cocycle_check(&shadow, &bad, &delta, 0.0, 1e-9).unwrap_err();
        assert!(matches!(err, SectionError::DomainViolation { .. }));
    }

    #[test]
    fn glue_examples() {
        let trivial = HarmonicShadow {
            rank: 1,
            genus: None,
            punctures: vec![Puncture {
                label: "t".into(),
                spectrum: KmsSpectrum::new(vec![KmsPoint::new(0.0, c(0.0, 0.0))]),
            }],
        };
        for k in 0..8 {
            let lambda =
                Complex64::from_polar(1.0, std::f64::consts::PI * (2 * k + 1) as f64 / 8.0);
            let r = glue_infinity(&trivial, lambda, 0.0, 1e-9, 1e-9).unwrap();
            assert!(r.pass);
            assert!((r.original.pairs[0][0].mu - c(1.0, 0.0)).norm() < 1e-12);
            let r = glue_infinity(&model(), lambda, 0.0, 1e-9, 1e-9).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn csv_shape() {
        let s = local_order(&model(), c(0.1, 0.0), 0.0, 1e-9).unwrap();
        let csv = section_csv(&[s]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 10);
    }
}
