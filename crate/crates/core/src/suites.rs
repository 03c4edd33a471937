//! Randomized and exhaustive invariant checks, grouped into named suites.
//!
//! Every check is a pure function of the [`Config`] (seed included) and
//! reports a [`Check`] whose detail string is built from rounded values, so
//! suite output is byte-reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::betti::{
    commutant_dimension, compose_check, eigenvalue_map, flag_surgery, flag_surgery_with,
    system_flag_distance, BubbleOrder, CMatrix, FilteredLocalSystem, MultiPermutation,
};
use crate::config::Config;
use crate::hecke::{
    apply_word, deligne_normalize, normal_form, Factor, Generator, GroupoidWord, ResidueShadow,
};
use crate::kms::{flow, HarmonicShadow, KmsPoint, KmsSpectrum, Puncture};
use crate::random::Sampler;
use crate::rh::{conjugate_shadow, flowed_shadow, monodromy_shadow};
use crate::section::{cocycle_check, glue_infinity, trace_path, PathOptions, SectionError};
use crate::twistor::{
    filtration_product_check, sym_check, twistor_h0, weight_table, WeightProfile,
};
use crate::walls::{build_cover, delta_in_region, scan_for_missed, CoverOptions, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kms,
    Groupoid,
    Betti,
    Rh,
    Walls,
    Section,
    Twistor,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Kms,
        Suite::Groupoid,
        Suite::Betti,
        Suite::Rh,
        Suite::Walls,
        Suite::Section,
        Suite::Twistor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kms => "kms",
            Suite::Groupoid => "groupoid",
            Suite::Betti => "betti",
            Suite::Rh => "rh",
            Suite::Walls => "walls",
            Suite::Section => "section",
            Suite::Twistor => "twistor",
        }
    }

    pub fn run(self, cfg: &Config) -> Vec<Check> {
        match self {
            Suite::Kms => vec![flow_equivariance(cfg, 1000)],
            Suite::Groupoid => vec![
                groupoid_relations(cfg, 500),
                injectivity(cfg, 500),
                deligne_window(cfg, 200),
                word_monodromy(cfg, 300),
            ],
            Suite::Betti => vec![surgery_coherence(cfg, 100), commutant_cases(cfg)],
            Suite::Rh => vec![conjugate_monodromy(cfg, 200), glue_unit_circle(cfg)],
            Suite::Walls => vec![model_walls(cfg)],
            Suite::Section => vec![model_cocycle(cfg), path_monodromy(cfg)],
            Suite::Twistor => vec![
                sym_exhaustive(4, 6),
                generating_function_agreement(4, 6),
                product_compatibility(),
                h0_examples(),
            ],
        }
    }
}

/// Parses a suite name; `all` expands to every suite.
pub fn parse_suites(name: &str) -> Result<Vec<Suite>, String> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Suite::from_str(name).map(|s| vec![s])
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub results: Vec<(Suite, Vec<Check>)>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.results.iter().all(|(_, c)| c.iter().all(|x| x.pass))
    }

    pub fn failures(&self) -> Vec<String> {
        self.results
            .iter()
            .flat_map(|(s, c)| {
                c.iter()
                    .filter(|x| !x.pass)
                    .map(move |x| format!("{}.{}", s.name(), x.name))
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (suite, checks) in &self.results {
            for c in checks {
                let tag = if c.pass { "PASS" } else { "FAIL" };
                let _ = writeln!(out, "{tag} {}.{} {}", suite.name(), c.name, c.detail);
            }
        }
        let _ = writeln!(
            out,
            "{} seed={} failures={}",
            if self.pass() { "OK" } else { "FAILED" },
            self.seed,
            self.failures().len()
        );
        out
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .results
            .iter()
            .flat_map(|(s, c)| {
                c.iter().map(move |x| {
                    json!({"suite": s.name(), "name": x.name, "pass": x.pass, "detail": x.detail})
                })
            })
            .collect();
        json!({
            "seed": self.seed,
            "pass": self.pass(),
            "failures": self.failures(),
            "checks": checks,
        })
    }
}

pub fn run_suites(suites: &[Suite], cfg: &Config) -> SuiteReport {
    SuiteReport {
        seed: cfg.seed,
        results: suites.iter().map(|&s| (s, s.run(cfg))).collect(),
    }
}

/// Per-check sub-seed, so adding draws to one check leaves the others intact.
fn sampler(cfg: &Config, salt: u64) -> Sampler {
    Sampler::new(cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn sci(x: f64) -> String {
    format!("{x:.2e}")
}

pub fn rank2_model() -> HarmonicShadow {
    HarmonicShadow {
        rank: 2,
        genus: None,
        punctures: vec![Puncture {
            label: "t".into(),
            spectrum: KmsSpectrum::new(vec![
                KmsPoint::new(0.0, Complex64::new(0.0, 0.0)),
                KmsPoint::new(0.0, Complex64::new(1.0, 0.0)),
            ]),
        }],
    }
}

/// `flow(x + k) − flow(x) = k·(1, −λ)`.
pub fn flow_equivariance(cfg: &Config, samples: usize) -> Check {
    let mut s = sampler(cfg, 1);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = s.kms_point(3.0);
        let k = s.int(-10, 10);
        let lambda = s.complex(3.0);
        let f0 = flow(x, lambda);
        let f1 = flow(x.lattice_shift(k), lambda);
        let dp = (f1.p - f0.p - k as f64).abs();
        let de = (f1.e - f0.e + lambda * k as f64).norm();
        worst = worst.max(dp).max(de);
    }
    Check::new(
        "flow_equivariance",
        worst <= 1e-12,
        format!("samples={samples} max_err={}", sci(worst)),
    )
}

fn word_of(factors: Vec<Factor>) -> GroupoidWord {
    GroupoidWord::from_factors(factors)
}

fn theta_gap(a: &ResidueShadow, b: &ResidueShadow) -> f64 {
    a.theta
        .iter()
        .flatten()
        .zip(b.theta.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `T² = id` on its domain and `U·H^r = H^r·U = id`, both pointwise and on
/// normal forms.
pub fn groupoid_relations(cfg: &Config, samples: usize) -> Check {
    let mut s = sampler(cfg, 2);
    let eps = cfg.tol.eps_eq;
    let mut worst = 0.0_f64;
    let mut exact_failures = 0usize;
    let mut checked = 0usize;
    for _ in 0..samples {
        let r = s.index(1, 5);
        let k = s.index(1, 3);
        let lambda = s.annulus(0.2, 3.0);
        let shadow = s.residue_shadow(r, k, lambda);
        let labels = shadow.labels.clone();
        for label in &labels {
            let h_r = vec![Factor::new(Generator::h(label)); r];
            let mut relations = vec![
                word_of([vec![Factor::new(Generator::u(label))], h_r.clone()].concat()),
                word_of([h_r, vec![Factor::new(Generator::u(label))]].concat()),
            ];
            for i in 1..r {
                relations.push(word_of(vec![Factor::new(Generator::t(label, i)); 2]));
            }
            for w in relations {
                checked += 1;
                match apply_word(&w, &shadow, eps) {
                    Ok(out) => {
                        worst = worst.max(theta_gap(&out, &shadow));
                        if out.degree_offset != shadow.degree_offset || out.labels != shadow.labels
                        {
                            exact_failures += 1;
                        }
                    }
                    Err(_) => exact_failures += 1,
                }
                match normal_form(&w, r, &labels) {
                    Ok(nf) if nf.is_identity() => {}
                    _ => exact_failures += 1,
                }
            }
        }
    }
    Check::new(
        "relations",
        exact_failures == 0 && worst <= 1e-12,
        format!(
            "relations={checked} exact_failures={exact_failures} max_theta_err={}",
            sci(worst)
        ),
    )
}

/// A word with the same normal form as `w`, obtained by inserting a
/// cancelling pair or commuting factors at distinct punctures.
fn equivalent_word(
    s: &mut Sampler,
    w: &GroupoidWord,
    labels: &[String],
    rank: usize,
) -> GroupoidWord {
    let mut f = w.factors.clone();
    let swappable: Vec<usize> = (0..f.len().saturating_sub(1))
        .filter(|&i| f[i].gen.puncture != f[i + 1].gen.puncture)
        .collect();
    if !swappable.is_empty() && s.index(0, 1) == 0 {
        let i = swappable[s.index(0, swappable.len() - 1)];
        f.swap(i, i + 1);
    } else {
        let x = s.factor(labels, rank);
        let at = s.index(0, f.len());
        f.splice(at..at, [x.clone(), x.inverted()]);
    }
    GroupoidWord::from_factors(f)
}

/// Pointwise agreement of two words at a generic shadow holds exactly when
/// their normal forms agree.
pub fn injectivity(cfg: &Config, samples: usize) -> Check {
    let mut s = sampler(cfg, 3);
    let eps = cfg.tol.eps_eq;
    let mut counterexamples = 0usize;
    let mut equal_pairs = 0usize;
    let mut skipped = 0usize;
    let mut done = 0usize;
    while done < samples {
        let r = s.index(1, 4);
        let k = s.index(1, 2);
        let lambda = s.annulus(0.3, 3.0);
        let shadow = s.residue_shadow(r, k, lambda);
        if !shadow.is_generic(12, 1e-6) {
            skipped += 1;
            continue;
        }
        let labels = shadow.labels.clone();
        let len = s.index(1, 4);
        let w1 = s.word(&labels, r, len);
        let w2 = if s.index(0, 1) == 0 {
            equivalent_word(&mut s, &w1, &labels, r)
        } else {
            let len2 = s.index(1, 6);
            s.word(&labels, r, len2)
        };
        let (Ok(a), Ok(b)) = (apply_word(&w1, &shadow, eps), apply_word(&w2, &shadow, eps)) else {
            skipped += 1;
            continue;
        };
        let nf1 = normal_form(&w1, r, &labels);
        let nf2 = normal_form(&w2, r, &labels);
        let (Ok(nf1), Ok(nf2)) = (nf1, nf2) else {
            counterexamples += 1;
            done += 1;
            continue;
        };
        let agree = a.approx_eq(&b, eps);
        let same = nf1.same_action(&nf2);
        if same {
            equal_pairs += 1;
        }
        if agree != same {
            counterexamples += 1;
        }
        done += 1;
    }
    Check::new(
        "injectivity",
        counterexamples == 0,
        format!("pairs={samples} equal_normal_forms={equal_pairs} skipped={skipped} counterexamples={counterexamples}"),
    )
}

/// The normalizing word is in-domain, reproduces the normalized shadow, and
/// every `Re(θ′/λ)` lies in `(−1, 0]`.
pub fn deligne_window(cfg: &Config, samples: usize) -> Check {
    let mut s = sampler(cfg, 4);
    let eps = cfg.tol.eps_eq;
    let mut failures = 0usize;
    let mut worst_replay = 0.0_f64;
    for _ in 0..samples {
        let r = s.index(1, 4);
        let k = s.index(1, 3);
        let lambda = s.annulus(0.2, 3.0);
        let mut shadow = s.residue_shadow(r, k, lambda);
        for t in shadow.theta.iter_mut().flatten() {
            *t *= 3.0;
        }
        let ok = match deligne_normalize(&shadow, eps) {
            Ok((word, normalized)) => match apply_word(&word, &shadow, eps) {
                Ok(replayed) => {
                    worst_replay = worst_replay.max(theta_gap(&replayed, &normalized));
                    normalized
                        .theta
                        .iter()
                        .flatten()
                        .map(|t| (t / lambda).re)
                        .all(|x| x > -1.0 && x <= 0.0)
                }
                Err(_) => false,
            },
            Err(_) => false,
        };
        if !ok {
            failures += 1;
        }
    }
    Check::new(
        "deligne_window",
        failures == 0 && worst_replay <= 1e-9,
        format!(
            "shadows={samples} failures={failures} max_replay_err={}",
            sci(worst_replay)
        ),
    )
}

fn relative_multiset_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let scale = x.norm().max(1.0);
        let best = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm() / scale))
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match best {
            Some((i, d)) => {
                used[i] = true;
                worst = worst.max(d);
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

fn shadow_monodromies(s: &ResidueShadow) -> Vec<Vec<Complex64>> {
    s.theta
        .iter()
        .map(|t| {
            t.iter()
                .map(|x| monodromy_shadow(*x, s.lambda).expect("λ ≠ 0"))
                .collect()
        })
        .collect()
}

/// Groupoid words preserve each puncture's monodromy multiset.
pub fn word_monodromy(cfg: &Config, samples: usize) -> Check {
    let mut s = sampler(cfg, 5);
    let eps = cfg.tol.eps_eq;
    let mut worst = 0.0_f64;
    let mut applied = 0usize;
    for _ in 0..samples {
        let r = s.index(1, 5);
        let k = s.index(1, 3);
        let lambda = s.annulus(0.5, 3.0);
        let shadow = s.residue_shadow(r, k, lambda);
        let labels = shadow.labels.clone();
        let len = s.index(1, 6);
        let w = s.word(&labels, r, len);
        let Ok(out) = apply_word(&w, &shadow, eps) else {
            continue;
        };
        applied += 1;
        for (a, b) in shadow_monodromies(&shadow)
            .iter()
            .zip(&shadow_monodromies(&out))
        {
            worst = worst.max(relative_multiset_gap(a, b));
        }
    }
    Check::new(
        "word_monodromy",
        worst <= 1e-9,
        format!("words={applied} max_rel_gap={}", sci(worst)),
    )
}

fn adjacent(punctures: usize, r: usize, puncture: usize, p: usize) -> MultiPermutation {
    let mut m = MultiPermutation::identity(punctures, r);
    m.perms[puncture].swap(p, p + 1);
    m
}

fn permuted_eigen_gap(
    l: &FilteredLocalSystem,
    out: &FilteredLocalSystem,
    sigma: &MultiPermutation,
    eps: f64,
) -> f64 {
    let (Ok(e0), Ok(e1)) = (eigenvalue_map(l, eps), eigenvalue_map(out, eps)) else {
        return f64::INFINITY;
    };
    let mut worst = 0.0_f64;
    for ((v0, v1), perm) in e0.values.iter().zip(&e1.values).zip(&sigma.perms) {
        for (i, &target) in perm.iter().enumerate() {
            worst = worst.max((v1[target] - v0[i]).norm());
        }
    }
    worst
}

/// Independent bubble-sort decompositions agree; swaps are involutions and
/// satisfy the braid relation; eigenvalues follow σ; composition is coherent.
pub fn surgery_coherence(cfg: &Config, samples: usize) -> Check {
    let mut s = sampler(cfg, 6);
    let tol = cfg.tol;
    let eps = tol.eps_eq;
    let mut orders = 0.0_f64;
    let mut involution = 0.0_f64;
    let mut braid = 0.0_f64;
    let mut eigen = 0.0_f64;
    let mut compose = 0.0_f64;
    let mut errors = 0usize;
    for _ in 0..samples {
        let r = s.index(2, 5);
        let Ok(l) = s.generic_system(r, 0.1, &tol) else {
            errors += 1;
            continue;
        };
        let n = l.labels.len();
        let sigma = s.multi_permutation(n, r);
        let runs: Vec<_> = [
            BubbleOrder::Forward,
            BubbleOrder::Backward,
            BubbleOrder::OddEven,
        ]
        .into_iter()
        .map(|o| flag_surgery_with(&sigma, &l, o, eps))
        .collect();
        let Ok(first) = runs[0].clone() else {
            errors += 1;
            continue;
        };
        for run in &runs[1..] {
            match run {
                Ok(other) => orders = orders.max(system_flag_distance(&first, other)),
                Err(_) => errors += 1,
            }
        }
        eigen = eigen.max(permuted_eigen_gap(&l, &first, &sigma, eps));

        let t = s.index(0, n - 1);
        let p = s.index(0, r - 2);
        let swap = adjacent(n, r, t, p);
        match flag_surgery(&swap, &l, eps).and_then(|x| flag_surgery(&swap, &x, eps)) {
            Ok(back) => involution = involution.max(system_flag_distance(&l, &back)),
            Err(_) => errors += 1,
        }
        if r >= 3 {
            let p = s.index(0, r - 3);
            let a = adjacent(n, r, t, p);
            let b = adjacent(n, r, t, p + 1);
            let lhs = [&a, &b, &a]
                .into_iter()
                .try_fold(l.clone(), |acc, m| flag_surgery(m, &acc, eps));
            let rhs = [&b, &a, &b]
                .into_iter()
                .try_fold(l.clone(), |acc, m| flag_surgery(m, &acc, eps));
            match (lhs, rhs) {
                (Ok(x), Ok(y)) => braid = braid.max(system_flag_distance(&x, &y)),
                _ => errors += 1,
            }
        }
        let tau = s.multi_permutation(n, r);
        match compose_check(&tau, &sigma, &l, eps, tol.eps_flag) {
            Ok(rep) => compose = compose.max(rep.max_angle),
            Err(_) => errors += 1,
        }
    }
    let worst = orders.max(involution).max(braid).max(compose);
    Check::new(
        "surgery_coherence",
        errors == 0 && worst <= tol.eps_flag && eigen <= 1e-9,
        format!(
            "instances={samples} errors={errors} orders={} involution={} braid={} compose={} eigen={}",
            sci(orders),
            sci(involution),
            sci(braid),
            sci(compose),
            sci(eigen)
        ),
    )
}

/// Generic systems are irreducible (commutant 1); the trivial system with
/// standard flags has the upper-triangular commutant.
pub fn commutant_cases(cfg: &Config) -> Check {
    let mut s = sampler(cfg, 7);
    let tol = cfg.tol;
    let mut bad = Vec::new();
    for r in 1..=4 {
        if let Ok(l) = s.generic_system(r, 0.1, &tol) {
            let d = commutant_dimension(&l, 1e-8);
            if d != 1 {
                bad.push(format!("generic r={r} dim={d}"));
            }
        } else {
            bad.push(format!("generic r={r} invalid"));
        }
        let id = CMatrix::identity(r, r);
        let trivial = FilteredLocalSystem::new(
            r,
            0,
            vec![],
            vec![],
            vec!["t".into()],
            vec![id.clone()],
            vec![id],
            None,
            &tol,
        );
        match trivial.map(|l| commutant_dimension(&l, 1e-8)) {
            Ok(d) if d == r * (r + 1) / 2 => {}
            other => bad.push(format!("trivial r={r} {other:?}")),
        }
    }
    Check::new(
        "commutant",
        bad.is_empty(),
        if bad.is_empty() {
            "ranks=1..4".into()
        } else {
            bad.join("; ")
        },
    )
}

/// The conjugate chart inverts monodromy everywhere and conjugates it on
/// the unit circle.
pub fn conjugate_monodromy(cfg: &Config, samples: usize) -> Check {
    let mut s = sampler(cfg, 8);
    let mut inverse = 0.0_f64;
    let mut conjugate = 0.0_f64;
    for i in 0..samples {
        let r = 1 + i % 2;
        let points: Vec<KmsPoint> = (0..r).map(|_| s.kms_point(1.0)).collect();
        let on_circle = i % 4 < 2;
        let lambda = if on_circle {
            s.annulus(1.0, 1.0 + f64::EPSILON)
        } else {
            s.annulus(0.5, 2.0)
        };
        let lambda = if on_circle {
            lambda / lambda.norm()
        } else {
            lambda
        };
        let shadow = flowed_shadow(&["t".into()], &[points], lambda);
        let Ok(cs) = conjugate_shadow(&shadow) else {
            continue;
        };
        let mu = &shadow_monodromies(&shadow)[0];
        let mu_c = &shadow_monodromies(&cs)[0];
        let inv: Vec<Complex64> = mu.iter().map(|m| m.inv()).collect();
        inverse = inverse.max(relative_multiset_gap(&inv, mu_c));
        if on_circle {
            let conj: Vec<Complex64> = mu.iter().map(|m| m.conj()).collect();
            conjugate = conjugate.max(relative_multiset_gap(&conj, mu_c));
        }
    }
    Check::new(
        "conjugate_monodromy",
        inverse <= 1e-9 && conjugate <= 1e-9,
        format!(
            "samples={samples} inverse_gap={} conjugate_gap={}",
            sci(inverse),
            sci(conjugate)
        ),
    )
}

pub fn unit_circle_samples() -> Vec<Complex64> {
    (0..8)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * (2 * k + 1) as f64 / 8.0))
        .collect()
}

/// `glue_infinity` on eight points of `|λ| = 1` for a random rank-1 shadow
/// and the rank-2 model.
pub fn glue_unit_circle(cfg: &Config) -> Check {
    let mut s = sampler(cfg, 9);
    let rank_one = HarmonicShadow {
        rank: 1,
        genus: None,
        punctures: vec![Puncture {
            label: "t".into(),
            spectrum: KmsSpectrum::new(vec![KmsPoint::new(s.uniform(-0.9, 0.0), s.complex(1.0))]),
        }],
    };
    let mut failures = Vec::new();
    for (name, shadow) in [("rank1", &rank_one), ("model", &rank2_model())] {
        for lambda in unit_circle_samples() {
            match glue_infinity(shadow, lambda, cfg.window_anchor, cfg.tol.eps_eq, 1e-9) {
                Ok(r) if r.pass => {}
                Ok(_) => failures.push(format!("{name}@{:.3},{:.3}", lambda.re, lambda.im)),
                Err(e) => failures.push(format!("{name}: {e}")),
            }
        }
    }
    Check::new(
        "glue_infinity",
        failures.is_empty(),
        if failures.is_empty() {
            "samples=16".into()
        } else {
            failures.join("; ")
        },
    )
}

/// Closed-form roots of `λ² − nλ + 1 = 0` inside the annulus.
pub fn model_roots(region: &Region, n_max: i64) -> Vec<Complex64> {
    let mut out = Vec::new();
    for n in -n_max..=n_max {
        let n = n as f64;
        let disc = Complex64::new(n * n - 4.0, 0.0).sqrt();
        for root in [(n + disc) / 2.0, (n - disc) / 2.0] {
            if region.contains(root) && !out.iter().any(|z: &Complex64| (z - root).norm() < 1e-12) {
                out.push(root);
            }
        }
    }
    out
}

/// Δ on the rank-2 model over `0.1 ≤ |λ| ≤ 3` is exactly the in-region roots
/// of `λ² − nλ + 1`, and a grid scan finds nothing else.
pub fn model_walls(cfg: &Config) -> Check {
    let shadow = rank2_model();
    let region = Region::new(0.1, 3.0).expect("valid region");
    let delta = match delta_in_region(&shadow, &region, cfg.tol.eps_root, cfg.tol.eps_eq) {
        Ok(d) => d,
        Err(e) => return Check::new("model_delta", false, e.to_string()),
    };
    let x = shadow.punctures[0].spectrum.points[0];
    let y = shadow.punctures[0].spectrum.points[1];
    let expected = model_roots(&region, 40);
    let residual = delta
        .iter()
        .map(|d| crate::walls::flow_gap(x, y, d) / d.lambda.norm())
        .fold(0.0, f64::max);
    let found: Vec<Complex64> = delta.iter().map(|d| d.lambda).collect();
    let matched = found.len() == expected.len()
        && expected
            .iter()
            .all(|z| found.iter().any(|w| (z - w).norm() < 1e-9));
    let units = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
        .iter()
        .all(|&(re, im)| {
            found
                .iter()
                .any(|w| (w - Complex64::new(re, im)).norm() < 1e-9)
        });
    let missed = scan_for_missed(&shadow, &region, &delta, cfg.grid_resolution, 0.5);
    Check::new(
        "model_delta",
        matched && units && residual <= cfg.tol.eps_root && missed.is_empty(),
        format!(
            "found={} expected={} units={units} max_residual={} missed={}",
            found.len(),
            expected.len(),
            sci(residual),
            missed.len()
        ),
    )
}

/// Triple-overlap products on the generated cover of `|λ| ≤ 2` are the
/// identity normal form.
pub fn model_cocycle(cfg: &Config) -> Check {
    let shadow = rank2_model();
    let region = Region::new(0.1, 2.0).expect("valid region");
    let outcome = delta_in_region(&shadow, &region, cfg.tol.eps_root, cfg.tol.eps_eq)
        .map_err(SectionError::from)
        .and_then(|delta| {
            let discs = build_cover(&region, &delta, &CoverOptions::default())?;
            cocycle_check(&shadow, &discs, &delta, cfg.window_anchor, cfg.tol.eps_eq)
        });
    match outcome {
        Ok(r) => Check::new(
            "cocycle",
            r.pass() && r.triples_checked > 0,
            format!(
                "discs={} overlaps={} triples={} failures={} max_residual={}",
                r.discs,
                r.overlaps.len(),
                r.triples_checked,
                r.failures.len(),
                sci(r.max_residual)
            ),
        ),
        Err(e) => Check::new("cocycle", false, e.to_string()),
    }
}

/// Preferred-section paths preserve the monodromy multisets at every step.
pub fn path_monodromy(cfg: &Config) -> Check {
    let mut s = sampler(cfg, 10);
    let shadow = rank2_model();
    let opts = PathOptions {
        anchor: cfg.window_anchor,
        eps: cfg.tol.eps_eq,
        eps_root: cfg.tol.eps_root,
        ..PathOptions::default()
    };
    let mut paths: Vec<Vec<Complex64>> = vec![(0..=64)
        .map(|k| Complex64::from_polar(1.5, std::f64::consts::TAU * k as f64 / 64.0))
        .collect()];
    for _ in 0..12 {
        let n = s.index(2, 5);
        paths.push((0..n).map(|_| s.annulus(0.5, 2.5)).collect());
    }
    let mut worst = 0.0_f64;
    let mut traced = 0usize;
    let mut rejected = 0usize;
    let mut errors = Vec::new();
    for path in &paths {
        match trace_path(&shadow, path, &opts) {
            Ok(t) => {
                traced += 1;
                worst = worst.max(t.max_monodromy_gap);
            }
            Err(SectionError::PathThroughWall { .. }) => rejected += 1,
            Err(e) => errors.push(e.to_string()),
        }
    }
    Check::new(
        "path_monodromy",
        errors.is_empty() && traced > 0 && worst <= 1e-9,
        format!(
            "paths={} traced={traced} through_wall={rejected} max_gap={}{}",
            paths.len(),
            sci(worst),
            if errors.is_empty() {
                String::new()
            } else {
                format!(" errors={}", errors.join("; "))
            }
        ),
    )
}

/// Coefficients of `s^d` in `(1−s)^{−n0} (1−sw)^{−n1} (1−sw²)^{−n2}`, keyed
/// by the power of `w`, by truncated series multiplication.
pub fn generating_function_table(profile: &WeightProfile, d: u32) -> BTreeMap<u32, u128> {
    let d = d as usize;
    let wmax = 2 * d;
    // series[i][k] = coefficient of s^i w^k
    let mut series = vec![vec![0u128; wmax + 1]; d + 1];
    series[0][0] = 1;
    let factors = std::iter::repeat_n(0usize, profile.n0 as usize)
        .chain(std::iter::repeat_n(1, profile.n1 as usize))
        .chain(std::iter::repeat_n(2, profile.n2 as usize));
    for weight in factors {
        let mut next = vec![vec![0u128; wmax + 1]; d + 1];
        for i in 0..=d {
            for k in 0..=wmax {
                let c = series[i][k];
                if c == 0 {
                    continue;
                }
                let mut j = 0;
                while i + j <= d && k + j * weight <= wmax {
                    next[i + j][k + j * weight] += c;
                    j += 1;
                }
            }
        }
        series = next;
    }
    series[d]
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k as u32, c))
        .collect()
}

fn profiles(max: u32) -> impl Iterator<Item = WeightProfile> {
    (0..=max).flat_map(move |a| {
        (0..=max).flat_map(move |b| (0..=max).filter_map(move |c| WeightProfile::new(a, b, c).ok()))
    })
}

pub fn sym_exhaustive(max_n: u32, max_d: u32) -> Check {
    let mut failures = 0usize;
    let mut cases = 0usize;
    for p in profiles(max_n) {
        for d in 0..=max_d {
            cases += 1;
            if !sym_check(&p, d).pass {
                failures += 1;
            }
        }
    }
    Check::new(
        "sym_check",
        failures == 0,
        format!("cases={cases} failures={failures}"),
    )
}

pub fn generating_function_agreement(max_n: u32, max_d: u32) -> Check {
    let mut failures = 0usize;
    let mut cases = 0usize;
    for p in profiles(max_n) {
        for d in 0..=max_d {
            cases += 1;
            if weight_table(&p, d).entries != generating_function_table(&p, d) {
                failures += 1;
            }
        }
    }
    Check::new(
        "generating_function",
        failures == 0,
        format!("cases={cases} failures={failures}"),
    )
}

pub fn product_compatibility() -> Check {
    let mut pairs = 0u64;
    let mut failures = 0u64;
    for (n0, n1, n2, n) in [(1, 1, 1, 4), (2, 1, 1, 4), (2, 2, 2, 3)] {
        let p = WeightProfile::new(n0, n1, n2).expect("nonempty");
        let r = filtration_product_check(&p, n);
        pairs += r.pairs_checked;
        failures += r.failures;
    }
    Check::new(
        "filtration_product",
        failures == 0,
        format!("pairs={pairs} failures={failures}"),
    )
}

pub fn h0_examples() -> Check {
    let cases: [(Vec<(i64, u64)>, u128); 3] = [
        (vec![(0, 4)], 4),
        (vec![(1, 1)], 2),
        (vec![(0, 9), (1, 5), (2, 7)], 9 + 10 + 21),
    ];
    let ok = cases
        .iter()
        .all(|(w, expected)| twistor_h0(&w.iter().copied().collect()) == Ok(*expected))
        && twistor_h0(&[(-1, 1)].into()).is_err();
    Check::new("h0", ok, "cases=4".into())
}
