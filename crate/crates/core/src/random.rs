//! Seeded generators for the randomized invariant suites.
//!
//! Everything is driven by a single [`ChaCha8Rng`], so a seed fixes every
//! sample drawn from a [`Sampler`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::betti::{orthonormal_flag, BettiError, CMatrix, FilteredLocalSystem, MultiPermutation};
use crate::config::Tolerances;
use crate::hecke::{Factor, Generator, GroupoidWord, ResidueShadow};
use crate::kms::KmsPoint;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn index(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    /// Uniform in the square `[−scale, scale]²`.
    pub fn complex(&mut self, scale: f64) -> Complex64 {
        Complex64::new(self.uniform(-scale, scale), self.uniform(-scale, scale))
    }

    /// Uniform in the annulus `lo ≤ |z| ≤ hi` (by radius and angle).
    pub fn annulus(&mut self, lo: f64, hi: f64) -> Complex64 {
        let r = self.uniform(lo, hi);
        let t = self.uniform(0.0, std::f64::consts::TAU);
        Complex64::from_polar(r, t)
    }

    pub fn kms_point(&mut self, scale: f64) -> KmsPoint {
        KmsPoint::new(self.uniform(-scale, scale), self.complex(scale))
    }

    pub fn labels(&self, k: usize) -> Vec<String> {
        (0..k).map(|i| format!("p{i}")).collect()
    }

    pub fn residue_shadow(
        &mut self,
        rank: usize,
        punctures: usize,
        lambda: Complex64,
    ) -> ResidueShadow {
        let labels = self.labels(punctures);
        let data = labels
            .into_iter()
            .map(|l| (l, (0..rank).map(|_| self.complex(2.0)).collect()))
            .collect();
        ResidueShadow::new(lambda, data, 0).expect("ranks agree by construction")
    }

    pub fn factor(&mut self, labels: &[String], rank: usize) -> Factor {
        let label = labels.choose(&mut self.rng).expect("at least one puncture");
        let kinds = if rank >= 2 { 3 } else { 2 };
        let gen = match self.rng.gen_range(0..kinds) {
            0 => Generator::h(label),
            1 => Generator::u(label),
            _ => Generator::t(label, self.rng.gen_range(1..rank)),
        };
        if self.rng.gen_bool(0.5) {
            Factor::inv(gen)
        } else {
            Factor::new(gen)
        }
    }

    pub fn word(&mut self, labels: &[String], rank: usize, len: usize) -> GroupoidWord {
        GroupoidWord::from_factors((0..len).map(|_| self.factor(labels, rank)).collect())
    }

    pub fn permutation(&mut self, r: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..r).collect();
        p.shuffle(&mut self.rng);
        p
    }

    pub fn multi_permutation(&mut self, punctures: usize, r: usize) -> MultiPermutation {
        MultiPermutation {
            perms: (0..punctures).map(|_| self.permutation(r)).collect(),
        }
    }

    pub fn matrix(&mut self, r: usize) -> CMatrix {
        DMatrix::from_fn(r, r, |_, _| self.complex(1.0))
    }

    /// An invertible matrix, redrawn until its smallest singular value is
    /// comfortably away from zero.
    pub fn well_conditioned(&mut self, r: usize) -> CMatrix {
        loop {
            let m = self.matrix(r) + CMatrix::identity(r, r) * Complex64::new(1.5, 0.0);
            let sv = m.clone().svd(false, false).singular_values;
            if sv.min() > 0.2 {
                return m;
            }
        }
    }

    /// Unit-modulus-ish eigenvalues with pairwise gaps of at least `gap`.
    pub fn distinct_eigenvalues(&mut self, r: usize, gap: f64) -> Vec<Complex64> {
        loop {
            let vals: Vec<Complex64> = (0..r).map(|_| self.annulus(0.5, 1.5)).collect();
            let ok = (0..r).all(|i| (i + 1..r).all(|j| (vals[i] - vals[j]).norm() >= gap));
            if ok {
                return vals;
            }
        }
    }

    /// `γ = P·T·P⁻¹` with `T` upper triangular on a prescribed distinct
    /// diagonal. The columns of `P` span an invariant complete flag.
    pub fn triangularizable(&mut self, r: usize, gap: f64) -> (CMatrix, CMatrix) {
        let diag = self.distinct_eigenvalues(r, gap);
        let mut t = CMatrix::zeros(r, r);
        for i in 0..r {
            t[(i, i)] = diag[i];
            for j in i + 1..r {
                t[(i, j)] = self.complex(0.5);
            }
        }
        let p = self.well_conditioned(r);
        let pinv = p.clone().try_inverse().expect("well conditioned");
        (&p * t * pinv, p)
    }

    /// A genus-0 filtered local system with two punctures: `γ₂ = γ₁⁻¹`, both
    /// carrying the flag from the triangularizing basis of `γ₁`.
    pub fn inverse_pair_system(
        &mut self,
        r: usize,
        tol: &Tolerances,
    ) -> Result<FilteredLocalSystem, BettiError> {
        let (g1, p) = self.triangularizable(r, 0.2);
        let g2 = g1.clone().try_inverse().expect("nonzero eigenvalues");
        FilteredLocalSystem::new(
            r,
            0,
            vec![],
            vec![],
            self.labels(2),
            vec![g1, g2],
            vec![p.clone(), p],
            None,
            tol,
        )
    }

    /// A genus-0 system with three punctures: independent triangularizable
    /// `γ₁, γ₂` and `γ₃ = (γ₁γ₂)⁻¹` flagged by its Schur basis. Retries until
    /// the eigenvalues of `γ₃` are separated by `gap`.
    pub fn generic_system(
        &mut self,
        r: usize,
        gap: f64,
        tol: &Tolerances,
    ) -> Result<FilteredLocalSystem, BettiError> {
        loop {
            let (g1, p1) = self.triangularizable(r, gap);
            let (g2, p2) = self.triangularizable(r, gap);
            let Some(g3) = (&g1 * &g2).try_inverse() else {
                continue;
            };
            let (q3, t3) = g3.clone().schur().unpack();
            let diag: Vec<Complex64> = (0..r).map(|i| t3[(i, i)]).collect();
            let separated = (0..r).all(|i| (i + 1..r).all(|j| (diag[i] - diag[j]).norm() >= gap));
            if !separated {
                continue;
            }
            return FilteredLocalSystem::new(
                r,
                0,
                vec![],
                vec![],
                self.labels(3),
                vec![g1, g2, g3],
                vec![orthonormal_flag(&p1), orthonormal_flag(&p2), q3],
                None,
                tol,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Sampler::new(7);
        let mut b = Sampler::new(7);
        for _ in 0..20 {
            assert_eq!(a.complex(3.0), b.complex(3.0));
        }
        let la = a.labels(2);
        assert_eq!(a.word(&la, 3, 5), b.word(&la, 3, 5));
    }

    #[test]
    fn generated_systems_validate() {
        let tol = Tolerances::default();
        let mut s = Sampler::new(11);
        for r in 1..=5 {
            let l = s.inverse_pair_system(r, &tol).unwrap();
            assert!(l.surface_residual().unwrap() < 1e-9);
            let l = s.generic_system(r, 0.1, &tol).unwrap();
            assert!(l.surface_residual().unwrap() < 1e-8);
        }
    }

    #[test]
    fn permutations_are_valid() {
        let mut s = Sampler::new(3);
        let m = s.multi_permutation(3, 5);
        assert!(m.is_valid(5));
    }
}
