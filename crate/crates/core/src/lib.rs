//! Spectral shadow engine for the Deligne-Hitchin moduli groupoid of a
//! punctured curve.
//!
//! The crate works entirely with finite-dimensional stand-ins ("shadows") of
//! the analytic objects: KMS spectra of tame harmonic bundles and their flow
//! across the twistor line, residual-eigenvalue tuples acted on by the Hecke
//! gauge groupoid, concrete filtered local systems on the Betti side, and the
//! monomial bookkeeping of the weight filtration on a formal completion.
//!
//! Module map:
//!
//! * [`kms`]: KMS points, the Sabbah-Mochizuki flow, lattice shifts, orderings.
//! * [`hecke`]: generator actions, words, normal forms, orbits, Deligne normalization.
//! * [`betti`]: filtered local systems, the eigenvalue map, flag surgery.
//! * [`rh`]: level choices, real jumps, monodromy, conjugate chart.
//! * [`walls`]: the collision set, level walls and adapted covers of the λ-plane.
//! * [`section`]: preferred-section samples, transitions, cocycles, gluing.
//! * [`twistor`]: weight tables and the symmetric-power check.
//! * [`suites`]: randomized invariant suites shared by tests and the CLI.

pub mod betti;
pub mod config;
pub mod hecke;
pub mod kms;
pub mod random;
pub mod rh;
pub mod section;
pub mod suites;
pub mod twistor;
pub mod walls;

pub use num_complex::Complex64;

pub use config::{Config, Tolerances};
pub use kms::{flow, FlowValue, HarmonicShadow, KmsPoint, KmsSpectrum};
