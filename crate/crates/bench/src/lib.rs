//! Shared fixtures for the pipeline benchmarks.

use dirac_spectral::potential::{build_qb, PeriodicFunction, PotentialQ};
use dirac_spectral::C64;

/// Reference potential with a small harmonic perturbation on the diagonal.
pub fn perturbed_potential() -> PotentialQ {
    let mut q = build_qb(C64::new(1.2, 0.0));
    q.a1 = PeriodicFunction::from_fourier(&[(1, C64::new(0.1, 0.0))]);
    q
}
