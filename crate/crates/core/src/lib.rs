//! Bloch spectra of one-dimensional Dirac operators `J y' + Q y = λ y` with
//! complex-valued π-periodic 2×2 matrix potentials `Q`.
//!
//! The crate computes, at desk scale:
//!
//! - the monodromy matrix, Hill discriminant `F(λ)` and Wronskian `W(π,λ)`
//!   of the fundamental system ([`monodromy`]),
//! - eigenvalues of the quasi-periodic fiber operators `L_t(Q)` together
//!   with eigenfunctions, adjoint eigenfunctions and their biorthogonal
//!   pairing ([`bloch`]),
//! - integral conditions on the potential, resolvent-circle certificates and
//!   projection-norm scans that classify the line operator as spectral /
//!   asymptotically spectral ([`potential`], [`spectrality`]),
//! - spectral expansions of square-integrable vector functions and their
//!   truncation errors ([`expansion`]).
//!
//! All operations are pure value-semantic computations; everything can be
//! called concurrently from any number of workers.

pub mod bloch;
pub mod contour;
pub mod error;
pub mod expansion;
pub mod mat2;
pub mod monodromy;
pub mod potential;
pub mod quad;
pub mod spectrality;

pub use error::Error;
pub use mat2::{Mat2, Vec2};
pub use potential::{ConditionMargin, PeriodicFunction, PotentialQ, SignBranch};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Result alias for fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;
