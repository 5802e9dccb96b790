use crate::C64;

/// Errors shared by the numeric modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("argument x = {x} lies outside the base period [0, π]")]
    DomainX { x: f64 },

    #[error("integration step size underflow at x = {x} for λ = {lambda}")]
    StepSizeUnderflow { x: f64, lambda: C64 },

    #[error(
        "contour passes too close to a root of the characteristic function \
         (min sampled |Δ| = {min_abs:.3e}); retry with boundary jitter ≈ {suggested_jitter:.3e}"
    )]
    ContourOnRoot { min_abs: f64, suggested_jitter: f64 },

    #[error("winding number did not stabilize on contour (residual phase {residual:.3e})")]
    WindingNonconvergence { residual: f64 },

    #[error("eigenvector system degenerate at λ = {lambda}: s1(π), c2(π) both ≈ 0 while c1(π) ≠ e^{{iπt}}")]
    DegenerateEigenvector { lambda: C64 },

    #[error("no adjoint eigenvalue within {tol:.3e} of conj(λ); nearest at distance {dist:.3e}")]
    AdjointPairing { dist: f64, tol: f64 },

    #[error("near-degenerate biorthogonal pairing |α| = {alpha_abs:.3e}")]
    DegeneratePairing { alpha_abs: f64 },

    #[error("Newton iteration failed to converge from λ0 = {start} (last |Δ| = {last_abs:.3e})")]
    NewtonDiverged { start: C64, last_abs: f64 },

    #[error("separation condition fails (Re b = 0): spectral expansion not available")]
    Condition2Failed,

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
