//! Desk-scale analysis of finite-dimensional quantum channels.
//!
//! The crate computes the two classical capacities of a channel Φ given by a
//! Kraus family — the unassisted (Holevo) capacity C̄(Φ) and the
//! entanglement-assisted capacity C_ea(Φ) — together with the quantities that
//! control the gap between them: complementary channels, the χ-function and
//! its decomposition optimizers, the gap function Δ_Φ and the noise parameter
//! D(Φ), energy-constrained variants of both capacities, and Petz recovery
//! maps used to certify or refute C̄(Φ) = C_ea(Φ).
//!
//! All dimensions are "desk scale": dense matrices up to d ≈ 64, a hand-rolled
//! Jacobi eigensolver, and multi-start first-order optimizers that are
//! deterministic for a fixed seed. Entropies are in bits (base-2 logarithms)
//! throughout.

pub mod capacity;
pub mod channels;
pub mod entropy;
pub mod matops;
pub mod petz;
pub mod rand_gen;

use thiserror::Error;

/// Relative spectral cutoff: eigenvalues at or below `SUPPORT_CUTOFF` times the
/// largest eigenvalue are treated as zero (outside the support).
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// Tolerance for Hermiticity checks (max-abs deviation from the adjoint).
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Eigenvalues below `-NEGATIVE_EIGENVALUE_TOL` make a matrix fail a
/// positive-semidefiniteness check; anything in `[-tol, 0)` is clipped to 0.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-9;

/// Tolerance for Kraus completeness (‖Σ V†V − I‖ in max-abs norm).
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Errors for channel construction and capacity computation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tol:.1e}")]
    NonHermitian { deviation: f64, tol: f64 },

    #[error("matrix has negative eigenvalue {eigenvalue:.3e}")]
    NegativeSpectrum { eigenvalue: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("trace must be 1, got {0}")]
    NonUnitTrace(f64),

    #[error("channel has no Kraus operators")]
    EmptyKraus,

    #[error("Kraus family is not trace-preserving: completeness deviation {deviation:.3e}")]
    NotTracePreserving { deviation: f64 },

    #[error("Choi matrix is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotCompletelyPositive(f64),

    #[error("vectors do not resolve the identity on the environment: deviation {0:.3e}")]
    NotOvercomplete(f64),

    #[error("matrix is not unitary: deviation {0:.3e}")]
    NotUnitary(f64),

    #[error("covariance not verified: {0}")]
    CovarianceNotVerified(String),

    #[error("ensemble has no members")]
    EmptyEnsemble,

    #[error("ensemble weights must be nonnegative and sum to 1, got sum {0}")]
    InvalidWeights(f64),

    #[error("basis is not orthonormal: deviation {0:.3e}")]
    NotOrthonormal(f64),

    #[error("constraint is infeasible: {0}")]
    Infeasible(String),

    #[error("constraint observable is proportional to the identity")]
    DegenerateObservable,

    #[error("recovery base state has empty support")]
    DegenerateBase,
}

pub type Result<T> = std::result::Result<T, Error>;
