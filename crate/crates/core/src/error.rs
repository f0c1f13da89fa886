//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. Variants carry
//! the numbers that triggered them so callers can report actionable
//! diagnostics without re-deriving state.

use thiserror::Error;

/// Errors produced by coefficient construction, discretization, spectral
/// analysis, control synthesis, and time integration.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A diffusion coefficient evaluated to a non-positive value strictly
    /// inside (-1, 1), where positivity is required.
    #[error("diffusion coefficient is not positive in the interior: a({x}) = {value}")]
    NonPositiveInterior { x: f64, value: f64 },

    /// A scalar parameter was outside its admissible range.
    #[error("invalid parameter {name} = {value}: {requirement}")]
    BadParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// A tabulated coefficient violated the table contract.
    #[error("bad coefficient table: {reason}")]
    BadTable { reason: String },

    /// The integrability classifier could not stabilize its tail
    /// extrapolation for a tabulated coefficient.
    #[error("integrability test inconclusive for tabulated coefficient: {detail}")]
    InconclusiveIntegrability { detail: String },

    /// Grid construction was asked for fewer cells than the scheme supports.
    #[error("grid needs at least {min} cells, got {requested}")]
    TooFewCells { requested: usize, min: usize },

    /// Two fields (or a field and an operator) live on incompatible grids.
    #[error("grid mismatch: {left} cells vs {right} cells")]
    GridMismatch { left: usize, right: usize },

    /// An evolution trace holds no snapshots.
    #[error("evolution trace is empty")]
    EmptyTrace,

    /// The tridiagonal eigensolver exceeded its iteration cap.
    #[error("eigensolver failed to converge at index {index} after {iterations} iterations")]
    ConvergenceFailure { index: usize, iterations: usize },

    /// A raw target profile had a genuinely negative sample.
    #[error("target profile is negative at x = {x}: {value}")]
    NegativeTarget { x: f64, value: f64 },

    /// A target profile is too close to zero to divide by.
    #[error("target minimum {min_value} is below the synthesis floor {floor}")]
    DegenerateTarget { min_value: f64, floor: f64 },

    /// An initial state violated the nonnegativity configuration.
    #[error("initial state is negative at x = {x}: {value}")]
    NotNonnegative { x: f64, value: f64 },

    /// An initial state was identically zero.
    #[error("initial state has zero norm")]
    ZeroInitialState,

    /// The initial state has no positive component along the target.
    #[error("inner product of initial state with target is not positive: {overlap}")]
    NonpositiveOverlap { overlap: f64 },

    /// The spectral gap above the ground mode is too small to set a horizon.
    #[error("second eigenvalue {lambda2} is below the usable floor {floor}")]
    NonpositiveGap { lambda2: f64, floor: f64 },

    /// A control-rate computation was asked to divide by a zero horizon.
    #[error("horizon is zero; steering rate is undefined")]
    ZeroHorizon,

    /// The computed ground mode does not match the normalized target.
    #[error("ground mode deviates from normalized target by {distance} (limit {limit})")]
    GroundModeMismatch { distance: f64, limit: f64 },

    /// The synthesized operator's bottom eigenvalue failed to vanish.
    #[error("ground eigenvalue {lambda1} is not zero within {tolerance} (lambda2 = {lambda2})")]
    GroundEigenvalueNonzero {
        lambda1: f64,
        lambda2: f64,
        tolerance: f64,
    },

    /// A certified-positivity run was configured with a step size that
    /// breaks the M-matrix bound.
    #[error("time step {dt} breaks the positivity bound {limit} (max reaction {max_reaction})")]
    StepTooLarge {
        dt: f64,
        limit: f64,
        max_reaction: f64,
    },

    /// The tridiagonal linear solver hit a vanishing pivot.
    #[error("tridiagonal solve broke down at row {row} with pivot {pivot}")]
    SolverBreakdown { row: usize, pivot: f64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
