//! Numerical steering of degenerate diffusion by multiplicative controls.
//!
//! This crate discretizes the one-dimensional divergence-form equation
//!
//! ```text
//! v_t = (a(x) v_x)_x + alpha(x) v        on (-1, 1),
//! ```
//!
//! where the diffusion coefficient `a` is positive inside the interval but
//! may vanish at both endpoints (the degenerate case; `a = 1 - x^2` is the
//! latitude form used in energy-balance climate models). The natural
//! boundary condition is vanishing diffusive flux `a v_x` at x = +-1; for
//! strongly degenerate coefficients no condition can be imposed at all and
//! the flux vanishes on its own.
//!
//! The library's point is constructive: given a strictly positive target
//! profile, it synthesizes a static multiplicative control `alpha` that
//! makes the target the ground mode of the operator, then picks a horizon
//! and a constant offset so the semigroup carries a given initial state to
//! within a prescribed distance of the target. Everything needed for that
//! pipeline lives here:
//!
//! * [`coefficient`] — coefficient families and degeneracy classification;
//! * [`discretization`] — cell-centered finite volumes, discrete inner
//!   products, the assembled symmetric tridiagonal operator;
//! * [`spectral`] — full eigendecomposition, projections, and the
//!   inequalities the construction leans on;
//! * [`control`] — target conditioning, control synthesis, horizon and
//!   offset selection;
//! * [`evolution`] — spectral and implicit time integrators with the
//!   qualitative checks (positivity, energy envelopes, tail decay).

pub mod coefficient;
pub mod control;
pub mod discretization;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod spectral;

pub use coefficient::{
    classify_degeneracy, CoefficientKind, DegeneracyReport, DiffusionCoefficient,
};
pub use control::{
    build_plan, check_admissibility, choose_beta, choose_horizon, mollify_target,
    synthesize_alpha_star, ControlPlan, Horizon, SteeringMode, SynthesisOutcome, TargetState,
};
pub use discretization::{
    b_norm, build_grid, inner_product, norm, weighted_seminorm, weighted_seminorm_squared,
    AssembledOperator, Grid, StateField,
};
pub use error::{Error, Result};
pub use evolution::{
    check_nonnegativity, evolve_implicit, evolve_spectral, gronwall_envelope, negative_part,
    remainder_decay, steering_error, EvolutionTrace, ImplicitOptions, ImplicitScheme,
    NonnegativityReport, DEFAULT_SNAPSHOTS,
};
pub use spectral::{
    eigendecompose, parseval_defect, project, rayleigh_check, reconstruct, SpectralDecomposition,
};
