//! Spectral structure of the assembled operator.
//!
//! The steering construction works entirely through the eigenpairs of the
//! operator A = (a u_x)_x + α u: the control synthesis places the target
//! in the kernel of A, the horizon choice is governed by the spectral gap
//! λ₂ − λ₁, and the error analysis expands states in the orthonormal
//! eigenbasis. This module computes the full decomposition of −A (so the
//! eigenvalues λ_k are ascending and bounded below), normalizes the modes
//! in the discrete L² inner product, and exposes the projection and
//! Parseval diagnostics the rest of the pipeline consumes.
//!
//! Sign convention: every mode is flipped so its inner product with the
//! constant field is nonnegative (first-nonzero-entry-positive when that
//! inner product vanishes exactly), which makes decompositions
//! deterministic and comparable across runs.

use crate::coefficient::DiffusionCoefficient;
use crate::discretization::{
    inner_product, weighted_seminorm_squared, AssembledOperator, StateField,
};
use crate::error::Result;
use crate::linalg::symmetric_tridiagonal_eigen;

/// Gap below which [`SpectralDecomposition::has_small_gap`] warns that
/// horizon selection divides by an essentially vanishing rate.
pub const SMALL_GAP_FLOOR: f64 = 1e-8;

/// Slack accepted by [`rayleigh_check`] on top of the weighted seminorm.
pub const RAYLEIGH_SLACK: f64 = 1e-9;

/// Full eigendecomposition of −A on its grid.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub(crate) lambdas: Vec<f64>,
    pub(crate) modes: Vec<StateField>,
    pub(crate) gap: f64,
}

impl SpectralDecomposition {
    /// Eigenvalues of −A in ascending order (A ω_k = −λ_k ω_k).
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Modes ω_k, orthonormal in the discrete inner product, ordered
    /// like [`Self::lambdas`].
    pub fn modes(&self) -> &[StateField] {
        &self.modes
    }

    /// Ground mode ω₁.
    pub fn ground_mode(&self) -> &StateField {
        &self.modes[0]
    }

    /// Spectral gap λ₂ − λ₁.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Number of eigenpairs (equals the number of grid cells).
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    /// Whether the decomposition is empty (never for a built grid).
    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// True when the spectral gap is too small for horizon selection to
    /// be meaningful.
    pub fn has_small_gap(&self) -> bool {
        self.gap < SMALL_GAP_FLOOR
    }
}

/// Computes all eigenpairs of −op.
///
/// Modes are rescaled to unit norm in the discrete inner product
/// (Euclidean norm 1/√h) and sign-normalized against the constant field.
pub fn eigendecompose(op: &AssembledOperator) -> Result<SpectralDecomposition> {
    let grid = op.grid();
    let neg_diag: Vec<f64> = op.diag().iter().map(|d| -d).collect();
    let neg_off: Vec<f64> = op.offdiag().iter().map(|e| -e).collect();
    let (lambdas, vectors) = symmetric_tridiagonal_eigen(&neg_diag, &neg_off)?;

    let scale = 1.0 / grid.h().sqrt();
    let modes = vectors
        .into_iter()
        .map(|mut column| {
            let overlap: f64 = column.iter().sum();
            let flip = if overlap < 0.0 {
                true
            } else if overlap > 0.0 {
                false
            } else {
                column
                    .iter()
                    .find(|v| **v != 0.0)
                    .map_or(false, |first| *first < 0.0)
            };
            let factor = if flip { -scale } else { scale };
            for v in &mut column {
                *v *= factor;
            }
            StateField::from_values(grid, column)
        })
        .collect::<Result<Vec<_>>>()?;

    let gap = lambdas[1] - lambdas[0];
    Ok(SpectralDecomposition {
        lambdas,
        modes,
        gap,
    })
}

/// Coefficients c_k = ⟨v, ω_k⟩ for k = 1..k_max.
///
/// `k_max` must not exceed the number of modes.
pub fn project(decomp: &SpectralDecomposition, v: &StateField, k_max: usize) -> Result<Vec<f64>> {
    assert!(
        k_max <= decomp.len(),
        "requested {k_max} coefficients from a {}-mode decomposition",
        decomp.len()
    );
    decomp.modes[..k_max]
        .iter()
        .map(|mode| inner_product(v, mode))
        .collect()
}

/// Reassembles Σ c_k ω_k from expansion coefficients.
///
/// Fewer coefficients than modes truncates the expansion.
pub fn reconstruct(decomp: &SpectralDecomposition, coefficients: &[f64]) -> StateField {
    assert!(
        coefficients.len() <= decomp.len(),
        "more coefficients than modes"
    );
    let grid = decomp.modes[0].grid();
    let mut values = vec![0.0; grid.n_cells()];
    for (c, mode) in coefficients.iter().zip(&decomp.modes) {
        for (slot, m) in values.iter_mut().zip(mode.values()) {
            *slot += c * m;
        }
    }
    StateField::from_values(grid, values).expect("values built to grid length")
}

/// Completeness defect |‖v‖² − Σ_k c_k²| over all modes.
pub fn parseval_defect(decomp: &SpectralDecomposition, v: &StateField) -> Result<f64> {
    let coefficients = project(decomp, v, decomp.len())?;
    let sum_sq: f64 = coefficients.iter().map(|c| c * c).sum();
    let norm_sq = inner_product(v, v)?;
    Ok((norm_sq - sum_sq).abs())
}

/// Variational inequality ⟨α* u, u⟩ ≤ |u|²_{1,a} for synthesized controls.
///
/// Returns true when the inequality holds with a small absolute-plus-
/// relative slack accounting for roundoff in both quadratic forms.
pub fn rayleigh_check(
    coeff: &DiffusionCoefficient,
    alpha_star: &StateField,
    u: &StateField,
) -> Result<bool> {
    let weighted = StateField::from_values(
        u.grid(),
        alpha_star
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, v)| a * v)
            .collect(),
    )?;
    let lhs = inner_product(&weighted, u)?;
    let norm_sq = inner_product(u, u)?;
    let rhs = weighted_seminorm_squared(coeff, u) + RAYLEIGH_SLACK * (1.0 + norm_sq);
    Ok(lhs <= rhs)
}
