//! Cell-centered finite-volume discretization on (−1, 1).
//!
//! The operator u ↦ (a u_x)_x + α u is discretized on a uniform grid of
//! `n` cells with unknowns at cell centers. Fluxes a u_x are evaluated at
//! cell faces with the diffusion coefficient sampled there, and the
//! weighted Neumann condition a u_x → 0 at x = ±1 is encoded exactly by
//! omitting the two boundary fluxes — no ghost values and no division by
//! the vanishing coefficient. The resulting matrix is symmetric
//! tridiagonal with nonnegative off-diagonal entries a(x_{i+1/2})/h², its
//! row sums vanish when α ≡ 0 (discrete conservation), and the associated
//! quadratic form reproduces the weighted seminorm |u|_{1,a} by a discrete
//! summation by parts, so the α ≡ 0 operator is dissipative by
//! construction.
//!
//! Inner products use the midpoint rule h·Σ u_i w_i, which is what makes
//! the tridiagonal representation self-adjoint in the plain discrete L²
//! pairing.

use std::sync::Arc;

use crate::coefficient::DiffusionCoefficient;
use crate::error::{Error, Result};

/// Minimum number of cells for which the stencil makes sense.
pub const MIN_CELLS: usize = 4;

/// Uniform cell-centered grid on (−1, 1).
///
/// Centers and faces are computed from integer indices in a form that is
/// exactly antisymmetric under x ↦ −x, and the outermost faces are exactly
/// ±1.
#[derive(Debug)]
pub struct Grid {
    n_cells: usize,
    h: f64,
    centers: Vec<f64>,
    faces: Vec<f64>,
}

impl Grid {
    /// Number of cells.
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width 2/n.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell centers x_i = −1 + (i + 1/2)h, strictly inside (−1, 1).
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Cell faces x_{i+1/2} = −1 + i·h, including the endpoints ±1.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }
}

/// Builds the uniform cell-centered grid with `n_cells` cells.
pub fn build_grid(n_cells: usize) -> Result<Arc<Grid>> {
    if n_cells < MIN_CELLS {
        return Err(Error::TooFewCells {
            requested: n_cells,
            min: MIN_CELLS,
        });
    }
    let n = n_cells as f64;
    // (2i + 1 − n)/n negates exactly under i ↦ n−1−i, so the grid is
    // bitwise antisymmetric; faces (2i − n)/n hit ±1 exactly at i = 0, n.
    let centers = (0..n_cells).map(|i| ((2 * i + 1) as f64 - n) / n).collect();
    let faces = (0..=n_cells).map(|i| (2 * i) as f64 / n - 1.0).collect();
    Ok(Arc::new(Grid {
        n_cells,
        h: 2.0 / n,
        centers,
        faces,
    }))
}

pub(crate) fn ensure_same_grid(left: &Grid, right: &Grid) -> Result<()> {
    if left.n_cells != right.n_cells {
        return Err(Error::GridMismatch {
            left: left.n_cells,
            right: right.n_cells,
        });
    }
    Ok(())
}

/// A scalar field sampled at cell centers.
#[derive(Debug, Clone)]
pub struct StateField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl StateField {
    /// Wraps raw per-cell values, checking the length against the grid.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch {
                left: grid.n_cells(),
                right: values.len(),
            });
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Field that is identically zero.
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Field that is identically `value`.
    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![value; grid.n_cells()],
        }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: grid.centers().iter().map(|&x| f(x)).collect(),
        }
    }

    /// The grid this field lives on.
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Per-cell values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the field has no cells (never true for a built grid).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `f` to every value, yielding a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Midpoint-rule inner product h·Σ u_i w_i.
pub fn inner_product(u: &StateField, w: &StateField) -> Result<f64> {
    ensure_same_grid(u.grid(), w.grid())?;
    let dot: f64 = u.values().iter().zip(w.values()).map(|(a, b)| a * b).sum();
    Ok(u.grid().h() * dot)
}

/// Discrete L² norm induced by [`inner_product`].
pub fn norm(u: &StateField) -> f64 {
    inner_product(u, u)
        .expect("a field always matches its own grid")
        .max(0.0)
        .sqrt()
}

/// Square of the weighted seminorm Σ a(x_{i+1/2})·((u_{i+1}−u_i)/h)²·h
/// over the interior faces.
pub fn weighted_seminorm_squared(coeff: &DiffusionCoefficient, u: &StateField) -> f64 {
    let grid = u.grid();
    let h = grid.h();
    let values = u.values();
    let mut sum = 0.0;
    for i in 0..values.len() - 1 {
        let face = grid.faces()[i + 1];
        let slope = (values[i + 1] - values[i]) / h;
        sum += coeff.a(face) * slope * slope * h;
    }
    sum
}

/// Discrete weighted seminorm |u|_{1,a} ≈ ‖√a u_x‖.
pub fn weighted_seminorm(coeff: &DiffusionCoefficient, u: &StateField) -> f64 {
    weighted_seminorm_squared(coeff, u).max(0.0).sqrt()
}

/// Symmetric tridiagonal finite-volume operator for u ↦ (a u_x)_x + α u.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    grid: Arc<Grid>,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    alpha: StateField,
}

impl AssembledOperator {
    /// Assembles the operator on `grid` with diffusion coefficient
    /// `coeff` and multiplicative coefficient `alpha`.
    pub fn assemble(
        grid: &Arc<Grid>,
        coeff: &DiffusionCoefficient,
        alpha: &StateField,
    ) -> Result<Self> {
        ensure_same_grid(grid, alpha.grid())?;
        let n = grid.n_cells();
        let h = grid.h();
        let inv_h2 = 1.0 / (h * h);
        let offdiag: Vec<f64> = (0..n - 1)
            .map(|i| coeff.a(grid.faces()[i + 1]) * inv_h2)
            .collect();
        let alpha_values = alpha.values();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i > 0 { offdiag[i - 1] } else { 0.0 };
                let right = if i + 1 < n { offdiag[i] } else { 0.0 };
                alpha_values[i] - left - right
            })
            .collect();
        Ok(Self {
            grid: Arc::clone(grid),
            diag,
            offdiag,
            alpha: alpha.clone(),
        })
    }

    /// The grid the operator acts on.
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Main diagonal of the tridiagonal matrix.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal a(x_{i+1/2})/h² shared by both triangles.
    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// The sampled multiplicative coefficient.
    pub fn alpha(&self) -> &StateField {
        &self.alpha
    }

    /// Applies the operator in flux form:
    /// (Op·u)_i = [F_{i+1/2} − F_{i−1/2}]/h² + α_i u_i with
    /// F = a·Δu and the boundary fluxes omitted. Differencing u before
    /// multiplying keeps constants exactly in the kernel of the α ≡ 0
    /// part.
    pub fn apply(&self, u: &StateField) -> Result<StateField> {
        ensure_same_grid(&self.grid, u.grid())?;
        let n = self.grid.n_cells();
        let values = u.values();
        let alpha = self.alpha.values();
        // offdiag already carries the 1/h² scaling, so each term is a
        // scaled flux and the two boundary fluxes are simply absent.
        let mut out = vec![0.0; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut flux = 0.0;
            if i + 1 < n {
                flux += self.offdiag[i] * (values[i + 1] - values[i]);
            }
            if i > 0 {
                flux -= self.offdiag[i - 1] * (values[i] - values[i - 1]);
            }
            *slot = flux + alpha[i] * values[i];
        }
        StateField::from_values(&self.grid, out)
    }

    /// Quadratic form ⟨Op·u, u⟩ in the discrete inner product.
    pub fn quadratic_form(&self, u: &StateField) -> Result<f64> {
        inner_product(&self.apply(u)?, u)
    }

    /// Writes (Op + shift·I)·u into `out` without allocating; the hot
    /// path of the implicit time integrators.
    pub(crate) fn apply_shifted_into(&self, shift: f64, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n_cells();
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(out.len(), n);
        let alpha = self.alpha.values();
        for (i, slot) in out.iter_mut().enumerate() {
            let mut flux = 0.0;
            if i + 1 < n {
                flux += self.offdiag[i] * (u[i + 1] - u[i]);
            }
            if i > 0 {
                flux -= self.offdiag[i - 1] * (u[i] - u[i - 1]);
            }
            *slot = flux + (alpha[i] + shift) * u[i];
        }
    }
}

/// Mixed space–time energy of a trace: sup_t ‖v(t)‖² plus twice the
/// time-trapezoid of the weighted seminorm squared.
pub fn b_norm(
    trace: &crate::evolution::EvolutionTrace,
    coeff: &DiffusionCoefficient,
) -> Result<f64> {
    if trace.states.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let sup_sq = trace.l2_norms.iter().map(|n| n * n).fold(0.0f64, f64::max);
    let seminorms_sq: Vec<f64> = trace
        .states
        .iter()
        .map(|state| weighted_seminorm_squared(coeff, state))
        .collect();
    let mut integral = 0.0;
    for i in 1..trace.times.len() {
        let dt = trace.times[i] - trace.times[i - 1];
        integral += 0.5 * dt * (seminorms_sq[i] + seminorms_sq[i - 1]);
    }
    Ok(sup_sq + 2.0 * integral)
}
