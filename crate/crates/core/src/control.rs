//! Static multiplicative-control synthesis.
//!
//! Given a strictly positive target profile v_d, the control
//! α*(x) = −(a v_d′)′ / v_d makes v_d an eigenfunction of
//! (a u_x)_x + α* u with eigenvalue zero — and in fact the ground mode,
//! since v_d has one sign. The discrete synthesis reuses the assembly
//! stencil, α*_i = −(Op₀ v_d)_i / v_d,i, so the assembled operator
//! annihilates the sampled target to roundoff and the discrete ground
//! eigenvalue is numerically zero rather than merely O(h²).
//!
//! With the target installed as the steady ground state, steering is pure
//! spectral decay: the horizon T is chosen so every non-target mode of
//! the initial state has died down to the requested tolerance, and a
//! constant offset β rescales the surviving ground component to match the
//! target amplitude. Both formulas interlock so that
//! exp((−λ₂ + β)T)·‖v₀‖ equals the tolerance exactly — an identity this
//! module preserves to roundoff and downstream checks assert.

use crate::coefficient::DiffusionCoefficient;
use crate::discretization::{inner_product, norm, AssembledOperator, StateField};
use crate::error::{Error, Result};
use crate::spectral::{eigendecompose, SpectralDecomposition};

/// Smallest admissible target minimum for control synthesis.
pub const TARGET_FLOOR: f64 = 1e-10;

/// Entries of a nominally nonnegative field may dip this far below zero
/// before they are treated as genuinely negative.
pub const NEGATIVE_ENTRY_TOLERANCE: f64 = 1e-12;

/// Relative floor for the initial/target overlap: fp inner products can
/// not certify strict positivity below roundoff scale.
pub const OVERLAP_RELATIVE_FLOOR: f64 = 1e-12;

/// Gap floor below which horizon selection refuses to divide.
pub const GAP_FLOOR: f64 = 1e-8;

/// |λ₁| must not exceed this multiple of max(1, λ₂) after synthesis.
pub const GROUND_EIGENVALUE_TOLERANCE: f64 = 1e-6;

/// Distance allowed between the computed ground mode and the normalized
/// target before the plan is rejected as inconsistent.
pub const GROUND_MODE_DISTANCE_LIMIT: f64 = 1e-3;

/// Which admissibility hypotheses the initial state must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringMode {
    /// Initial state must be nonnegative (and not identically zero);
    /// the evolution then stays nonnegative.
    Nonnegative,
    /// Initial state may change sign; only a positive overlap with the
    /// target is required, and the evolution may go negative.
    Signed,
}

/// A conditioned steering target: strictly positive, with its minimum
/// recorded and optional analytic derivative samples.
#[derive(Debug, Clone)]
pub struct TargetState {
    field: StateField,
    min_value: f64,
    /// Sampled v_d′ and v_d″ at cell centers, when known analytically.
    derivatives: Option<(StateField, StateField)>,
}

impl TargetState {
    /// Wraps a strictly positive field as a target.
    pub fn from_field(field: StateField) -> Result<Self> {
        let min_value = field.values().iter().copied().fold(f64::INFINITY, f64::min);
        if !(min_value > 0.0) {
            return Err(Error::DegenerateTarget {
                min_value,
                floor: 0.0,
            });
        }
        Ok(Self {
            field,
            min_value,
            derivatives: None,
        })
    }

    /// Attaches analytic first and second derivatives sampled at the
    /// cell centers; synthesis then uses them instead of the stencil.
    pub fn with_derivatives(
        field: StateField,
        first: StateField,
        second: StateField,
    ) -> Result<Self> {
        let mut target = Self::from_field(field)?;
        if first.len() != target.field.len() || second.len() != target.field.len() {
            return Err(Error::GridMismatch {
                left: target.field.len(),
                right: first.len().min(second.len()),
            });
        }
        target.derivatives = Some((first, second));
        Ok(target)
    }

    /// The target profile v_d.
    pub fn field(&self) -> &StateField {
        &self.field
    }

    /// Minimum of the profile over all cells (strictly positive).
    pub fn min_value(&self) -> f64 {
        self.min_value
    }
}

/// Reflects an out-of-range cell index back into [0, n) across the
/// domain endpoints (even reflection, folded as often as needed).
fn reflect_index(mut p: i64, n: i64) -> usize {
    loop {
        if p < 0 {
            p = -1 - p;
        } else if p >= n {
            p = 2 * n - 1 - p;
        } else {
            return p as usize;
        }
    }
}

/// Smooths a nonnegative raw profile into a strictly positive target.
///
/// The profile is convolved with a discrete Gaussian of standard
/// deviation `delta` (even reflection at the endpoints), then lifted by
/// the floor max(·, delta) so degenerate regions become strictly
/// positive. Returns the conditioned target together with the distance
/// ‖result − raw‖, which shrinks with `delta` for continuous profiles.
pub fn mollify_target(raw: &StateField, delta: f64) -> Result<(TargetState, f64)> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::BadParameter {
            name: "delta",
            value: delta,
            requirement: "a finite positive mollification width",
        });
    }
    let grid = raw.grid();
    for (&x, &v) in grid.centers().iter().zip(raw.values()) {
        if v < -NEGATIVE_ENTRY_TOLERANCE {
            return Err(Error::NegativeTarget { x, value: v });
        }
    }

    let n = grid.n_cells() as i64;
    let h = grid.h();
    let half_width = ((4.0 * delta / h).ceil() as i64).max(1);
    let weights: Vec<f64> = (-half_width..=half_width)
        .map(|j| {
            let offset = j as f64 * h;
            (-offset * offset / (2.0 * delta * delta)).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();

    let values = raw.values();
    let smoothed: Vec<f64> = (0..n)
        .map(|i| {
            let acc: f64 = weights
                .iter()
                .enumerate()
                .map(|(w_idx, w)| {
                    let j = w_idx as i64 - half_width;
                    w * values[reflect_index(i + j, n)]
                })
                .sum();
            (acc / total).max(delta)
        })
        .collect();

    let result = StateField::from_values(grid, smoothed)?;
    let difference = StateField::from_values(
        grid,
        result
            .values()
            .iter()
            .zip(values)
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let distance = norm(&difference);
    Ok((TargetState::from_field(result)?, distance))
}

/// Synthesizes the static control α* = −(a v_d′)′ / v_d.
///
/// With analytic derivatives attached to the target, the numerator is
/// evaluated as a′ v_d′ + a v_d″ pointwise; otherwise the conservative
/// assembly stencil is applied to the sampled target, which makes the
/// assembled operator annihilate v_d to machine precision.
pub fn synthesize_alpha_star(
    coeff: &DiffusionCoefficient,
    target: &TargetState,
) -> Result<StateField> {
    if target.min_value() < TARGET_FLOOR {
        return Err(Error::DegenerateTarget {
            min_value: target.min_value(),
            floor: TARGET_FLOOR,
        });
    }
    let field = target.field();
    let grid = field.grid();
    match &target.derivatives {
        Some((first, second)) => {
            let values: Vec<f64> = grid
                .centers()
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let numerator =
                        coeff.a_prime(x) * first.values()[i] + coeff.a(x) * second.values()[i];
                    -numerator / field.values()[i]
                })
                .collect();
            StateField::from_values(grid, values)
        }
        None => {
            let zero = StateField::zeros(grid);
            let op0 = AssembledOperator::assemble(grid, coeff, &zero)?;
            let image = op0.apply(field)?;
            let values: Vec<f64> = image
                .values()
                .iter()
                .zip(field.values())
                .map(|(iv, tv)| -iv / tv)
                .collect();
            StateField::from_values(grid, values)
        }
    }
}

/// Validates the steering hypotheses and returns the overlap ⟨v₀, v_d⟩.
pub fn check_admissibility(
    v0: &StateField,
    target: &TargetState,
    mode: SteeringMode,
) -> Result<f64> {
    if mode == SteeringMode::Nonnegative {
        for (&x, &v) in v0.grid().centers().iter().zip(v0.values()) {
            if v < -NEGATIVE_ENTRY_TOLERANCE {
                return Err(Error::NotNonnegative { x, value: v });
            }
        }
    }
    let v0_norm = norm(v0);
    if v0_norm == 0.0 {
        return Err(Error::ZeroInitialState);
    }
    let overlap = inner_product(v0, target.field())?;
    let floor = OVERLAP_RELATIVE_FLOOR * v0_norm * norm(target.field());
    if overlap <= floor {
        return Err(Error::NonpositiveOverlap { overlap });
    }
    Ok(overlap)
}

/// A steering horizon, possibly clamped to zero when the tolerance is
/// already met by the spectral projection at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    /// Time at which the steered state is compared against the target.
    pub value: f64,
    /// True when the requested tolerance was loose enough that the
    /// formula produced a nonpositive time and the horizon was clamped.
    pub clamped: bool,
}

/// Selects the steering horizon from the decay-rate formula
/// e^{−λ₂ T} = ε·⟨v₀,v_d⟩ / (‖v₀‖·‖v_d‖²).
pub fn choose_horizon(
    epsilon: f64,
    v0: &StateField,
    target: &TargetState,
    lambda2: f64,
) -> Result<Horizon> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::BadParameter {
            name: "epsilon",
            value: epsilon,
            requirement: "a finite positive steering tolerance",
        });
    }
    if lambda2 <= GAP_FLOOR {
        return Err(Error::NonpositiveGap {
            lambda2,
            floor: GAP_FLOOR,
        });
    }
    let v0_norm = norm(v0);
    if v0_norm == 0.0 {
        return Err(Error::ZeroInitialState);
    }
    let overlap = inner_product(v0, target.field())?;
    let target_norm_sq = inner_product(target.field(), target.field())?;
    if overlap <= OVERLAP_RELATIVE_FLOOR * v0_norm * target_norm_sq.sqrt() {
        return Err(Error::NonpositiveOverlap { overlap });
    }
    let rhs = epsilon * overlap / (v0_norm * target_norm_sq);
    if rhs >= 1.0 {
        return Ok(Horizon {
            value: 0.0,
            clamped: true,
        });
    }
    Ok(Horizon {
        value: -rhs.ln() / lambda2,
        clamped: false,
    })
}

/// Selects the amplitude offset β = ln(‖v_d‖²/⟨v₀,v_d⟩)/T, which makes
/// the ground component of the evolved state match the target exactly at
/// the horizon.
pub fn choose_beta(horizon: &Horizon, v0: &StateField, target: &TargetState) -> Result<f64> {
    if horizon.clamped || !(horizon.value > 0.0) {
        return Err(Error::ZeroHorizon);
    }
    let overlap = inner_product(v0, target.field())?;
    let target_norm_sq = inner_product(target.field(), target.field())?;
    if overlap <= 0.0 {
        return Err(Error::NonpositiveOverlap { overlap });
    }
    Ok((target_norm_sq / overlap).ln() / horizon.value)
}

/// The full static steering plan.
#[derive(Debug, Clone)]
pub struct ControlPlan {
    /// Synthesized multiplicative control (before the constant offset).
    pub alpha_star: StateField,
    /// Constant offset added to α* during evolution.
    pub beta: f64,
    /// Steering horizon.
    pub horizon: Horizon,
    /// Requested steering tolerance.
    pub epsilon: f64,
    /// Ground eigenvalue of −(A₀ + α*): numerically zero by synthesis.
    pub lambda1: f64,
    /// Second eigenvalue: the decay rate that sets the horizon.
    pub lambda2: f64,
    /// Overlap ⟨v₀, v_d⟩.
    pub overlap: f64,
    /// exp((−λ₂+β)T)·‖v₀‖ — equals epsilon for unclamped plans.
    pub predicted_error: f64,
}

/// Everything produced while building a plan, kept so later stages can
/// reuse the operator and its spectrum without recomputation.
#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub plan: ControlPlan,
    /// Operator assembled with α* (offset β not included).
    pub operator: AssembledOperator,
    pub decomposition: SpectralDecomposition,
    pub target: TargetState,
    /// Distance ‖v_d − raw target‖ introduced by mollification.
    pub mollification_distance: f64,
}

/// Runs the complete synthesis: mollify the raw target, synthesize α*,
/// eigendecompose, verify the ground pair, and select horizon and offset.
pub fn build_plan(
    coeff: &DiffusionCoefficient,
    v0: &StateField,
    raw_target: &StateField,
    epsilon: f64,
    delta: f64,
    mode: SteeringMode,
) -> Result<SynthesisOutcome> {
    let (target, mollification_distance) = mollify_target(raw_target, delta)?;
    let overlap = check_admissibility(v0, &target, mode)?;

    let alpha_star = synthesize_alpha_star(coeff, &target)?;
    let operator = AssembledOperator::assemble(v0.grid(), coeff, &alpha_star)?;
    let decomposition = eigendecompose(&operator)?;

    let lambda1 = decomposition.lambdas()[0];
    let lambda2 = decomposition.lambdas()[1];
    let tolerance = GROUND_EIGENVALUE_TOLERANCE * lambda2.max(1.0);
    if lambda1.abs() > tolerance {
        return Err(Error::GroundEigenvalueNonzero {
            lambda1,
            lambda2,
            tolerance,
        });
    }
    let target_norm = norm(target.field());
    let ground = decomposition.ground_mode();
    let mismatch = StateField::from_values(
        ground.grid(),
        ground
            .values()
            .iter()
            .zip(target.field().values())
            .map(|(g, t)| g - t / target_norm)
            .collect(),
    )?;
    let distance = norm(&mismatch);
    if distance > GROUND_MODE_DISTANCE_LIMIT {
        return Err(Error::GroundModeMismatch {
            distance,
            limit: GROUND_MODE_DISTANCE_LIMIT,
        });
    }

    let horizon = choose_horizon(epsilon, v0, &target, lambda2)?;
    let beta = if horizon.clamped {
        0.0
    } else {
        choose_beta(&horizon, v0, &target)?
    };
    let predicted_error = ((-lambda2 + beta) * horizon.value).exp() * norm(v0);

    Ok(SynthesisOutcome {
        plan: ControlPlan {
            alpha_star,
            beta,
            horizon,
            epsilon,
            lambda1,
            lambda2,
            overlap,
            predicted_error,
        },
        operator,
        decomposition,
        target,
        mollification_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;
    use approx::assert_relative_eq;

    #[test]
    fn mollifying_a_constant_changes_nothing() {
        let grid = build_grid(200).unwrap();
        let raw = StateField::constant(&grid, 1.0);
        for delta in [0.01, 0.3, 1.0] {
            let (target, distance) = mollify_target(&raw, delta).unwrap();
            for &v in target.field().values() {
                assert_relative_eq!(v, 1.0, max_relative = 1e-12);
            }
            assert!(distance <= 1e-12);
            assert!(target.min_value() > 0.999);
        }
    }

    #[test]
    fn mollifier_smooths_kinks_and_converges_as_width_shrinks() {
        let grid = build_grid(500).unwrap();
        let raw = StateField::from_fn(&grid, |x| x.max(0.0));
        let mut distances = Vec::new();
        for delta in [0.2, 0.1, 0.05] {
            let (target, distance) = mollify_target(&raw, delta).unwrap();
            assert!(
                target.min_value() >= delta,
                "floor keeps the target positive"
            );
            distances.push(distance);
        }
        // The floor term dominates at O(delta), so halving delta should
        // roughly halve the distance.
        assert!(
            distances[1] <= 0.7 * distances[0] && distances[2] <= 0.7 * distances[1],
            "distances {distances:?} must shrink ~linearly with delta"
        );
        assert!(distances[2] < 0.1);
    }

    #[test]
    fn mollifier_rejects_bad_inputs() {
        let grid = build_grid(16).unwrap();
        let negative = StateField::from_fn(&grid, |x| x);
        assert!(matches!(
            mollify_target(&negative, 0.1),
            Err(Error::NegativeTarget { .. })
        ));
        let ok = StateField::constant(&grid, 1.0);
        assert!(matches!(
            mollify_target(&ok, 0.0),
            Err(Error::BadParameter { name: "delta", .. })
        ));
        // Dips within roundoff tolerance are accepted and lifted.
        let grazing = StateField::constant(&grid, -5e-13);
        let (target, _) = mollify_target(&grazing, 0.1).unwrap();
        assert!(target.min_value() >= 0.1);
    }

    #[test]
    fn constant_target_synthesizes_zero_control() {
        let grid = build_grid(64).unwrap();
        let coeff = DiffusionCoefficient::legendre();
        let target = TargetState::from_field(StateField::constant(&grid, 3.0)).unwrap();
        let alpha = synthesize_alpha_star(&coeff, &target).unwrap();
        for &a in alpha.values() {
            assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn affine_target_matches_symbolic_control() {
        // v_d = 2 + x under a = 1 − x²: (a v_d′)′ = −2x, so
        // α* = 2x/(2+x). The stencil reproduces (a·x′)′ exactly, so both
        // routes agree with the closed form to roundoff.
        let grid = build_grid(128).unwrap();
        let coeff = DiffusionCoefficient::legendre();
        let field = StateField::from_fn(&grid, |x| 2.0 + x);

        let stencil_target = TargetState::from_field(field.clone()).unwrap();
        let stencil = synthesize_alpha_star(&coeff, &stencil_target).unwrap();

        let analytic_target = TargetState::with_derivatives(
            field,
            StateField::constant(&grid, 1.0),
            StateField::zeros(&grid),
        )
        .unwrap();
        let analytic = synthesize_alpha_star(&coeff, &analytic_target).unwrap();

        for (i, &x) in grid.centers().iter().enumerate() {
            let exact = 2.0 * x / (2.0 + x);
            assert_relative_eq!(
                stencil.values()[i],
                exact,
                max_relative = 1e-11,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                analytic.values()[i],
                exact,
                max_relative = 1e-11,
                epsilon = 1e-12
            );
        }
        assert_relative_eq!(
            stencil.values()[96],
            2.0 * grid.centers()[96] / (2.0 + grid.centers()[96]),
            max_relative = 1e-12
        );
    }

    #[test]
    fn synthesis_rejects_nearly_vanishing_targets() {
        let grid = build_grid(16).unwrap();
        let coeff = DiffusionCoefficient::legendre();
        let field = StateField::constant(&grid, 1e-11);
        let target = TargetState::from_field(field).unwrap();
        assert!(matches!(
            synthesize_alpha_star(&coeff, &target),
            Err(Error::DegenerateTarget { .. })
        ));
        assert!(matches!(
            TargetState::from_field(StateField::zeros(&grid)),
            Err(Error::DegenerateTarget { .. })
        ));
    }

    #[test]
    fn synthesized_control_installs_target_as_ground_mode() {
        let grid = build_grid(400).unwrap();
        let coeff = DiffusionCoefficient::legendre();
        let field = StateField::from_fn(&grid, |x| 1.0 + 0.5 * (-x * x).exp());
        let target = TargetState::from_field(field).unwrap();
        let alpha = synthesize_alpha_star(&coeff, &target).unwrap();
        let op = AssembledOperator::assemble(&grid, &coeff, &alpha).unwrap();

        // The operator annihilates the sampled target to roundoff.
        let image = op.apply(target.field()).unwrap();
        let n2 = (grid.n_cells() * grid.n_cells()) as f64;
        for &v in image.values() {
            assert!(v.abs() <= 1e-12 * n2, "residual {v}");
        }

        let decomp = eigendecompose(&op).unwrap();
        assert!(decomp.lambdas()[0].abs() <= 1e-6 * decomp.lambdas()[1].max(1.0));
        let target_norm = norm(target.field());
        let cosine = inner_product(decomp.ground_mode(), target.field()).unwrap() / target_norm;
        assert!(cosine >= 0.999, "cosine {cosine}");
        // Ground mode keeps one sign everywhere.
        let min = decomp
            .ground_mode()
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let max = decomp
            .ground_mode()
            .values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min * max > 0.0, "ground mode changes sign: [{min}, {max}]");
    }

    #[test]
    fn admissibility_modes_match_their_hypotheses() {
        let grid = build_grid(1000).unwrap();
        let one = TargetState::from_field(StateField::constant(&grid, 1.0)).unwrap();

        let same = StateField::constant(&grid, 1.0);
        let overlap = check_admissibility(&same, &one, SteeringMode::Nonnegative).unwrap();
        assert_relative_eq!(overlap, 2.0, max_relative = 1e-13);

        // Odd initial state: zero overlap violates the signed hypothesis.
        let x = StateField::from_fn(&grid, |x| x);
        assert!(matches!(
            check_admissibility(&x, &one, SteeringMode::Signed),
            Err(Error::NonpositiveOverlap { .. })
        ));

        // Sign-changing but positively overlapping state: rejected by
        // the nonnegative mode, accepted by the signed mode.
        let shifted = StateField::from_fn(&grid, |x| x + 0.3);
        assert!(matches!(
            check_admissibility(&shifted, &one, SteeringMode::Nonnegative),
            Err(Error::NotNonnegative { .. })
        ));
        let overlap = check_admissibility(&shifted, &one, SteeringMode::Signed).unwrap();
        assert_relative_eq!(overlap, 0.6, max_relative = 1e-12);

        let zero = StateField::zeros(&grid);
        assert!(matches!(
            check_admissibility(&zero, &one, SteeringMode::Signed),
            Err(Error::ZeroInitialState)
        ));
    }

    #[test]
    fn horizon_formula_hits_half_for_the_plugin_example() {
        let grid = build_grid(512).unwrap();
        let field = StateField::constant(&grid, 1.0);
        let target = TargetState::from_field(field.clone()).unwrap();
        let epsilon = norm(&field) / std::f64::consts::E;
        let horizon = choose_horizon(epsilon, &field, &target, 2.0).unwrap();
        assert!(!horizon.clamped);
        assert_relative_eq!(horizon.value, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn loose_tolerance_clamps_horizon_to_zero() {
        let grid = build_grid(64).unwrap();
        let field = StateField::constant(&grid, 1.0);
        let target = TargetState::from_field(field.clone()).unwrap();
        let horizon = choose_horizon(norm(&field) * 1.01, &field, &target, 2.0).unwrap();
        assert_eq!(
            horizon,
            Horizon {
                value: 0.0,
                clamped: true
            }
        );
        assert!(matches!(
            choose_beta(&horizon, &field, &target),
            Err(Error::ZeroHorizon)
        ));
    }

    #[test]
    fn horizon_rejects_degenerate_inputs() {
        let grid = build_grid(64).unwrap();
        let field = StateField::constant(&grid, 1.0);
        let target = TargetState::from_field(field.clone()).unwrap();
        assert!(matches!(
            choose_horizon(0.01, &field, &target, 1e-9),
            Err(Error::NonpositiveGap { .. })
        ));
        assert!(matches!(
            choose_horizon(-0.5, &field, &target, 2.0),
            Err(Error::BadParameter {
                name: "epsilon",
                ..
            })
        ));
        let odd = StateField::from_fn(&grid, |x| x);
        assert!(matches!(
            choose_horizon(0.01, &odd, &target, 2.0),
            Err(Error::NonpositiveOverlap { .. })
        ));
    }

    #[test]
    fn horizon_golden_value_for_the_affine_initial_state() {
        // ε = 1e−3, v₀ = 1 + x/2, v_d ≡ 1, λ₂ = 2: the discrete norm of
        // v₀ makes T = 3.6471750… (pinned from an independent
        // recomputation of the formula).
        let grid = build_grid(500).unwrap();
        let v0 = StateField::from_fn(&grid, |x| 1.0 + x / 2.0);
        let target = TargetState::from_field(StateField::constant(&grid, 1.0)).unwrap();
        let horizon = choose_horizon(1e-3, &v0, &target, 2.0).unwrap();
        assert_relative_eq!(horizon.value, 3.6471750346263505, max_relative = 1e-9);
    }

    #[test]
    fn beta_matches_amplitude_ratios() {
        let grid = build_grid(300).unwrap();
        let field = StateField::from_fn(&grid, |x| 1.5 + 0.25 * x);
        let target = TargetState::from_field(field.clone()).unwrap();
        let horizon = Horizon {
            value: 2.0,
            clamped: false,
        };
        // v₀ = v_d: overlap equals ‖v_d‖², so β = 0 exactly.
        assert_eq!(choose_beta(&horizon, &field, &target).unwrap(), 0.0);
        // v₀ = v_d/2: overlap halves, β = ln(2)/T.
        let halved = field.map(|v| v / 2.0);
        assert_relative_eq!(
            choose_beta(&horizon, &halved, &target).unwrap(),
            std::f64::consts::LN_2 / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn build_plan_composes_the_construction() {
        let grid = build_grid(500).unwrap();
        let coeff = DiffusionCoefficient::legendre();
        let one = StateField::constant(&grid, 1.0);
        let outcome =
            build_plan(&coeff, &one, &one, 0.01, 0.05, SteeringMode::Nonnegative).unwrap();
        let plan = &outcome.plan;
        for &a in plan.alpha_star.values() {
            assert_eq!(a, 0.0, "constant target needs no control");
        }
        assert_eq!(plan.beta, 0.0, "v₀ = v_d leaves no amplitude to fix");
        assert_relative_eq!(plan.lambda2, 2.0, max_relative = 1e-9);
        // T = −½ ln(0.01/√2̄) with the discrete norm: 2.4758718881…
        assert_relative_eq!(plan.horizon.value, 2.4758718881340323, max_relative = 1e-9);
        assert!(plan.lambda1.abs() <= 1e-9);
        assert_relative_eq!(plan.predicted_error, plan.epsilon, max_relative = 1e-9);
        assert!(outcome.mollification_distance <= 1e-12);
    }

    #[test]
    fn plans_are_deterministic_and_scale_covariant() {
        let grid = build_grid(400).unwrap();
        let coeff = DiffusionCoefficient::legendre();
        let v0 = StateField::from_fn(&grid, |x| 1.0 + 0.4 * (2.0 * x).sin().powi(2));
        let raw_target = StateField::from_fn(&grid, |x| 1.0 + 0.25 * x);

        let a = build_plan(
            &coeff,
            &v0,
            &raw_target,
            1e-2,
            0.08,
            SteeringMode::Nonnegative,
        )
        .unwrap();
        let b = build_plan(
            &coeff,
            &v0,
            &raw_target,
            1e-2,
            0.08,
            SteeringMode::Nonnegative,
        )
        .unwrap();
        assert_eq!(
            a.plan.horizon.value.to_bits(),
            b.plan.horizon.value.to_bits()
        );
        assert_eq!(a.plan.beta.to_bits(), b.plan.beta.to_bits());
        assert_eq!(a.plan.lambda2.to_bits(), b.plan.lambda2.to_bits());
        for (x, y) in a
            .plan
            .alpha_star
            .values()
            .iter()
            .zip(b.plan.alpha_star.values())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }

        // Scaling v₀ by a power of two cancels exactly in the horizon
        // formula and shifts β by −ln(c)/T.
        let scaled = v0.map(|v| 4.0 * v);
        let c = build_plan(
            &coeff,
            &scaled,
            &raw_target,
            1e-2,
            0.08,
            SteeringMode::Nonnegative,
        )
        .unwrap();
        assert_eq!(
            a.plan.horizon.value.to_bits(),
            c.plan.horizon.value.to_bits(),
            "horizon must be invariant under initial-state scaling"
        );
        let expected_beta = a.plan.beta - 4.0f64.ln() / a.plan.horizon.value;
        assert_relative_eq!(c.plan.beta, expected_beta, max_relative = 1e-12);
        // The proof identity holds for scaled plans too.
        assert_relative_eq!(c.plan.predicted_error, 1e-2, max_relative = 1e-9);
    }

    #[test]
    fn signed_mode_builds_plans_for_sign_changing_states() {
        let grid = build_grid(400).unwrap();
        let coeff = DiffusionCoefficient::legendre();
        let v0 = StateField::from_fn(&grid, |x| x + 0.3);
        let one = StateField::constant(&grid, 1.0);
        let outcome = build_plan(&coeff, &v0, &one, 1e-2, 0.05, SteeringMode::Signed).unwrap();
        assert_relative_eq!(outcome.plan.overlap, 0.6, max_relative = 1e-12);
        assert!(outcome.plan.beta > 0.0);
        assert_relative_eq!(
            outcome.plan.predicted_error,
            outcome.plan.epsilon,
            max_relative = 1e-9
        );

        let orthogonal = StateField::from_fn(&grid, |x| x);
        assert!(matches!(
            build_plan(&coeff, &orthogonal, &one, 1e-2, 0.05, SteeringMode::Signed),
            Err(Error::NonpositiveOverlap { .. })
        ));
    }
}
