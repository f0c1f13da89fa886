//! Randomized verification sweep: draws steering scenarios from a seeded
//! generator, runs the full construction on each, and checks every proved
//! inequality — Parseval, remainder decay, the Gronwall envelope, the
//! variational bound on the synthesized control, the closing identity,
//! positivity (in nonnegative mode) and the steering criterion.
//!
//! Scenarios fan out across worker threads; each scenario derives its
//! randomness from its own counter-indexed stream of the seed, so results
//! are deterministic regardless of scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use degenpde::{
    build_grid, build_plan, check_nonnegativity, evolve_implicit, evolve_spectral,
    gronwall_envelope, norm, parseval_defect, rayleigh_check, remainder_decay, steering_error,
    DiffusionCoefficient, ImplicitOptions, StateField, SteeringMode,
};

use crate::pipeline::{CLOSING_IDENTITY_TOLERANCE, DEFAULT_C_MARGIN, PARSEVAL_TOLERANCE};

/// Number of random fields tested against the variational bound per
/// scenario.
pub const RAYLEIGH_FIELDS_PER_SCENARIO: usize = 200;

/// Time step used for the implicit leg of sweep scenarios.
const SWEEP_DT: f64 = 2e-4;

/// Outcome of one random scenario.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub index: usize,
    pub n_cells: usize,
    pub epsilon: f64,
    pub mode: SteeringMode,
    pub rayleigh_checks: usize,
    /// Human-readable description of every violated check; empty = pass.
    pub violations: Vec<String>,
}

/// Aggregate sweep result.
#[derive(Debug)]
pub struct SweepOutcome {
    pub results: Vec<ScenarioOutcome>,
}

impl SweepOutcome {
    pub fn total_violations(&self) -> usize {
        self.results.iter().map(|r| r.violations.len()).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0
    }
}

/// A random smooth field `base` + Σ_m (a_m/m²)·cos(mπ(x+1)/2) with
/// amplitudes |a_m| < `amplitude`: strictly positive whenever
/// base > amplitude·Σ 1/m² ≈ 1.42·amplitude, and smooth, so it is an
/// admissible steering target.
pub fn random_positive_profile(
    grid: &std::sync::Arc<degenpde::Grid>,
    rng: &mut impl Rng,
    base: f64,
    amplitude: f64,
) -> StateField {
    let coeffs: Vec<f64> = (1..=4)
        .map(|m| rng.gen_range(-amplitude..amplitude) / (m * m) as f64)
        .collect();
    StateField::from_fn(grid, |x| {
        let mut v = base;
        for (m, c) in coeffs.iter().enumerate() {
            let freq = (m + 1) as f64 * std::f64::consts::PI / 2.0;
            v += c * (freq * (x + 1.0)).cos();
        }
        v
    })
}

fn run_one(index: usize, seed: u64) -> ScenarioOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);

    let n_cells = rng.gen_range(400..=600);
    let epsilon = 10f64.powf(rng.gen_range(-3.0..-2.0));
    let mode = if index % 2 == 0 {
        SteeringMode::Nonnegative
    } else {
        SteeringMode::Signed
    };

    let mut outcome = ScenarioOutcome {
        index,
        n_cells,
        epsilon,
        mode,
        rayleigh_checks: 0,
        violations: Vec::new(),
    };
    if let Err(e) = check_one(&mut outcome, &mut rng) {
        outcome
            .violations
            .push(format!("operational failure: {e:#}"));
    }
    outcome
}

fn check_one(outcome: &mut ScenarioOutcome, rng: &mut impl Rng) -> Result<()> {
    let grid = build_grid(outcome.n_cells)?;
    let coeff = DiffusionCoefficient::legendre();
    let target = random_positive_profile(&grid, rng, 1.2, 0.45);
    let v0 = match outcome.mode {
        SteeringMode::Nonnegative => random_positive_profile(&grid, rng, 0.8, 0.3),
        SteeringMode::Signed => {
            let shift = rng.gen_range(0.3..0.5);
            StateField::from_fn(&grid, |x| x + shift)
        }
    };

    let synthesis = build_plan(&coeff, &v0, &target, outcome.epsilon, 1e-2, outcome.mode)?;
    let plan = &synthesis.plan;
    let mut fail = |msg: String| outcome.violations.push(msg);

    let closing = (plan.predicted_error - outcome.epsilon).abs() / outcome.epsilon;
    if closing > CLOSING_IDENTITY_TOLERANCE {
        fail(format!("closing identity defect {closing:.3e}"));
    }

    let v0_norm = norm(&v0);
    let defect = parseval_defect(&synthesis.decomposition, &v0)?;
    if defect > PARSEVAL_TOLERANCE * v0_norm * v0_norm {
        fail(format!("parseval defect {defect:.3e}"));
    }

    let spectral = evolve_spectral(
        &synthesis.decomposition,
        plan.beta,
        &v0,
        plan.horizon.value,
        outcome.n_cells,
        17,
    )?;
    let certify = outcome.mode == SteeringMode::Nonnegative;
    let implicit = evolve_implicit(
        &synthesis.operator,
        plan.beta,
        &v0,
        plan.horizon.value,
        SWEEP_DT,
        ImplicitOptions {
            certify_positivity: certify,
            snapshots: 17,
            ..ImplicitOptions::default()
        },
    )?;

    if !remainder_decay(&synthesis.decomposition, plan.beta, &v0, &spectral.times)? {
        fail("remainder decay bound violated".into());
    }
    let alpha_sup = plan
        .alpha_star
        .values()
        .iter()
        .map(|a| (a + plan.beta).abs())
        .fold(0.0f64, f64::max);
    if !gronwall_envelope(&spectral, alpha_sup) {
        fail("gronwall envelope violated".into());
    }
    if certify {
        let report = check_nonnegativity(&implicit);
        if !report.passes {
            fail(format!("positivity violated: min {:.3e}", report.min_value));
        }
    }

    let tolerance = outcome.epsilon + DEFAULT_C_MARGIN * grid.h();
    for (name, trace) in [("spectral", &spectral), ("implicit", &implicit)] {
        let err = steering_error(trace, synthesis.target.field())?;
        if err > tolerance {
            fail(format!(
                "{name} steering error {err:.4e} exceeds tolerance {tolerance:.4e}"
            ));
        }
    }

    for _ in 0..RAYLEIGH_FIELDS_PER_SCENARIO {
        let u = StateField::from_values(
            &grid,
            (0..outcome.n_cells)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        )?;
        outcome.rayleigh_checks += 1;
        if !rayleigh_check(&coeff, &plan.alpha_star, &u)? {
            fail("variational bound violated on a random field".into());
            break;
        }
    }
    Ok(())
}

/// Runs `count` random scenarios derived from `seed`, fanning out across
/// the available cores.
pub fn run_sweep(count: usize, seed: u64) -> SweepOutcome {
    let slots: Mutex<Vec<Option<ScenarioOutcome>>> = Mutex::new(vec![None; count]);
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(count.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= count {
                    break;
                }
                let result = run_one(index, seed);
                slots.lock().expect("sweep worker poisoned the slot lock")[index] = Some(result);
            });
        }
    });

    let results = slots
        .into_inner()
        .expect("sweep workers finished")
        .into_iter()
        .map(|slot| slot.expect("every scenario index was processed"))
        .collect();
    SweepOutcome { results }
}
