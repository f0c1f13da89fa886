//! The synthesize → evolve → verify pipeline behind the `evolve`,
//! `verify`, `demo-budyko-sellers` and `converge` subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use degenpde::{
    b_norm, build_plan, check_nonnegativity, classify_degeneracy, evolve_implicit, evolve_spectral,
    gronwall_envelope, norm, parseval_defect, remainder_decay, steering_error, EvolutionTrace,
    ImplicitOptions, ImplicitScheme, StateField, SteeringMode, SynthesisOutcome,
};

use crate::csvio;
use crate::report::{DegeneracySummary, InsolationSummary, PositivitySummary, RunReport};
use crate::scenario::{CoefficientSpec, ProfileSpec, Scenario};

/// Finite-resolution margin coefficient: a run passes when the steering
/// error is at most ε + C·h.  Calibrated once against the bundled
/// convergence study (`converge` subcommand), which observes steering
/// errors below ε outright at every level n ∈ {250,…,2000}: the horizon
/// is sized for the worst case in which all of ‖v₀‖ sits above the ground
/// mode, while the realized remainder carries only the actual overtone
/// mass.  The margin therefore only absorbs discretization drift on harder
/// inputs (rough initial data, time-stepping overshoot); C = 2 keeps the
/// reference tolerance at ε + 2h = 1.2·10⁻² for ε = 10⁻², n = 2000.
pub const DEFAULT_C_MARGIN: f64 = 2.0;

/// Relative tolerance for the closing identity e^{(−λ₂+β)T}·‖v0‖ = ε.
pub const CLOSING_IDENTITY_TOLERANCE: f64 = 1e-9;

/// Parseval defect allowance, relative to ‖v0‖².
pub const PARSEVAL_TOLERANCE: f64 = 1e-8;

/// How a pipeline invocation writes its artifacts.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Output directory for CSV and JSON artifacts.
    pub out_dir: PathBuf,
    /// Suppress timestamp and wall-clock fields for byte-identical reports.
    pub no_timestamp: bool,
    /// Label recorded in the report (usually the scenario path).
    pub scenario_label: Option<String>,
    /// Write the (large) trajectory CSVs in addition to the summaries.
    pub write_traces: bool,
    /// Insolation metadata echoed into the report (climate demo only).
    pub insolation: Option<InsolationSummary>,
}

impl RunOptions {
    /// Conventional options writing everything into `out_dir`.
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            no_timestamp: false,
            scenario_label: None,
            write_traces: true,
            insolation: None,
        }
    }
}

/// Everything a pipeline run produced, for callers that want more than
/// the report (tests, the sweep harness).
pub struct PipelineRun {
    pub report: RunReport,
    pub synthesis: SynthesisOutcome,
    pub spectral_trace: EvolutionTrace,
    pub implicit_trace: EvolutionTrace,
    pub initial_state: StateField,
}

impl PipelineRun {
    /// Exit code under the CLI contract: 0 when every applicable check
    /// passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.all_checks_pass() {
            0
        } else {
            1
        }
    }
}

fn scheme_name(scheme: ImplicitScheme) -> &'static str {
    match scheme {
        ImplicitScheme::BackwardEuler => "backward-euler",
        ImplicitScheme::CrankNicolson => "crank-nicolson",
    }
}

fn mode_name(mode: SteeringMode) -> &'static str {
    match mode {
        SteeringMode::Nonnegative => "nonnegative",
        SteeringMode::Signed => "signed",
    }
}

/// Largest gap between the two traces at index-paired snapshots (the
/// snapshot grids agree up to step rounding), falling back to the final
/// states when the counts differ.
fn trace_gap(a: &EvolutionTrace, b: &EvolutionTrace) -> Result<f64> {
    let pairs: Vec<(usize, usize)> = if a.len() == b.len() {
        (0..a.len()).map(|i| (i, i)).collect()
    } else {
        vec![(a.len() - 1, b.len() - 1)]
    };
    let mut gap = 0.0f64;
    for (i, j) in pairs {
        let diff: Vec<f64> = a.states[i]
            .values()
            .iter()
            .zip(b.states[j].values())
            .map(|(x, y)| x - y)
            .collect();
        let d = norm(&StateField::from_values(a.states[i].grid(), diff)?);
        gap = gap.max(d);
    }
    Ok(gap)
}

/// Runs the full pipeline for a scenario and writes its artifacts.
///
/// Operational failures (unreadable files, inadmissible data, solver
/// breakdown) surface as errors; completed runs always return a report,
/// whose checks decide the exit code.
pub fn run_pipeline(scenario: &Scenario, opts: &RunOptions) -> Result<PipelineRun> {
    let started = Instant::now();
    let grid = degenpde::build_grid(scenario.n_cells)?;
    let coeff = scenario
        .coefficient
        .build(&scenario.base_dir)
        .context("building diffusion coefficient")?;
    let degeneracy = classify_degeneracy(&coeff).context("classifying degeneracy")?;
    let v0 = scenario
        .initial_state
        .realize(&grid, &scenario.base_dir)
        .context("realizing initial state")?;
    let raw_target = scenario
        .target_state
        .realize(&grid, &scenario.base_dir)
        .context("realizing target state")?;

    let synthesis = build_plan(
        &coeff,
        &v0,
        &raw_target,
        scenario.epsilon,
        scenario.mollifier_delta,
        scenario.mode,
    )
    .context("synthesizing the steering plan")?;
    let plan = &synthesis.plan;
    if plan.horizon.clamped {
        bail!(
            "the requested tolerance {} is loose enough that the initial state \
             already satisfies it; there is nothing to evolve",
            scenario.epsilon
        );
    }

    let n = scenario.n_cells;
    let k_max = scenario.k_max.unwrap_or(n).min(n);
    let spectral_trace = evolve_spectral(
        &synthesis.decomposition,
        plan.beta,
        &v0,
        plan.horizon.value,
        k_max,
        scenario.snapshots,
    )?;
    let certify = scenario.mode == SteeringMode::Nonnegative
        && scenario.scheme == ImplicitScheme::BackwardEuler;
    let implicit_trace = evolve_implicit(
        &synthesis.operator,
        plan.beta,
        &v0,
        plan.horizon.value,
        scenario.dt,
        ImplicitOptions {
            scheme: scenario.scheme,
            certify_positivity: certify,
            snapshots: scenario.snapshots,
        },
    )?;

    let target_field = synthesis.target.field();
    let steering_error_spectral = steering_error(&spectral_trace, target_field)?;
    let steering_error_implicit = steering_error(&implicit_trace, target_field)?;
    let steering = steering_error_spectral.max(steering_error_implicit);
    let c_margin = scenario.c_margin.unwrap_or(DEFAULT_C_MARGIN);
    let tolerance = scenario.epsilon + c_margin * grid.h();

    let alpha_sup = synthesis
        .plan
        .alpha_star
        .values()
        .iter()
        .map(|a| (a + plan.beta).abs())
        .fold(0.0f64, f64::max);
    let v0_norm = norm(&v0);
    let closing_defect = (plan.predicted_error - scenario.epsilon).abs() / scenario.epsilon;

    let positivity: Option<PositivitySummary> = (scenario.mode == SteeringMode::Nonnegative)
        .then(|| check_nonnegativity(&implicit_trace).into());

    let report = RunReport {
        scenario: opts.scenario_label.clone(),
        mode: mode_name(scenario.mode).into(),
        n_cells: n,
        dt: scenario.dt,
        epsilon: scenario.epsilon,
        mollifier_delta: scenario.mollifier_delta,
        scheme: scheme_name(scenario.scheme).into(),
        k_max,
        snapshots: scenario.snapshots,
        degeneracy: DegeneracySummary {
            strongly_degenerate: degeneracy.strongly_degenerate,
            reciprocal_primitive_integrable: degeneracy.a_integrable,
        },
        horizon: plan.horizon.value,
        horizon_clamped: plan.horizon.clamped,
        beta: plan.beta,
        lambda1: plan.lambda1,
        lambda2: plan.lambda2,
        overlap: plan.overlap,
        mollification_distance: synthesis.mollification_distance,
        predicted_error: plan.predicted_error,
        closing_identity_defect: closing_defect,
        steering_error_spectral,
        steering_error_implicit,
        steering_error: steering,
        tolerance,
        c_margin,
        within_tolerance: steering <= tolerance,
        cross_integrator_gap: trace_gap(&spectral_trace, &implicit_trace)?,
        b_norm: b_norm(&implicit_trace, &coeff)?,
        positivity,
        gronwall_ok: gronwall_envelope(&spectral_trace, alpha_sup),
        remainder_ok: remainder_decay(
            &synthesis.decomposition,
            plan.beta,
            &v0,
            &spectral_trace.times,
        )?,
        parseval_ok: parseval_defect(&synthesis.decomposition, &v0)?
            <= PARSEVAL_TOLERANCE * v0_norm * v0_norm,
        closing_identity_ok: closing_defect <= CLOSING_IDENTITY_TOLERANCE,
        insolation: opts.insolation.clone(),
        timestamp_unix: (!opts.no_timestamp).then(crate::report::now_unix),
        wall_seconds: None, // filled below so it is the last thing measured
    };

    write_artifacts(&synthesis, &spectral_trace, &implicit_trace, opts)?;
    let mut report = report;
    if !opts.no_timestamp {
        report.wall_seconds = Some(started.elapsed().as_secs_f64());
    }
    report.write(&opts.out_dir.join("report.json"))?;

    Ok(PipelineRun {
        report,
        synthesis,
        spectral_trace,
        implicit_trace,
        initial_state: v0,
    })
}

fn write_artifacts(
    synthesis: &SynthesisOutcome,
    spectral_trace: &EvolutionTrace,
    implicit_trace: &EvolutionTrace,
    opts: &RunOptions,
) -> Result<()> {
    let dir = &opts.out_dir;
    csvio::write_state_csv(&dir.join("alpha_star.csv"), &synthesis.plan.alpha_star)?;
    csvio::write_state_csv(&dir.join("target.csv"), synthesis.target.field())?;
    csvio::write_state_csv(
        &dir.join("final_state_implicit.csv"),
        implicit_trace.last_state(),
    )?;
    csvio::write_state_csv(
        &dir.join("final_state_spectral.csv"),
        spectral_trace.last_state(),
    )?;
    csvio::write_spectrum_csv(&dir.join("spectrum.csv"), synthesis.decomposition.lambdas())?;
    if opts.write_traces {
        csvio::write_trace_csv(&dir.join("trace_implicit.csv"), implicit_trace)?;
        csvio::write_trace_csv(&dir.join("trace_spectral.csv"), spectral_trace)?;
    }
    Ok(())
}

/// The plan summary JSON written by the `synthesize` subcommand.
#[derive(serde::Serialize)]
pub struct PlanSummary {
    pub epsilon: f64,
    pub horizon: f64,
    pub horizon_clamped: bool,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub overlap: f64,
    pub predicted_error: f64,
    pub mollification_distance: f64,
    pub alpha_star_csv: String,
}

/// Runs synthesis only: builds the plan, writes `alpha_star.csv` and
/// `plan.json`, and returns the synthesis outcome.
pub fn run_synthesize(scenario: &Scenario, opts: &RunOptions) -> Result<SynthesisOutcome> {
    let grid = degenpde::build_grid(scenario.n_cells)?;
    let coeff = scenario.coefficient.build(&scenario.base_dir)?;
    let v0 = scenario.initial_state.realize(&grid, &scenario.base_dir)?;
    let raw_target = scenario.target_state.realize(&grid, &scenario.base_dir)?;
    let synthesis = build_plan(
        &coeff,
        &v0,
        &raw_target,
        scenario.epsilon,
        scenario.mollifier_delta,
        scenario.mode,
    )?;
    let alpha_path = opts.out_dir.join("alpha_star.csv");
    csvio::write_state_csv(&alpha_path, &synthesis.plan.alpha_star)?;
    let summary = PlanSummary {
        epsilon: synthesis.plan.epsilon,
        horizon: synthesis.plan.horizon.value,
        horizon_clamped: synthesis.plan.horizon.clamped,
        beta: synthesis.plan.beta,
        lambda1: synthesis.plan.lambda1,
        lambda2: synthesis.plan.lambda2,
        overlap: synthesis.plan.overlap,
        predicted_error: synthesis.plan.predicted_error,
        mollification_distance: synthesis.mollification_distance,
        alpha_star_csv: alpha_path.display().to_string(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::create_dir_all(&opts.out_dir)?;
    std::fs::write(opts.out_dir.join("plan.json"), text)?;
    Ok(synthesis)
}

/// The scenario the climate demonstration runs: the Legendre coefficient
/// arises from the energy-balance reduction where x is the sine of
/// latitude, and the steering problem moves an equator-warm profile to a
/// uniform one.
pub fn budyko_sellers_scenario() -> Scenario {
    Scenario {
        coefficient: CoefficientSpec::Legendre,
        initial_state: ProfileSpec::Affine {
            offset: 1.0,
            slope: 0.5,
        },
        target_state: ProfileSpec::Constant(1.0),
        epsilon: 1e-2,
        mode: SteeringMode::Nonnegative,
        n_cells: 2000,
        dt: 1e-4,
        ..Scenario::default()
    }
}

/// Reads and summarizes an insolation CSV (metadata only — the controlled
/// equation is the linear principal part, so the profile is echoed into
/// the report rather than fed into the numerics).
pub fn summarize_insolation(path: &Path) -> Result<InsolationSummary> {
    let pairs = csvio::read_pair_csv(path)
        .with_context(|| format!("bad insolation file {}", path.display()))?;
    let values: Vec<f64> = pairs.iter().map(|(_, v)| *v).collect();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in &values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    Ok(InsolationSummary {
        path: path.display().to_string(),
        rows: values.len(),
        min,
        max,
        mean: sum / values.len() as f64,
    })
}

/// Runs the climate demonstration: the [`budyko_sellers_scenario`]
/// numerics plus latitude-labeled artifacts and optional insolation
/// metadata.
pub fn run_budyko_sellers_demo(
    scenario: &Scenario,
    insolation_csv: Option<&Path>,
    opts: &RunOptions,
) -> Result<PipelineRun> {
    let mut opts = opts.clone();
    opts.insolation = insolation_csv.map(summarize_insolation).transpose()?;
    let run = run_pipeline(scenario, &opts)?;
    write_latitude_csv(
        &opts.out_dir.join("temperature_by_latitude.csv"),
        run.implicit_trace.last_state(),
    )?;
    Ok(run)
}

/// Writes a state against latitude in degrees (the grid coordinate is the
/// sine of latitude in the climate reduction).
fn write_latitude_csv(path: &Path, state: &StateField) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from("latitude_deg,x,value\n");
    for (x, v) in state.grid().centers().iter().zip(state.values()) {
        let lat = x.asin().to_degrees();
        writeln!(out, "{lat},{x},{v}").expect("writing to a string cannot fail");
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// One refinement level of the convergence study.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub dt: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub steering_error: f64,
    pub cross_integrator_gap: f64,
}

/// Default refinement ladder: n doubles, dt scales like h².
pub const DEFAULT_LEVELS: [(usize, f64); 4] =
    [(250, 1.6e-3), (500, 4e-4), (1000, 1e-4), (2000, 2.5e-5)];

/// Runs the steering benchmark (v0 = 1 + x/2 toward the uniform target on
/// the Legendre coefficient) across refinement levels and tabulates
/// eigenvalues, steering errors and integrator gaps.
pub fn run_convergence_study(levels: &[(usize, f64)]) -> Result<Vec<ConvergenceRow>> {
    if levels.is_empty() {
        bail!("convergence study needs at least one (n_cells, dt) level");
    }
    if levels.windows(2).any(|w| w[1].0 <= w[0].0) {
        bail!("convergence levels must refine: n_cells strictly ascending");
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &(n, dt) in levels {
        let scenario = Scenario {
            n_cells: n,
            dt,
            snapshots: 17,
            ..budyko_sellers_scenario()
        };
        let grid = degenpde::build_grid(n)?;
        let coeff = scenario.coefficient.build(&scenario.base_dir)?;
        let v0 = scenario.initial_state.realize(&grid, &scenario.base_dir)?;
        let raw_target = scenario.target_state.realize(&grid, &scenario.base_dir)?;
        let synthesis = build_plan(
            &coeff,
            &v0,
            &raw_target,
            scenario.epsilon,
            scenario.mollifier_delta,
            scenario.mode,
        )?;
        let plan = &synthesis.plan;
        let spectral = evolve_spectral(
            &synthesis.decomposition,
            plan.beta,
            &v0,
            plan.horizon.value,
            n,
            scenario.snapshots,
        )?;
        let implicit = evolve_implicit(
            &synthesis.operator,
            plan.beta,
            &v0,
            plan.horizon.value,
            dt,
            ImplicitOptions {
                snapshots: scenario.snapshots,
                certify_positivity: true,
                ..ImplicitOptions::default()
            },
        )?;
        rows.push(ConvergenceRow {
            n_cells: n,
            dt,
            lambda2: synthesis.decomposition.lambdas()[1],
            lambda3: synthesis.decomposition.lambdas()[2],
            steering_error: steering_error(&implicit, synthesis.target.field())?
                .max(steering_error(&spectral, synthesis.target.field())?),
            cross_integrator_gap: trace_gap(&spectral, &implicit)?,
        });
    }
    Ok(rows)
}

/// Observed orders from successive errors under grid doubling:
/// log2(e_k / e_{k+1}).  Empty when fewer than two finite errors exist.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Writes the convergence table to CSV (errors measured against the
/// finest level).
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    use std::fmt::Write as _;
    let finest = rows.last().expect("study produced at least one row");
    let mut out = String::from(
        "n_cells,dt,lambda2,lambda3,lambda2_err_vs_finest,lambda3_err_vs_finest,steering_error,cross_integrator_gap\n",
    );
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.n_cells,
            row.dt,
            row.lambda2,
            row.lambda3,
            (row.lambda2 - finest.lambda2).abs(),
            (row.lambda3 - finest.lambda3).abs(),
            row.steering_error,
            row.cross_integrator_gap
        )
        .expect("writing to a string cannot fail");
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
