//! Command-line front end: scenario-driven steering runs, spectra,
//! verification sweeps, the climate demonstration and the convergence
//! study.
//!
//! Exit codes: 0 when the run completed and every applicable check
//! passed, 1 when a completed run failed a check, 2 on operational errors
//! (unreadable files, inadmissible scenarios, solver failures).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use degenpde::eigendecompose;
use degenpde_cli::pipeline::{
    self, budyko_sellers_scenario, run_budyko_sellers_demo, run_convergence_study, run_pipeline,
    run_synthesize, RunOptions, DEFAULT_LEVELS,
};
use degenpde_cli::report::RunReport;
use degenpde_cli::scenario::Scenario;
use degenpde_cli::{csvio, sweep};

#[derive(Parser)]
#[command(
    name = "degenpde",
    version,
    about = "Steering a degenerate parabolic equation to a chosen profile \
             with a static multiplicative control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the scenario's grid resolution.
    #[arg(long, global = true)]
    cells: Option<usize>,
    /// Override the scenario's implicit time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Output directory (overrides the scenario's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit timestamp and wall-clock fields so reports are byte-identical
    /// across reruns.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Seed for randomized verification scenarios.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues (and optionally modes) of the assembled operator.
    Spectrum {
        /// Scenario file; defaults to the uncontrolled Legendre operator.
        scenario: Option<PathBuf>,
        /// Decompose the operator with the synthesized control installed.
        #[arg(long)]
        with_control: bool,
        /// Also dump the first N eigenmodes as CSV columns.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Build the steering plan (control, horizon, spectral offset) without
    /// evolving.
    Synthesize { scenario: PathBuf },
    /// Full pipeline: synthesize, evolve with both integrators, check every
    /// invariant, write artifacts.
    Evolve { scenario: PathBuf },
    /// Re-run the verification checks for a scenario, or sweep randomized
    /// scenarios with --sweep.
    Verify {
        scenario: Option<PathBuf>,
        /// Number of randomized scenarios to draw and check.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Climate-reduction demonstration: the Legendre coefficient with the
    /// grid coordinate read as the sine of latitude.
    DemoBudykoSellers {
        /// Optional insolation CSV echoed into the report as metadata.
        #[arg(long)]
        insolation: Option<PathBuf>,
    },
    /// Grid/time-step refinement study of eigenvalues, steering error and
    /// integrator agreement.
    Converge,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<u8> {
    let cli = Cli::parse();

    match &cli.command {
        Command::Spectrum {
            scenario,
            with_control,
            modes,
        } => cmd_spectrum(&cli, scenario.as_deref(), *with_control, *modes),
        Command::Synthesize { scenario } => cmd_synthesize(&cli, scenario),
        Command::Evolve { scenario } => cmd_evolve(&cli, scenario),
        Command::Verify { scenario, sweep } => cmd_verify(&cli, scenario.as_deref(), *sweep),
        Command::DemoBudykoSellers { insolation } => cmd_demo(&cli, insolation.as_deref()),
        Command::Converge => cmd_converge(&cli),
    }
}

/// Loads a scenario and applies the global overrides.
fn load_scenario(cli: &Cli, path: &std::path::Path) -> Result<Scenario> {
    let mut scenario = Scenario::load(path)?;
    apply_overrides(cli, &mut scenario);
    Ok(scenario)
}

fn apply_overrides(cli: &Cli, scenario: &mut Scenario) {
    if let Some(cells) = cli.cells {
        scenario.n_cells = cells;
    }
    if let Some(dt) = cli.dt {
        scenario.dt = dt;
    }
}

fn out_dir(cli: &Cli, scenario: &Scenario) -> PathBuf {
    cli.out
        .clone()
        .unwrap_or_else(|| scenario.output_dir.clone())
}

fn options(cli: &Cli, scenario: &Scenario, label: Option<String>) -> RunOptions {
    RunOptions {
        out_dir: out_dir(cli, scenario),
        no_timestamp: cli.no_timestamp,
        scenario_label: label,
        write_traces: true,
        insolation: None,
    }
}

fn cmd_spectrum(
    cli: &Cli,
    scenario_path: Option<&std::path::Path>,
    with_control: bool,
    modes: Option<usize>,
) -> Result<u8> {
    let mut scenario = match scenario_path {
        Some(path) => Scenario::load(path)?,
        None => budyko_sellers_scenario(),
    };
    apply_overrides(cli, &mut scenario);
    let dir = out_dir(cli, &scenario);

    let decomposition = if with_control {
        let opts = RunOptions {
            out_dir: dir.clone(),
            no_timestamp: cli.no_timestamp,
            scenario_label: None,
            write_traces: false,
            insolation: None,
        };
        run_synthesize(&scenario, &opts)?.decomposition
    } else {
        let grid = degenpde::build_grid(scenario.n_cells)?;
        let coeff = scenario.coefficient.build(&scenario.base_dir)?;
        let alpha = degenpde::StateField::zeros(&grid);
        let op = degenpde::AssembledOperator::assemble(&grid, &coeff, &alpha)?;
        eigendecompose(&op)?
    };

    let spectrum_path = dir.join("spectrum.csv");
    csvio::write_spectrum_csv(&spectrum_path, decomposition.lambdas())?;
    println!("wrote {}", spectrum_path.display());
    if let Some(count) = modes {
        let modes_path = dir.join("modes.csv");
        csvio::write_modes_csv(&modes_path, &decomposition, count)?;
        println!("wrote {}", modes_path.display());
    }
    println!("first eigenvalues:");
    for (k, lambda) in decomposition.lambdas().iter().take(8).enumerate() {
        println!("  lambda_{} = {lambda:.12}", k + 1);
    }
    println!("spectral gap = {:.12}", decomposition.gap());
    Ok(0)
}

fn cmd_synthesize(cli: &Cli, path: &std::path::Path) -> Result<u8> {
    let scenario = load_scenario(cli, path)?;
    let opts = options(cli, &scenario, Some(path.display().to_string()));
    let synthesis = run_synthesize(&scenario, &opts)?;
    let plan = &synthesis.plan;
    println!(
        "plan written to {}",
        opts.out_dir.join("plan.json").display()
    );
    println!("  horizon T       = {}", plan.horizon.value);
    println!("  offset beta     = {}", plan.beta);
    println!("  lambda_1        = {:e}", plan.lambda1);
    println!("  lambda_2        = {}", plan.lambda2);
    println!("  overlap         = {}", plan.overlap);
    println!("  predicted error = {}", plan.predicted_error);
    Ok(0)
}

fn print_report(report: &RunReport) {
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!(
        "plan: T = {:.6}, beta = {:.6e}, lambda2 = {:.9}, overlap = {:.6}",
        report.horizon, report.beta, report.lambda2, report.overlap
    );
    println!(
        "steering error = {:.6e} (spectral {:.6e}, implicit {:.6e}), tolerance {:.6e} → {}",
        report.steering_error,
        report.steering_error_spectral,
        report.steering_error_implicit,
        report.tolerance,
        verdict(report.within_tolerance)
    );
    println!(
        "cross-integrator gap = {:.3e}, b-norm = {:.6}",
        report.cross_integrator_gap, report.b_norm
    );
    let positivity = match &report.positivity {
        Some(p) => format!("{} (min {:.3e})", verdict(p.passes), p.min_value),
        None => "not applicable (signed mode)".to_string(),
    };
    println!(
        "checks: positivity {positivity}, gronwall {}, remainder {}, parseval {}, closing identity {}",
        verdict(report.gronwall_ok),
        verdict(report.remainder_ok),
        verdict(report.parseval_ok),
        verdict(report.closing_identity_ok)
    );
}

fn cmd_evolve(cli: &Cli, path: &std::path::Path) -> Result<u8> {
    let scenario = load_scenario(cli, path)?;
    let opts = options(cli, &scenario, Some(path.display().to_string()));
    let run = run_pipeline(&scenario, &opts)?;
    print_report(&run.report);
    println!("artifacts in {}", opts.out_dir.display());
    Ok(run.exit_code() as u8)
}

fn cmd_verify(
    cli: &Cli,
    scenario_path: Option<&std::path::Path>,
    sweep_count: Option<usize>,
) -> Result<u8> {
    match (scenario_path, sweep_count) {
        (Some(_), Some(_)) => bail!("pass either a scenario file or --sweep, not both"),
        (None, None) => bail!("verify needs a scenario file or --sweep <count>"),
        (Some(path), None) => {
            let scenario = load_scenario(cli, path)?;
            let mut opts = options(cli, &scenario, Some(path.display().to_string()));
            opts.write_traces = false;
            let run = run_pipeline(&scenario, &opts)?;
            print_report(&run.report);
            Ok(run.exit_code() as u8)
        }
        (None, Some(count)) => {
            let outcome = sweep::run_sweep(count, cli.seed);
            for result in &outcome.results {
                let status = if result.violations.is_empty() {
                    "PASS".to_string()
                } else {
                    format!("FAIL ({})", result.violations.join("; "))
                };
                println!(
                    "scenario {:>3}: n = {}, epsilon = {:.3e}, {} variational fields → {status}",
                    result.index, result.n_cells, result.epsilon, result.rayleigh_checks
                );
            }
            println!(
                "{} scenarios, {} violations",
                outcome.results.len(),
                outcome.total_violations()
            );
            Ok(if outcome.passed() { 0 } else { 1 })
        }
    }
}

fn cmd_demo(cli: &Cli, insolation: Option<&std::path::Path>) -> Result<u8> {
    let mut scenario = budyko_sellers_scenario();
    apply_overrides(cli, &mut scenario);
    let opts = options(cli, &scenario, Some("budyko-sellers demo".into()));
    let run = run_budyko_sellers_demo(&scenario, insolation, &opts)?;
    println!("energy-balance reduction: a(x) = 1 − x², x = sine of latitude");
    if let Some(meta) = &run.report.insolation {
        println!(
            "insolation metadata: {} rows from {}, range [{}, {}], mean {:.3}",
            meta.rows, meta.path, meta.min, meta.max, meta.mean
        );
    }
    print_report(&run.report);
    println!(
        "latitude profile written to {}",
        opts.out_dir.join("temperature_by_latitude.csv").display()
    );
    Ok(run.exit_code() as u8)
}

fn cmd_converge(cli: &Cli) -> Result<u8> {
    let rows = run_convergence_study(&DEFAULT_LEVELS)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let csv_path = dir.join("convergence.csv");
    pipeline::write_convergence_csv(&csv_path, &rows)?;

    let finest = rows.last().expect("ladder is nonempty");
    println!(
        "{:>7} {:>10} {:>14} {:>14} {:>14} {:>14}",
        "n_cells", "dt", "lambda2_err", "lambda3_err", "steering", "cross_gap"
    );
    for row in &rows {
        println!(
            "{:>7} {:>10.2e} {:>14.3e} {:>14.3e} {:>14.3e} {:>14.3e}",
            row.n_cells,
            row.dt,
            (row.lambda2 - finest.lambda2).abs(),
            (row.lambda3 - finest.lambda3).abs(),
            row.steering_error,
            row.cross_integrator_gap
        );
    }
    let lambda3_errs: Vec<f64> = rows[..rows.len() - 1]
        .iter()
        .map(|r| (r.lambda3 - finest.lambda3).abs())
        .collect();
    let gap_errs: Vec<f64> = rows.iter().map(|r| r.cross_integrator_gap).collect();
    if lambda3_errs.len() >= 2 {
        println!(
            "observed orders: lambda3 {:?}, cross-gap {:?}",
            pipeline::observed_orders(&lambda3_errs),
            pipeline::observed_orders(&gap_errs)
        );
    }
    println!("table written to {}", csv_path.display());
    Ok(0)
}
