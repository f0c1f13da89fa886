//! Flat `key = value` scenario files: one steering problem per file.
//!
//! The format is deliberately primitive — `#` starts a comment, blank
//! lines are skipped, every other line is `key = value` — so golden files
//! diff cleanly and need no parser dependency.  Errors carry the
//! offending line number.
//!
//! Recognized keys:
//!
//! | key              | value                                                    |
//! |------------------|----------------------------------------------------------|
//! | `coefficient`    | `legendre` \| `power:<gamma>` \| `constant:<c>` \| `table:<path>` |
//! | `initial_state`  | profile preset (see below), required                     |
//! | `target_state`   | profile preset, required                                 |
//! | `epsilon`        | positive real, required                                  |
//! | `mode`           | `nonnegative` (default) \| `signed`                      |
//! | `n_cells`        | integer ≥ 4 (default 500)                                |
//! | `dt`             | positive real (default 1e-4)                             |
//! | `mollifier_delta`| positive real (default 1e-2)                             |
//! | `snapshots`      | integer ≥ 2 (default 64)                                 |
//! | `scheme`         | `backward-euler` (default) \| `crank-nicolson`           |
//! | `k_max`          | integer ≥ 1 (default: all modes)                         |
//! | `c_margin`       | nonnegative real (default: built-in calibration)         |
//! | `output_dir`     | path (default `out`, overridden by `--out`)              |
//!
//! Profile presets: `const:<c>`, `affine:<a>,<b>` (a + b·x),
//! `bump:<center>,<width>` (Gaussian bump), `csv:<path>`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use degenpde::{DiffusionCoefficient, Grid, StateField};
use degenpde::{ImplicitScheme, SteeringMode};

use crate::csvio;

/// How the diffusion coefficient is specified in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec {
    /// a(x) = 1 − x².
    Legendre,
    /// a(x) = (1 − x²)^γ.
    Power(f64),
    /// Uniform a(x) = c.
    Constant(f64),
    /// Sampled (x, a) pairs read from a CSV file.
    Table(PathBuf),
}

impl CoefficientSpec {
    fn parse(raw: &str) -> Result<Self> {
        let raw = raw.trim();
        if raw.eq_ignore_ascii_case("legendre") {
            return Ok(Self::Legendre);
        }
        match raw.split_once(':') {
            Some(("power", g)) => Ok(Self::Power(
                g.trim().parse().context("power exponent is not a number")?,
            )),
            Some(("constant", c)) => Ok(Self::Constant(
                c.trim().parse().context("constant value is not a number")?,
            )),
            Some(("table", p)) => Ok(Self::Table(PathBuf::from(p.trim()))),
            _ => bail!(
                "unknown coefficient `{raw}` (expected legendre, power:<gamma>, \
                 constant:<c> or table:<path>)"
            ),
        }
    }

    /// Instantiates the coefficient, resolving table paths against
    /// `base_dir` (the scenario file's directory).
    pub fn build(&self, base_dir: &Path) -> Result<DiffusionCoefficient> {
        match self {
            Self::Legendre => Ok(DiffusionCoefficient::legendre()),
            Self::Power(gamma) => {
                DiffusionCoefficient::power_degenerate(*gamma).map_err(Into::into)
            }
            Self::Constant(c) => DiffusionCoefficient::constant(*c).map_err(Into::into),
            Self::Table(path) => {
                let resolved = resolve(base_dir, path);
                let points = csvio::read_pair_csv(&resolved)
                    .with_context(|| format!("reading coefficient table {}", resolved.display()))?;
                DiffusionCoefficient::from_table(points).map_err(Into::into)
            }
        }
    }
}

/// How a state profile (initial or target) is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    /// Uniform value.
    Constant(f64),
    /// offset + slope·x.
    Affine { offset: f64, slope: f64 },
    /// exp(−((x − center)/width)²): strictly positive, localized.
    Bump { center: f64, width: f64 },
    /// Values read from a CSV file (one sample per grid cell).
    Csv(PathBuf),
}

impl ProfileSpec {
    fn parse(raw: &str) -> Result<Self> {
        let raw = raw.trim();
        let Some((kind, rest)) = raw.split_once(':') else {
            bail!(
                "unknown profile `{raw}` (expected const:<c>, affine:<a>,<b>, \
                 bump:<center>,<width> or csv:<path>)"
            );
        };
        let two = |rest: &str, what: &str| -> Result<(f64, f64)> {
            let (a, b) = rest
                .split_once(',')
                .with_context(|| format!("{what} needs two comma-separated numbers"))?;
            Ok((
                a.trim()
                    .parse()
                    .with_context(|| format!("bad {what} value `{a}`"))?,
                b.trim()
                    .parse()
                    .with_context(|| format!("bad {what} value `{b}`"))?,
            ))
        };
        match kind.trim() {
            "const" => Ok(Self::Constant(
                rest.trim().parse().context("const value is not a number")?,
            )),
            "affine" => {
                let (offset, slope) = two(rest, "affine")?;
                Ok(Self::Affine { offset, slope })
            }
            "bump" => {
                let (center, width) = two(rest, "bump")?;
                if width <= 0.0 {
                    bail!("bump width must be positive, got {width}");
                }
                Ok(Self::Bump { center, width })
            }
            "csv" => Ok(Self::Csv(PathBuf::from(rest.trim()))),
            other => bail!("unknown profile kind `{other}`"),
        }
    }

    /// Samples the profile on `grid`, resolving CSV paths against `base_dir`.
    pub fn realize(&self, grid: &Arc<Grid>, base_dir: &Path) -> Result<StateField> {
        match self {
            Self::Constant(c) => Ok(StateField::constant(grid, *c)),
            Self::Affine { offset, slope } => Ok(StateField::from_fn(grid, |x| offset + slope * x)),
            Self::Bump { center, width } => Ok(StateField::from_fn(grid, |x| {
                let s = (x - center) / width;
                (-s * s).exp()
            })),
            Self::Csv(path) => {
                let resolved = resolve(base_dir, path);
                csvio::read_state_csv(&resolved, grid)
                    .with_context(|| format!("reading profile {}", resolved.display()))
            }
        }
    }
}

fn resolve(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

/// A fully parsed steering scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub coefficient: CoefficientSpec,
    pub initial_state: ProfileSpec,
    pub target_state: ProfileSpec,
    pub epsilon: f64,
    pub mode: SteeringMode,
    pub n_cells: usize,
    pub dt: f64,
    pub mollifier_delta: f64,
    pub snapshots: usize,
    pub scheme: ImplicitScheme,
    /// Number of modes kept by the eigenexpansion integrator; `None`
    /// keeps the full basis.
    pub k_max: Option<usize>,
    /// Override for the finite-resolution margin coefficient.
    pub c_margin: Option<f64>,
    pub output_dir: PathBuf,
    /// Directory the scenario file lives in; relative CSV paths inside
    /// the file are resolved against it.
    pub base_dir: PathBuf,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            coefficient: CoefficientSpec::Legendre,
            initial_state: ProfileSpec::Constant(1.0),
            target_state: ProfileSpec::Constant(1.0),
            epsilon: 1e-2,
            mode: SteeringMode::Nonnegative,
            n_cells: 500,
            dt: 1e-4,
            mollifier_delta: 1e-2,
            snapshots: degenpde::DEFAULT_SNAPSHOTS,
            scheme: ImplicitScheme::BackwardEuler,
            k_max: None,
            c_margin: None,
            output_dir: PathBuf::from("out"),
            base_dir: PathBuf::from("."),
        }
    }
}

impl Scenario {
    /// Parses a scenario file from disk.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scenario file {}", path.display()))?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        Self::parse(&text, base_dir).with_context(|| format!("in scenario file {}", path.display()))
    }

    /// Parses scenario text; `base_dir` anchors relative CSV paths.
    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self> {
        let mut scenario = Scenario {
            base_dir,
            ..Scenario::default()
        };
        let mut seen: Vec<&str> = Vec::new();
        let mut required = RequiredKeys::default();

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.split_once('#') {
                Some((before, _)) => before,
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {line_no}: expected `key = value`, got `{line}`"))?;
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                bail!("line {line_no}: key `{key}` has no value");
            }
            if let Some(known) = KNOWN_KEYS.iter().find(|k| **k == key) {
                if seen.contains(known) {
                    bail!("line {line_no}: duplicate key `{key}`");
                }
                seen.push(known);
            } else {
                bail!("line {line_no}: unknown key `{key}`");
            }

            let set = || format!("line {line_no}: key `{key}`");
            match key {
                "coefficient" => {
                    scenario.coefficient = CoefficientSpec::parse(value).with_context(set)?;
                }
                "initial_state" => {
                    scenario.initial_state = ProfileSpec::parse(value).with_context(set)?;
                    required.initial_state = true;
                }
                "target_state" => {
                    scenario.target_state = ProfileSpec::parse(value).with_context(set)?;
                    required.target_state = true;
                }
                "epsilon" => {
                    scenario.epsilon = parse_positive(value).with_context(set)?;
                    required.epsilon = true;
                }
                "mode" => {
                    scenario.mode = match value {
                        "nonnegative" => SteeringMode::Nonnegative,
                        "signed" => SteeringMode::Signed,
                        other => bail!(
                            "line {line_no}: unknown mode `{other}` \
                             (expected nonnegative or signed)"
                        ),
                    };
                }
                "n_cells" => {
                    scenario.n_cells = value
                        .parse::<usize>()
                        .ok()
                        .filter(|&n| n >= 4)
                        .with_context(|| {
                            format!("line {line_no}: n_cells must be an integer ≥ 4")
                        })?;
                }
                "dt" => {
                    scenario.dt = parse_positive(value).with_context(set)?;
                }
                "mollifier_delta" => {
                    scenario.mollifier_delta = parse_positive(value).with_context(set)?;
                }
                "snapshots" => {
                    scenario.snapshots = value
                        .parse::<usize>()
                        .ok()
                        .filter(|&s| s >= 2)
                        .with_context(|| {
                            format!("line {line_no}: snapshots must be an integer ≥ 2")
                        })?;
                }
                "scheme" => {
                    scenario.scheme = match value {
                        "backward-euler" => ImplicitScheme::BackwardEuler,
                        "crank-nicolson" => ImplicitScheme::CrankNicolson,
                        other => bail!(
                            "line {line_no}: unknown scheme `{other}` \
                             (expected backward-euler or crank-nicolson)"
                        ),
                    };
                }
                "k_max" => {
                    scenario.k_max = Some(
                        value
                            .parse::<usize>()
                            .ok()
                            .filter(|&k| k >= 1)
                            .with_context(|| {
                                format!("line {line_no}: k_max must be an integer ≥ 1")
                            })?,
                    );
                }
                "c_margin" => {
                    let c: f64 = value.parse().with_context(set)?;
                    if !c.is_finite() || c < 0.0 {
                        bail!("line {line_no}: c_margin must be finite and nonnegative");
                    }
                    scenario.c_margin = Some(c);
                }
                "output_dir" => {
                    scenario.output_dir = PathBuf::from(value);
                }
                _ => unreachable!("key already validated against KNOWN_KEYS"),
            }
        }

        required.check()?;
        Ok(scenario)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "coefficient",
    "initial_state",
    "target_state",
    "epsilon",
    "mode",
    "n_cells",
    "dt",
    "mollifier_delta",
    "snapshots",
    "scheme",
    "k_max",
    "c_margin",
    "output_dir",
];

#[derive(Default)]
struct RequiredKeys {
    initial_state: bool,
    target_state: bool,
    epsilon: bool,
}

impl RequiredKeys {
    fn check(&self) -> Result<()> {
        let mut missing = Vec::new();
        if !self.initial_state {
            missing.push("initial_state");
        }
        if !self.target_state {
            missing.push("target_state");
        }
        if !self.epsilon {
            missing.push("epsilon");
        }
        if missing.is_empty() {
            Ok(())
        } else {
            bail!("missing required keys: {}", missing.join(", "));
        }
    }
}

fn parse_positive(value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .with_context(|| format!("`{value}` is not a number"))?;
    if !v.is_finite() || v <= 0.0 {
        bail!("`{value}` must be finite and positive");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::parse(text, PathBuf::from("."))
    }

    #[test]
    fn full_scenario_round_trips_through_the_parser() {
        let text = "\
# steering run
coefficient = legendre
initial_state = affine:1.0,0.5   # v0 = 1 + x/2
target_state = const:1.0
epsilon = 1e-2
mode = nonnegative
n_cells = 2000
dt = 1e-4
mollifier_delta = 0.05
snapshots = 32
scheme = crank-nicolson
k_max = 100
c_margin = 1.5
output_dir = artifacts
";
        let s = parse(text).unwrap();
        assert_eq!(s.coefficient, CoefficientSpec::Legendre);
        assert_eq!(
            s.initial_state,
            ProfileSpec::Affine {
                offset: 1.0,
                slope: 0.5
            }
        );
        assert_eq!(s.target_state, ProfileSpec::Constant(1.0));
        assert_eq!(s.epsilon, 1e-2);
        assert_eq!(s.mode, SteeringMode::Nonnegative);
        assert_eq!(s.n_cells, 2000);
        assert_eq!(s.dt, 1e-4);
        assert_eq!(s.mollifier_delta, 0.05);
        assert_eq!(s.snapshots, 32);
        assert_eq!(s.scheme, ImplicitScheme::CrankNicolson);
        assert_eq!(s.k_max, Some(100));
        assert_eq!(s.c_margin, Some(1.5));
        assert_eq!(s.output_dir, PathBuf::from("artifacts"));
    }

    #[test]
    fn minimal_scenario_fills_defaults() {
        let s = parse("initial_state = const:2.0\ntarget_state = bump:0.0,0.5\nepsilon = 0.001\n")
            .unwrap();
        assert_eq!(s.n_cells, 500);
        assert_eq!(s.dt, 1e-4);
        assert_eq!(s.mode, SteeringMode::Nonnegative);
        assert_eq!(s.scheme, ImplicitScheme::BackwardEuler);
        assert_eq!(s.snapshots, 64);
        assert!(s.k_max.is_none());
        assert!(s.c_margin.is_none());
    }

    #[test]
    fn parser_reports_line_numbers_for_bad_input() {
        let err = parse("initial_state = const:1\nbogus_key = 3\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");

        let err = parse("initial_state = const:1\ninitial_state = const:2\n").unwrap_err();
        let text = format!("{err:#}");
        assert!(
            text.contains("line 2") && text.contains("duplicate"),
            "{text}"
        );

        let err = parse("epsilon = -0.5\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 1"), "{err:#}");

        let err = parse("initial_state = const:1\ntarget_state = const:1\n").unwrap_err();
        assert!(format!("{err:#}").contains("epsilon"), "{err:#}");
    }

    #[test]
    fn coefficient_and_profile_presets_parse() {
        assert_eq!(
            CoefficientSpec::parse("power: 1.5").unwrap(),
            CoefficientSpec::Power(1.5)
        );
        assert_eq!(
            CoefficientSpec::parse("constant:2.0").unwrap(),
            CoefficientSpec::Constant(2.0)
        );
        assert_eq!(
            CoefficientSpec::parse("table:data/a.csv").unwrap(),
            CoefficientSpec::Table(PathBuf::from("data/a.csv"))
        );
        assert!(CoefficientSpec::parse("mystery").is_err());

        assert_eq!(
            ProfileSpec::parse("bump:0.25,0.1").unwrap(),
            ProfileSpec::Bump {
                center: 0.25,
                width: 0.1
            }
        );
        assert!(ProfileSpec::parse("bump:0.25,-0.1").is_err());
        assert_eq!(
            ProfileSpec::parse("csv:v0.csv").unwrap(),
            ProfileSpec::Csv(PathBuf::from("v0.csv"))
        );
        assert!(ProfileSpec::parse("42").is_err());
    }

    #[test]
    fn profiles_realize_on_a_grid() {
        let grid = degenpde::build_grid(16).unwrap();
        let affine = ProfileSpec::Affine {
            offset: 1.0,
            slope: 0.5,
        }
        .realize(&grid, Path::new("."))
        .unwrap();
        for (&x, &v) in grid.centers().iter().zip(affine.values()) {
            assert_eq!(v, 1.0 + 0.5 * x);
        }
        let bump = ProfileSpec::Bump {
            center: 0.0,
            width: 0.3,
        }
        .realize(&grid, Path::new("."))
        .unwrap();
        assert!(bump.values().iter().all(|&v| v > 0.0));
    }
}
