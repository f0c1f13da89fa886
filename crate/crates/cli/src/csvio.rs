//! CSV artifact I/O.
//!
//! All floats are written with Rust's shortest round-trip formatting, so
//! re-ingesting a dumped state reproduces it bit for bit.  Files are
//! UTF-8, comma-separated, `.` decimal, LF line endings, one header row.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use degenpde::{EvolutionTrace, Grid, SpectralDecomposition, StateField};

/// Writes a state profile as `x,value` rows.
pub fn write_state_csv(path: &Path, state: &StateField) -> Result<()> {
    let mut out = String::from("x,value\n");
    for (x, v) in state.grid().centers().iter().zip(state.values()) {
        writeln!(out, "{x},{v}").expect("writing to a string cannot fail");
    }
    write_file(path, &out)
}

/// Reads a state profile dumped by [`write_state_csv`] (or any one- or
/// two-column numeric CSV with one row per grid cell; the last column is
/// the value).
pub fn read_state_csv(path: &Path, grid: &Arc<Grid>) -> Result<StateField> {
    let rows = read_numeric_rows(path)?;
    if rows.len() != grid.n_cells() {
        bail!(
            "{} has {} data rows but the grid has {} cells",
            path.display(),
            rows.len(),
            grid.n_cells()
        );
    }
    let mut values = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        match row.as_slice() {
            [v] => values.push(*v),
            [x, v] => {
                if (x - grid.centers()[i]).abs() > grid.h() {
                    bail!(
                        "{} row {}: x = {} does not match grid center {}",
                        path.display(),
                        i + 1,
                        x,
                        grid.centers()[i]
                    );
                }
                values.push(*v);
            }
            other => bail!(
                "{} row {}: expected 1 or 2 columns, found {}",
                path.display(),
                i + 1,
                other.len()
            ),
        }
    }
    StateField::from_values(grid, values).map_err(Into::into)
}

/// Reads a two-column numeric CSV as (x, y) pairs (coefficient tables,
/// insolation profiles, …).
pub fn read_pair_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let rows = read_numeric_rows(path)?;
    let mut pairs = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        match row.as_slice() {
            [x, y] => pairs.push((*x, *y)),
            other => bail!(
                "{} row {}: expected 2 columns, found {}",
                path.display(),
                i + 1,
                other.len()
            ),
        }
    }
    Ok(pairs)
}

/// Parses a CSV file into numeric rows, skipping a single leading header
/// row if its fields do not parse as numbers.
fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if idx == 0 => continue, // header row
            Err(e) => bail!(
                "{} row {}: non-numeric field ({e})",
                path.display(),
                idx + 1
            ),
        }
    }
    if rows.is_empty() {
        bail!("{} contains no data rows", path.display());
    }
    Ok(rows)
}

/// Writes a trajectory in long format: `t,x,v` rows, one per snapshot and
/// cell, plot-ready.
pub fn write_trace_csv(path: &Path, trace: &EvolutionTrace) -> Result<()> {
    let mut out = String::from("t,x,v\n");
    for (t, state) in trace.times.iter().zip(&trace.states) {
        for (x, v) in state.grid().centers().iter().zip(state.values()) {
            writeln!(out, "{t},{x},{v}").expect("writing to a string cannot fail");
        }
    }
    write_file(path, &out)
}

/// Writes eigenvalues as `k,lambda` rows (k is 1-based).
pub fn write_spectrum_csv(path: &Path, lambdas: &[f64]) -> Result<()> {
    let mut out = String::from("k,lambda\n");
    for (k, lambda) in lambdas.iter().enumerate() {
        writeln!(out, "{},{lambda}", k + 1).expect("writing to a string cannot fail");
    }
    write_file(path, &out)
}

/// Writes the first `count` eigenmodes as columns: `x,omega_1,…,omega_count`.
pub fn write_modes_csv(path: &Path, decomp: &SpectralDecomposition, count: usize) -> Result<()> {
    let count = count.min(decomp.len());
    let grid = decomp.ground_mode().grid();
    let mut out = String::from("x");
    for k in 1..=count {
        write!(out, ",omega_{k}").expect("writing to a string cannot fail");
    }
    out.push('\n');
    for (i, x) in grid.centers().iter().enumerate() {
        write!(out, "{x}").expect("writing to a string cannot fail");
        for mode in &decomp.modes()[..count] {
            write!(out, ",{}", mode.values()[i]).expect("writing to a string cannot fail");
        }
        out.push('\n');
    }
    write_file(path, &out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
