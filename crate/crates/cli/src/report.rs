//! Run reports: the JSON artifact summarizing a pipeline run.
//!
//! Serialization is deterministic — field order is fixed by the struct,
//! floats use shortest round-trip formatting — so two runs of the same
//! scenario produce byte-identical reports once timestamps are suppressed
//! with `--no-timestamp`.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Positivity summary attached to runs in nonnegative steering mode.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PositivitySummary {
    pub min_value: f64,
    pub max_negative_part_norm: f64,
    pub passes: bool,
}

impl From<degenpde::NonnegativityReport> for PositivitySummary {
    fn from(r: degenpde::NonnegativityReport) -> Self {
        Self {
            min_value: r.min_value,
            max_negative_part_norm: r.max_negative_part_norm,
            passes: r.passes,
        }
    }
}

/// Degeneracy classification echoed into the report.
#[derive(Debug, Clone, Serialize)]
pub struct DegeneracySummary {
    /// 1/a fails to be integrable near ±1 (flux boundary conditions
    /// close the problem without boundary data).
    pub strongly_degenerate: bool,
    /// The primitive of 1/a stays integrable (the well-posedness window).
    pub reciprocal_primitive_integrable: bool,
}

/// Metadata echoed from an optional insolation CSV by the climate demo.
/// The controlled equation is the linear principal part; the profile is
/// reported, not used in the numerics.
#[derive(Debug, Clone, Serialize)]
pub struct InsolationSummary {
    pub path: String,
    pub rows: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// The JSON report emitted after a pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Scenario file the run came from, when there was one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub mode: String,
    pub n_cells: usize,
    pub dt: f64,
    pub epsilon: f64,
    pub mollifier_delta: f64,
    pub scheme: String,
    pub k_max: usize,
    pub snapshots: usize,

    pub degeneracy: DegeneracySummary,

    // Plan summary.
    pub horizon: f64,
    pub horizon_clamped: bool,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub overlap: f64,
    pub mollification_distance: f64,
    pub predicted_error: f64,
    /// |predicted_error − ε| / ε: the closing identity defect.
    pub closing_identity_defect: f64,

    // Achieved results.
    pub steering_error_spectral: f64,
    pub steering_error_implicit: f64,
    /// Headline error: the worse of the two integrators.
    pub steering_error: f64,
    /// ε + c_margin·h.
    pub tolerance: f64,
    pub c_margin: f64,
    pub within_tolerance: bool,
    pub cross_integrator_gap: f64,
    pub b_norm: f64,

    // Invariant checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivitySummary>,
    pub gronwall_ok: bool,
    pub remainder_ok: bool,
    pub parseval_ok: bool,
    pub closing_identity_ok: bool,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub insolation: Option<InsolationSummary>,

    // Suppressed under --no-timestamp for byte-identical reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl RunReport {
    /// Whether every applicable check passed (the exit-code criterion).
    pub fn all_checks_pass(&self) -> bool {
        self.within_tolerance
            && self.gronwall_ok
            && self.remainder_ok
            && self.parseval_ok
            && self.closing_identity_ok
            && self.positivity.map_or(true, |p| p.passes)
    }

    /// Serializes to pretty JSON (trailing newline included).
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).context("serializing report")?;
        text.push('\n');
        Ok(text)
    }

    /// Writes the JSON report to `path`, creating parent directories.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
        }
        std::fs::write(path, self.to_json()?).with_context(|| format!("writing {}", path.display()))
    }
}

/// Seconds since the Unix epoch, for timestamped reports.
pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
