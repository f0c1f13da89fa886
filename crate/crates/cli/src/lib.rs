//! Scenario-driven front end for the steering library: configuration-file
//! parsing, the synthesize→evolve→verify pipeline, CSV/JSON artifact
//! emission, the climate-reduction demonstration, and the convergence and
//! randomized verification harnesses.
//!
//! The binary is a thin `clap` wrapper over this library; everything
//! observable (reports, CSV layouts, exit-code policy) lives here so the
//! integration tests can drive it directly.

pub mod csvio;
pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod sweep;
