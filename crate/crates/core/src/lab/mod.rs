//! Experiment harness: trials, comparisons, sweeps, invariant diagnostics
//! and Monte-Carlo estimates of the disagreement coefficient and `alpha`.

pub mod diagnostics;
pub mod measure;
pub mod trial;

use crate::engine::{run_main, AlgoConfig};
use crate::error::Result;
use crate::hypotheses::{Disc, Line};
use crate::world::instances::{build_world, Instances};
use crate::world::{Family, InstanceSpec};

pub use diagnostics::{check_invariants, DiagnosticOptions, DiagnosticReport, EpochDiagnostics};
pub use measure::{
    binomial_ci, estimate_alpha, estimate_theta, exact_theta, measure_error, theta_grid, AlphaEstimate,
    ErrorEstimate, ALPHA_CELLS, Z99,
};
pub use trial::{
    run_comparison, run_trial, sweep, sweep_rows, write_csv, ComparisonRow, Learner, TrialOptions, TrialResult,
    CSV_HEADER,
};

fn diagnose_in<S: Instances>(
    spec: &InstanceSpec,
    config: &AlgoConfig,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    let mut world = build_world::<S>(spec, seed)?;
    let config = AlgoConfig { retain: true, ..*config };
    let out = run_main(&mut world, &config).map_err(|f| f.error)?;
    check_invariants(&out, &world, &config, opts)
}

/// Runs the main learner with retained samples on the world built from
/// `spec` and `seed` and checks the invariants on the run.
pub fn diagnose(
    spec: &InstanceSpec,
    config: &AlgoConfig,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    match spec.family {
        Family::Threshold1d => diagnose_in::<Line>(spec, config, seed, opts),
        Family::Halfspace2d => diagnose_in::<Disc>(spec, config, seed, opts),
    }
}
