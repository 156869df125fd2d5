//! Trials, main-versus-baseline comparisons and sweeps.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_dbal_baseline, run_main, AlgoConfig, RunResult, TraceRecord};
use crate::error::{Error, Result};
use crate::hypotheses::{Disc, Line};
use crate::world::instances::{build_world, Instances};
use crate::world::{Family, InstanceSpec, QueryLedger};

use super::measure::measure_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    Main,
    Baseline,
}

impl Learner {
    pub fn as_str(self) -> &'static str {
        match self {
            Learner::Main => "main",
            Learner::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialOptions {
    /// Test draws for the Monte-Carlo error of the output classifier.
    pub n_test: usize,
    /// Worker threads across trials.
    pub workers: usize,
    /// Also run the baseline on an identically seeded world.
    pub baseline: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            n_test: 100_000,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            baseline: true,
        }
    }
}

/// One learner run on one world.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub instance: InstanceSpec,
    pub seed: u64,
    pub learner: Learner,
    /// Monte-Carlo `err_D(h_hat)` minus the exact `nu`.
    pub final_excess_error: Option<f64>,
    /// 99% half-width of the Monte-Carlo error.
    pub ci: Option<f64>,
    /// `err_D(h_hat) - nu`, computed exactly from the label law.
    pub exact_excess_error: Option<f64>,
    pub nu: Option<f64>,
    pub ledger: QueryLedger,
    pub trace: Vec<TraceRecord>,
    /// Digest of the fully labeled initial sample.
    pub initial_digest: Option<u64>,
    /// Seconds. Not serialized, so written results depend only on inputs.
    #[serde(skip)]
    pub wall_time: f64,
    pub error: Option<Error>,
}

impl TrialResult {
    fn failed(spec: &InstanceSpec, seed: u64, learner: Learner, error: Error) -> Self {
        Self {
            instance: spec.clone(),
            seed,
            learner,
            final_excess_error: None,
            ci: None,
            exact_excess_error: None,
            nu: None,
            ledger: QueryLedger::default(),
            trace: Vec::new(),
            initial_digest: None,
            wall_time: 0.0,
            error: Some(error),
        }
    }

    /// `excess - ci <= epsilon`; failed runs do not pass.
    pub fn passes(&self, epsilon: f64) -> bool {
        match (self.final_excess_error, self.ci) {
            (Some(e), Some(ci)) => e - ci <= epsilon,
            _ => false,
        }
    }
}

fn run_trial_in<S: Instances>(
    spec: &InstanceSpec,
    config: &AlgoConfig,
    seed: u64,
    learner: Learner,
    n_test: usize,
) -> TrialResult {
    let mut world = match build_world::<S>(spec, seed) {
        Ok(w) => w,
        Err(e) => return TrialResult::failed(spec, seed, learner, e),
    };
    let start = Instant::now();
    let result: RunResult<S> = match learner {
        Learner::Main => run_main(&mut world, config),
        Learner::Baseline => run_dbal_baseline(&mut world, config),
    };
    let wall_time = start.elapsed().as_secs_f64();
    let nu = world.nu();
    match result {
        Ok(out) => {
            let mut t = TrialResult {
                instance: spec.clone(),
                seed,
                learner,
                final_excess_error: None,
                ci: None,
                exact_excess_error: Some(world.exact_error(&out.classifier) - nu),
                nu: Some(nu),
                trace: out.epochs.iter().map(|e| e.trace_record()).collect(),
                initial_digest: out.epochs.first().map(|e| e.digest),
                ledger: out.ledger,
                wall_time,
                error: None,
            };
            match measure_error(&out.classifier, &world, n_test) {
                Ok(m) => {
                    t.final_excess_error = Some(m.estimate - nu);
                    t.ci = Some(m.ci);
                }
                Err(e) => t.error = Some(e),
            }
            t
        }
        Err(fail) => {
            let mut t = TrialResult::failed(spec, seed, learner, fail.error);
            t.nu = Some(nu);
            t.ledger = fail.ledger;
            t.trace = fail.epochs.iter().map(|e| e.trace_record()).collect();
            t.initial_digest = fail.epochs.first().map(|e| e.digest);
            t.wall_time = wall_time;
            t
        }
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_string())
}

/// Runs one learner on the world built from `spec` and `seed`. Errors and
/// panics are recorded in the result instead of being returned.
pub fn run_trial(spec: &InstanceSpec, config: &AlgoConfig, seed: u64, learner: Learner, n_test: usize) -> TrialResult {
    let run = || match spec.family {
        Family::Threshold1d => run_trial_in::<Line>(spec, config, seed, learner, n_test),
        Family::Halfspace2d => run_trial_in::<Disc>(spec, config, seed, learner, n_test),
    };
    catch_unwind(AssertUnwindSafe(run))
        .unwrap_or_else(|p| TrialResult::failed(spec, seed, learner, Error::Panicked(panic_message(p))))
}

/// The main learner and, optionally, the baseline on one seed.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub main: TrialResult,
    pub baseline: Option<TrialResult>,
    /// Strong queries of the main learner over those of the baseline.
    pub ratio: Option<f64>,
    /// Whether both runs started from the same fully labeled sample.
    pub same_initial_sample: Option<bool>,
}

impl ComparisonRow {
    fn new(main: TrialResult, baseline: Option<TrialResult>) -> Self {
        let ratio = baseline.as_ref().and_then(|b| {
            (main.error.is_none() && b.error.is_none() && b.ledger.strong_queries > 0)
                .then(|| main.ledger.strong_queries as f64 / b.ledger.strong_queries as f64)
        });
        let same_initial_sample = baseline.as_ref().and_then(|b| match (main.initial_digest, b.initial_digest) {
            (Some(x), Some(y)) => Some(x == y),
            _ => None,
        });
        Self { seed: main.seed, main, baseline, ratio, same_initial_sample }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))
}

/// One row per `(spec, seed)` in grid order, trials spread over
/// `opts.workers` threads.
pub fn sweep_rows(
    specs: &[InstanceSpec],
    seeds: &[u64],
    config: &AlgoConfig,
    opts: &TrialOptions,
) -> Result<Vec<ComparisonRow>> {
    if specs.is_empty() || seeds.is_empty() {
        return Err(Error::domain("a sweep needs at least one spec and one seed"));
    }
    let jobs: Vec<(&InstanceSpec, u64, Learner)> = specs
        .iter()
        .flat_map(|s| {
            seeds.iter().flat_map(move |&seed| {
                let baseline = opts.baseline.then_some((s, seed, Learner::Baseline));
                std::iter::once((s, seed, Learner::Main)).chain(baseline)
            })
        })
        .collect();
    let results: Vec<TrialResult> = pool(opts.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(spec, seed, learner)| run_trial(spec, config, seed, learner, opts.n_test))
            .collect()
    });
    let mut rows = Vec::new();
    let mut it = results.into_iter();
    while let Some(main) = it.next() {
        let baseline = if opts.baseline { it.next() } else { None };
        rows.push(ComparisonRow::new(main, baseline));
    }
    Ok(rows)
}

/// The main learner against the baseline on identically seeded worlds.
pub fn run_comparison(
    spec: &InstanceSpec,
    config: &AlgoConfig,
    seeds: &[u64],
    opts: &TrialOptions,
) -> Result<Vec<ComparisonRow>> {
    if seeds.len() < 2 {
        return Err(Error::domain("a comparison needs at least two seeds"));
    }
    let opts = TrialOptions { baseline: true, ..*opts };
    sweep_rows(std::slice::from_ref(spec), seeds, config, &opts)
}

/// Columns of the sweep CSV. `epochs` holds a JSON list of
/// `{"k", "m_k1", "m_k2"}` objects; `baseline_o_queries` and `ratio` are
/// filled on main rows when the baseline ran; `error` is empty on success.
pub const CSV_HEADER: [&str; 19] = [
    "family",
    "nu",
    "weak_mode",
    "g",
    "p",
    "beta",
    "seed",
    "learner",
    "excess_error",
    "ci",
    "exact_excess_error",
    "o_queries_total",
    "w_queries",
    "unlabeled_draws",
    "n0",
    "epochs",
    "baseline_o_queries",
    "ratio",
    "error",
];

#[derive(Serialize)]
struct EpochColumn {
    k: u32,
    m_k1: u64,
    m_k2: u64,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn record(t: &TrialResult, baseline: Option<&TrialResult>, ratio: Option<f64>) -> Result<Vec<String>> {
    let epochs: Vec<EpochColumn> = t
        .ledger
        .per_epoch
        .iter()
        .map(|e| EpochColumn { k: e.k, m_k1: e.m_k1, m_k2: e.m_k2 })
        .collect();
    let s = &t.instance;
    Ok(vec![
        s.family.to_string(),
        s.nu.to_string(),
        s.weak_mode.to_string(),
        s.g.to_string(),
        s.p.to_string(),
        s.beta.to_string(),
        t.seed.to_string(),
        t.learner.as_str().to_string(),
        opt(t.final_excess_error),
        opt(t.ci),
        opt(t.exact_excess_error),
        t.ledger.strong_queries.to_string(),
        t.ledger.weak_queries.to_string(),
        t.ledger.unlabeled_draws.to_string(),
        t.ledger.n0.to_string(),
        serde_json::to_string(&epochs)?,
        opt(baseline.map(|b| b.ledger.strong_queries)),
        opt(ratio),
        opt(t.error.as_ref()),
    ])
}

/// Writes the header and one line per trial: the main run, then the
/// baseline run when present.
pub fn write_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let lines = std::iter::once(record(&row.main, row.baseline.as_ref(), row.ratio)?)
            .chain(row.baseline.as_ref().map(|b| record(b, None, None)).transpose()?);
        for line in lines {
            w.write_record(&line)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// [`sweep_rows`] written as CSV; returns the number of data lines.
pub fn sweep<W: Write>(
    specs: &[InstanceSpec],
    seeds: &[u64],
    config: &AlgoConfig,
    opts: &TrialOptions,
    out: W,
) -> Result<usize> {
    let rows = sweep_rows(specs, seeds, config, opts)?;
    write_csv(&rows, out)?;
    Ok(rows.iter().map(|r| 1 + r.baseline.is_some() as usize).sum())
}
