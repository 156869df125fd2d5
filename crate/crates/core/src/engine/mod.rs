//! The learner: an epoch loop that halves the target error each epoch,
//! trains a difference classifier to decide where the weak labeler can be
//! trusted, and labels a doubling sample until a confidence bound is met.
//!
//! Runs are strictly sequential. Every random choice comes from a named
//! stream of the world, so a run is a pure function of the world's seed and
//! the configuration.

pub mod adaptive;
pub mod bias;
pub mod diff;
pub mod region;

use std::io::Write;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bounds::{epoch_schedule, initial_sample_size, sigma, BoundParams, EpochSpec};
use crate::error::{Error, Result};
use crate::hypotheses::{EmpiricalError, Label, LabeledSample, Space, TripleExample};
use crate::world::{LabelRule, Phase, QueryLedger, Stream, World, WorldSpace};

pub use adaptive::{adaptive_active_learn, round_sigma, stopping_rule_met, AdaptiveOutcome, RoundLog};
pub use bias::{estimate_bias, estimate_bias_with_floor, BiasEstimate, BiasOutcome};
pub use diff::{train_difference_classifier, DiffPath, DiffTraining};
pub use region::in_disagreement_region;

/// Which accuracy parameter the difference classifier is trained with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonPassMode {
    /// `epsilon_k`, as the epoch loop is written.
    #[default]
    MainText,
    /// `epsilon_k / 128`, the value the error analysis of the difference
    /// classifier assumes. Only the sample size and the false-negative
    /// budget change; the region stays `DIS(V(S_{k-1}, 3 epsilon_k / 2))`.
    Appendix,
}

impl std::str::FromStr for EpsilonPassMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main-text" => Ok(Self::MainText),
            "appendix" => Ok(Self::Appendix),
            other => Err(Error::domain(format!("unknown mode {other:?}; expected main-text or appendix"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoConfig {
    pub target_epsilon: f64,
    pub delta: f64,
    /// Multiplier on every sample size and on the stopping-rule `sigma`.
    pub scale: f64,
    pub epsilon_pass_mode: EpsilonPassMode,
    /// Cap on unlabeled draws over the whole run.
    pub max_unlabeled: u64,
    /// Cap on the doubling index of adaptive subsampling.
    pub max_doubling_t: u32,
    /// Keep every epoch's labeled sample, region and triples for diagnostics.
    pub retain: bool,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            target_epsilon: 0.05,
            delta: 0.1,
            scale: 0.01,
            epsilon_pass_mode: EpsilonPassMode::MainText,
            max_unlabeled: 10_000_000_000,
            max_doubling_t: 34,
            retain: false,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_epsilon > 0.0 && self.target_epsilon.is_finite()) {
            return Err(Error::domain(format!("target epsilon must be positive, got {}", self.target_epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.max_unlabeled == 0 || self.max_doubling_t == 0 {
            return Err(Error::domain("caps must be positive"));
        }
        BoundParams::new(1, 1, self.scale).map(|_| ())
    }

    /// Bound parameters for space `S`; the VC dimensions come from the space.
    pub fn bound_params<S: Space>(&self) -> Result<BoundParams> {
        BoundParams::new(S::VC_DIM, S::DIFF_VC_DIM, self.scale)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::domain(format!("bad value {v:?} for {key}")))
        }
        match key {
            "epsilon" | "target_epsilon" => self.target_epsilon = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "scale" => self.scale = num(key, value)?,
            "mode" | "epsilon_pass_mode" => self.epsilon_pass_mode = value.parse()?,
            "max_unlabeled" => self.max_unlabeled = num(key, value)?,
            "max_doubling_t" => self.max_doubling_t = num(key, value)?,
            "retain" => self.retain = num(key, value)?,
            other => return Err(Error::domain(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }
}

/// What one epoch produced. Epoch 0 is the fully labeled initial sample.
#[derive(Debug, Clone, Serialize)]
pub struct EpochState<S: WorldSpace> {
    pub k: u32,
    pub epsilon: f64,
    pub delta: f64,
    /// Scaled `sigma` of the returned sample.
    pub sigma: f64,
    pub h_hat: S::Hypothesis,
    pub err_hat: EmpiricalError,
    pub sample_size: u64,
    pub t0: Option<u32>,
    pub h_df: Option<S::Difference>,
    pub diff_path: Option<DiffPath>,
    pub p_hat: Option<f64>,
    pub diff_m: u64,
    pub fn_budget: u64,
    /// Strong queries spent training `h_df`.
    pub m_k1: u64,
    /// Strong queries spent by adaptive subsampling.
    pub m_k2: u64,
    pub weak: u64,
    pub rounds: Vec<RoundLog>,
    /// Digest of the returned sample's points and labels.
    pub digest: u64,
    #[serde(skip)]
    pub s_hat: Option<Arc<S::Sample>>,
    /// Region the epoch worked in, built from the previous epoch's sample.
    #[serde(skip)]
    pub region: Option<Arc<S::Region>>,
    #[serde(skip)]
    pub triples: Option<Arc<Vec<TripleExample<S::Point>>>>,
}

/// One line of the JSON trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: u32,
    pub p_hat: Option<f64>,
    pub m_k1: u64,
    pub t0: Option<u32>,
    pub m_k2: u64,
    pub sigma: f64,
    pub err_hat: f64,
}

impl<S: WorldSpace> EpochState<S> {
    pub fn trace_record(&self) -> TraceRecord {
        TraceRecord {
            epoch: self.k,
            p_hat: self.p_hat,
            m_k1: self.m_k1,
            t0: self.t0,
            m_k2: self.m_k2,
            sigma: self.sigma,
            err_hat: self.err_hat.as_f64(),
        }
    }
}

/// Writes one JSON line per epoch.
pub fn write_trace<S: WorldSpace, W: Write>(epochs: &[EpochState<S>], mut out: W) -> Result<()> {
    for e in epochs {
        serde_json::to_writer(&mut out, &e.trace_record())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput<S: WorldSpace> {
    pub classifier: S::Hypothesis,
    pub ledger: QueryLedger,
    pub epochs: Vec<EpochState<S>>,
}

/// A failed run with everything completed before the failure.
#[derive(Debug, Clone, Serialize)]
pub struct RunFailure<S: WorldSpace> {
    pub error: Error,
    pub ledger: QueryLedger,
    pub epochs: Vec<EpochState<S>>,
}

impl<S: WorldSpace> std::fmt::Display for RunFailure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run failed after {} epochs: {}", self.epochs.len(), self.error)
    }
}

pub type RunResult<S> = std::result::Result<RunOutput<S>, Box<RunFailure<S>>>;

/// The learner with weak labels.
pub fn run_main<S: WorldSpace>(world: &mut World<S>, config: &AlgoConfig) -> RunResult<S> {
    run(world, config, true)
}

/// Disagreement-based active learning without the weak labeler: every
/// in-region label is a strong query.
pub fn run_dbal_baseline<S: WorldSpace>(world: &mut World<S>, config: &AlgoConfig) -> RunResult<S> {
    run(world, config, false)
}

fn run<S: WorldSpace>(world: &mut World<S>, config: &AlgoConfig, use_weak: bool) -> RunResult<S> {
    let mut epochs = Vec::new();
    let result = run_epochs(world, config, use_weak, &mut epochs);
    world.set_phase(Phase::Unattributed);
    match result {
        Ok(classifier) => Ok(RunOutput { classifier, ledger: world.ledger().clone(), epochs }),
        Err(error) => Err(Box::new(RunFailure { error, ledger: world.ledger().clone(), epochs })),
    }
}

fn run_epochs<S: WorldSpace>(
    world: &mut World<S>,
    config: &AlgoConfig,
    use_weak: bool,
    epochs: &mut Vec<EpochState<S>>,
) -> Result<S::Hypothesis> {
    config.validate()?;
    let params = config.bound_params::<S>()?;
    let schedule = epoch_schedule(config.target_epsilon, config.delta)?;
    let spent: f64 = schedule.iter().map(|e| e.delta).sum();
    debug_assert!(spent < config.delta);
    world.set_unlabeled_cap(config.max_unlabeled);

    let first = schedule[0];
    let n0 = initial_sample_size(config.delta, params.d, params.constant_scale)?;
    world.set_phase(Phase::Initial);
    let mut rng = world.stream(Stream::Initial);
    let initial = S::draw_round(world, &mut rng, n0, LabelRule::Strong)?;
    let mut s_prev = initial.sample;
    let mut h_final = initial.h;
    let err0 = initial.err;
    let sigma0 = params.constant_scale * sigma(n0, params.d, first.delta)?;
    epochs.push(EpochState {
        k: 0,
        epsilon: first.epsilon,
        delta: first.delta,
        sigma: sigma0,
        h_hat: h_final,
        err_hat: err0,
        sample_size: n0,
        t0: None,
        h_df: None,
        diff_path: None,
        p_hat: None,
        diff_m: 0,
        fn_budget: 0,
        m_k1: 0,
        m_k2: 0,
        weak: 0,
        rounds: Vec::new(),
        digest: s_prev.digest(),
        s_hat: None,
        region: None,
        triples: None,
    });

    for spec in schedule.iter().skip(1) {
        let EpochSpec { k, epsilon, delta } = *spec;
        let tau = Ratio::new(3u64, 1u64 << (k + 1));
        let region = s_prev.region(tau)?;
        if config.retain {
            epochs.last_mut().expect("epoch 0 is recorded first").s_hat = Some(Arc::new(s_prev));
        }

        let training = if use_weak {
            let eps_df = match config.epsilon_pass_mode {
                EpsilonPassMode::MainText => epsilon,
                EpsilonPassMode::Appendix => epsilon / 128.0,
            };
            Some(train_difference_classifier(world, &region, eps_df, delta / 2.0, &params, k)?)
        } else {
            None
        };
        let h_df = training
            .as_ref()
            .map_or_else(|| S::constant_difference(Label::Pos), |t| t.classifier);

        let out =
            adaptive_active_learn(world, &h_df, &region, epsilon, delta / 2.0, &params, config.max_doubling_t, k)?;
        let queries = world.ledger().per_epoch.iter().find(|e| e.k == k).copied().unwrap_or_default();
        h_final = out.h_hat;
        epochs.push(EpochState {
            k,
            epsilon,
            delta,
            sigma: out.sigma,
            h_hat: out.h_hat,
            err_hat: out.err_hat,
            sample_size: out.s_hat.len(),
            t0: Some(out.t0),
            h_df: Some(h_df),
            diff_path: training.as_ref().map(|t| t.path),
            p_hat: training.as_ref().and_then(|t| t.p_hat),
            diff_m: training.as_ref().map_or(0, |t| t.m),
            fn_budget: training.as_ref().map_or(0, |t| t.fn_budget),
            m_k1: queries.m_k1,
            m_k2: queries.m_k2,
            weak: queries.weak,
            rounds: out.rounds,
            digest: out.s_hat.digest(),
            s_hat: None,
            region: config.retain.then(|| Arc::new(region)),
            triples: match training {
                Some(t) if config.retain => Some(Arc::new(t.triples)),
                _ => None,
            },
        });
        s_prev = out.s_hat;
    }
    if config.retain {
        let last = epochs.last_mut().expect("epoch 0 is recorded first");
        last.s_hat = Some(Arc::new(s_prev));
    }
    // The last ERM is the unconstrained constrained-ERM on the final sample.
    Ok(h_final)
}
