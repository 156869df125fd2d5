//! Adaptive subsampling with a difference classifier.

use serde::{Deserialize, Serialize};

use crate::bounds::{sigma, BoundParams};
use crate::error::{Error, Result};
use crate::hypotheses::EmpiricalError;
use crate::world::{LabelRule, Phase, Stream, World, WorldSpace};

/// One doubling round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub t: u32,
    /// Scaled `sigma(2^t, delta / (t (t+1)))`.
    pub sigma: f64,
    pub err_hat: EmpiricalError,
    pub strong: u64,
    pub weak: u64,
    pub inferred: u64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome<S: WorldSpace> {
    /// Scaled `sigma` at the stopping round.
    pub sigma: f64,
    /// The labeled sample of the stopping round.
    pub s_hat: S::Sample,
    pub h_hat: S::Hypothesis,
    pub err_hat: EmpiricalError,
    pub t0: u32,
    pub rounds: Vec<RoundLog>,
}

/// `sigma + sqrt(sigma err) <= epsilon / 512`.
pub fn stopping_rule_met(sigma: f64, err: EmpiricalError, epsilon: f64) -> bool {
    sigma + (sigma * err.as_f64()).sqrt() <= epsilon / 512.0
}

/// Scaled `sigma` for round `t` of a call with confidence `delta`.
pub fn round_sigma(t: u32, delta: f64, params: &BoundParams) -> Result<f64> {
    let tt = t as f64;
    Ok(params.constant_scale * sigma(1u64 << t, params.d, delta / (tt * (tt + 1.0)))?)
}

/// For `t = 1, 2, ...` draws `2^t` fresh points and labels each one: by the
/// region's ERM classifier outside `region`, by `O` where `h_df` predicts
/// `+1`, and by `W` otherwise. Stops at the first round whose ERM satisfies
/// [`stopping_rule_met`].
///
/// `sigma` is multiplied by the configured scale, the same shrink applied to
/// every sample size.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_active_learn<S: WorldSpace>(
    world: &mut World<S>,
    h_df: &S::Difference,
    region: &S::Region,
    epsilon: f64,
    delta: f64,
    params: &BoundParams,
    max_t: u32,
    epoch: u32,
) -> Result<AdaptiveOutcome<S>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0,1), got {delta}")));
    }
    let max_t = max_t.min(62);
    world.set_phase(Phase::Adaptive(epoch));
    let mut rounds = Vec::new();
    for t in 1..=max_t {
        let sigma_t = round_sigma(t, delta, params)?;
        let mut rng = world.stream(Stream::Adaptive { epoch, round: t });
        let draw = S::draw_round(world, &mut rng, 1u64 << t, LabelRule::Adaptive { region, h_df })?;
        rounds.push(RoundLog {
            t,
            sigma: sigma_t,
            err_hat: draw.err,
            strong: draw.strong,
            weak: draw.weak,
            inferred: draw.inferred,
        });
        if stopping_rule_met(sigma_t, draw.err, epsilon) {
            return Ok(AdaptiveOutcome {
                sigma: sigma_t,
                s_hat: draw.sample,
                h_hat: draw.h,
                err_hat: draw.err,
                t0: t,
                rounds,
            });
        }
    }
    Err(Error::DoublingCapExceeded { cap: max_t })
}
