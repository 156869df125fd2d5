//! Adaptive estimation of the bias of a coin by doubling.

use serde::{Deserialize, Serialize};

use crate::bounds::gamma;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    /// Returned estimate; with probability `1 - delta`, `p_hat <= p <= 2 p_hat`.
    pub p_hat: f64,
    /// Total coin flips used.
    pub draws: u64,
    /// Number of doubling stages.
    pub stages: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BiasOutcome {
    Estimate(BiasEstimate),
    /// An upper confidence bound on `p` fell below the floor first.
    BelowFloor { ucb: f64, draws: u64, stages: u32 },
}

/// Stage `i` flips the coin `2^i` times and stops once
/// `sqrt(4 ln(4 * 2^i / delta) / 2^i) <= p_i / 3`, returning `2 p_i / 3`.
///
/// `flips(n)` must perform `n` fresh flips and return the number of heads.
/// Fails with `BudgetExhausted` before exceeding `max_draws`; this is how a
/// coin with `p = 0` ends.
pub fn estimate_bias(
    flips: impl FnMut(u64) -> Result<u64>,
    delta: f64,
    max_draws: u64,
) -> Result<BiasEstimate> {
    match estimate_bias_with_floor(flips, delta, None, max_draws)? {
        BiasOutcome::Estimate(e) => Ok(e),
        BiasOutcome::BelowFloor { .. } => unreachable!("no floor was given"),
    }
}

/// Upper confidence bound on `p` from `p_hat` when
/// `|p_hat - p| <= sqrt(p gamma) + gamma`: the larger root of
/// `p - sqrt(gamma p) = p_hat + gamma`, squared.
fn chernoff_ucb(p_hat: f64, gamma: f64) -> f64 {
    let root = (gamma.sqrt() + (gamma + 4.0 * (p_hat + gamma)).sqrt()) / 2.0;
    root * root
}

/// [`estimate_bias`] that also stops when a per-stage upper confidence bound
/// on `p` drops below `floor`. Stage `i` spends confidence `delta / 2^i` on
/// that bound, so all stages together spend at most `delta`.
pub fn estimate_bias_with_floor(
    mut flips: impl FnMut(u64) -> Result<u64>,
    delta: f64,
    floor: Option<f64>,
    max_draws: u64,
) -> Result<BiasOutcome> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0,1), got {delta}")));
    }
    let mut draws = 0u64;
    for i in 1..63u32 {
        let n = 1u64 << i;
        if draws.saturating_add(n) > max_draws {
            return Err(Error::BudgetExhausted { draws, cap: max_draws });
        }
        let heads = flips(n)?;
        draws += n;
        let nf = n as f64;
        let p_i = heads as f64 / nf;
        if (4.0 * (4.0 * nf / delta).ln() / nf).sqrt() <= p_i / 3.0 {
            return Ok(BiasOutcome::Estimate(BiasEstimate { p_hat: 2.0 * p_i / 3.0, draws, stages: i }));
        }
        if let Some(floor) = floor {
            let ucb = chernoff_ucb(p_i, gamma(n, delta / 2f64.powi(i as i32))?);
            if ucb < floor {
                return Ok(BiasOutcome::BelowFloor { ucb, draws, stages: i });
            }
        }
    }
    Err(Error::BudgetExhausted { draws, cap: max_draws })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_coin() {
        let e = estimate_bias(Ok, 0.1, u64::MAX).unwrap();
        assert!(e.p_hat >= 0.5 && e.p_hat <= 1.0);
    }

    #[test]
    fn zero_coin_exhausts_budget() {
        let r = estimate_bias(|_| Ok(0), 0.1, 1 << 20);
        assert!(matches!(r, Err(Error::BudgetExhausted { .. })));
    }

    #[test]
    fn floor_stops_zero_coin() {
        let r = estimate_bias_with_floor(|_| Ok(0), 0.1, Some(0.01), u64::MAX).unwrap();
        match r {
            BiasOutcome::BelowFloor { ucb, .. } => assert!(ucb < 0.01),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ucb_bounds_p() {
        // p itself satisfies the deviation inequality with equality at the bound.
        let (p, g) = (0.2f64, 0.01f64);
        let p_hat = p - (p * g).sqrt() - g;
        assert!((chernoff_ucb(p_hat, g) - p).abs() < 1e-12);
    }
}
