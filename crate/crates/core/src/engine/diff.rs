//! Training the difference classifier.

use serde::{Deserialize, Serialize};

use crate::bounds::{diff_classifier_sample_size, BoundParams};
use crate::error::{Error, Result};
use crate::hypotheses::{DisagreementRegion, Label, Space, TripleExample};
use crate::world::{Phase, Stream, World, WorldSpace};

use super::bias::{estimate_bias_with_floor, BiasOutcome};

/// How the difference classifier of one epoch came about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiffPath {
    /// The region's mass was certified below `epsilon / 64`; the classifier
    /// is the constant `+1`.
    SmallRegion,
    /// Trained by cost-sensitive ERM on in-region triples.
    Trained,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffTraining<S: Space> {
    pub classifier: S::Difference,
    pub path: DiffPath,
    /// Estimated region mass; absent when the floor certified a small region.
    pub p_hat: Option<f64>,
    /// Upper confidence bound that triggered the small-region path.
    pub region_ucb: Option<f64>,
    /// Unlabeled draws spent estimating the region mass.
    pub coin_draws: u64,
    /// Number of in-region triples collected.
    pub m: u64,
    /// Allowed false negatives on the triples.
    pub fn_budget: u64,
    #[serde(skip)]
    pub triples: Vec<TripleExample<S::Point>>,
}

/// Trains `h_df` for one epoch.
///
/// `region` is the disagreement region the learner is working in and
/// `epsilon` the accuracy parameter used for the sample size and the
/// false-negative budget. The region mass is estimated with confidence
/// `delta / 3`; if its upper confidence bound is below `epsilon / 64` the
/// constant `+1` classifier is returned. Otherwise fresh points are drawn
/// until `m` of them fall in the region, each of which is labeled by both
/// `W` and `O`, and the classifier with the fewest predicted positives
/// among those with at most `floor(m epsilon / (256 p_hat))` false negatives
/// is returned.
pub fn train_difference_classifier<S: WorldSpace>(
    world: &mut World<S>,
    region: &S::Region,
    epsilon: f64,
    delta: f64,
    params: &BoundParams,
    epoch: u32,
) -> Result<DiffTraining<S>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0,1), got {delta}")));
    }
    world.set_phase(Phase::DiffTraining(epoch));
    let floor = epsilon / 64.0;
    let mut coin_rng = world.stream(Stream::BiasCoin { epoch });
    let mut coin_draws = 0u64;
    let outcome = estimate_bias_with_floor(
        |n| {
            let batch = world.draw_batch(&mut coin_rng, n)?;
            coin_draws += n;
            Ok(batch.iter().filter(|x| region.contains(x)).count() as u64)
        },
        delta / 3.0,
        Some(floor),
        u64::MAX,
    )?;
    let small = |ucb: f64| DiffTraining {
        classifier: S::constant_difference(Label::Pos),
        path: DiffPath::SmallRegion,
        p_hat: None,
        region_ucb: Some(ucb),
        coin_draws,
        m: 0,
        fn_budget: 0,
        triples: Vec::new(),
    };
    let est = match outcome {
        BiasOutcome::BelowFloor { ucb, .. } => return Ok(small(ucb)),
        BiasOutcome::Estimate(e) => e,
    };
    // With the estimator's guarantee, p <= 2 p_hat.
    if 2.0 * est.p_hat < floor {
        let mut out = small(2.0 * est.p_hat);
        out.p_hat = Some(est.p_hat);
        return Ok(out);
    }
    let m = diff_classifier_sample_size(est.p_hat, epsilon, params.d_prime, delta, params.constant_scale)?;
    let fn_budget = (m as f64 * epsilon / (256.0 * est.p_hat)).floor() as u64;
    let mut rng = world.stream(Stream::DiffTriples { epoch });
    let mut triples = Vec::with_capacity(m.min(1 << 24) as usize);
    while (triples.len() as u64) < m {
        let x = world.draw_point(&mut rng)?;
        if region.contains(&x) {
            let label_weak = world.query_weak(&x);
            let label_strong = world.query_strong(&x);
            triples.push(TripleExample { point: x, label_strong, label_weak });
        }
    }
    let classifier = S::cost_sensitive_diff_erm(&triples, fn_budget)?;
    Ok(DiffTraining {
        classifier,
        path: DiffPath::Trained,
        p_hat: Some(est.p_hat),
        region_ucb: None,
        coin_draws,
        m,
        fn_budget,
        triples,
    })
}
