//! Monte-Carlo estimators that read shadow labels and never touch the ledger.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypotheses::{Classifier, Label, Space};
use crate::world::{Stream, World, WorldSpace};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// A Monte-Carlo error estimate with its 99% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub ci: f64,
}

/// Half-width of the 99% normal-approximation interval for a binomial rate.
pub fn binomial_ci(p_hat: f64, n: usize) -> f64 {
    Z99 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Error of `h` under the queried oracle's law, on `n_test` fresh draws from
/// the world's test stream labeled with shadow labels.
pub fn measure_error<S: WorldSpace>(h: &S::Hypothesis, world: &World<S>, n_test: usize) -> Result<ErrorEstimate> {
    if n_test < 100 {
        return Err(Error::domain(format!("n_test must be at least 100, got {n_test}")));
    }
    let mut rng = world.stream(Stream::Test);
    // Label draws come from a jumped copy of the point stream.
    let mut label_rng = world.stream(Stream::Test);
    label_rng.jump();
    let mut wrong = 0usize;
    for x in S::sample_batch(&mut rng, n_test) {
        if h.predict(&x) != world.shadow_label_with(&mut label_rng, &x)? {
            wrong += 1;
        }
    }
    let estimate = wrong as f64 / n_test as f64;
    Ok(ErrorEstimate { estimate, ci: binomial_ci(estimate, n_test) })
}

/// `32` radii spaced evenly in log scale from `r` up to `1` (just `r` when
/// `r >= 1`).
pub fn theta_grid(r: f64) -> Vec<f64> {
    if r >= 1.0 {
        return vec![r];
    }
    let steps = 31;
    (0..=steps).map(|i| r * (1.0 / r).powf(i as f64 / steps as f64)).collect()
}

/// `sup` over [`theta_grid`]`(r)` of `P_U(DIS(B_U(h, r'))) / r'`, exact.
pub fn exact_theta<S: Space>(h: &S::Hypothesis, r: f64) -> f64 {
    theta_grid(r)
        .into_iter()
        .map(|rr| S::ball_disagreement_mass(h, rr) / rr)
        .fold(0.0, f64::max)
}

/// For each radius `r`, the supremum over [`theta_grid`]`(r)` of the
/// Monte-Carlo mass of `DIS(B_U(h, r'))` divided by `r'`. All radii share
/// the same `n_mc` draws.
pub fn estimate_theta<S: WorldSpace>(
    world: &World<S>,
    h: &S::Hypothesis,
    radii: &[f64],
    n_mc: usize,
) -> Result<Vec<(f64, f64)>> {
    if n_mc == 0 {
        return Err(Error::domain("n_mc must be positive"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::domain(format!("radii must be positive, got {r}")));
    }
    let mut rng = world.stream(Stream::Theta);
    let points = S::sample_batch(&mut rng, n_mc);
    let mass = |rr: f64| points.iter().filter(|x| S::ball_disagreement_contains(h, rr, x)).count() as f64 / n_mc as f64;
    Ok(radii
        .iter()
        .map(|&r| (r, theta_grid(r).into_iter().map(|rr| mass(rr) / rr).fold(0.0, f64::max)))
        .collect())
}

/// Cells of the span coordinate searched by [`estimate_alpha`].
pub const ALPHA_CELLS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaEstimate<S: Space> {
    /// Smallest Monte-Carlo positive mass on `DIS(B_U(h, r))` among feasible
    /// grid members.
    pub alpha_hat: f64,
    /// The minimizing difference classifier.
    pub classifier: S::Difference,
    /// Its Monte-Carlo false-negative mass.
    pub fn_mass: f64,
    /// Monte-Carlo mass of `DIS(B_U(h, r))`.
    pub dis_mass: f64,
}

/// Brute-force search over the difference classifiers whose span endpoints
/// lie on a grid of [`ALPHA_CELLS`] cells, plus the two constants. A member
/// is feasible when its Monte-Carlo mass of `{h_df = -1, x in DIS(B_U(h, r)),
/// y_O != y_W}` is at most `eta`, with independent shadow labels for `O` and
/// `W`. Among feasible members the smallest mass of
/// `{h_df = +1, x in DIS(B_U(h, r))}` is returned. The constant `+1` is
/// always feasible.
pub fn estimate_alpha<S: WorldSpace>(
    world: &World<S>,
    h: &S::Hypothesis,
    r: f64,
    eta: f64,
    n_mc: usize,
) -> Result<AlphaEstimate<S>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("r must be positive, got {r}")));
    }
    if !(eta >= 0.0) {
        return Err(Error::domain(format!("eta must be nonnegative, got {eta}")));
    }
    if n_mc == 0 {
        return Err(Error::domain("n_mc must be positive"));
    }
    let (lo, hi) = S::SPAN_DOMAIN;
    let width = (hi - lo) / ALPHA_CELLS as f64;
    let mut dis = vec![0u64; ALPHA_CELLS];
    let mut diff = vec![0u64; ALPHA_CELLS];
    let mut rng = world.stream(Stream::Alpha);
    let mut label_rng = world.stream(Stream::Alpha);
    label_rng.jump();
    for x in S::sample_batch(&mut rng, n_mc) {
        if !S::ball_disagreement_contains(h, r, &x) {
            continue;
        }
        let c = (((S::span_coordinate(&x) - lo) / width) as usize).min(ALPHA_CELLS - 1);
        dis[c] += 1;
        if world.shadow_label_with(&mut label_rng, &x)? != world.shadow_weak_label_with(&mut label_rng, &x)? {
            diff[c] += 1;
        }
    }
    let n = n_mc as f64;
    let total_dis: u64 = dis.iter().sum();
    let total_diff: u64 = diff.iter().sum();
    let allowed = (eta * n).floor() as u64;

    // (positives, false negatives, classifier), starting from the constants.
    let mut best = (total_dis, 0u64, S::constant_difference(Label::Pos));
    if total_diff <= allowed {
        best = (0, total_diff, S::constant_difference(Label::Neg));
    }
    let cells = ALPHA_CELLS;
    for i in 0..cells {
        let (mut pos, mut covered) = (0u64, 0u64);
        let max_len = if S::SPAN_CYCLIC { cells - 1 } else { cells - i };
        for len in 1..=max_len {
            let j = (i + len - 1) % cells;
            pos += dis[j];
            covered += diff[j];
            if pos >= best.0 {
                break;
            }
            let fneg = total_diff - covered;
            if fneg <= allowed {
                let span_hi = lo + ((i + len) as f64) * width;
                let span_hi = if span_hi >= hi && S::SPAN_CYCLIC { span_hi - (hi - lo) } else { span_hi.min(hi) };
                best = (pos, fneg, S::span(lo + i as f64 * width, span_hi));
                break;
            }
        }
    }
    Ok(AlphaEstimate {
        alpha_hat: best.0 as f64 / n,
        classifier: best.2,
        fn_mass: best.1 as f64 / n,
        dis_mass: total_dis as f64 / n,
    })
}
