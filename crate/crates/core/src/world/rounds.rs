//! Labeling one batch of fresh draws.
//!
//! On the line, everything that decides a label (the region, the previous
//! ERM, the difference classifier and the label laws) is piecewise constant.
//! A round there is simulated piece by piece: a multinomial count of draws
//! per piece, then one label per draw from the piece's law, stored as a
//! [`LineSample`]. This has the same law as labeling each draw in turn,
//! except for draws that land exactly on a breakpoint, which have
//! probability zero under the uniform distribution and are ignored.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::hypotheses::{
    Classifier, DisagreementRegion, EmpiricalError, Interval, Label, LabeledExample, Line, LineSample, Run,
    RunLabels, Space,
};

use super::{StreamRng, World, WorldSpace};

/// Who labels a draw.
#[derive(Debug)]
pub enum LabelRule<'a, S: Space> {
    /// Every draw is a strong query.
    Strong,
    /// Outside `region` the draw takes the label of the region's ERM; inside
    /// it is a strong query where `h_df` predicts `+1` and a weak query
    /// otherwise.
    Adaptive { region: &'a S::Region, h_df: &'a S::Difference },
}

impl<S: Space> Clone for LabelRule<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S: Space> Copy for LabelRule<'_, S> {}

/// A labeled round with its ERM and the queries it spent.
#[derive(Debug, Clone)]
pub struct RoundDraw<S: Space, T> {
    pub sample: T,
    pub h: S::Hypothesis,
    pub err: EmpiricalError,
    pub strong: u64,
    pub weak: u64,
    pub inferred: u64,
}

/// A round labeled draw by draw through the world's oracles.
pub fn draw_round_pointwise<S: WorldSpace>(
    world: &mut World<S>,
    rng: &mut StreamRng,
    n: u64,
    rule: LabelRule<'_, S>,
) -> Result<RoundDraw<S, Vec<LabeledExample<S::Point>>>> {
    let mut sample = Vec::new();
    let (mut strong, mut weak) = (0u64, 0u64);
    let (h, err) = world.draw_labeled(rng, n, &mut sample, |w, x| match rule {
        LabelRule::Strong => {
            strong += 1;
            w.query_strong(x)
        }
        LabelRule::Adaptive { region, h_df } => {
            if !region.contains(x) {
                region.h_hat().predict(x)
            } else if h_df.predict(x).is_pos() {
                strong += 1;
                w.query_strong(x)
            } else {
                weak += 1;
                w.query_weak(x)
            }
        }
    })?;
    Ok(RoundDraw { inferred: n - strong - weak, sample, h, err, strong, weak })
}

enum Source {
    Inferred(Label),
    Strong,
    Weak,
}

/// A round on the line simulated piece by piece. Labels come from `rng`
/// rather than the world's oracle streams; the ledger is charged as if every
/// query had been made one at a time.
pub fn draw_line_round(
    world: &mut World<Line>,
    rng: &mut StreamRng,
    n: u64,
    rule: LabelRule<'_, Line>,
) -> Result<RoundDraw<Line, LineSample>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    world.charge_unlabeled(n)?;
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(world.strong_law().breaks());
    cuts.extend(world.weak_law().breaks());
    if let LabelRule::Adaptive { region, h_df } = rule {
        for s in region.segments() {
            cuts.extend([s.lo, s.hi]);
        }
        cuts.push(region.h_hat().threshold);
        if let Interval::Closed { lo, hi } = *h_df {
            cuts.extend([lo, hi]);
        }
    }
    cuts.retain(|c| (0.0..=1.0).contains(c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let beta = world.beta();
    let (mut strong, mut weak, mut inferred, mut routed) = (0u64, 0u64, 0u64, 0u64);
    let mut left = n;
    let mut runs = Vec::with_capacity(cuts.len());
    for (i, w) in cuts.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let k = if i + 2 == cuts.len() { left } else { binomial(rng, left, (b - a) / (1.0 - a)) };
        left -= k;
        if k == 0 {
            continue;
        }
        let mid = a + (b - a) / 2.0;
        let source = match rule {
            LabelRule::Strong => Source::Strong,
            LabelRule::Adaptive { region, h_df } => {
                if !region.contains(&mid) {
                    Source::Inferred(region.h_hat().predict(&mid))
                } else if h_df.predict(&mid).is_pos() {
                    Source::Strong
                } else {
                    Source::Weak
                }
            }
        };
        let p_weak = world.weak_law().p_plus(mid);
        let labels = match source {
            Source::Inferred(label) => {
                inferred += k;
                RunLabels::Constant(label)
            }
            Source::Weak => {
                weak += k;
                RunLabels::bernoulli(rng, k, p_weak)
            }
            Source::Strong => {
                strong += k;
                let p_strong = world.strong_law().p_plus(mid);
                if beta <= 0.0 {
                    RunLabels::bernoulli(rng, k, p_strong)
                } else if beta >= 1.0 {
                    routed += k;
                    RunLabels::bernoulli(rng, k, p_weak)
                } else if p_strong == p_weak {
                    routed += binomial(rng, k, beta);
                    RunLabels::bernoulli(rng, k, p_strong)
                } else {
                    RunLabels::from_fn(k, |_| {
                        let use_weak = rng.random::<f64>() < beta;
                        routed += use_weak as u64;
                        rng.random::<f64>() < if use_weak { p_weak } else { p_strong }
                    })
                }
            }
        };
        runs.push(Run::new(a, b, k, labels, rng.random())?);
    }
    world.record_queries(strong, weak, routed);
    let sample = LineSample::new(runs)?;
    let (h, err, _) = sample.erm()?;
    Ok(RoundDraw { sample, h, err, strong, weak, inferred })
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0)).expect("probability is clamped").sample(rng)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypotheses::{Tau, Threshold};
    use crate::world::instances::build_world;
    use crate::world::{InstanceSpec, Phase, Stream, WeakModeKind};

    fn world(weak_mode: WeakModeKind, beta: f64) -> World<Line> {
        let spec = InstanceSpec { nu: 0.1, weak_mode, g: 0.1, beta, ..Default::default() };
        build_world(&spec, 11).unwrap()
    }

    /// `|a - b| <= 5` standard deviations of a binomial count.
    fn close(a: u64, b: f64, n: u64) {
        let p = b / n as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt().max(1.0);
        assert!((a as f64 - b).abs() <= 5.0 * sd, "{a} vs {b} (sd {sd})");
    }

    #[test]
    fn strong_round_follows_the_law() {
        let mut w = world(WeakModeKind::Identical, 0.0);
        w.set_phase(Phase::Initial);
        let n = 400_000;
        let mut rng = w.stream(Stream::Test);
        let draw = draw_line_round(&mut w, &mut rng, n, LabelRule::Strong).unwrap();
        assert_eq!(draw.sample.len(), n);
        assert_eq!((draw.strong, draw.weak, draw.inferred), (n, 0, 0));
        assert_eq!(w.ledger().n0, n);
        assert_eq!(w.ledger().unlabeled_draws, n);
        let ex = draw.sample.to_examples();
        let pos = ex.iter().filter(|e| e.label.is_pos()).count() as u64;
        close(pos, n as f64 * w.strong_law().integrate(0.0, 1.0, |p| p), n);
        let below = ex.iter().filter(|e| e.point < 0.3).count() as u64;
        close(below, 0.3 * n as f64, n);
        // The law is deterministic, so every label is the law's.
        assert!(ex.iter().all(|e| e.label.is_pos() == (w.strong_p_plus(&e.point) == 1.0)));
        let h = Threshold { threshold: 0.5, orientation: Label::Pos };
        assert!((w.exact_error(&draw.h) - w.exact_error(&h)).abs() < 0.01);
    }

    #[test]
    fn adaptive_round_matches_the_pointwise_round() {
        let base = world(WeakModeKind::BoundaryDisagree, 0.0);
        let mut seed_world = base.clone();
        let mut rng = seed_world.stream(Stream::Test);
        let s0 = draw_line_round(&mut seed_world, &mut rng, 20_000, LabelRule::Strong).unwrap();
        let region = s0.sample.clone().region(Tau::new(3, 8)).unwrap();
        let h_df = Interval::closed(0.44, 0.56).unwrap();
        let rule = LabelRule::Adaptive { region: &region, h_df: &h_df };
        let n = 1 << 19;

        let mut a = base.clone();
        let mut rng = a.stream(Stream::Adaptive { epoch: 1, round: 19 });
        let fast = draw_line_round(&mut a, &mut rng, n, rule).unwrap();
        let mut b = base.clone();
        let mut rng = b.stream(Stream::Adaptive { epoch: 1, round: 19 });
        let slow = draw_round_pointwise(&mut b, &mut rng, n, rule).unwrap();

        close(fast.strong, slow.strong as f64, n);
        close(fast.weak, slow.weak as f64, n);
        close(fast.inferred, slow.inferred as f64, n);
        close(fast.err.errors, slow.err.errors as f64, n);
        assert_eq!(a.ledger().strong_queries, fast.strong);
        assert_eq!(a.ledger().weak_queries, fast.weak);
        assert!(a.ledger().is_conserved());
        // Labels outside the region copy the region's ERM.
        for e in fast.sample.to_examples().iter().step_by(97) {
            if !region.contains(&e.point) {
                assert_eq!(e.label, region.h_hat().predict(&e.point));
            }
        }
    }

    #[test]
    fn mixture_routes_a_beta_share() {
        let mut w = world(WeakModeKind::Adversarial, 0.3);
        let n = 200_000;
        let mut rng = w.stream(Stream::Test);
        let draw = draw_line_round(&mut w, &mut rng, n, LabelRule::Strong).unwrap();
        close(w.ledger().mixture_weak_routed, 0.3 * n as f64, n);
        // Under O' = 0.7 O + 0.3 (not O), a deterministic O is right w.p. 0.7.
        let agree = draw
            .sample
            .to_examples()
            .iter()
            .filter(|e| e.label.is_pos() == (w.strong_p_plus(&e.point) == 1.0))
            .count() as u64;
        close(agree, 0.7 * n as f64, n);
    }

    #[test]
    fn rounds_are_reproducible() {
        let run = || {
            let mut w = world(WeakModeKind::Identical, 0.2);
            let mut rng = w.stream(Stream::Test);
            draw_line_round(&mut w, &mut rng, 5000, LabelRule::Strong).unwrap().sample.digest()
        };
        assert_eq!(run(), run());
        let mut w = world(WeakModeKind::Identical, 0.0);
        let mut rng = w.stream(Stream::Test);
        assert!(draw_line_round(&mut w, &mut rng, 0, LabelRule::Strong).is_err());
    }
}
