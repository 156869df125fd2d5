//! Exact error computations under step label laws.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::hypotheses::disc::norm_angle;
use crate::error::Result;
use crate::hypotheses::{Disc, Halfspace, Label, LabeledExample, LabeledSample, Line, LineSample, Space, Threshold};

use super::law::StepLaw;
use super::rounds::{draw_line_round, draw_round_pointwise, LabelRule, RoundDraw};
use super::{StreamRng, World};

/// A space whose uniform distribution pushes forward to the uniform
/// distribution on its law coordinate, so errors can be integrated exactly.
pub trait WorldSpace: Space {
    /// Domain `[lo, hi)` of the law coordinate.
    const LAW_DOMAIN: (f64, f64);

    /// `err_D(h)` under the law.
    fn exact_error(h: &Self::Hypothesis, law: &StepLaw) -> f64;

    /// A minimizer of the exact error, with its error.
    fn best_in_class(law: &StepLaw) -> (Self::Hypothesis, f64);

    /// How a labeled round is stored.
    type Sample: LabeledSample<Self>;

    /// `n` fresh draws labeled according to `rule`, with their ERM.
    fn draw_round(
        world: &mut World<Self>,
        rng: &mut StreamRng,
        n: u64,
        rule: LabelRule<'_, Self>,
    ) -> Result<RoundDraw<Self, Self::Sample>>;
}

/// Error density of predicting `label` where `P(+) = p`.
fn wrong(label: Label, p: f64) -> f64 {
    match label {
        Label::Pos => 1.0 - p,
        Label::Neg => p,
    }
}

impl WorldSpace for Line {
    const LAW_DOMAIN: (f64, f64) = (0.0, 1.0);

    type Sample = LineSample;

    fn draw_round(
        world: &mut World<Self>,
        rng: &mut StreamRng,
        n: u64,
        rule: LabelRule<'_, Self>,
    ) -> Result<RoundDraw<Self, LineSample>> {
        draw_line_round(world, rng, n, rule)
    }

    fn exact_error(h: &Threshold, law: &StepLaw) -> f64 {
        let s = h.threshold.clamp(0.0, 1.0);
        let o = h.orientation;
        law.integrate(0.0, s, |p| wrong(o.flip(), p)) + law.integrate(s, 1.0, |p| wrong(o, p))
    }

    fn best_in_class(law: &StepLaw) -> (Threshold, f64) {
        // The error is linear in the threshold between law breakpoints.
        let mut best: Option<(Threshold, f64)> = None;
        for &b in law.breaks() {
            for o in [Label::Pos, Label::Neg] {
                let h = Threshold { threshold: b, orientation: o };
                let e = Self::exact_error(&h, law);
                if best.is_none_or(|(_, be)| e < be) {
                    best = Some((h, e));
                }
            }
        }
        best.expect("a law has at least two breakpoints")
    }
}

impl WorldSpace for Disc {
    const LAW_DOMAIN: (f64, f64) = (0.0, TAU);

    type Sample = Vec<LabeledExample<<Disc as Space>::Point>>;

    fn draw_round(
        world: &mut World<Self>,
        rng: &mut StreamRng,
        n: u64,
        rule: LabelRule<'_, Self>,
    ) -> Result<RoundDraw<Self, Self::Sample>> {
        draw_round_pointwise(world, rng, n, rule)
    }

    fn exact_error(h: &Halfspace, law: &StepLaw) -> f64 {
        // Positive half-circle of polar angles: [a - pi/2, a + pi/2].
        let start = norm_angle(h.angle - FRAC_PI_2);
        let arc = |a: f64, len: f64, label: Label| -> f64 {
            let end = a + len;
            if end <= TAU {
                law.integrate(a, end, |p| wrong(label, p))
            } else {
                law.integrate(a, TAU, |p| wrong(label, p))
                    + law.integrate(0.0, end - TAU, |p| wrong(label, p))
            }
        };
        (arc(start, PI, Label::Pos) + arc(norm_angle(start + PI), PI, Label::Neg)) / TAU
    }

    fn best_in_class(law: &StepLaw) -> (Halfspace, f64) {
        // The error is linear in the angle between the points where a
        // boundary ray crosses a law breakpoint.
        let mut best: Option<(Halfspace, f64)> = None;
        for &b in law.breaks() {
            for shift in [FRAC_PI_2, -FRAC_PI_2] {
                let h = Halfspace { angle: norm_angle(b + shift) };
                let e = Self::exact_error(&h, law);
                if best.is_none_or(|(_, be)| e < be) {
                    best = Some((h, e));
                }
            }
        }
        best.expect("a law has at least two breakpoints")
    }
}
