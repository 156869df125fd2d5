//! Hypothesis classes, difference classes and their exact learners.
//!
//! Two instance spaces are provided: [`Line`] (thresholds on `[0,1]`,
//! closed intervals as difference classifiers) and [`Disc`] (homogeneous
//! halfspaces on the unit disc, double wedges as difference classifiers).
//! All empirical errors are exact integer counts.

pub mod disc;
pub mod line;
pub mod line_sample;

use std::cmp::Ordering;
use std::fmt::Debug;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use disc::{Disc, DiscRegion, DoubleWedge, Halfspace};
pub use line::{Interval, Line, LineRegion, Threshold};
pub use line_sample::{LineSample, Run, RunLabels};

/// Width of a confidence set, as an exact fraction of the dataset.
pub type Tau = Ratio<u64>;

/// A binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }

    pub fn from_bool(positive: bool) -> Label {
        if positive {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn is_pos(self) -> bool {
        self == Label::Pos
    }

    pub fn sign(self) -> i8 {
        match self {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        l.sign()
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(format!("label must be -1 or +1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample<P> {
    pub point: P,
    pub label: Label,
}

impl<P> LabeledExample<P> {
    pub fn new(point: P, label: Label) -> Self {
        Self { point, label }
    }
}

/// A point carrying both the strong and the weak label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleExample<P> {
    pub point: P,
    pub label_strong: Label,
    pub label_weak: Label,
}

impl<P> TripleExample<P> {
    pub fn disagree(&self) -> bool {
        self.label_strong != self.label_weak
    }
}

/// Number of mistakes out of a total, kept unreduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmpiricalError {
    pub errors: u64,
    pub total: u64,
}

impl EmpiricalError {
    pub fn as_ratio(self) -> Ratio<u64> {
        Ratio::new(self.errors, self.total)
    }

    pub fn as_f64(self) -> f64 {
        self.errors as f64 / self.total as f64
    }

    /// Compares the two fractions exactly.
    pub fn cmp_fraction(&self, other: &Self) -> Ordering {
        let a = self.errors as u128 * other.total as u128;
        let b = other.errors as u128 * self.total as u128;
        a.cmp(&b)
    }
}


/// `true` iff `(worse - best) / n <= tau`, computed exactly. Both counts
/// refer to the same dataset of size `n`.
pub fn within_tau(best: u64, worse: u64, n: u64, tau: Tau) -> bool {
    let gap = worse.saturating_sub(best) as u128;
    gap * (*tau.denom() as u128) <= (*tau.numer() as u128) * n as u128
}

pub trait Classifier<P> {
    fn predict(&self, point: &P) -> Label;
}

/// Exact empirical error of `h` on `data`.
pub fn empirical_error<P, C: Classifier<P> + ?Sized>(
    h: &C,
    data: &[LabeledExample<P>],
) -> Result<EmpiricalError> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let errors = data.iter().filter(|e| h.predict(&e.point) != e.label).count() as u64;
    Ok(EmpiricalError { errors, total: data.len() as u64 })
}

/// Fraction of `points` on which `h1` and `h2` disagree.
pub fn empirical_disagreement<P, A, B>(h1: &A, h2: &B, points: &[P]) -> Result<EmpiricalError>
where
    A: Classifier<P> + ?Sized,
    B: Classifier<P> + ?Sized,
{
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let errors = points.iter().filter(|p| h1.predict(p) != h2.predict(p)).count() as u64;
    Ok(EmpiricalError { errors, total: points.len() as u64 })
}

/// Positive predictions and false negatives of a difference classifier on
/// a set of triples.
pub fn diff_counts<P, C: Classifier<P> + ?Sized>(h: &C, triples: &[TripleExample<P>]) -> (u64, u64) {
    let mut positives = 0;
    let mut false_negatives = 0;
    for t in triples {
        if h.predict(&t.point).is_pos() {
            positives += 1;
        } else if t.disagree() {
            false_negatives += 1;
        }
    }
    (positives, false_negatives)
}

/// The cached disagreement test for one confidence set `V(S, tau)`.
pub trait DisagreementRegion<S: Space>: Clone + Send + Sync + Debug {
    fn contains(&self, x: &S::Point) -> bool;
    /// The unconstrained ERM on the dataset the region was built from.
    fn h_hat(&self) -> S::Hypothesis;
    fn err_hat(&self) -> EmpiricalError;
}

/// Errors of many hypotheses on one fixed dataset.
pub trait ErrorIndex<S: Space>: Send + Sync {
    fn len(&self) -> u64;
    fn errors(&self, h: &S::Hypothesis) -> u64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An instance space together with its hypothesis class and difference class.
pub trait Space: Copy + Debug + Send + Sync + 'static {
    type Point: Copy + PartialEq + Debug + Send + Sync + Serialize + 'static;
    type Hypothesis: Classifier<Self::Point> + Copy + PartialEq + Debug + Send + Sync + Serialize + 'static;
    type Difference: Classifier<Self::Point> + Copy + PartialEq + Debug + Send + Sync + Serialize + 'static;
    type Region: DisagreementRegion<Self> + 'static;
    type Index: ErrorIndex<Self> + 'static;

    const NAME: &'static str;
    /// VC dimension of the hypothesis class.
    const VC_DIM: u32;
    /// VC dimension of the difference class.
    const DIFF_VC_DIM: u32;

    /// Coordinate the label laws are written in: `x` on the line, the
    /// polar angle in `[0, 2pi)` on the disc.
    fn law_coordinate(p: &Self::Point) -> f64;

    fn sample_point<R: Rng + ?Sized>(rng: &mut R) -> Self::Point;

    /// `n` independent draws from the uniform distribution. The order of the
    /// returned batch is unspecified.
    fn sample_batch<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Self::Point>;

    /// Draws `n` points, labels each one with `label`, replaces the contents
    /// of `out` with the labeled batch and returns its ERM, exactly as
    /// [`Space::erm`] would on `out`.
    fn draw_labeled_erm<R: Rng + ?Sized>(
        rng: &mut R,
        n: usize,
        out: &mut Vec<LabeledExample<Self::Point>>,
        mut label: impl FnMut(&Self::Point) -> Label,
    ) -> Result<(Self::Hypothesis, EmpiricalError)> {
        out.clear();
        out.extend(Self::sample_batch(rng, n).into_iter().map(|x| {
            let y = label(&x);
            LabeledExample::new(x, y)
        }));
        Self::erm(out)
    }

    /// Unconstrained ERM with the smallest-parameter tie-break. May reorder `data`.
    fn erm(data: &mut [LabeledExample<Self::Point>]) -> Result<(Self::Hypothesis, EmpiricalError)>;

    /// ERM over the members that satisfy every constraint exactly.
    fn cons_learn(
        constraints: &[LabeledExample<Self::Point>],
        data: &[LabeledExample<Self::Point>],
    ) -> Result<Self::Hypothesis>;

    /// Precomputes the disagreement test for `V(data, tau)`. May reorder `data`.
    fn build_region(data: &mut [LabeledExample<Self::Point>], tau: Tau) -> Result<Self::Region>;

    /// Fewest predicted positives subject to at most `fn_budget` strong/weak
    /// disagreements predicted negative.
    fn cost_sensitive_diff_erm(
        triples: &[TripleExample<Self::Point>],
        fn_budget: u64,
    ) -> Result<Self::Difference>;

    fn constant_difference(label: Label) -> Self::Difference;

    /// Range `[lo, hi)` of the coordinate difference classifiers are spans
    /// of: `x` on the line, the line angle on the disc.
    const SPAN_DOMAIN: (f64, f64);
    /// Whether spans wrap around the end of [`Space::SPAN_DOMAIN`].
    const SPAN_CYCLIC: bool;

    fn span_coordinate(p: &Self::Point) -> f64;

    /// The difference classifier predicting `+1` on the closed span from
    /// `lo` to `hi` (wrapping past the domain end when `lo > hi`).
    fn span(lo: f64, hi: f64) -> Self::Difference;

    fn error_index(data: &[LabeledExample<Self::Point>]) -> Self::Index;

    /// A regular grid of hypotheses, used by diagnostics.
    fn probe_grid(resolution: usize) -> Vec<Self::Hypothesis>;

    /// Exact disagreement mass `rho_U(h1, h2)` under the uniform distribution.
    fn disagreement_mass(h1: &Self::Hypothesis, h2: &Self::Hypothesis) -> f64;

    /// Membership in `DIS(B_U(h, r))`.
    fn ball_disagreement_contains(h: &Self::Hypothesis, r: f64, x: &Self::Point) -> bool;

    /// Exact mass of `DIS(B_U(h, r))`.
    fn ball_disagreement_mass(h: &Self::Hypothesis, r: f64) -> f64;

    /// Feeds the bit pattern of a point into a running digest.
    fn point_digest(p: &Self::Point, acc: u64) -> u64;
}

/// A labeled sample as the learner stores it between epochs.
pub trait LabeledSample<S: Space>: Clone + Debug + Send + Sync + 'static {
    fn len(&self) -> u64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// [`Space::erm`] on the sample.
    fn erm(&mut self) -> Result<(S::Hypothesis, EmpiricalError)>;

    /// [`Space::build_region`] on the sample.
    fn region(&mut self, tau: Tau) -> Result<S::Region>;

    /// Every example, materialized.
    fn to_examples(&self) -> Vec<LabeledExample<S::Point>>;

    /// Visits every example in order without materializing the sample.
    fn for_each(&self, f: impl FnMut(&S::Point, Label));

    fn digest(&self) -> u64;
}

impl<S: Space> LabeledSample<S> for Vec<LabeledExample<S::Point>> {
    fn len(&self) -> u64 {
        self.as_slice().len() as u64
    }

    fn erm(&mut self) -> Result<(S::Hypothesis, EmpiricalError)> {
        S::erm(self)
    }

    fn region(&mut self, tau: Tau) -> Result<S::Region> {
        S::build_region(self, tau)
    }

    fn to_examples(&self) -> Vec<LabeledExample<S::Point>> {
        self.clone()
    }

    fn for_each(&self, mut f: impl FnMut(&S::Point, Label)) {
        for e in self {
            f(&e.point, e.label);
        }
    }

    fn digest(&self) -> u64 {
        dataset_digest::<S>(self)
    }
}

pub(crate) fn mix_digest(acc: u64, word: u64) -> u64 {
    (acc ^ word).wrapping_mul(0x0000_0100_0000_01b3).rotate_left(17)
}

/// Order-sensitive digest of a labeled dataset.
pub fn dataset_digest<S: Space>(data: &[LabeledExample<S::Point>]) -> u64 {
    let mut acc = 0xcbf2_9ce4_8422_2325u64 ^ data.len() as u64;
    for e in data {
        acc = S::point_digest(&e.point, acc);
        acc = mix_digest(acc, e.label.is_pos() as u64);
    }
    acc
}

/// Draws a label with `P(+1) = p_plus`, consuming randomness only when the
/// law is not deterministic.
pub fn draw_label<R: Rng + ?Sized>(rng: &mut R, p_plus: f64) -> Label {
    if p_plus >= 1.0 {
        Label::Pos
    } else if p_plus <= 0.0 {
        Label::Neg
    } else {
        Label::from_bool(rng.random::<f64>() < p_plus)
    }
}
