//! Thresholds on the unit interval.
//!
//! A threshold classifier predicts its orientation on `[threshold, inf)` and
//! the opposite label below. Thresholds at `-inf` and `+inf` stand for the
//! two constant classifiers. On a sorted dataset with distinct values
//! `v_0 < ... < v_{G-1}`, every threshold falls in one of the `G + 1` cuts;
//! cut `c` collects the thresholds in `(v_{c-1}, v_c]`. If `E(c)` counts the
//! mistakes of the positively oriented threshold at cut `c`, the negatively
//! oriented one makes `n - E(c)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    within_tau, Classifier, DisagreementRegion, EmpiricalError, ErrorIndex, Label, LabeledExample,
    Space, Tau, TripleExample,
};
use super::line_sample::{bin_counts, fill_sorted, BIN_TARGET};
use crate::error::{Error, Result};

/// The unit interval with uniform draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Line;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub threshold: f64,
    pub orientation: Label,
}

impl Threshold {
    pub fn new(threshold: f64, orientation: Label) -> Result<Self> {
        if threshold.is_nan() {
            return Err(Error::domain("threshold must not be NaN"));
        }
        Ok(Self { threshold, orientation })
    }
}

impl Classifier<f64> for Threshold {
    fn predict(&self, x: &f64) -> Label {
        if *x >= self.threshold {
            self.orientation
        } else {
            self.orientation.flip()
        }
    }
}

/// Difference classifiers on the line: closed intervals and the two constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Interval {
    /// Constant `-1`.
    Empty,
    /// Constant `+1`.
    All,
    Closed { lo: f64, hi: f64 },
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::domain(format!("interval endpoints out of order: [{lo}, {hi}]")));
        }
        Ok(Interval::Closed { lo, hi })
    }
}

impl Classifier<f64> for Interval {
    fn predict(&self, x: &f64) -> Label {
        match *self {
            Interval::Empty => Label::Neg,
            Interval::All => Label::Pos,
            Interval::Closed { lo, hi } => Label::from_bool(lo <= *x && *x <= hi),
        }
    }
}

/// A threshold strictly above `lo` and at most `hi`, preferring the midpoint.
pub(crate) fn cut_value(lo: f64, hi: f64) -> f64 {
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

fn sort_by_point(data: &mut [LabeledExample<f64>]) {
    if !data.is_sorted_by(|a, b| a.point <= b.point) {
        data.sort_unstable_by(|a, b| a.point.total_cmp(&b.point));
    }
}

/// Runs of equal points in a sorted dataset.
struct Groups<'a> {
    data: &'a [LabeledExample<f64>],
    at: usize,
}

#[derive(Debug, Clone, Copy)]
struct Group {
    value: f64,
    pos: u64,
    neg: u64,
}

impl Iterator for Groups<'_> {
    type Item = Group;

    fn next(&mut self) -> Option<Group> {
        let first = self.data.get(self.at)?;
        let mut g = Group { value: first.point, pos: 0, neg: 0 };
        while let Some(e) = self.data.get(self.at) {
            if e.point != g.value {
                break;
            }
            match e.label {
                Label::Pos => g.pos += 1,
                Label::Neg => g.neg += 1,
            }
            self.at += 1;
        }
        Some(g)
    }
}

fn groups(sorted: &[LabeledExample<f64>]) -> Groups<'_> {
    Groups { data: sorted, at: 0 }
}

fn count_negatives(data: &[LabeledExample<f64>]) -> u64 {
    data.iter().filter(|e| e.label == Label::Neg).count() as u64
}

/// The unconstrained ERM on sorted data, with the index of its cut.
struct ErmResult {
    h: Threshold,
    cut: usize,
    errors: u64,
    groups: usize,
}

fn erm_sorted(sorted: &[LabeledExample<f64>]) -> ErmResult {
    let n = sorted.len() as u64;
    let mut e = count_negatives(sorted);
    let mut best = ErmResult {
        h: Threshold { threshold: f64::NEG_INFINITY, orientation: Label::Pos },
        cut: 0,
        errors: e,
        groups: 0,
    };
    if n - e < best.errors {
        best.h.orientation = Label::Neg;
        best.errors = n - e;
    }
    let mut c = 0usize;
    for g in groups(sorted) {
        // Moving the cut past group `c`.
        e = e + g.pos - g.neg;
        c += 1;
        if e < best.errors || n - e < best.errors {
            // The upper end of cut `c` is the next group value, which is
            // not known yet; the threshold is filled in afterwards.
            let orientation = if e <= n - e { Label::Pos } else { Label::Neg };
            best = ErmResult {
                h: Threshold { threshold: f64::NAN, orientation },
                cut: c,
                errors: e.min(n - e),
                groups: 0,
            };
        }
    }
    best.groups = c;
    if best.h.threshold.is_nan() {
        best.h.threshold = cut_threshold(sorted, best.cut);
    }
    best
}

/// The canonical threshold of cut `c` on sorted data.
fn cut_threshold(sorted: &[LabeledExample<f64>], c: usize) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    for (i, g) in groups(sorted).enumerate() {
        if i == c {
            return cut_value(lo, g.value);
        }
        lo = g.value;
    }
    f64::INFINITY
}

/// Lower and upper bounds `(a, b]` that single-point constraints impose on
/// the threshold of a given orientation.
#[derive(Debug, Clone, Copy)]
struct ThresholdWindow {
    /// Threshold must exceed this value.
    above: f64,
    /// Threshold must be at most this value.
    at_most: f64,
}

fn window(constraints: &[LabeledExample<f64>], orientation: Label) -> ThresholdWindow {
    let mut w = ThresholdWindow { above: f64::NEG_INFINITY, at_most: f64::INFINITY };
    for c in constraints {
        if c.label == orientation {
            w.at_most = w.at_most.min(c.point);
        } else {
            w.above = w.above.max(c.point);
        }
    }
    w
}

/// Smallest admissible threshold in `(cell_lo, cell_hi] ∩ (w.above, w.at_most]`,
/// where cut 0 also admits `-inf`.
fn admissible(cell_lo: f64, cell_hi: f64, first_cut: bool, w: ThresholdWindow) -> Option<f64> {
    let hi = cell_hi.min(w.at_most);
    if first_cut && w.above == f64::NEG_INFINITY {
        return Some(f64::NEG_INFINITY);
    }
    let lo = cell_lo.max(w.above);
    if lo < hi {
        Some(cut_value(lo, hi))
    } else {
        None
    }
}

fn cons_learn_line(
    constraints: &[LabeledExample<f64>],
    data: &[LabeledExample<f64>],
) -> Result<Threshold> {
    if constraints.iter().chain(data).any(|e| e.point.is_nan()) {
        return Err(Error::domain("points must not be NaN"));
    }
    let mut sorted = data.to_vec();
    sort_by_point(&mut sorted);
    let n = sorted.len() as u64;
    let windows = [
        (Label::Pos, window(constraints, Label::Pos)),
        (Label::Neg, window(constraints, Label::Neg)),
    ];
    let mut best: Option<(u64, Threshold)> = None;
    let mut consider = |errors: u64, h: Threshold| {
        let better = match best {
            None => true,
            Some((be, bh)) => {
                errors < be
                    || (errors == be
                        && (h.threshold < bh.threshold
                            || (h.threshold == bh.threshold
                                && h.orientation == Label::Pos
                                && bh.orientation == Label::Neg)))
            }
        };
        if better {
            best = Some((errors, h));
        }
    };
    let mut e = count_negatives(&sorted);
    let mut lo = f64::NEG_INFINITY;
    let mut first = true;
    let mut iter = groups(&sorted).peekable();
    loop {
        let hi = iter.peek().map_or(f64::INFINITY, |g| g.value);
        for (orientation, w) in windows {
            if let Some(threshold) = admissible(lo, hi, first, w) {
                let errors = if orientation == Label::Pos { e } else { n - e };
                consider(errors, Threshold { threshold, orientation });
            }
        }
        match iter.next() {
            Some(g) => {
                e = e + g.pos - g.neg;
                lo = g.value;
                first = false;
            }
            None => break,
        }
    }
    best.map(|(_, h)| h).ok_or(Error::Infeasible)
}

/// A maximal run of region membership on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

/// Cached disagreement test for thresholds.
///
/// Write `T = err_hat + tau * n`. Forcing label `-1` at `x` is cheap iff some
/// negatively oriented threshold at or left of `x`, or some positively
/// oriented one right of `x`, makes at most `T` mistakes. Because a prefix
/// maximum is monotone in its endpoint, each of the four cases reduces to a
/// single boundary cut, so the region is found in three passes over the data
/// with constant extra memory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineRegion {
    h_hat: Threshold,
    err_hat: EmpiricalError,
    segments: Vec<Segment>,
}

/// Boundary cuts of the cheap sets.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Reach {
    /// First and last cut with `E(c) <= T`.
    pub(crate) low_first: Option<usize>,
    pub(crate) low_last: Option<usize>,
    /// First and last cut with `n - E(c) <= T`.
    pub(crate) high_first: Option<usize>,
    pub(crate) high_last: Option<usize>,
}

impl Reach {
    /// Whether `-h_hat(x)` can be forced cheaply for a piece whose prefix
    /// ends at cut `l` and whose suffix starts at cut `r`.
    pub(crate) fn cheap(&self, l: usize, r: usize, current: Label) -> bool {
        let after = |first: Option<usize>| first.is_some_and(|f| l >= f);
        let before = |last: Option<usize>| last.is_some_and(|b| r <= b);
        match current {
            // Need -1 at x: a negative threshold at or left of x or a
            // positive one strictly right of x.
            Label::Pos => after(self.high_first) || before(self.low_last),
            Label::Neg => after(self.low_first) || before(self.high_last),
        }
    }
}

struct SegmentBuilder {
    segments: Vec<Segment>,
    open: Option<Segment>,
}

impl SegmentBuilder {
    fn push(&mut self, lo: f64, lo_closed: bool, hi: f64, hi_closed: bool, inside: bool) {
        if inside {
            match &mut self.open {
                Some(s) => {
                    s.hi = hi;
                    s.hi_closed = hi_closed;
                }
                None => self.open = Some(Segment { lo, lo_closed, hi, hi_closed }),
            }
        } else if let Some(s) = self.open.take() {
            self.segments.push(s);
        }
    }

    fn finish(mut self) -> Vec<Segment> {
        if let Some(s) = self.open.take() {
            self.segments.push(s);
        }
        self.segments
    }
}

/// Region segments for `n` distinct sorted points, reading only the
/// positions next to the ERM cut and the reach cuts. Between those indices
/// every cell and every point has the same membership, so each stretch is
/// emitted whole. `value(i)` is the `i`-th smallest point.
pub(crate) fn segments_by_jumps(
    n: usize,
    cut: usize,
    h: Threshold,
    reach: &Reach,
    mut value: impl FnMut(usize) -> f64,
) -> Vec<Segment> {
    let o = h.orientation;
    let left = o.flip();
    let mut x = |i: usize, offset: isize| -> f64 {
        let j = i as isize + offset;
        if j < 0 {
            f64::NEG_INFINITY
        } else if j as usize >= n {
            f64::INFINITY
        } else {
            value(j as usize)
        }
    };
    let specials = [Some(cut), reach.low_first, reach.low_last, reach.high_first, reach.high_last];
    let mut keys = vec![0, n];
    for s in specials.into_iter().flatten() {
        keys.extend([s.saturating_sub(1), s, s + 1].into_iter().filter(|&k| k <= n));
    }
    keys.sort_unstable();
    keys.dedup();
    let side = |c: usize| if c < cut { left } else { o };
    let mut out = SegmentBuilder { segments: Vec::new(), open: None };
    let mut prev: Option<usize> = None;
    for &c in &keys {
        if let Some(p) = prev {
            if c > p + 1 {
                // Cells and points p+1 ..= c-1 share one membership.
                let inside = reach.cheap(p + 1, p + 1, side(p + 1));
                debug_assert_eq!(inside, reach.cheap(p + 1, p + 2, side(p + 1)));
                out.push(x(p, 0), false, x(c, -1), true, inside);
            }
        }
        let (lo, hi) = (x(c, -1), x(c, 0));
        if c == cut && h.threshold > lo && h.threshold < hi {
            out.push(lo, false, h.threshold, false, reach.cheap(c, c, left));
            out.push(h.threshold, true, hi, false, reach.cheap(c, c, o));
        } else {
            let s = if c < cut || (c == cut && h.threshold >= hi) { left } else { o };
            out.push(lo, false, hi, false, reach.cheap(c, c, s));
        }
        if c < n {
            out.push(hi, true, hi, true, reach.cheap(c, c + 1, side(c)));
        }
        prev = Some(c);
    }
    out.finish()
}

impl LineRegion {
    pub fn build(data: &mut [LabeledExample<f64>], tau: Tau) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.iter().any(|e| e.point.is_nan()) {
            return Err(Error::domain("points must not be NaN"));
        }
        sort_by_point(data);
        let sorted = &*data;
        let n = sorted.len() as u64;
        let erm = erm_sorted(sorted);
        let cheap = |errors: u64| within_tau(erm.errors, errors, n, tau);

        let mut reach = Reach { low_first: None, low_last: None, high_first: None, high_last: None };
        let mut e = count_negatives(sorted);
        let mut c = 0usize;
        let mut iter = groups(sorted);
        loop {
            if cheap(e) {
                reach.low_first.get_or_insert(c);
                reach.low_last = Some(c);
            }
            if cheap(n - e) {
                reach.high_first.get_or_insert(c);
                reach.high_last = Some(c);
            }
            match iter.next() {
                Some(g) => {
                    e = e + g.pos - g.neg;
                    c += 1;
                }
                None => break,
            }
        }

        let h = erm.h;
        let o = h.orientation;
        let label_left = o.flip();
        let mut out = SegmentBuilder { segments: Vec::new(), open: None };
        let mut lo = f64::NEG_INFINITY;
        let mut c = 0usize;
        let mut iter = groups(sorted).peekable();
        loop {
            let hi = iter.peek().map_or(f64::INFINITY, |g| g.value);
            // Open cell (lo, hi) at cut c.
            if c == erm.cut && h.threshold > lo && h.threshold < hi {
                out.push(lo, false, h.threshold, false, reach.cheap(c, c, label_left));
                out.push(h.threshold, true, hi, false, reach.cheap(c, c, o));
            } else {
                let side = if c < erm.cut || (c == erm.cut && h.threshold >= hi) {
                    label_left
                } else {
                    o
                };
                out.push(lo, false, hi, false, reach.cheap(c, c, side));
            }
            match iter.next() {
                Some(g) => {
                    let side = if c >= erm.cut { o } else { label_left };
                    out.push(g.value, true, g.value, true, reach.cheap(c, c + 1, side));
                    lo = g.value;
                    c += 1;
                }
                None => break,
            }
        }
        Ok(Self {
            h_hat: h,
            err_hat: EmpiricalError { errors: erm.errors, total: n },
            segments: out.finish(),
        })
    }

    pub(crate) fn from_parts(h_hat: Threshold, err_hat: EmpiricalError, segments: Vec<Segment>) -> Self {
        Self { h_hat, err_hat, segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
}

impl DisagreementRegion<Line> for LineRegion {
    fn contains(&self, x: &f64) -> bool {
        let idx = self.segments.partition_point(|s| s.lo <= *x);
        if idx == 0 {
            return false;
        }
        let s = &self.segments[idx - 1];
        (*x > s.lo || s.lo_closed) && (*x < s.hi || (*x == s.hi && s.hi_closed))
    }

    fn h_hat(&self) -> Threshold {
        self.h_hat
    }

    fn err_hat(&self) -> EmpiricalError {
        self.err_hat
    }
}

/// Sorted points with prefix counts of positive labels.
#[derive(Debug, Clone)]
pub struct LineIndex {
    points: Vec<f64>,
    pos_before: Vec<u64>,
}

impl ErrorIndex<Line> for LineIndex {
    fn len(&self) -> u64 {
        self.points.len() as u64
    }

    fn errors(&self, h: &Threshold) -> u64 {
        let n = self.points.len() as u64;
        let total_pos = *self.pos_before.last().unwrap_or(&0);
        let c = self.points.partition_point(|&x| x < h.threshold);
        let pos_left = self.pos_before[c];
        let neg_right = (n - c as u64) - (total_pos - pos_left);
        let e_pos = pos_left + neg_right;
        match h.orientation {
            Label::Pos => e_pos,
            Label::Neg => n - e_pos,
        }
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// The pieces of `DIS(B(h, r))` inside `[0, 1]`, as half-open intervals.
fn ball_disagreement_pieces(h: &Threshold, r: f64) -> Vec<(f64, f64)> {
    if r >= 1.0 {
        return vec![(0.0, 1.0)];
    }
    let s = clamp01(h.threshold);
    let mut pieces = vec![(s - r, s + r)];
    // Oppositely oriented thresholds lie in the ball only when far from s.
    if s - 1.0 + r >= 0.0 {
        pieces.push((0.0, s - 1.0 + r));
        pieces.push((s, 1.0));
    }
    if s + 1.0 - r <= 1.0 {
        pieces.push((0.0, s));
        pieces.push((s + 1.0 - r, 1.0));
    }
    pieces
        .into_iter()
        .map(|(a, b)| (clamp01(a), clamp01(b)))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Minimal run of consecutive groups holding at least `need` items of the
/// `marked` kind, counted by total items; ties go to the earliest start.
/// Returns `(start, end, total)` as group indices.
fn min_window(counts: &[(u64, u64)], need: u64) -> Option<(usize, usize, u64)> {
    let g = counts.len();
    let mut best: Option<(usize, usize, u64)> = None;
    let mut j = 0usize;
    let mut marked = 0u64;
    let mut total = 0u64;
    for i in 0..g {
        if j < i {
            j = i;
            marked = 0;
            total = 0;
        }
        while marked < need && j < g {
            total += counts[j].0;
            marked += counts[j].1;
            j += 1;
        }
        if marked < need {
            break;
        }
        if counts[i].1 > 0 && best.is_none_or(|b| total < b.2) {
            best = Some((i, j - 1, total));
        }
        total -= counts[i].0;
        marked -= counts[i].1;
    }
    best
}

/// Calls `f` on `n` independent uniform draws from `[0, 1)` in ascending
/// order, split over equal-width bins by a multinomial count so that only
/// one bin is held in memory.
fn for_each_sorted_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize, mut f: impl FnMut(f64)) {
    let bins = (n as u64).div_ceil(BIN_TARGET).max(1);
    let counts = bin_counts(rng, n as u64, bins);
    let width = 1.0 / bins as f64;
    let mut pts = Vec::with_capacity(2 * BIN_TARGET as usize);
    for (b, &k) in counts.iter().enumerate() {
        let lo = b as f64 * width;
        let hi = if b as u64 + 1 == bins { 1.0 } else { (b + 1) as f64 * width };
        pts.clear();
        fill_sorted(rng, k, lo, hi, &mut pts);
        pts.iter().for_each(|&x| f(x));
    }
}

impl Space for Line {
    type Point = f64;
    type Hypothesis = Threshold;
    type Difference = Interval;
    type Region = LineRegion;
    type Index = LineIndex;

    const NAME: &'static str = "threshold-1d";
    const VC_DIM: u32 = 2;
    const DIFF_VC_DIM: u32 = 2;

    fn law_coordinate(p: &f64) -> f64 {
        *p
    }

    fn sample_point<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.random::<f64>()
    }

    /// Returns the batch in ascending order.
    fn sample_batch<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        for_each_sorted_uniform(rng, n, |x| out.push(x));
        out
    }

    fn erm(data: &mut [LabeledExample<f64>]) -> Result<(Threshold, EmpiricalError)> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.iter().any(|e| e.point.is_nan()) {
            return Err(Error::domain("points must not be NaN"));
        }
        sort_by_point(data);
        let r = erm_sorted(data);
        Ok((r.h, EmpiricalError { errors: r.errors, total: data.len() as u64 }))
    }

    fn cons_learn(
        constraints: &[LabeledExample<f64>],
        data: &[LabeledExample<f64>],
    ) -> Result<Threshold> {
        cons_learn_line(constraints, data)
    }

    fn build_region(data: &mut [LabeledExample<f64>], tau: Tau) -> Result<LineRegion> {
        LineRegion::build(data, tau)
    }

    fn cost_sensitive_diff_erm(triples: &[TripleExample<f64>], fn_budget: u64) -> Result<Interval> {
        if triples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut pts: Vec<(f64, bool)> = triples.iter().map(|t| (t.point, t.disagree())).collect();
        pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let disagreements = pts.iter().filter(|p| p.1).count() as u64;
        if disagreements <= fn_budget {
            return Ok(Interval::Empty);
        }
        let need = disagreements - fn_budget;
        let mut values = Vec::new();
        let mut counts: Vec<(u64, u64)> = Vec::new();
        for (x, dis) in pts {
            if values.last() != Some(&x) {
                values.push(x);
                counts.push((0, 0));
            }
            let c = counts.last_mut().expect("just pushed");
            c.0 += 1;
            c.1 += dis as u64;
        }
        let (i, j, _) = min_window(&counts, need).expect("all disagreements fit in one window");
        Interval::closed(values[i], values[j])
    }

    fn constant_difference(label: Label) -> Interval {
        match label {
            Label::Pos => Interval::All,
            Label::Neg => Interval::Empty,
        }
    }

    const SPAN_DOMAIN: (f64, f64) = (0.0, 1.0);
    const SPAN_CYCLIC: bool = false;

    fn span_coordinate(p: &f64) -> f64 {
        *p
    }

    fn span(lo: f64, hi: f64) -> Interval {
        Interval::Closed { lo: lo.min(hi), hi: lo.max(hi) }
    }

    fn error_index(data: &[LabeledExample<f64>]) -> LineIndex {
        let mut pairs: Vec<(f64, bool)> = data.iter().map(|e| (e.point, e.label.is_pos())).collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut pos_before = Vec::with_capacity(pairs.len() + 1);
        let mut acc = 0u64;
        pos_before.push(0);
        for p in &pairs {
            acc += p.1 as u64;
            pos_before.push(acc);
        }
        LineIndex { points: pairs.into_iter().map(|p| p.0).collect(), pos_before }
    }

    fn probe_grid(resolution: usize) -> Vec<Threshold> {
        let res = resolution.max(1);
        (0..=res)
            .flat_map(|i| {
                let t = i as f64 / res as f64;
                [Label::Pos, Label::Neg].map(|o| Threshold { threshold: t, orientation: o })
            })
            .collect()
    }

    fn disagreement_mass(h1: &Threshold, h2: &Threshold) -> f64 {
        let gap = (clamp01(h1.threshold) - clamp01(h2.threshold)).abs();
        if h1.orientation == h2.orientation {
            gap
        } else {
            1.0 - gap
        }
    }

    fn ball_disagreement_contains(h: &Threshold, r: f64, x: &f64) -> bool {
        ball_disagreement_pieces(h, r).iter().any(|&(a, b)| a <= *x && *x < b)
            || (r >= 1.0 && *x == 1.0)
    }

    fn ball_disagreement_mass(h: &Threshold, r: f64) -> f64 {
        let mut pieces = ball_disagreement_pieces(h, r);
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut mass = 0.0;
        let mut reach = f64::NEG_INFINITY;
        for (a, b) in pieces {
            let start = a.max(reach);
            if b > start {
                mass += b - start;
            }
            reach = reach.max(b);
        }
        mass
    }

    fn point_digest(p: &f64, acc: u64) -> u64 {
        super::mix_digest(acc, p.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypotheses::empirical_error;

    fn ex(x: f64, y: i8) -> LabeledExample<f64> {
        LabeledExample::new(x, Label::try_from(y).unwrap())
    }

    #[test]
    fn predict_examples() {
        let t = Threshold::new(0.5, Label::Pos).unwrap();
        assert_eq!(t.predict(&0.7), Label::Pos);
        assert_eq!(t.predict(&0.5), Label::Pos);
        assert_eq!(t.predict(&0.2), Label::Neg);
        let i = Interval::closed(0.2, 0.4).unwrap();
        assert_eq!(i.predict(&0.3), Label::Pos);
        assert_eq!(i.predict(&0.4), Label::Pos);
        assert_eq!(i.predict(&0.41), Label::Neg);
        assert!(Interval::closed(0.5, 0.4).is_err());
    }

    #[test]
    fn erm_separable() {
        let mut d = vec![ex(0.8, 1), ex(0.1, -1), ex(0.3, -1), ex(0.6, 1)];
        let (h, e) = Line::erm(&mut d).unwrap();
        assert_eq!(e.errors, 0);
        assert_eq!(h.orientation, Label::Pos);
        assert!((h.threshold - 0.45).abs() < 1e-12);
    }

    #[test]
    fn erm_tie_prefers_smallest_threshold() {
        // Both all-positive constants tie; -inf with + orientation is smallest.
        let mut d = vec![ex(0.2, 1), ex(0.4, 1)];
        let (h, e) = Line::erm(&mut d).unwrap();
        assert_eq!(e.errors, 0);
        assert_eq!(h, Threshold { threshold: f64::NEG_INFINITY, orientation: Label::Pos });
    }

    #[test]
    fn erm_on_duplicates() {
        let mut d = vec![ex(0.5, 1), ex(0.5, -1), ex(0.5, 1)];
        let (h, e) = Line::erm(&mut d).unwrap();
        assert_eq!(e.errors, 1);
        assert_eq!(h.predict(&0.5), Label::Pos);
    }

    #[test]
    fn cons_learn_example() {
        let d = vec![ex(0.2, -1), ex(0.8, 1)];
        let h = Line::cons_learn(&[ex(0.1, 1)], &d).unwrap();
        assert_eq!(h.predict(&0.1), Label::Pos);
        assert_eq!(empirical_error(&h, &d).unwrap().errors, 1);
    }

    #[test]
    fn cons_learn_conflicting_duplicates() {
        let d = vec![ex(0.2, -1)];
        assert_eq!(Line::cons_learn(&[ex(0.3, 1), ex(0.3, -1)], &d), Err(Error::Infeasible));
    }

    #[test]
    fn diff_erm_example() {
        let t = |x, dis: bool| TripleExample {
            point: x,
            label_strong: Label::Pos,
            label_weak: if dis { Label::Neg } else { Label::Pos },
        };
        let triples = [t(0.1, false), t(0.4, true), t(0.6, true), t(0.9, false)];
        assert_eq!(Line::cost_sensitive_diff_erm(&triples, 0).unwrap(), Interval::Closed { lo: 0.4, hi: 0.6 });
        assert_eq!(Line::cost_sensitive_diff_erm(&triples, 1).unwrap(), Interval::Closed { lo: 0.4, hi: 0.4 });
        assert_eq!(Line::cost_sensitive_diff_erm(&triples, 2).unwrap(), Interval::Empty);
    }

    #[test]
    fn sorted_batches_are_uniform() {
        use rand::SeedableRng;
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(3);
        let xs = Line::sample_batch(&mut rng, 100_000);
        assert!(xs.is_sorted());
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.01);
        let below = xs.partition_point(|&x| x < 0.25) as f64 / 1e5;
        assert!((below - 0.25).abs() < 0.01);
    }

    #[test]
    fn ball_mass_closed_form() {
        let h = Threshold { threshold: 0.5, orientation: Label::Pos };
        assert!((Line::ball_disagreement_mass(&h, 0.1) - 0.2).abs() < 1e-12);
        assert!((Line::ball_disagreement_mass(&h, 0.5) - 1.0).abs() < 1e-12);
        let h = Threshold { threshold: 0.2, orientation: Label::Pos };
        // Same orientation covers [0, 0.5); the opposite one at 0.9 adds [0.9, 1].
        assert!((Line::ball_disagreement_mass(&h, 0.3) - 0.6).abs() < 1e-12);
        assert!((Line::ball_disagreement_mass(&h, 0.7) - 1.0).abs() < 1e-12);
    }
}
