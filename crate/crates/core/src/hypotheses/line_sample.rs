//! Large labeled samples on the line stored as runs.
//!
//! A run is a stretch `[lo, hi)` holding `count` sample points whose labels
//! are either all equal or listed bit by bit. The positions of the points
//! are not stored: a run splits its stretch into equal-width bins with a
//! multinomial count and generates a bin's sorted points from a per-bin seed
//! when they are needed. ERM and the disagreement region only ever need a
//! handful of positions, so a sample of `10^8` points costs little more than
//! its label bits.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_distr::{Binomial, Distribution, Exp1};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use super::line::{cut_value, segments_by_jumps, Reach};
use super::{mix_digest, within_tau, EmpiricalError, Label, LabeledExample, LabeledSample, Line, LineRegion, Tau, Threshold};
use crate::error::{Error, Result};

/// Points per bin when generating sorted uniforms.
pub(crate) const BIN_TARGET: u64 = 1024;

/// Appends `k` sorted independent uniform draws from `[lo, hi)` to `out`.
/// Normalized partial sums of `k + 1` exponential variables have the joint
/// law of uniform order statistics. Values are nudged up by one ulp where
/// rounding would repeat one, so the output is strictly increasing.
pub(crate) fn fill_sorted<R: Rng + ?Sized>(rng: &mut R, k: u64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    let start = out.len();
    let mut acc = 0.0f64;
    for _ in 0..k {
        let e: f64 = rng.sample(Exp1);
        acc += e;
        out.push(acc);
    }
    let e: f64 = rng.sample(Exp1);
    let scale = (hi - lo) / (acc + e);
    let top = hi.next_down();
    let mut prev = f64::NEG_INFINITY;
    for x in &mut out[start..] {
        let mut v = (lo + *x * scale).min(top);
        if v <= prev {
            v = prev.next_up().min(top);
        }
        *x = v;
        prev = v;
    }
}

/// Multinomial split of `n` draws over `bins` equal-probability bins.
pub(crate) fn bin_counts<R: Rng + ?Sized>(rng: &mut R, n: u64, bins: u64) -> Vec<u64> {
    let mut left = n;
    (0..bins)
        .map(|b| {
            let k = if b + 1 == bins {
                left
            } else {
                Binomial::new(left, 1.0 / (bins - b) as f64).expect("valid binomial").sample(rng)
            };
            left -= k;
            k
        })
        .collect()
}

fn sub_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    let mut h = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    Xoshiro256PlusPlus::seed_from_u64(h ^ (h >> 31))
}

/// Labels of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunLabels {
    Constant(Label),
    /// Bit `j` (least significant first) is set when point `j` is positive.
    Bits(Vec<u64>),
}

impl RunLabels {
    fn get(&self, j: u64) -> Label {
        match self {
            RunLabels::Constant(l) => *l,
            RunLabels::Bits(w) => Label::from_bool(w[(j / 64) as usize] >> (j % 64) & 1 == 1),
        }
    }

    /// Labels drawn independently with `P(+) = p`.
    pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, count: u64, p: f64) -> Self {
        if p >= 1.0 {
            return RunLabels::Constant(Label::Pos);
        }
        if p <= 0.0 {
            return RunLabels::Constant(Label::Neg);
        }
        Self::from_fn(count, |_| rng.random::<f64>() < p)
    }

    /// Labels from a per-point predicate, `true` meaning positive.
    pub fn from_fn(count: u64, mut positive: impl FnMut(u64) -> bool) -> Self {
        let mut words = vec![0u64; count.div_ceil(64) as usize];
        for j in 0..count {
            if positive(j) {
                words[(j / 64) as usize] |= 1 << (j % 64);
            }
        }
        RunLabels::Bits(words)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Run {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub labels: RunLabels,
    seed: u64,
    #[serde(skip)]
    bins: OnceLock<Vec<u64>>,
}

impl Run {
    /// A run of `count` uniform points in `[lo, hi)`; `seed` fixes their
    /// positions.
    pub fn new(lo: f64, hi: f64, count: u64, labels: RunLabels, seed: u64) -> Result<Self> {
        if !(lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(Error::domain(format!("run needs lo < hi, got [{lo}, {hi})")));
        }
        if let RunLabels::Bits(w) = &labels {
            if (w.len() as u64) < count.div_ceil(64) {
                return Err(Error::domain("run has fewer label bits than points"));
            }
        }
        Ok(Self { lo, hi, count, labels, seed, bins: OnceLock::new() })
    }

    fn bin_count(&self) -> u64 {
        self.count.div_ceil(BIN_TARGET).max(1)
    }

    /// Prefix sums of the bin counts.
    fn bin_prefix(&self) -> &[u64] {
        self.bins.get_or_init(|| {
            let mut rng = sub_rng(self.seed, 0);
            let mut prefix = vec![0u64];
            let mut acc = 0;
            for k in bin_counts(&mut rng, self.count, self.bin_count()) {
                acc += k;
                prefix.push(acc);
            }
            prefix
        })
    }

    fn bin_bounds(&self, b: u64) -> (f64, f64) {
        let bins = self.bin_count();
        let w = (self.hi - self.lo) / bins as f64;
        let lo = self.lo + b as f64 * w;
        let hi = if b + 1 == bins { self.hi } else { self.lo + (b + 1) as f64 * w };
        (lo, hi)
    }

    fn fill_bin(&self, b: u64, out: &mut Vec<f64>) {
        let prefix = self.bin_prefix();
        let k = prefix[b as usize + 1] - prefix[b as usize];
        let (lo, hi) = self.bin_bounds(b);
        fill_sorted(&mut sub_rng(self.seed, b + 1), k, lo, hi, out);
    }

    /// Position of the `j`-th smallest point.
    fn position(&self, j: u64) -> f64 {
        let prefix = self.bin_prefix();
        let b = prefix.partition_point(|&p| p <= j) - 1;
        let mut pts = Vec::new();
        self.fill_bin(b as u64, &mut pts);
        pts[(j - prefix[b]) as usize]
    }

    fn for_each_point(&self, mut f: impl FnMut(f64)) {
        let mut pts = Vec::with_capacity(2 * BIN_TARGET as usize);
        for b in 0..self.bin_count() {
            pts.clear();
            self.fill_bin(b, &mut pts);
            pts.iter().for_each(|&x| f(x));
        }
    }
}

/// A sorted labeled sample made of runs over disjoint, increasing stretches.
#[derive(Debug, Clone, Serialize)]
pub struct LineSample {
    runs: Vec<Run>,
    /// Index of the first point of each run.
    starts: Vec<u64>,
    len: u64,
}

enum Step {
    /// A single cut `c` with `D(c) = d`.
    Cut { c: u64, d: i64 },
    /// Cuts `c + 1 ..= c + k` after a run of `k` equal labels, starting from
    /// `D(c) = d`.
    Constant { c: u64, d: i64, k: u64, label: Label },
}

#[derive(Debug, Default, Clone, Copy)]
struct Bounds {
    first: Option<u64>,
    last: Option<u64>,
}

impl Bounds {
    /// Records cuts `a..=b`; calls arrive in increasing order.
    fn mark(&mut self, a: u64, b: u64) {
        self.first.get_or_insert(a);
        self.last = Some(b);
    }
}

impl LineSample {
    /// Runs must be in increasing order with disjoint stretches; empty runs
    /// are dropped.
    pub fn new(runs: Vec<Run>) -> Result<Self> {
        let runs: Vec<Run> = runs.into_iter().filter(|r| r.count > 0).collect();
        if runs.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::domain("runs must be increasing and disjoint"));
        }
        let mut starts = Vec::with_capacity(runs.len());
        let mut len = 0u64;
        for r in &runs {
            starts.push(len);
            len += r.count;
        }
        Ok(Self { runs, starts, len })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    /// Position of the `i`-th smallest point.
    pub fn position(&self, i: u64) -> f64 {
        let r = self.starts.partition_point(|&s| s <= i) - 1;
        self.runs[r].position(i - self.starts[r])
    }

    pub fn negatives(&self) -> u64 {
        self.runs
            .iter()
            .map(|r| match &r.labels {
                RunLabels::Constant(Label::Neg) => r.count,
                RunLabels::Constant(Label::Pos) => 0,
                RunLabels::Bits(w) => {
                    let pos: u64 = w.iter().map(|x| x.count_ones() as u64).sum();
                    r.count - pos
                }
            })
            .sum()
    }

    /// Walks the cuts in increasing order. Inside constant runs, `D` moves
    /// by one per point, so the whole run is reported at once.
    fn walk(&self, mut f: impl FnMut(Step)) {
        let mut d = 0i64;
        let mut c = 0u64;
        f(Step::Cut { c: 0, d: 0 });
        for r in &self.runs {
            match &r.labels {
                RunLabels::Constant(label) => {
                    f(Step::Constant { c, d, k: r.count, label: *label });
                    d += if label.is_pos() { r.count as i64 } else { -(r.count as i64) };
                    c += r.count;
                }
                RunLabels::Bits(_) => {
                    for j in 0..r.count {
                        d += if r.labels.get(j).is_pos() { 1 } else { -1 };
                        c += 1;
                        f(Step::Cut { c, d });
                    }
                }
            }
        }
    }

    /// The ERM, with the smallest-threshold tie-break of the sorted-data
    /// ERM, and the index of its cut.
    pub fn erm(&self) -> Result<(Threshold, EmpiricalError, u64)> {
        if self.len == 0 {
            return Err(Error::EmptyDataset);
        }
        // First argmin and argmax of D(c), positives minus negatives left of c.
        let mut min = (i64::MAX, 0u64);
        let mut max = (i64::MIN, 0u64);
        let mut see = |c: u64, d: i64| {
            if d < min.0 {
                min = (d, c);
            }
            if d > max.0 {
                max = (d, c);
            }
        };
        self.walk(|step| match step {
            Step::Cut { c, d } => see(c, d),
            Step::Constant { c, d, k, label } => {
                // The extremes of a monotone stretch sit at its ends.
                let s = if label.is_pos() { 1 } else { -1 };
                see(c + 1, d + s);
                see(c + k, d + s * k as i64);
            }
        });
        let n = self.len;
        let negatives = self.negatives() as i64;
        let pos = (negatives + min.0) as u64;
        let neg = n - (negatives + max.0) as u64;
        let (errors, cut, orientation) = if pos < neg || (pos == neg && min.1 <= max.1) {
            (pos, min.1, Label::Pos)
        } else {
            (neg, max.1, Label::Neg)
        };
        let threshold = if cut == 0 {
            f64::NEG_INFINITY
        } else if cut == n {
            f64::INFINITY
        } else {
            cut_value(self.position(cut - 1), self.position(cut))
        };
        Ok((Threshold { threshold, orientation }, EmpiricalError { errors, total: n }, cut))
    }

    /// First and last cuts with `D(c) <= low`, and with `D(c) >= high`.
    fn reach_bounds(&self, low: i64, high: i64) -> (Bounds, Bounds) {
        let mut below = Bounds::default();
        let mut above = Bounds::default();
        self.walk(|step| match step {
            Step::Cut { c, d } => {
                if d <= low {
                    below.mark(c, c);
                }
                if d >= high {
                    above.mark(c, c);
                }
            }
            Step::Constant { c, d, k, label } => {
                let k = k as i64;
                // Offsets j in 1..=k of the cuts inside the run.
                let (b, a) = if label.is_pos() {
                    // D = d + j.
                    ((1, (low - d).min(k)), ((high - d).max(1), k))
                } else {
                    // D = d - j.
                    (((d - low).max(1), k), (1, (d - high).min(k)))
                };
                if b.0 <= b.1 {
                    below.mark(c + b.0 as u64, c + b.1 as u64);
                }
                if a.0 <= a.1 {
                    above.mark(c + a.0 as u64, c + a.1 as u64);
                }
            }
        });
        (below, above)
    }

    pub fn to_examples(&self) -> Vec<LabeledExample<f64>> {
        let mut out = Vec::with_capacity(self.len as usize);
        for r in &self.runs {
            let mut j = 0u64;
            r.for_each_point(|x| {
                out.push(LabeledExample::new(x, r.labels.get(j)));
                j += 1;
            });
        }
        out
    }

    pub fn digest(&self) -> u64 {
        let mut acc = 0xcbf2_9ce4_8422_2325u64;
        for r in &self.runs {
            acc = mix_digest(acc, r.lo.to_bits());
            acc = mix_digest(acc, r.hi.to_bits());
            acc = mix_digest(acc, r.count);
            acc = mix_digest(acc, r.seed);
            match &r.labels {
                RunLabels::Constant(l) => acc = mix_digest(acc, l.is_pos() as u64),
                RunLabels::Bits(w) => {
                    for &x in w {
                        acc = mix_digest(acc, x);
                    }
                }
            }
        }
        acc
    }

    /// The disagreement region of `V(self, tau)`.
    pub fn region(&self, tau: Tau) -> Result<LineRegion> {
        let (h, err, cut) = self.erm()?;
        let n = self.len;
        let slack = (*tau.numer() as u128 * n as u128 / *tau.denom() as u128).min(n as u128) as i64;
        debug_assert!(within_tau(err.errors, err.errors + slack as u64, n, tau));
        let negatives = self.negatives() as i64;
        let best = err.errors as i64;
        // E(c) = negatives + D(c) <= best + slack, and n - E(c) <= best + slack.
        let low = best + slack - negatives;
        let high = n as i64 - negatives - best - slack;
        let (below, above) = self.reach_bounds(low, high);
        let to_usize = |o: Option<u64>| o.map(|v| v as usize);
        let reach = Reach {
            low_first: to_usize(below.first),
            low_last: to_usize(below.last),
            high_first: to_usize(above.first),
            high_last: to_usize(above.last),
        };
        let mut cache: BTreeMap<usize, f64> = BTreeMap::new();
        let segments = segments_by_jumps(n as usize, cut as usize, h, &reach, |i| {
            *cache.entry(i).or_insert_with(|| self.position(i as u64))
        });
        Ok(LineRegion::from_parts(h, err, segments))
    }
}

impl LabeledSample<Line> for LineSample {
    fn len(&self) -> u64 {
        self.len
    }

    fn erm(&mut self) -> Result<(Threshold, EmpiricalError)> {
        LineSample::erm(self).map(|(h, e, _)| (h, e))
    }

    fn region(&mut self, tau: Tau) -> Result<LineRegion> {
        LineSample::region(self, tau)
    }

    fn to_examples(&self) -> Vec<LabeledExample<f64>> {
        LineSample::to_examples(self)
    }

    fn for_each(&self, mut f: impl FnMut(&f64, Label)) {
        for r in &self.runs {
            let mut j = 0u64;
            r.for_each_point(|x| {
                f(&x, r.labels.get(j));
                j += 1;
            });
        }
    }

    fn digest(&self) -> u64 {
        LineSample::digest(self)
    }
}
