//! Homogeneous halfspaces on the unit disc.
//!
//! A halfspace with normal angle `a` predicts `+1` at `x` iff the polar angle
//! of `x` is within `pi/2` of `a` (points at the origin are always `+1`).
//! Seen from the hypothesis side, point `x` with polar angle `phi` is
//! predicted `+1` exactly for `a` in the closed arc `[phi - pi/2, phi + pi/2]`,
//! so the error of `a` is piecewise constant with breakpoints at
//! `phi +- pi/2`. Learners enumerate the open cells between breakpoints and
//! use each cell's midpoint as its canonical angle.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    within_tau, Classifier, DisagreementRegion, EmpiricalError, ErrorIndex, Label, LabeledExample,
    Space, Tau, TripleExample,
};
use crate::error::{Error, Result};

/// The unit disc with the uniform distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Disc;

/// Reduces an angle to `[0, 2pi)`.
pub fn norm_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Polar angle in `[0, 2pi)`; the origin maps to 0.
pub fn polar_angle(p: &[f64; 2]) -> f64 {
    norm_angle(p[1].atan2(p[0]))
}

/// Reduces an angle to `[0, pi)`.
pub fn norm_half(a: f64) -> f64 {
    let r = a.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Angle of the line through `p`, in `[0, pi)`.
pub fn line_angle(p: &[f64; 2]) -> f64 {
    norm_half(polar_angle(p))
}

/// Circular distance between two angles, in `[0, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = norm_angle(a - b);
    d.min(TAU - d)
}

fn is_origin(p: &[f64; 2]) -> bool {
    p[0] == 0.0 && p[1] == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    /// Angle of the unit normal, in `[0, 2pi)`.
    pub angle: f64,
}

impl Halfspace {
    pub fn new(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::domain("halfspace angle must be finite"));
        }
        Ok(Self { angle: norm_angle(angle) })
    }

    pub fn normal(&self) -> [f64; 2] {
        [self.angle.cos(), self.angle.sin()]
    }
}

impl Classifier<[f64; 2]> for Halfspace {
    fn predict(&self, x: &[f64; 2]) -> Label {
        let w = self.normal();
        Label::from_bool(w[0] * x[0] + w[1] * x[1] >= 0.0)
    }
}

/// Difference classifiers on the disc: double wedges (symmetric differences
/// of two halfspaces) and the two constants. A double wedge is the set of
/// points whose line angle lies in the closed arc from `start` to `end`,
/// taken counterclockwise modulo `pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DoubleWedge {
    Empty,
    All,
    Arc { start: f64, end: f64 },
}

impl DoubleWedge {
    /// The symmetric difference of two halfspaces.
    pub fn between(h1: &Halfspace, h2: &Halfspace) -> DoubleWedge {
        let delta = norm_angle(h2.angle - h1.angle);
        if delta == 0.0 {
            return DoubleWedge::Empty;
        }
        // Turning the normal counterclockwise by `len` sweeps the positive
        // half-disc over a wedge starting at the old boundary.
        let (from, len) = if delta <= PI { (h1.angle, delta) } else { (h2.angle, TAU - delta) };
        if len >= PI {
            return DoubleWedge::All;
        }
        let start = norm_half(from + FRAC_PI_2);
        DoubleWedge::Arc { start, end: norm_half(start + len) }
    }

    fn contains_line_angle(start: f64, end: f64, psi: f64) -> bool {
        if start <= end {
            start <= psi && psi <= end
        } else {
            psi >= start || psi <= end
        }
    }
}

impl Classifier<[f64; 2]> for DoubleWedge {
    fn predict(&self, x: &[f64; 2]) -> Label {
        match *self {
            DoubleWedge::Empty => Label::Neg,
            DoubleWedge::All => Label::Pos,
            DoubleWedge::Arc { start, end } => {
                Label::from_bool(Self::contains_line_angle(start, end, line_angle(x)))
            }
        }
    }
}

/// Angle at which `x` starts being predicted `+1` as the normal turns
/// counterclockwise.
fn enter_angle(x: &[f64; 2]) -> f64 {
    norm_angle(polar_angle(x) - FRAC_PI_2)
}

/// Whether the halfspace at angle `a` predicts `+1` at a point whose
/// enter angle is `enter`, by angle arithmetic.
fn positive_at(enter: f64, a: f64) -> bool {
    norm_angle(a - enter) <= PI
}

/// Breakpoints with the error change when the normal crosses them.
struct Arrangement {
    breaks: Vec<f64>,
    deltas: Vec<i64>,
    /// Mistakes made on origin points, which every halfspace labels `+1`.
    origin_errors: u64,
}

fn arrangement(data: &[LabeledExample<[f64; 2]>], extra: &[[f64; 2]]) -> Arrangement {
    let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * (data.len() + extra.len()));
    let mut origin_errors = 0u64;
    for e in data {
        if is_origin(&e.point) {
            origin_errors += (e.label == Label::Neg) as u64;
            continue;
        }
        let enter = enter_angle(&e.point);
        let d = if e.label.is_pos() { -1 } else { 1 };
        events.push((enter, d));
        events.push((norm_angle(enter + PI), -d));
    }
    for p in extra {
        if !is_origin(p) {
            let enter = enter_angle(p);
            events.push((enter, 0));
            events.push((norm_angle(enter + PI), 0));
        }
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut breaks: Vec<f64> = Vec::new();
    let mut deltas: Vec<i64> = Vec::new();
    for (a, d) in events {
        if breaks.last() == Some(&a) {
            *deltas.last_mut().expect("parallel vectors") += d;
        } else {
            breaks.push(a);
            deltas.push(d);
        }
    }
    Arrangement { breaks, deltas, origin_errors }
}

/// Canonical angle of cell `j`, the open arc from `breaks[j]` to the next
/// breakpoint.
fn cell_mid(breaks: &[f64], j: usize) -> f64 {
    let k = breaks.len();
    let lo = breaks[j];
    let hi = if j + 1 < k { breaks[j + 1] } else { breaks[0] + TAU };
    norm_angle(lo + (hi - lo) / 2.0)
}

/// Errors of the halfspaces in every cell, in cell order.
fn cell_errors(arr: &Arrangement, data: &[LabeledExample<[f64; 2]>]) -> Vec<u64> {
    let k = arr.breaks.len();
    if k == 0 {
        return vec![arr.origin_errors];
    }
    let start = cell_mid(&arr.breaks, k - 1);
    let mut e = arr.origin_errors as i64;
    for ex in data.iter().filter(|ex| !is_origin(&ex.point)) {
        let predicted = Label::from_bool(positive_at(enter_angle(&ex.point), start));
        e += (predicted != ex.label) as i64;
    }
    let mut out = Vec::with_capacity(k);
    for d in &arr.deltas {
        e += d;
        out.push(e as u64);
    }
    out
}

fn best_cell(arr: &Arrangement, errors: &[u64], feasible: impl Fn(f64) -> bool) -> Option<(Halfspace, u64)> {
    let mut best: Option<(f64, u64)> = None;
    for (j, &e) in errors.iter().enumerate() {
        let a = if arr.breaks.is_empty() { 0.0 } else { cell_mid(&arr.breaks, j) };
        if !feasible(a) {
            continue;
        }
        if best.is_none_or(|(ba, be)| e < be || (e == be && a < ba)) {
            best = Some((a, e));
        }
    }
    best.map(|(a, e)| (Halfspace { angle: a }, e))
}

fn check_points<'a>(points: impl IntoIterator<Item = &'a [f64; 2]>) -> Result<()> {
    for p in points {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::domain("points must be finite"));
        }
    }
    Ok(())
}

fn satisfies(constraints: &[LabeledExample<[f64; 2]>], a: f64) -> bool {
    constraints.iter().all(|c| {
        let positive = is_origin(&c.point) || positive_at(enter_angle(&c.point), a);
        Label::from_bool(positive) == c.label
    })
}

/// Cached disagreement test for halfspaces.
///
/// Cells whose error is within `tau` of the minimum are merged into open
/// arcs. Forcing label `-h_hat(x)` at `x` restricts the normal to a closed
/// half-circle, and `x` is in the region iff the interior of that
/// half-circle meets a cheap arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscRegion {
    h_hat: Halfspace,
    err_hat: EmpiricalError,
    /// Disjoint open arcs `(lo, hi)` sorted by `lo`, with `-1 <= lo < hi <= 2pi + 1`.
    cheap: Vec<(f64, f64)>,
}

impl DiscRegion {
    pub fn build(data: &[LabeledExample<[f64; 2]>], tau: Tau) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_points(data.iter().map(|e| &e.point))?;
        let n = data.len() as u64;
        let arr = arrangement(data, &[]);
        let errors = cell_errors(&arr, data);
        let (h_hat, best) = best_cell(&arr, &errors, |_| true).expect("unconstrained ERM is feasible");
        let k = arr.breaks.len();
        let mut cheap: Vec<(f64, f64)> = Vec::new();
        if k == 0 {
            cheap.push((-1.0, TAU + 1.0));
        } else {
            let mut push = |lo: f64, hi: f64| match cheap.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => cheap.push((lo, hi)),
            };
            let wrap_cheap = within_tau(best, errors[k - 1], n, tau);
            if wrap_cheap {
                push(-1.0, arr.breaks[0]);
            }
            for (j, &e) in errors.iter().enumerate().take(k - 1) {
                if within_tau(best, e, n, tau) {
                    push(arr.breaks[j], arr.breaks[j + 1]);
                }
            }
            if wrap_cheap {
                push(arr.breaks[k - 1], TAU + 1.0);
            }
        }
        Ok(Self { h_hat, err_hat: EmpiricalError { errors: best, total: n }, cheap })
    }

    /// Whether the open linear interval `(a, b)` meets a cheap arc.
    fn meets(&self, a: f64, b: f64) -> bool {
        let i = self.cheap.partition_point(|arc| arc.1 <= a);
        self.cheap.get(i).is_some_and(|arc| arc.0 < b)
    }
}

impl DisagreementRegion<Disc> for DiscRegion {
    fn contains(&self, x: &[f64; 2]) -> bool {
        if is_origin(x) {
            // Every halfspace labels the origin +1; the opposite label cannot
            // be forced and the point is routed to a query.
            return true;
        }
        let current = self.h_hat.predict(x);
        let enter = enter_angle(x);
        // Normals giving +1 at x form [enter, enter + pi].
        let s = match current {
            Label::Neg => enter,
            Label::Pos => norm_angle(enter + PI),
        };
        let e = s + PI;
        if e <= TAU {
            self.meets(s, e)
        } else {
            self.meets(s, TAU + 1.0) || self.meets(-1.0, e - TAU)
        }
    }

    fn h_hat(&self) -> Halfspace {
        self.h_hat
    }

    fn err_hat(&self) -> EmpiricalError {
        self.err_hat
    }
}

/// Polar angles of the non-origin points, sorted, with prefix counts of
/// positive labels.
#[derive(Debug, Clone)]
pub struct DiscIndex {
    angles: Vec<f64>,
    pos_before: Vec<u64>,
    origin_neg: u64,
    origin: u64,
}

impl DiscIndex {
    /// Points and positives with polar angle in the closed linear range `[a, b]`.
    fn count(&self, a: f64, b: f64) -> (u64, u64) {
        let i = self.angles.partition_point(|&x| x < a);
        let j = self.angles.partition_point(|&x| x <= b);
        if j <= i {
            return (0, 0);
        }
        ((j - i) as u64, self.pos_before[j] - self.pos_before[i])
    }
}

impl ErrorIndex<Disc> for DiscIndex {
    fn len(&self) -> u64 {
        self.angles.len() as u64 + self.origin
    }

    fn errors(&self, h: &Halfspace) -> u64 {
        let lo = norm_angle(h.angle - FRAC_PI_2);
        let hi = lo + PI;
        let (pts, pos) = if hi < TAU {
            self.count(lo, hi)
        } else {
            let a = self.count(lo, TAU);
            let b = self.count(0.0, hi - TAU);
            (a.0 + b.0, a.1 + b.1)
        };
        let total_pos = *self.pos_before.last().unwrap_or(&0);
        let neg_inside = pts - pos;
        let pos_outside = total_pos - pos;
        neg_inside + pos_outside + self.origin_neg
    }
}

impl Space for Disc {
    type Point = [f64; 2];
    type Hypothesis = Halfspace;
    type Difference = DoubleWedge;
    type Region = DiscRegion;
    type Index = DiscIndex;

    const NAME: &'static str = "halfspace-2d";
    const VC_DIM: u32 = 2;
    const DIFF_VC_DIM: u32 = 3;

    fn law_coordinate(p: &[f64; 2]) -> f64 {
        polar_angle(p)
    }

    fn sample_point<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
        let r = rng.random::<f64>().sqrt();
        let a = TAU * rng.random::<f64>();
        [r * a.cos(), r * a.sin()]
    }

    fn sample_batch<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|_| Self::sample_point(rng)).collect()
    }

    fn erm(data: &mut [LabeledExample<[f64; 2]>]) -> Result<(Halfspace, EmpiricalError)> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_points(data.iter().map(|e| &e.point))?;
        let arr = arrangement(data, &[]);
        let errors = cell_errors(&arr, data);
        let (h, e) = best_cell(&arr, &errors, |_| true).expect("unconstrained ERM is feasible");
        Ok((h, EmpiricalError { errors: e, total: data.len() as u64 }))
    }

    /// Candidates are the open cells of the joint arrangement of data and
    /// constraint points, so constraint sets that only a boundary angle can
    /// satisfy are reported as infeasible.
    fn cons_learn(
        constraints: &[LabeledExample<[f64; 2]>],
        data: &[LabeledExample<[f64; 2]>],
    ) -> Result<Halfspace> {
        check_points(data.iter().chain(constraints).map(|e| &e.point))?;
        let extra: Vec<[f64; 2]> = constraints.iter().map(|c| c.point).collect();
        let arr = arrangement(data, &extra);
        let errors = cell_errors(&arr, data);
        best_cell(&arr, &errors, |a| satisfies(constraints, a))
            .map(|(h, _)| h)
            .ok_or(Error::Infeasible)
    }

    fn build_region(data: &mut [LabeledExample<[f64; 2]>], tau: Tau) -> Result<DiscRegion> {
        DiscRegion::build(data, tau)
    }

    fn cost_sensitive_diff_erm(
        triples: &[TripleExample<[f64; 2]>],
        fn_budget: u64,
    ) -> Result<DoubleWedge> {
        if triples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut pts: Vec<(f64, bool)> =
            triples.iter().map(|t| (line_angle(&t.point), t.disagree())).collect();
        pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let disagreements = pts.iter().filter(|p| p.1).count() as u64;
        if disagreements <= fn_budget {
            return Ok(DoubleWedge::Empty);
        }
        let need = disagreements - fn_budget;
        let mut values = Vec::new();
        let mut counts: Vec<(u64, u64)> = Vec::new();
        for (psi, dis) in pts {
            if values.last() != Some(&psi) {
                values.push(psi);
                counts.push((0, 0));
            }
            let c = counts.last_mut().expect("just pushed");
            c.0 += 1;
            c.1 += dis as u64;
        }
        let g = counts.len();
        let doubled: Vec<(u64, u64)> = counts.iter().chain(counts.iter()).copied().collect();
        // Windows must start in the first copy and are at most g groups long,
        // which the two-pointer scan guarantees since one full turn already
        // holds every disagreement.
        let mut best: Option<(usize, usize, u64)> = None;
        for (i, j, total) in cyclic_windows(&doubled, g, need) {
            if best.is_none_or(|b| total < b.2) {
                best = Some((i, j, total));
            }
        }
        let (i, j, _) = best.expect("one full turn holds every disagreement");
        Ok(DoubleWedge::Arc { start: values[i % g], end: values[j % g] })
    }

    fn constant_difference(label: Label) -> DoubleWedge {
        match label {
            Label::Pos => DoubleWedge::All,
            Label::Neg => DoubleWedge::Empty,
        }
    }

    const SPAN_DOMAIN: (f64, f64) = (0.0, PI);
    const SPAN_CYCLIC: bool = true;

    fn span_coordinate(p: &[f64; 2]) -> f64 {
        line_angle(p)
    }

    fn span(lo: f64, hi: f64) -> DoubleWedge {
        DoubleWedge::Arc { start: norm_half(lo), end: norm_half(hi) }
    }

    fn error_index(data: &[LabeledExample<[f64; 2]>]) -> DiscIndex {
        let mut origin = 0;
        let mut origin_neg = 0;
        let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(data.len());
        for e in data {
            if is_origin(&e.point) {
                origin += 1;
                origin_neg += (e.label == Label::Neg) as u64;
            } else {
                pairs.push((polar_angle(&e.point), e.label.is_pos()));
            }
        }
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut pos_before = Vec::with_capacity(pairs.len() + 1);
        let mut acc = 0u64;
        pos_before.push(0);
        for p in &pairs {
            acc += p.1 as u64;
            pos_before.push(acc);
        }
        DiscIndex { angles: pairs.into_iter().map(|p| p.0).collect(), pos_before, origin_neg, origin }
    }

    fn probe_grid(resolution: usize) -> Vec<Halfspace> {
        let res = resolution.max(1);
        (0..res).map(|i| Halfspace { angle: TAU * i as f64 / res as f64 }).collect()
    }

    fn disagreement_mass(h1: &Halfspace, h2: &Halfspace) -> f64 {
        angular_distance(h1.angle, h2.angle) / PI
    }

    fn ball_disagreement_contains(h: &Halfspace, r: f64, x: &[f64; 2]) -> bool {
        if is_origin(x) {
            return false;
        }
        (angular_distance(polar_angle(x), h.angle) - FRAC_PI_2).abs() <= PI * r
    }

    fn ball_disagreement_mass(_h: &Halfspace, r: f64) -> f64 {
        (2.0 * r).clamp(0.0, 1.0)
    }

    fn point_digest(p: &[f64; 2], acc: u64) -> u64 {
        super::mix_digest(super::mix_digest(acc, p[0].to_bits()), p[1].to_bits())
    }
}

/// Minimal windows per start over a doubled group array, one per start in
/// the first copy that begins with a disagreement.
fn cyclic_windows(doubled: &[(u64, u64)], g: usize, need: u64) -> Vec<(usize, usize, u64)> {
    let mut out = Vec::new();
    let mut j = 0usize;
    let mut marked = 0u64;
    let mut total = 0u64;
    for i in 0..g {
        if j < i {
            j = i;
            marked = 0;
            total = 0;
        }
        while marked < need && j < i + g {
            total += doubled[j].0;
            marked += doubled[j].1;
            j += 1;
        }
        if marked >= need && doubled[i].1 > 0 {
            out.push((i, j - 1, total));
        }
        total -= doubled[i].0;
        marked -= doubled[i].1;
    }
    out
}
