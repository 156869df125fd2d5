//! Brute-force references that enumerate every labeling the classes can
//! produce on a finite point set. They share no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use wsal::hypotheses::{Label, LabeledExample, Tau, TripleExample};

pub fn label(pos: bool) -> Label {
    if pos {
        Label::Pos
    } else {
        Label::Neg
    }
}

/// Points on a coarse grid so duplicates and ties are common.
pub fn grid_point<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0..9) as f64 / 8.0
}

pub fn random_line_data<R: Rng>(rng: &mut R, n: usize) -> Vec<LabeledExample<f64>> {
    (0..n).map(|_| LabeledExample::new(grid_point(rng), label(rng.random()))).collect()
}

/// Labelings of thresholds `x >= t -> o` on `points`, one per `(t, o)`
/// with `t` in `{-inf} U points U {+inf}`.
fn line_labelings(points: &[f64]) -> Vec<Vec<bool>> {
    let mut cuts: Vec<f64> = points.to_vec();
    cuts.push(f64::NEG_INFINITY);
    cuts.push(f64::INFINITY);
    let mut out = Vec::new();
    for &t in &cuts {
        for o in [true, false] {
            out.push(points.iter().map(|&x| if x >= t { o } else { !o }).collect());
        }
    }
    out
}

/// `(t, p)` with `p` the unit normal angle `t` in `[0, 2 pi)`; the labeling
/// predicts `+1` where `w . x >= 0`. Angles are the midpoints between
/// consecutive critical angles, where some point lies on the boundary.
fn disc_labelings(points: &[[f64; 2]]) -> Vec<Vec<bool>> {
    let tau = 2.0 * PI;
    let mut crit: Vec<f64> = points
        .iter()
        .flat_map(|p| {
            let a = p[1].atan2(p[0]);
            [(a + PI / 2.0).rem_euclid(tau), (a - PI / 2.0).rem_euclid(tau)]
        })
        .collect();
    crit.sort_by(f64::total_cmp);
    let mut angles: Vec<f64> = crit
        .iter()
        .zip(crit.iter().cycle().skip(1))
        .map(|(&a, &b)| {
            let gap = (b - a).rem_euclid(tau);
            let gap = if gap == 0.0 && crit.len() == 1 { tau } else { gap };
            a + gap / 2.0
        })
        .collect();
    angles.push(0.0);
    angles
        .iter()
        .map(|&t| points.iter().map(|p| t.cos() * p[0] + t.sin() * p[1] >= 0.0).collect())
        .collect()
}

fn errors(labeling: &[bool], labels: &[Label]) -> u64 {
    labeling.iter().zip(labels).filter(|(&p, &y)| label(p) != y).count() as u64
}

/// Minimum error count over classifiers that satisfy every constraint, or
/// `None` when no classifier does.
fn cons_min(labelings: Vec<Vec<bool>>, constraints: &[Label], data: &[Label]) -> Option<u64> {
    let nc = constraints.len();
    labelings
        .into_iter()
        .filter(|l| l[..nc].iter().zip(constraints).all(|(&p, &y)| label(p) == y))
        .map(|l| errors(&l[nc..], data))
        .min()
}

pub fn brute_cons_line(constraints: &[LabeledExample<f64>], data: &[LabeledExample<f64>]) -> Option<u64> {
    let points: Vec<f64> = constraints.iter().chain(data).map(|e| e.point).collect();
    let cl: Vec<Label> = constraints.iter().map(|e| e.label).collect();
    let dl: Vec<Label> = data.iter().map(|e| e.label).collect();
    cons_min(line_labelings(&points), &cl, &dl)
}

pub fn brute_cons_disc(constraints: &[LabeledExample<[f64; 2]>], data: &[LabeledExample<[f64; 2]>]) -> Option<u64> {
    let points: Vec<[f64; 2]> = constraints.iter().chain(data).map(|e| e.point).collect();
    let cl: Vec<Label> = constraints.iter().map(|e| e.label).collect();
    let dl: Vec<Label> = data.iter().map(|e| e.label).collect();
    cons_min(disc_labelings(&points), &cl, &dl)
}

/// Whether the probe (index 0 of each labeling) gets both labels from
/// classifiers within `tau` of the best empirical error on `data`.
fn in_region(labelings: Vec<Vec<bool>>, data: &[Label], tau: Tau) -> bool {
    let errs: Vec<(bool, u64)> = labelings.iter().map(|l| (l[0], errors(&l[1..], data))).collect();
    let best = errs.iter().map(|e| e.1).min().unwrap();
    let n = data.len() as u128;
    let inside = |e: u64| (e - best) as u128 * *tau.denom() as u128 <= *tau.numer() as u128 * n;
    let pos = errs.iter().any(|&(p, e)| p && inside(e));
    let neg = errs.iter().any(|&(p, e)| !p && inside(e));
    pos && neg
}

pub fn brute_region_line(data: &[LabeledExample<f64>], tau: Tau, x: f64) -> bool {
    let points: Vec<f64> = std::iter::once(x).chain(data.iter().map(|e| e.point)).collect();
    let labels: Vec<Label> = data.iter().map(|e| e.label).collect();
    in_region(line_labelings(&points), &labels, tau)
}

pub fn brute_region_disc(data: &[LabeledExample<[f64; 2]>], tau: Tau, x: [f64; 2]) -> bool {
    let points: Vec<[f64; 2]> = std::iter::once(x).chain(data.iter().map(|e| e.point)).collect();
    let labels: Vec<Label> = data.iter().map(|e| e.label).collect();
    in_region(disc_labelings(&points), &labels, tau)
}

/// Fewest predicted positives over difference classifiers with at most
/// `budget` disagreeing triples predicted negative, given the membership
/// vectors of every candidate.
fn diff_min(candidates: impl Iterator<Item = Vec<bool>>, disagree: &[bool], budget: u64) -> u64 {
    candidates
        .filter(|c| c.iter().zip(disagree).filter(|(&p, &d)| d && !p).count() as u64 <= budget)
        .map(|c| c.iter().filter(|&&p| p).count() as u64)
        .min()
        .expect("the constant +1 is always feasible")
}

/// Closed intervals with endpoints at triple points, plus both constants.
pub fn brute_diff_line(triples: &[TripleExample<f64>], budget: u64) -> u64 {
    let xs: Vec<f64> = triples.iter().map(|t| t.point).collect();
    let disagree: Vec<bool> = triples.iter().map(|t| t.label_strong != t.label_weak).collect();
    let constants = [vec![false; xs.len()], vec![true; xs.len()]];
    let spans = xs.iter().flat_map(|&a| {
        let xs = &xs;
        xs.iter().filter(move |&&b| a <= b).map(move |&b| xs.iter().map(|&x| a <= x && x <= b).collect())
    });
    diff_min(constants.into_iter().chain(spans), &disagree, budget)
}

pub fn line_angle(p: &[f64; 2]) -> f64 {
    p[1].atan2(p[0]).rem_euclid(PI)
}

/// Closed arcs of line angles, counterclockwise modulo `pi`, with endpoints
/// at triple line angles, plus both constants.
pub fn brute_diff_disc(triples: &[TripleExample<[f64; 2]>], budget: u64) -> u64 {
    let th: Vec<f64> = triples.iter().map(|t| line_angle(&t.point)).collect();
    let disagree: Vec<bool> = triples.iter().map(|t| t.label_strong != t.label_weak).collect();
    let constants = [vec![false; th.len()], vec![true; th.len()]];
    let arcs = th.iter().flat_map(|&a| {
        let th = &th;
        th.iter().map(move |&b| {
            let len = (b - a).rem_euclid(PI);
            th.iter().map(|&x| (x - a).rem_euclid(PI) <= len).collect()
        })
    });
    diff_min(constants.into_iter().chain(arcs), &disagree, budget)
}

pub fn random_triples_line<R: Rng>(rng: &mut R, m: usize) -> Vec<TripleExample<f64>> {
    (0..m)
        .map(|_| TripleExample { point: grid_point(rng), label_strong: label(rng.random()), label_weak: label(rng.random()) })
        .collect()
}

pub fn disc_point<R: Rng>(rng: &mut R) -> [f64; 2] {
    loop {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r2: f64 = p[0] * p[0] + p[1] * p[1];
        if r2 <= 1.0 && r2 > 1e-6 {
            return p;
        }
    }
}
