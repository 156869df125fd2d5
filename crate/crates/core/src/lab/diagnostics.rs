//! Per-epoch checks of a retained run against its shadow-labeled twin.
//!
//! For epoch `k` the shadow dataset `S_k` keeps every label of `S_hat_k`
//! that came from `O` and replaces the others (inferred, or from `W`) with a
//! fresh shadow label from `O`. Classifier errors on both datasets are read
//! off prediction bitsets over a probe grid.

use serde::Serialize;

use crate::engine::{stopping_rule_met, AlgoConfig, EpochState, RunOutput};
use crate::error::{Error, Result};
use crate::hypotheses::{Classifier, DisagreementRegion, Label, LabeledSample};
use crate::world::{Stream, World, WorldSpace};

use super::measure::{estimate_alpha, estimate_theta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticOptions {
    /// Resolution of the probe grid of classifiers.
    pub grid: usize,
    /// Monte-Carlo draws for the difference-classifier masses, `alpha` and
    /// `theta`.
    pub n_mc: usize,
    /// Larger retained samples are thinned to every `ceil(n / max_points)`-th
    /// point.
    pub max_points: usize,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self { grid: 64, n_mc: 200_000, max_points: 1 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochDiagnostics {
    pub k: u32,
    pub epsilon: f64,
    /// Points of `S_hat_k` evaluated (after thinning).
    pub points: u64,
    /// Largest `[err(h,S) - err(h',S)] - [err(h,S_hat) - err(h',S_hat)] -
    /// epsilon/16` over probes `h` and low-excess probes `h'` (including
    /// `h*`); the favorable-bias inequality holds when this is `<= 0`.
    pub invariant1_margin: f64,
    /// The stopping inequality `sigma + sqrt(sigma err(h_hat, S_hat)) <=
    /// epsilon/512`, recomputed.
    pub invariant2_stopping: bool,
    /// Largest `|[err(h,S) - err(h',S)] - [err_D(h) - err_D(h')]| - sigma -
    /// sqrt(sigma rho_S(h,h'))` over probe pairs; `<= 0` when the
    /// concentration inequality holds.
    pub invariant2_concentration_margin: f64,
    pub invariant2_holds: bool,
    /// Monte-Carlo mass of `{h_df = -1, y_O != y_W, x in R_{k-1}}`.
    pub invariant3_fn_mass: Option<f64>,
    pub invariant3_fn_bound: Option<f64>,
    /// Monte-Carlo mass of `{h_df = +1, x in R_{k-1}}`.
    pub invariant3_pos_mass: Option<f64>,
    /// `6 (alpha_hat(2 nu + epsilon_{k-1}, epsilon/512) + epsilon/1024)`.
    pub invariant3_pos_bound: Option<f64>,
    /// Pass or fail against the bounds, judged only for unscaled runs.
    pub invariant3_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub epochs: Vec<EpochDiagnostics>,
    /// Worst favorable-bias margin over all epochs.
    pub invariant1_margin: f64,
    pub invariant2_holds: Vec<bool>,
    pub invariant3_fn_mass: Vec<Option<f64>>,
    pub invariant3_pos_mass: Vec<Option<f64>>,
    /// `(r, theta_hat(r))` at `r = 2 nu + epsilon_k`.
    pub theta_hat: Vec<(f64, f64)>,
    /// `(r, alpha_hat(r, epsilon_k / 512))` at `r = 2 nu + epsilon_{k-1}`.
    pub alpha_hat: Vec<(f64, f64)>,
}

struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn new(n: usize) -> Self {
        Self { words: vec![0; n.div_ceil(64)] }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn differ(&self, other: &Bits) -> u64 {
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones() as u64).sum()
    }
}

/// Checks the three invariants on every epoch of a run made with
/// `retain = true` on `world`.
pub fn check_invariants<S: WorldSpace>(
    run: &RunOutput<S>,
    world: &World<S>,
    config: &AlgoConfig,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    if !world.shadow_enabled() {
        return Err(Error::Unavailable("shadow labels"));
    }
    let h_star = world.h_star();
    let nu = world.nu();
    let mut probes = S::probe_grid(opts.grid);
    probes.push(h_star);
    let mut epochs = Vec::new();
    let mut alpha_hat = Vec::new();
    for (i, e) in run.epochs.iter().enumerate() {
        let prev_eps = i.checked_sub(1).map(|j| run.epochs[j].epsilon);
        let mut d = check_epoch(e, world, &probes, opts)?;
        if let (Some(region), Some(h_df), Some(prev_eps)) = (&e.region, &e.h_df, prev_eps) {
            let (fn_mass, pos_mass) = difference_masses(world, &**region, h_df, e.k, opts.n_mc)?;
            let r = 2.0 * nu + prev_eps;
            let alpha = estimate_alpha(world, &h_star, r, e.epsilon / 512.0, opts.n_mc)?.alpha_hat;
            alpha_hat.push((r, alpha));
            let fn_bound = e.epsilon / 64.0;
            let pos_bound = 6.0 * (alpha + e.epsilon / 1024.0);
            d.invariant3_fn_mass = Some(fn_mass);
            d.invariant3_fn_bound = Some(fn_bound);
            d.invariant3_pos_mass = Some(pos_mass);
            d.invariant3_pos_bound = Some(pos_bound);
            d.invariant3_holds = (config.scale == 1.0).then_some(fn_mass <= fn_bound && pos_mass <= pos_bound);
        }
        epochs.push(d);
    }
    let radii: Vec<f64> = run.epochs.iter().map(|e| 2.0 * nu + e.epsilon).collect();
    let theta_hat = estimate_theta(world, &h_star, &radii, opts.n_mc)?;
    Ok(DiagnosticReport {
        invariant1_margin: epochs.iter().map(|d| d.invariant1_margin).fold(f64::NEG_INFINITY, f64::max),
        invariant2_holds: epochs.iter().map(|d| d.invariant2_holds).collect(),
        invariant3_fn_mass: epochs.iter().map(|d| d.invariant3_fn_mass).collect(),
        invariant3_pos_mass: epochs.iter().map(|d| d.invariant3_pos_mass).collect(),
        epochs,
        theta_hat,
        alpha_hat,
    })
}

fn check_epoch<S: WorldSpace>(
    e: &EpochState<S>,
    world: &World<S>,
    probes: &[S::Hypothesis],
    opts: &DiagnosticOptions,
) -> Result<EpochDiagnostics> {
    let sample = e.s_hat.as_ref().ok_or(Error::Unavailable("retained samples"))?;
    let total = sample.len() as usize;
    let stride = total.div_ceil(opts.max_points.max(1)).max(1);
    let n = total.div_ceil(stride);
    let mut rng = world.stream(Stream::Diagnostics { index: 2 * e.k });

    // Labels of S_hat and S, and each probe's predictions.
    let mut hat = Bits::new(n);
    let mut shadow = Bits::new(n);
    let mut preds: Vec<Bits> = probes.iter().map(|_| Bits::new(n)).collect();
    let mut idx = 0usize;
    let mut j = 0usize;
    let mut failure = None;
    sample.for_each(|x, y| {
        if failure.is_some() || !j.is_multiple_of(stride) {
            j += 1;
            return;
        }
        j += 1;
        let from_strong = match (&e.region, &e.h_df) {
            (Some(region), Some(h_df)) => region.contains(x) && h_df.predict(x).is_pos(),
            _ => true,
        };
        let y_true = if from_strong {
            y
        } else {
            match world.shadow_label_with(&mut rng, x) {
                Ok(l) => l,
                Err(err) => {
                    failure = Some(err);
                    Label::Neg
                }
            }
        };
        if y.is_pos() {
            hat.set(idx);
        }
        if y_true.is_pos() {
            shadow.set(idx);
        }
        for (p, h) in preds.iter_mut().zip(probes) {
            if h.predict(x).is_pos() {
                p.set(idx);
            }
        }
        idx += 1;
    });
    if let Some(err) = failure {
        return Err(err);
    }
    let nf = n as f64;
    let err_hat: Vec<f64> = preds.iter().map(|p| p.differ(&hat) as f64 / nf).collect();
    let err_true: Vec<f64> = preds.iter().map(|p| p.differ(&shadow) as f64 / nf).collect();
    let exact: Vec<f64> = probes.iter().map(|h| world.exact_error(h)).collect();
    let nu = world.nu();
    let low: Vec<usize> = (0..probes.len()).filter(|&i| exact[i] - nu <= e.epsilon).collect();

    let mut inv1 = f64::NEG_INFINITY;
    let mut conc = f64::NEG_INFINITY;
    for a in 0..probes.len() {
        for &b in &low {
            let gap = (err_true[a] - err_true[b]) - (err_hat[a] - err_hat[b]) - e.epsilon / 16.0;
            inv1 = inv1.max(gap);
        }
        for b in 0..probes.len() {
            let rho = preds[a].differ(&preds[b]) as f64 / nf;
            let dev = ((err_true[a] - err_true[b]) - (exact[a] - exact[b])).abs();
            conc = conc.max(dev - e.sigma - (e.sigma * rho).sqrt());
        }
    }
    let stopping = stopping_rule_met(e.sigma, e.err_hat, e.epsilon);
    Ok(EpochDiagnostics {
        k: e.k,
        epsilon: e.epsilon,
        points: n as u64,
        invariant1_margin: inv1,
        invariant2_stopping: stopping,
        invariant2_concentration_margin: conc,
        invariant2_holds: stopping && conc <= 0.0,
        invariant3_fn_mass: None,
        invariant3_fn_bound: None,
        invariant3_pos_mass: None,
        invariant3_pos_bound: None,
        invariant3_holds: None,
    })
}

/// Monte-Carlo masses of `{h_df = -1, y_O != y_W, x in R}` and
/// `{h_df = +1, x in R}`.
fn difference_masses<S: WorldSpace>(
    world: &World<S>,
    region: &S::Region,
    h_df: &S::Difference,
    k: u32,
    n_mc: usize,
) -> Result<(f64, f64)> {
    let mut rng = world.stream(Stream::Diagnostics { index: 2 * k + 1 });
    let mut label_rng = world.stream(Stream::Diagnostics { index: 2 * k + 1 });
    label_rng.jump();
    let (mut fneg, mut pos) = (0u64, 0u64);
    for x in S::sample_batch(&mut rng, n_mc) {
        if !region.contains(&x) {
            continue;
        }
        if h_df.predict(&x).is_pos() {
            pos += 1;
        } else if world.shadow_label_with(&mut label_rng, &x)? != world.shadow_weak_label_with(&mut label_rng, &x)? {
            fneg += 1;
        }
    }
    Ok((fneg as f64 / n_mc as f64, pos as f64 / n_mc as f64))
}

