//! Concentration quantities and sample-size schedules.
//!
//! Every function here is pure. Sample sizes are rounded up and may be
//! shrunk by a positive `scale` multiplier; `scale = 1` gives the exact
//! theoretical constants, which are far too large for desk-scale runs.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// VC dimensions of the hypothesis and difference classes, plus the
/// multiplier applied to sample-size formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub d: u32,
    pub d_prime: u32,
    pub constant_scale: f64,
}

impl BoundParams {
    pub fn new(d: u32, d_prime: u32, constant_scale: f64) -> Result<Self> {
        if d == 0 || d_prime == 0 {
            return Err(Error::domain("VC dimensions must be at least 1"));
        }
        check_scale(constant_scale)?;
        Ok(Self { d, d_prime, constant_scale })
    }
}

/// One row of the epoch schedule: `epsilon = 2^-k` and the confidence
/// assigned to the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochSpec {
    pub k: u32,
    pub epsilon: f64,
    pub delta: f64,
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0,1), got {v}")))
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("scale must be positive and finite, got {scale}")))
    }
}

/// `(8/n)(2d ln(2en/d) + ln(24/delta))`.
pub fn sigma(n: u64, d: u32, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("sigma needs n >= 1"));
    }
    if d == 0 {
        return Err(Error::domain("sigma needs d >= 1"));
    }
    check_open_unit("delta", delta)?;
    let n = n as f64;
    let d = d as f64;
    Ok((8.0 / n) * (2.0 * d * (2.0 * E * n / d).ln() + (24.0 / delta).ln()))
}

/// `(4/n) ln(2/delta)`. Accepts `delta` up to 2, where the value is zero.
pub fn gamma(n: u64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("gamma needs n >= 1"));
    }
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::domain(format!("gamma needs delta in (0,2], got {delta}")));
    }
    Ok((4.0 / n as f64) * (2.0 / delta).ln())
}

/// Confidence left for sample size `n` after the iterated-log split
/// `delta / (log2 n (log2 n + 1))`.
fn split_delta(n: u64, delta: f64) -> f64 {
    let l = (n as f64).log2();
    delta / (l * (l + 1.0))
}

fn sigma_split(n: u64, d: u32, delta: f64) -> Result<f64> {
    sigma(n, d, split_delta(n, delta))
}

/// Closed-form upper bound on [`min_n_for_sigma`]:
/// `(64/eps)(d ln(512/eps) + ln(24/delta))`.
pub fn min_n_upper_bound(epsilon: f64, d: u32, delta: f64) -> f64 {
    (64.0 / epsilon) * (d as f64 * (512.0 / epsilon).ln() + (24.0 / delta).ln())
}

/// Smallest `n >= 2` with `sigma(n, d, delta / (log2 n (log2 n + 1))) <= epsilon`,
/// found by doubling and then bisection.
pub fn min_n_for_sigma(epsilon: f64, d: u32, delta: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0,1], got {epsilon}")));
    }
    check_open_unit("delta", delta)?;
    if d == 0 {
        return Err(Error::domain("d must be at least 1"));
    }
    let mut hi = 2u64;
    while sigma_split(hi, d, delta)? > epsilon {
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::domain("no sample size satisfies the bound"))?;
    }
    if hi == 2 {
        return Ok(2);
    }
    // Invariant: sigma(lo) > epsilon >= sigma(hi).
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if sigma_split(mid, d, delta)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Number of epochs after the initial one: the smallest `k` with
/// `2^-k <= target_epsilon` (zero when the target is at least 1).
pub fn final_epoch(target_epsilon: f64) -> Result<u32> {
    if !(target_epsilon > 0.0) || target_epsilon.is_nan() {
        return Err(Error::domain(format!("target epsilon must be positive, got {target_epsilon}")));
    }
    let mut k = 0u32;
    while epoch_epsilon(k) > target_epsilon {
        k += 1;
        if k > 1000 {
            return Err(Error::domain("target epsilon is too small"));
        }
    }
    Ok(k)
}

/// `2^-k`, exact in binary floating point.
pub fn epoch_epsilon(k: u32) -> f64 {
    0.5f64.powi(k as i32)
}

/// Epochs `0..=k_0` with `epsilon_k = 2^-k`, `delta_0 = delta/4` and
/// `delta_k = delta / (4 (k+1)^2)`.
pub fn epoch_schedule(target_epsilon: f64, delta: f64) -> Result<Vec<EpochSpec>> {
    check_open_unit("delta", delta)?;
    let k0 = final_epoch(target_epsilon)?;
    Ok((0..=k0)
        .map(|k| {
            let kk = (k + 1) as f64;
            EpochSpec {
                k,
                epsilon: epoch_epsilon(k),
                delta: delta / (4.0 * kk * kk),
            }
        })
        .collect())
}

fn ceil_to_u64(v: f64) -> Result<u64> {
    let c = v.ceil();
    if !(c.is_finite() && c < u64::MAX as f64) {
        return Err(Error::domain(format!("sample size {v} is not representable")));
    }
    Ok(c as u64)
}

/// Number of in-region triples used to train the difference classifier:
/// `ceil(scale (64*1024 p/eps)(d' ln(512*1024 p/eps) + ln(72/delta)))`, at least 1.
pub fn diff_classifier_sample_size(
    p_hat: f64,
    epsilon: f64,
    d_prime: u32,
    delta: f64,
    scale: f64,
) -> Result<u64> {
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(Error::domain(format!("p_hat must lie in (0,1], got {p_hat}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if d_prime == 0 {
        return Err(Error::domain("d_prime must be at least 1"));
    }
    check_open_unit("delta", delta)?;
    check_scale(scale)?;
    let r = p_hat / epsilon;
    let m = scale
        * (64.0 * 1024.0 * r)
        * (d_prime as f64 * (512.0 * 1024.0 * r).ln() + (72.0 / delta).ln());
    Ok(ceil_to_u64(m)?.max(1))
}

/// Size of the fully labeled initial sample:
/// `ceil(scale * 64*1024^2 (2d ln(512*1024^2) + ln(96/delta)))`.
pub fn initial_sample_size(delta: f64, d: u32, scale: f64) -> Result<u64> {
    check_open_unit("delta", delta)?;
    check_scale(scale)?;
    if d == 0 {
        return Err(Error::domain("d must be at least 1"));
    }
    let k2 = 1024.0 * 1024.0;
    let n = scale * 64.0 * k2 * (2.0 * d as f64 * (512.0 * k2).ln() + (96.0 / delta).ln());
    Ok(ceil_to_u64(n)?.max(1))
}
