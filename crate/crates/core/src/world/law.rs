use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A conditional label law `P(y = +1 | c)` that is piecewise constant in a
/// scalar coordinate `c` ranging over `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLaw {
    /// `breaks[0] = lo < breaks[1] < ... < breaks[m] = hi`.
    breaks: Vec<f64>,
    /// `p_plus[i]` holds on `[breaks[i], breaks[i + 1])`.
    p_plus: Vec<f64>,
}

impl StepLaw {
    pub fn constant(lo: f64, hi: f64, p: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::domain(format!("empty law domain [{lo}, {hi})")));
        }
        check_probability(p)?;
        Ok(Self { breaks: vec![lo, hi], p_plus: vec![p] })
    }

    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breaks.last().expect("at least two breaks")
    }

    /// `(start, end, p)` for every piece, in order.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.p_plus
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.breaks[i], self.breaks[i + 1], p))
    }

    /// Interior breakpoints and both domain ends.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn p_plus(&self, c: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b <= c);
        let i = i.clamp(1, self.p_plus.len());
        self.p_plus[i - 1]
    }

    /// Whether every piece is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.p_plus.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    fn with_break(&mut self, c: f64) {
        if c <= self.lo() || c >= self.hi() {
            return;
        }
        let i = self.breaks.partition_point(|&b| b < c);
        if self.breaks[i] == c {
            return;
        }
        self.breaks.insert(i, c);
        let p = self.p_plus[i - 1];
        self.p_plus.insert(i, p);
    }

    /// Applies `f` to the law on `[a, b)` intersected with the domain.
    pub fn map_range(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> Result<StepLaw> {
        let mut out = self.clone();
        let a = a.max(self.lo());
        let b = b.min(self.hi());
        if a < b {
            out.with_break(a);
            out.with_break(b);
            for i in 0..out.p_plus.len() {
                if out.breaks[i] >= a && out.breaks[i + 1] <= b {
                    out.p_plus[i] = f(out.p_plus[i]);
                }
            }
        }
        out.check()?;
        out.merge_equal();
        Ok(out)
    }

    /// Applies `f` on the cyclic range from `a` of length `len`, wrapping at
    /// the end of the domain.
    pub fn map_cyclic(&self, a: f64, len: f64, f: impl Fn(f64) -> f64 + Copy) -> Result<StepLaw> {
        let width = self.hi() - self.lo();
        if len >= width {
            return self.map_range(self.lo(), self.hi(), f);
        }
        let a = self.lo() + (a - self.lo()).rem_euclid(width);
        let b = a + len;
        if b <= self.hi() {
            self.map_range(a, b, f)
        } else {
            self.map_range(a, self.hi(), f)?
                .map_range(self.lo(), self.lo() + (b - self.hi()), f)
        }
    }

    /// Pointwise combination of two laws on the same domain.
    pub fn combine(&self, other: &StepLaw, f: impl Fn(f64, f64) -> f64) -> Result<StepLaw> {
        if self.lo() != other.lo() || self.hi() != other.hi() {
            return Err(Error::domain("laws live on different domains"));
        }
        let mut breaks: Vec<f64> = self.breaks.iter().chain(&other.breaks).copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let p_plus = breaks
            .windows(2)
            .map(|w| f(self.p_plus(w[0]), other.p_plus(w[0])))
            .collect();
        let mut out = StepLaw { breaks, p_plus };
        out.check()?;
        out.merge_equal();
        Ok(out)
    }

    /// `int_a^b g(P(+|c)) dc` over `[a, b]` intersected with the domain.
    pub fn integrate(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (s, e, p) in self.pieces() {
            let lo = s.max(a);
            let hi = e.min(b);
            if hi > lo {
                total += (hi - lo) * g(p);
            }
        }
        total
    }

    fn check(&self) -> Result<()> {
        for &p in &self.p_plus {
            check_probability(p)?;
        }
        Ok(())
    }

    fn merge_equal(&mut self) {
        let mut breaks = vec![self.breaks[0]];
        let mut p_plus: Vec<f64> = Vec::new();
        for (i, &p) in self.p_plus.iter().enumerate() {
            if p_plus.last() == Some(&p) {
                *breaks.last_mut().expect("nonempty") = self.breaks[i + 1];
            } else {
                p_plus.push(p);
                breaks.push(self.breaks[i + 1]);
            }
        }
        self.breaks = breaks;
        self.p_plus = p_plus;
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("probability out of range: {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_and_lookup() {
        let law = StepLaw::constant(0.0, 1.0, 0.0).unwrap().map_range(0.5, 1.0, |_| 1.0).unwrap();
        assert_eq!(law.p_plus(0.2), 0.0);
        assert_eq!(law.p_plus(0.5), 1.0);
        assert_eq!(law.p_plus(1.0), 1.0);
        assert_eq!(law.pieces().count(), 2);
        let flipped = law.map_range(0.4, 0.6, |p| 1.0 - p).unwrap();
        assert_eq!(flipped.p_plus(0.45), 1.0);
        assert_eq!(flipped.p_plus(0.55), 0.0);
        assert_eq!(flipped.pieces().count(), 4);
        assert!(flipped.is_deterministic());
        assert!((flipped.integrate(0.0, 1.0, |p| p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cyclic_map_wraps() {
        let law = StepLaw::constant(0.0, 4.0, 0.0).unwrap().map_cyclic(3.5, 1.0, |_| 1.0).unwrap();
        assert_eq!(law.p_plus(3.7), 1.0);
        assert_eq!(law.p_plus(0.2), 1.0);
        assert_eq!(law.p_plus(0.6), 0.0);
        assert!((law.integrate(0.0, 4.0, |p| p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn combine_mixes() {
        let a = StepLaw::constant(0.0, 1.0, 1.0).unwrap().map_range(0.0, 0.5, |_| 0.0).unwrap();
        let b = StepLaw::constant(0.0, 1.0, 0.2).unwrap();
        let m = a.combine(&b, |x, y| 0.5 * x + 0.5 * y).unwrap();
        assert!((m.p_plus(0.1) - 0.1).abs() < 1e-15);
        assert!((m.p_plus(0.9) - 0.6).abs() < 1e-15);
        assert!(StepLaw::constant(0.0, 1.0, 1.5).is_err());
    }
}
