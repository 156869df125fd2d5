//! Synthetic worlds: the unlabeled distribution, the strong oracle `O`, the
//! weak labeler `W` and the ledger that counts queries.
//!
//! Label laws depend on a point only through its law coordinate (the value
//! on the line, the polar angle on the disc) and are piecewise constant in
//! it, which makes exact error computations possible.
//!
//! Randomness is split into named streams derived from the world seed, so
//! that one subroutine drawing more or fewer samples never shifts the draws
//! seen by another.

pub mod geometry;
pub mod instances;
pub mod law;
pub mod rounds;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypotheses::{draw_label, EmpiricalError, Label, LabeledExample};

pub use geometry::WorldSpace;
pub use instances::{build_case_study, Family, InstanceSpec, WeakMode, WeakModeKind};
pub use law::StepLaw;
pub use rounds::{draw_line_round, draw_round_pointwise, LabelRule, RoundDraw};

/// Named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Unlabeled,
    Initial,
    BiasCoin { epoch: u32 },
    DiffTriples { epoch: u32 },
    Adaptive { epoch: u32, round: u32 },
    StrongLabels,
    WeakLabels,
    MixtureCoin,
    Shadow,
    Test,
    Diagnostics { index: u32 },
    Theta,
    Alpha,
}

impl Stream {
    fn id(self) -> u64 {
        let tag = |t: u64| t << 56;
        match self {
            Stream::Unlabeled => tag(1),
            Stream::Initial => tag(2),
            Stream::BiasCoin { epoch } => tag(3) | epoch as u64,
            Stream::DiffTriples { epoch } => tag(4) | epoch as u64,
            Stream::Adaptive { epoch, round } => tag(5) | (epoch as u64) << 24 | round as u64,
            Stream::StrongLabels => tag(6),
            Stream::WeakLabels => tag(7),
            Stream::MixtureCoin => tag(8),
            Stream::Shadow => tag(9),
            Stream::Test => tag(10),
            Stream::Diagnostics { index } => tag(11) | index as u64,
            Stream::Theta => tag(12),
            Stream::Alpha => tag(13),
        }
    }
}

/// Generator behind every stream.
pub type StreamRng = Xoshiro256PlusPlus;

/// A seeded generator for one named stream.
pub fn stream_rng(seed: u64, stream: Stream) -> StreamRng {
    // Hash the seed before mixing in the stream id so that nearby seeds and
    // ids do not collide.
    let mut h = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^= h >> 31;
    StreamRng::seed_from_u64(h ^ stream.id())
}

/// Queries made during one epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochQueries {
    pub k: u32,
    /// Strong queries spent training the difference classifier.
    pub m_k1: u64,
    /// Strong queries spent by adaptive subsampling.
    pub m_k2: u64,
    pub weak: u64,
}

/// Which part of a run is currently spending queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Phase {
    #[default]
    Unattributed,
    Initial,
    DiffTraining(u32),
    Adaptive(u32),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub strong_queries: u64,
    pub weak_queries: u64,
    pub unlabeled_draws: u64,
    /// Strong queries labeling the initial sample.
    pub n0: u64,
    pub per_epoch: Vec<EpochQueries>,
    /// Queries made outside any run phase, for example by direct API calls.
    pub unattributed_strong: u64,
    pub unattributed_weak: u64,
    /// Strong queries answered from the weak law by a mixture oracle.
    pub mixture_weak_routed: u64,
}

impl QueryLedger {
    fn epoch(&mut self, k: u32) -> &mut EpochQueries {
        match self.per_epoch.iter().position(|e| e.k == k) {
            Some(i) => &mut self.per_epoch[i],
            None => {
                self.per_epoch.push(EpochQueries { k, ..Default::default() });
                self.per_epoch.last_mut().expect("just pushed")
            }
        }
    }

    fn record_strong(&mut self, phase: Phase) {
        self.strong_queries += 1;
        match phase {
            Phase::Unattributed => self.unattributed_strong += 1,
            Phase::Initial => self.n0 += 1,
            Phase::DiffTraining(k) => self.epoch(k).m_k1 += 1,
            Phase::Adaptive(k) => self.epoch(k).m_k2 += 1,
        }
    }

    /// `strong` and `weak` queries made at once in `phase`.
    fn record_many(&mut self, phase: Phase, strong: u64, weak: u64) {
        self.strong_queries += strong;
        self.weak_queries += weak;
        match phase {
            Phase::Unattributed => {
                self.unattributed_strong += strong;
                self.unattributed_weak += weak;
            }
            Phase::Initial => {
                self.n0 += strong;
                self.unattributed_weak += weak;
            }
            Phase::DiffTraining(k) => {
                let e = self.epoch(k);
                e.m_k1 += strong;
                e.weak += weak;
            }
            Phase::Adaptive(k) => {
                let e = self.epoch(k);
                e.m_k2 += strong;
                e.weak += weak;
            }
        }
    }

    fn record_weak(&mut self, phase: Phase) {
        self.weak_queries += 1;
        match phase {
            Phase::Unattributed | Phase::Initial => self.unattributed_weak += 1,
            Phase::DiffTraining(k) | Phase::Adaptive(k) => self.epoch(k).weak += 1,
        }
    }

    /// Strong queries equal the initial sample plus every epoch bucket plus
    /// unattributed calls; likewise for weak queries.
    pub fn is_conserved(&self) -> bool {
        let strong: u64 = self.per_epoch.iter().map(|e| e.m_k1 + e.m_k2).sum();
        let weak: u64 = self.per_epoch.iter().map(|e| e.weak).sum();
        self.strong_queries == self.n0 + strong + self.unattributed_strong
            && self.weak_queries == weak + self.unattributed_weak
    }
}

/// One simulated learning problem.
#[derive(Debug, Clone)]
pub struct World<S: WorldSpace> {
    seed: u64,
    strong: StepLaw,
    weak: StepLaw,
    /// Law of the oracle the learner actually queries: `(1 - beta) O + beta W`.
    target: StepLaw,
    beta: f64,
    h_star: S::Hypothesis,
    nu: f64,
    ledger: QueryLedger,
    phase: Phase,
    unlabeled: StreamRng,
    strong_rng: StreamRng,
    weak_rng: StreamRng,
    mix_rng: StreamRng,
    shadow_rng: StreamRng,
    shadow_enabled: bool,
    unlabeled_cap: u64,
}

impl<S: WorldSpace> World<S> {
    /// A world with the given label laws; `h*` is the best classifier under
    /// the strong law.
    pub fn from_laws(strong: StepLaw, weak: StepLaw, seed: u64) -> Result<Self> {
        let (h_star, _) = S::best_in_class(&strong);
        Self::with_target(strong, weak, h_star, seed)
    }

    /// A world whose designated best classifier is `h_star`.
    pub fn with_target(strong: StepLaw, weak: StepLaw, h_star: S::Hypothesis, seed: u64) -> Result<Self> {
        let (lo, hi) = S::LAW_DOMAIN;
        for law in [&strong, &weak] {
            if law.lo() != lo || law.hi() != hi {
                return Err(Error::domain(format!("law domain must be [{lo}, {hi})")));
            }
        }
        let nu = S::exact_error(&h_star, &strong);
        Ok(Self {
            seed,
            target: strong.clone(),
            strong,
            weak,
            beta: 0.0,
            h_star,
            nu,
            ledger: QueryLedger::default(),
            phase: Phase::Unattributed,
            unlabeled: stream_rng(seed, Stream::Unlabeled),
            strong_rng: stream_rng(seed, Stream::StrongLabels),
            weak_rng: stream_rng(seed, Stream::WeakLabels),
            mix_rng: stream_rng(seed, Stream::MixtureCoin),
            shadow_rng: stream_rng(seed, Stream::Shadow),
            shadow_enabled: true,
            unlabeled_cap: u64::MAX,
        })
    }

    /// A fresh world whose strong oracle answers each query from `W`'s law
    /// with probability `beta` and from `O`'s law otherwise. Its `h*` and
    /// `nu` refer to the mixed law.
    pub fn make_mixture_oracle(&self, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!("beta must lie in [0,1], got {beta}")));
        }
        let target = self.strong.combine(&self.weak, |o, w| (1.0 - beta) * o + beta * w)?;
        let (h_star, nu) = if beta == 0.0 {
            (self.h_star, self.nu)
        } else {
            S::best_in_class(&target)
        };
        let mut out = Self::with_target(self.strong.clone(), self.weak.clone(), self.h_star, self.seed)?;
        out.target = target;
        out.beta = beta;
        out.h_star = h_star;
        out.nu = nu;
        out.shadow_enabled = self.shadow_enabled;
        out.unlabeled_cap = self.unlabeled_cap;
        Ok(out)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Best classifier in the class under the queried oracle's law.
    pub fn h_star(&self) -> S::Hypothesis {
        self.h_star
    }

    /// `err_D(h*)`, exact.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn strong_law(&self) -> &StepLaw {
        &self.strong
    }

    pub fn weak_law(&self) -> &StepLaw {
        &self.weak
    }

    /// Law of the oracle the learner queries (the strong law unless mixed).
    pub fn target_law(&self) -> &StepLaw {
        &self.target
    }

    /// Exact error of `h` under the queried oracle's law.
    pub fn exact_error(&self, h: &S::Hypothesis) -> f64 {
        S::exact_error(h, &self.target)
    }

    /// Exact mass of points where the weak and strong laws differ.
    pub fn exact_weak_difference_mass(&self) -> f64 {
        let (lo, hi) = S::LAW_DOMAIN;
        let diff = self
            .strong
            .combine(&self.weak, |o, w| if o == w { 0.0 } else { 1.0 })
            .expect("same domain");
        diff.integrate(lo, hi, |p| p) / (hi - lo)
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn take_ledger(&mut self) -> QueryLedger {
        std::mem::take(&mut self.ledger)
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    /// Turns shadow labels off (benchmark mode) or back on.
    pub fn set_shadow_enabled(&mut self, enabled: bool) {
        self.shadow_enabled = enabled;
    }

    pub fn shadow_enabled(&self) -> bool {
        self.shadow_enabled
    }

    /// Hard cap on unlabeled draws; exceeding it aborts with `BudgetExhausted`.
    pub fn set_unlabeled_cap(&mut self, cap: u64) {
        self.unlabeled_cap = cap;
    }

    pub fn stream(&self, stream: Stream) -> StreamRng {
        stream_rng(self.seed, stream)
    }

    pub(crate) fn charge_unlabeled(&mut self, n: u64) -> Result<()> {
        let total = self.ledger.unlabeled_draws.saturating_add(n);
        if total > self.unlabeled_cap {
            return Err(Error::BudgetExhausted { draws: self.ledger.unlabeled_draws, cap: self.unlabeled_cap });
        }
        self.ledger.unlabeled_draws = total;
        Ok(())
    }

    /// `n` independent draws from the world's own unlabeled stream.
    pub fn sample_unlabeled(&mut self, n: usize) -> Result<Vec<S::Point>> {
        self.charge_unlabeled(n as u64)?;
        Ok((0..n).map(|_| S::sample_point(&mut self.unlabeled)).collect())
    }

    /// A batch of `n` draws from the given generator, in unspecified order.
    pub fn draw_batch(&mut self, rng: &mut StreamRng, n: u64) -> Result<Vec<S::Point>> {
        self.charge_unlabeled(n)?;
        let n = usize::try_from(n).map_err(|_| Error::domain("batch too large"))?;
        Ok(S::sample_batch(rng, n))
    }

    /// A batch of `n` draws labeled by `label`, stored in `out`, with the
    /// ERM of the labeled batch.
    pub fn draw_labeled(
        &mut self,
        rng: &mut StreamRng,
        n: u64,
        out: &mut Vec<LabeledExample<S::Point>>,
        mut label: impl FnMut(&mut Self, &S::Point) -> Label,
    ) -> Result<(S::Hypothesis, EmpiricalError)> {
        self.charge_unlabeled(n)?;
        let n = usize::try_from(n).map_err(|_| Error::domain("batch too large"))?;
        S::draw_labeled_erm(rng, n, out, |x| label(self, x))
    }

    pub fn draw_point(&mut self, rng: &mut StreamRng) -> Result<S::Point> {
        self.charge_unlabeled(1)?;
        Ok(S::sample_point(rng))
    }

    pub fn strong_p_plus(&self, x: &S::Point) -> f64 {
        self.strong.p_plus(S::law_coordinate(x))
    }

    pub fn weak_p_plus(&self, x: &S::Point) -> f64 {
        self.weak.p_plus(S::law_coordinate(x))
    }

    pub fn target_p_plus(&self, x: &S::Point) -> f64 {
        self.target.p_plus(S::law_coordinate(x))
    }

    /// Charges queries answered in bulk, `routed` of the strong ones by the
    /// weak law of a mixture oracle.
    pub(crate) fn record_queries(&mut self, strong: u64, weak: u64, routed: u64) {
        self.ledger.record_many(self.phase, strong, weak);
        self.ledger.mixture_weak_routed += routed;
    }

    /// Asks the strong oracle; counts one strong query.
    pub fn query_strong(&mut self, x: &S::Point) -> Label {
        self.ledger.record_strong(self.phase);
        let c = S::law_coordinate(x);
        let use_weak = match self.beta {
            b if b <= 0.0 => false,
            b if b >= 1.0 => true,
            b => self.mix_rng.random::<f64>() < b,
        };
        if use_weak {
            self.ledger.mixture_weak_routed += 1;
            draw_label(&mut self.strong_rng, self.weak.p_plus(c))
        } else {
            draw_label(&mut self.strong_rng, self.strong.p_plus(c))
        }
    }

    /// Asks the weak labeler; counts one weak query.
    pub fn query_weak(&mut self, x: &S::Point) -> Label {
        self.ledger.record_weak(self.phase);
        draw_label(&mut self.weak_rng, self.weak.p_plus(S::law_coordinate(x)))
    }

    fn check_shadow(&self) -> Result<()> {
        if self.shadow_enabled {
            Ok(())
        } else {
            Err(Error::Unavailable("shadow labels"))
        }
    }

    /// A label from the queried oracle's law that is not counted.
    pub fn shadow_strong_label(&mut self, x: &S::Point) -> Result<Label> {
        self.check_shadow()?;
        let p = self.target_p_plus(x);
        Ok(draw_label(&mut self.shadow_rng, p))
    }

    /// A weak label that is not counted.
    pub fn shadow_weak_label(&mut self, x: &S::Point) -> Result<Label> {
        self.check_shadow()?;
        let p = self.weak_p_plus(x);
        Ok(draw_label(&mut self.shadow_rng, p))
    }

    /// Shadow labels drawn with a caller-supplied generator, for estimators
    /// that must not disturb the world's own shadow stream.
    pub fn shadow_label_with(&self, rng: &mut StreamRng, x: &S::Point) -> Result<Label> {
        self.check_shadow()?;
        Ok(draw_label(rng, self.target_p_plus(x)))
    }

    pub fn shadow_weak_label_with(&self, rng: &mut StreamRng, x: &S::Point) -> Result<Label> {
        self.check_shadow()?;
        Ok(draw_label(rng, self.weak_p_plus(x)))
    }
}
