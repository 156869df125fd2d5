//! Instance generators.
//!
//! Both families use a deterministic strong oracle that agrees with `h*`
//! except on flip regions of total mass `nu`, split evenly between a region
//! next to the decision boundary and one far from it.
//!
//! Threshold family (law coordinate `x` in `[0,1]`): `h*` is the threshold
//! at 0.5 with orientation `+1`. With `w = nu/2`, the near flip region is
//! `[0.5 + 1.5w, 0.5 + 2.5w)` and the far one is `[0.1 - w/2, 0.1 + w/2)`.
//! `boundary-disagree(g)` flips the weak label law on `[0.5 - g/2, 0.5 + g/2)`.
//!
//! Halfspace family (law coordinate: polar angle): `h*` has normal angle 0,
//! so its boundary rays point at `pi/2` and `3pi/2`. With `omega = pi nu`
//! and `gamma = omega/4`, the near wedge covers polar angles
//! `[pi/2 - gamma - omega, pi/2 - gamma)` and the far wedge
//! `[pi - omega/2, pi + omega/2)`; each has mass `nu/2`. `boundary-disagree(g)`
//! flips the weak law on the double wedge of line angles
//! `[pi/2 - gamma - omega, pi/2 - gamma - omega + pi g)`, which has mass `g`,
//! contains the near wedge and reaches the boundary. That needs
//! `pi g >= gamma + omega`, i.e. `g >= 1.25 nu`; `g = 0` means `W = O`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::WorldSpace;
use super::law::StepLaw;
use super::World;
use crate::error::{Error, Result};
use crate::hypotheses::{Disc, Halfspace, Label, Line, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "threshold-1d")]
    Threshold1d,
    #[serde(rename = "halfspace-2d")]
    Halfspace2d,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Threshold1d => "threshold-1d",
            Family::Halfspace2d => "halfspace-2d",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold-1d" => Ok(Family::Threshold1d),
            "halfspace-2d" => Ok(Family::Halfspace2d),
            other => Err(Error::domain(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakModeKind {
    #[default]
    Identical,
    BoundaryDisagree,
    Adversarial,
    RandomFlip,
}

impl fmt::Display for WeakModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeakModeKind::Identical => "identical",
            WeakModeKind::BoundaryDisagree => "boundary-disagree",
            WeakModeKind::Adversarial => "adversarial",
            WeakModeKind::RandomFlip => "random-flip",
        })
    }
}

impl FromStr for WeakModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identical" => Ok(WeakModeKind::Identical),
            "boundary-disagree" => Ok(WeakModeKind::BoundaryDisagree),
            "adversarial" => Ok(WeakModeKind::Adversarial),
            "random-flip" => Ok(WeakModeKind::RandomFlip),
            other => Err(Error::domain(format!("unknown weak mode {other:?}"))),
        }
    }
}

/// How the weak labeler relates to the strong oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeakMode {
    /// Same conditional law as `O`.
    Identical,
    /// Opposite of `O` on a boundary region of mass `g`, equal elsewhere.
    BoundaryDisagree { g: f64 },
    /// Opposite of `O` everywhere.
    Adversarial,
    /// `O`'s label flipped independently with probability `p`.
    RandomFlip { p: f64 },
}

fn default_family() -> Family {
    Family::Threshold1d
}

/// A serializable description of a world. `g` is read only by
/// `boundary-disagree`, `p` only by `random-flip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub weak_mode: WeakModeKind,
    #[serde(default)]
    pub g: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            family: Family::Threshold1d,
            nu: 0.0,
            weak_mode: WeakModeKind::Identical,
            g: 0.0,
            p: 0.0,
            beta: 0.0,
            seed: 0,
        }
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0,1], got {v}")))
    }
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.nu) {
            return Err(Error::domain(format!("nu must lie in [0, 0.5), got {}", self.nu)));
        }
        unit("g", self.g)?;
        unit("p", self.p)?;
        unit("beta", self.beta)?;
        Ok(())
    }

    pub fn weak_mode(&self) -> WeakMode {
        match self.weak_mode {
            WeakModeKind::Identical => WeakMode::Identical,
            WeakModeKind::BoundaryDisagree => WeakMode::BoundaryDisagree { g: self.g },
            WeakModeKind::Adversarial => WeakMode::Adversarial,
            WeakModeKind::RandomFlip => WeakMode::RandomFlip { p: self.p },
        }
    }

    /// Overrides one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("{key} expects a number, got {value:?}")))
        };
        match key {
            "family" => self.family = value.parse()?,
            "weak_mode" => self.weak_mode = value.parse()?,
            "nu" => self.nu = real()?,
            "g" => self.g = real()?,
            "p" => self.p = real()?,
            "beta" => self.beta = real()?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::domain(format!("seed expects an integer, got {value:?}")))?
            }
            other => return Err(Error::domain(format!("unknown instance field {other:?}"))),
        }
        Ok(())
    }
}

/// Spaces with an instance generator.
pub trait Instances: WorldSpace {
    const FAMILY: Family;

    /// Deterministic strong law with flip regions of mass `nu`, and `h*`.
    fn strong_law(nu: f64) -> Result<(StepLaw, Self::Hypothesis)>;

    /// The strong law flipped on the boundary region of mass `g`.
    fn boundary_disagree(strong: &StepLaw, nu: f64, g: f64) -> Result<StepLaw>;
}

fn set_to(v: f64) -> impl Fn(f64) -> f64 + Copy {
    move |_| v
}

fn flip(p: f64) -> f64 {
    1.0 - p
}

impl Instances for Line {
    const FAMILY: Family = Family::Threshold1d;

    fn strong_law(nu: f64) -> Result<(StepLaw, Threshold)> {
        let mut law = StepLaw::constant(0.0, 1.0, 0.0)?.map_range(0.5, 1.0, set_to(1.0))?;
        if nu > 0.0 {
            let w = nu / 2.0;
            if 0.5 + 2.5 * w > 1.0 || 0.1 - w / 2.0 < 0.0 {
                return Err(Error::InfeasibleGeometry(format!("flip regions for nu = {nu} leave [0,1]")));
            }
            law = law
                .map_range(0.5 + 1.5 * w, 0.5 + 2.5 * w, set_to(0.0))?
                .map_range(0.1 - w / 2.0, 0.1 + w / 2.0, set_to(1.0))?;
        }
        Ok((law, Threshold { threshold: 0.5, orientation: Label::Pos }))
    }

    fn boundary_disagree(strong: &StepLaw, _nu: f64, g: f64) -> Result<StepLaw> {
        strong.map_range(0.5 - g / 2.0, 0.5 + g / 2.0, flip)
    }
}

impl Instances for Disc {
    const FAMILY: Family = Family::Halfspace2d;

    fn strong_law(nu: f64) -> Result<(StepLaw, Halfspace)> {
        let mut law = StepLaw::constant(0.0, TAU, 0.0)?.map_cyclic(-FRAC_PI_2, PI, set_to(1.0))?;
        if nu > 0.0 {
            let omega = PI * nu;
            let gamma = omega / 4.0;
            law = law
                .map_cyclic(FRAC_PI_2 - gamma - omega, omega, set_to(0.0))?
                .map_cyclic(PI - omega / 2.0, omega, set_to(1.0))?;
        }
        Ok((law, Halfspace { angle: 0.0 }))
    }

    fn boundary_disagree(strong: &StepLaw, nu: f64, g: f64) -> Result<StepLaw> {
        let omega = PI * nu;
        let gamma = omega / 4.0;
        let width = PI * g;
        if width < gamma + omega {
            return Err(Error::InfeasibleGeometry(format!(
                "a difference region of mass g = {g} cannot contain the boundary wedge for nu = {nu} (needs g >= {})",
                1.25 * nu
            )));
        }
        let start = FRAC_PI_2 - gamma - omega;
        strong.map_cyclic(start, width, flip)?.map_cyclic(start + PI, width, flip)
    }
}

/// Builds the world described by `spec`, seeded with `seed`.
pub fn build_world<S: Instances>(spec: &InstanceSpec, seed: u64) -> Result<World<S>> {
    spec.validate()?;
    if spec.family != S::FAMILY {
        return Err(Error::domain(format!("spec family {} does not match {}", spec.family, S::FAMILY)));
    }
    let (strong, h_star) = S::strong_law(spec.nu)?;
    let (_, best) = S::best_in_class(&strong);
    let err = S::exact_error(&h_star, &strong);
    if err > best + 1e-12 || (err - spec.nu).abs() > 1e-9 {
        return Err(Error::InfeasibleGeometry(format!(
            "nu = {} is not realized with h* optimal (err(h*) = {err}, best = {best})",
            spec.nu
        )));
    }
    let (lo, hi) = S::LAW_DOMAIN;
    let weak = match spec.weak_mode() {
        WeakMode::Identical => strong.clone(),
        WeakMode::BoundaryDisagree { g: 0.0 } => strong.clone(),
        WeakMode::BoundaryDisagree { g } => S::boundary_disagree(&strong, spec.nu, g)?,
        WeakMode::Adversarial => strong.map_range(lo, hi, flip)?,
        WeakMode::RandomFlip { p } => strong.map_range(lo, hi, |q| (1.0 - p) * q + p * (1.0 - q))?,
    };
    let world = World::with_target(strong, weak, h_star, seed)?;
    if spec.beta > 0.0 {
        world.make_mixture_oracle(spec.beta)
    } else {
        Ok(world)
    }
}

/// The disc world with deterministic `O` of best-in-class error `nu` and a
/// weak labeler that differs from `O` only on a double wedge of mass `g`
/// around the boundary-adjacent flip wedge.
pub fn build_case_study(nu: f64, g: f64, seed: u64) -> Result<World<Disc>> {
    let spec = InstanceSpec {
        family: Family::Halfspace2d,
        nu,
        weak_mode: WeakModeKind::BoundaryDisagree,
        g,
        p: 0.0,
        beta: 0.0,
        seed,
    };
    build_world(&spec, seed)
}
