//! Loss and link functions with closed-form derivatives.
//!
//! A [`LinkFunction`] either plays the role of the GLM cumulant `Φ` (kind
//! [`LinkKind::GlmLoss`]) or of the mean function `f` of a single-index
//! regression `y = f(⟨x, w⟩) + noise` (kind [`LinkKind::NlrLink`]). The
//! calibration step needs `Φ″`/`Φ‴` in the first case and `f′`/`f″` in the
//! second; [`LinkFunction::calib_d`] and [`LinkFunction::calib_dd`] pick the
//! right pair from the kind.
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{exp, ln_1p, powf, sqrt};
use crate::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// `Φ` in the GLM objective `Φ(⟨x, w⟩) − y⟨x, w⟩`.
    GlmLoss,
    /// `f` in `y = f(⟨x, w⟩) + σ`.
    NlrLink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }
}

/// An immutable bundle of a scalar function and its derivatives.
#[derive(Clone)]
pub struct LinkFunction {
    name: String,
    kind: LinkKind,
    value: RealFn,
    d1: RealFn,
    d2: RealFn,
    d3: Option<RealFn>,
    /// Lipschitz constant of the calibration derivative (`Φ″` or `f′`).
    lipschitz: Bound,
    /// `sup |Φ″|` (resp. `sup |f′|`).
    bound: Bound,
    value_at_zero: f64,
}

impl fmt::Debug for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinkFunction")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("has_d3", &self.d3.is_some())
            .field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .field("value_at_zero", &self.value_at_zero)
            .finish()
    }
}

/// Logistic function evaluated without overflow for any finite `z`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `σ(z)(1 − σ(z))`, the logistic density.
#[inline]
fn logistic_d2(z: f64) -> f64 {
    let s = sigmoid(z);
    // 1 − σ(z) = σ(−z), computed directly to keep precision in the tails.
    s * sigmoid(-z)
}

#[inline]
fn logistic_d3(z: f64) -> f64 {
    let s = sigmoid(z);
    let t = sigmoid(-z);
    s * t * (t - s)
}

#[inline]
fn logistic_d4(z: f64) -> f64 {
    let s = sigmoid(z);
    let t = sigmoid(-z);
    s * t * (1.0 - 6.0 * s * t)
}

impl LinkFunction {
    /// `Φ(z) = ln(1 + eᶻ)`.
    pub fn logistic() -> Self {
        Self {
            name: "logistic".into(),
            kind: LinkKind::GlmLoss,
            value: Arc::new(|z: f64| z.max(0.0) + ln_1p(exp(-z.abs()))),
            d1: Arc::new(sigmoid),
            d2: Arc::new(logistic_d2),
            d3: Some(Arc::new(logistic_d3)),
            lipschitz: Bound::Finite(sqrt(3.0) / 18.0),
            bound: Bound::Finite(0.25),
            value_at_zero: core::f64::consts::LN_2,
        }
    }

    /// `Φ(z) = z/2 + √(1 + z²/4)`.
    pub fn boosting() -> Self {
        Self {
            name: "boosting".into(),
            kind: LinkKind::GlmLoss,
            value: Arc::new(|z: f64| z / 2.0 + sqrt(1.0 + z * z / 4.0)),
            d1: Arc::new(|z: f64| 0.5 + z / (4.0 * sqrt(1.0 + z * z / 4.0))),
            d2: Arc::new(|z: f64| 0.25 * powf(1.0 + z * z / 4.0, -1.5)),
            d3: Some(Arc::new(|z: f64| -(3.0 / 16.0) * z * powf(1.0 + z * z / 4.0, -2.5))),
            lipschitz: Bound::Finite(3.0 / 16.0),
            bound: Bound::Finite(0.25),
            value_at_zero: 1.0,
        }
    }

    /// `f(z) = 1/(1 + e⁻ᶻ)` as a regression mean function.
    pub fn sigmoid() -> Self {
        Self {
            name: "sigmoid".into(),
            kind: LinkKind::NlrLink,
            value: Arc::new(sigmoid),
            d1: Arc::new(logistic_d2),
            d2: Arc::new(logistic_d3),
            d3: Some(Arc::new(logistic_d4)),
            lipschitz: Bound::Finite(sqrt(3.0) / 18.0),
            bound: Bound::Finite(0.25),
            value_at_zero: 0.5,
        }
    }

    /// `f(z) = z³/3`. Its derivative is unbounded on ℝ; see
    /// [`LinkFunction::restricted_to`].
    pub fn cubic() -> Self {
        Self {
            name: "cubic".into(),
            kind: LinkKind::NlrLink,
            value: Arc::new(|z: f64| z * z * z / 3.0),
            d1: Arc::new(|z: f64| z * z),
            d2: Arc::new(|z: f64| 2.0 * z),
            d3: Some(Arc::new(|_| 2.0)),
            lipschitz: Bound::Unbounded,
            bound: Bound::Unbounded,
            value_at_zero: 0.0,
        }
    }

    /// A user-defined link. `d3` may be `None` for GLM losses, in which case
    /// calibration falls back to bisection. Bounds are taken as given.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        name: impl Into<String>,
        kind: LinkKind,
        value: RealFn,
        d1: RealFn,
        d2: RealFn,
        d3: Option<RealFn>,
        lipschitz: Bound,
        bound: Bound,
    ) -> Self {
        let value_at_zero = value(0.0).abs();
        Self { name: name.into(), kind, value, d1, d2, d3, lipschitz, bound, value_at_zero }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    pub fn value(&self, z: f64) -> f64 {
        (self.value)(z)
    }

    pub fn d1(&self, z: f64) -> f64 {
        (self.d1)(z)
    }

    pub fn d2(&self, z: f64) -> f64 {
        (self.d2)(z)
    }

    pub fn d3(&self, z: f64) -> Option<f64> {
        self.d3.as_ref().map(|f| f(z))
    }

    pub fn lipschitz(&self) -> Bound {
        self.lipschitz
    }

    pub fn bound(&self) -> Bound {
        self.bound
    }

    /// `|f(0)|`, used by the non-linear regression noise scale.
    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    /// The function whose scaled mean must equal one at `ĉ`: `Φ″` for GLM
    /// losses, `f′` for regression links.
    #[inline]
    pub fn calib_d(&self, z: f64) -> f64 {
        match self.kind {
            LinkKind::GlmLoss => (self.d2)(z),
            LinkKind::NlrLink => (self.d1)(z),
        }
    }

    /// Derivative of [`calib_d`](Self::calib_d): `Φ‴` or `f″`.
    #[inline]
    pub fn calib_dd(&self, z: f64) -> Result<f64> {
        match self.kind {
            LinkKind::GlmLoss => self
                .d3
                .as_ref()
                .map(|f| f(z))
                .ok_or_else(|| Error::DerivativeUnavailable(self.name.clone())),
            LinkKind::NlrLink => Ok((self.d2)(z)),
        }
    }

    pub fn has_calib_dd(&self) -> bool {
        matches!(self.kind, LinkKind::NlrLink) || self.d3.is_some()
    }

    /// Copy of this link whose unbounded constants are replaced by their
    /// values on `[-radius, radius]`, estimated on a uniform grid of 4001
    /// points (exact for links whose derivatives are monotone in `|z|`).
    pub fn restricted_to(&self, radius: f64) -> Self {
        let grid: Vec<f64> = (0..=4000).map(|k| -radius + 2.0 * radius * k as f64 / 4000.0).collect();
        let mut out = self.clone();
        if out.bound == Bound::Unbounded {
            let sup = grid.iter().map(|&z| self.calib_d(z).abs()).fold(0.0, f64::max);
            out.bound = Bound::Finite(sup);
        }
        if out.lipschitz == Bound::Unbounded && self.has_calib_dd() {
            let sup = grid
                .iter()
                .filter_map(|&z| self.calib_dd(z).ok())
                .map(f64::abs)
                .fold(0.0, f64::max);
            out.lipschitz = Bound::Finite(sup);
        }
        out
    }
}

/// Name → link lookup. Populated once at startup, read-only afterwards.
#[derive(Debug, Clone)]
pub struct Registry {
    links: BTreeMap<String, LinkFunction>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn builtin() -> Self {
        let mut links = BTreeMap::new();
        for link in [
            LinkFunction::logistic(),
            LinkFunction::boosting(),
            LinkFunction::sigmoid(),
            LinkFunction::cubic(),
        ] {
            links.insert(link.name.clone(), link);
        }
        Self { links }
    }

    /// Adds or replaces a link under its own name.
    pub fn register(&mut self, link: LinkFunction) {
        self.links.insert(link.name.to_string(), link);
    }

    pub fn get(&self, name: &str) -> Result<LinkFunction> {
        self.links
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownLink(name.into()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.links.keys().map(String::as_str)
    }
}

/// Looks up one of the built-in links.
pub fn get_link(name: &str) -> Result<LinkFunction> {
    match name {
        "logistic" => Ok(LinkFunction::logistic()),
        "boosting" => Ok(LinkFunction::boosting()),
        "sigmoid" => Ok(LinkFunction::sigmoid()),
        "cubic" => Ok(LinkFunction::cubic()),
        other => Err(Error::UnknownLink(other.into())),
    }
}
