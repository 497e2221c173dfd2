//! Gaussian-mechanism releases of per-user sufficient statistics.
//!
//! User `i` holding `(x, y)` releases `x xᵀ + E₁` and `x y + E₂` once. `E₁` is
//! symmetric: its upper triangle, diagonal included, is drawn i.i.d. and
//! mirrored, so the released matrix is bit-exactly symmetric.
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linkfn::LinkFunction;
use crate::math::{l1_norm, ln, sqrt};
use crate::{Error, Result};

/// Relative slack allowed on the declared bounds to absorb rounding.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Generalized linear model with loss `Φ`.
    Glm,
    /// Single-index non-linear regression with link `f`.
    Nlr,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Glm => "glm",
            Mode::Nlr => "nlr",
        }
    }
}

/// `(ε, δ)`. An infinite `ε` disables the noise entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || epsilon.is_infinite() || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidPrivacy { epsilon, delta });
        }
        Ok(Self { epsilon, delta })
    }

    /// `δ = 1/n`.
    pub fn with_default_delta(epsilon: f64, n: usize) -> Result<Self> {
        if epsilon.is_infinite() && epsilon > 0.0 {
            return Ok(Self::disabled());
        }
        Self::new(epsilon, 1.0 / n.max(2) as f64)
    }

    /// The `ε = ∞` mode: reports carry no noise at all.
    pub fn disabled() -> Self {
        Self { epsilon: f64::INFINITY, delta: 0.0 }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_disabled(&self) -> bool {
        self.epsilon.is_infinite()
    }

    /// The privacy guarantee for the Gaussian releases is stated for
    /// `ε < 1`; larger values are accepted but flagged.
    pub fn outside_guarantee(&self) -> bool {
        !self.is_disabled() && self.epsilon >= 1.0
    }
}

/// Declared bounds on the private records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataBounds {
    /// Radius of the ℓ1 ball that contains every feature vector.
    pub r: f64,
    /// `|y| ≤ y_bound`; enforced in GLM mode only.
    pub y_bound: f64,
    /// Bound `C` on the additive response noise of the regression model.
    pub noise_bound: f64,
}

impl DataBounds {
    pub fn glm(r: f64) -> Self {
        Self { r, y_bound: 1.0, noise_bound: 0.0 }
    }

    pub fn nlr(r: f64, noise_bound: f64) -> Self {
        Self { r, y_bound: f64::INFINITY, noise_bound }
    }
}

/// Per-entry variances of the two releases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScales {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub disabled: bool,
}

impl NoiseScales {
    pub fn disabled() -> Self {
        Self { sigma1_sq: 0.0, sigma2_sq: 0.0, disabled: true }
    }
}

/// Computes the Gaussian noise variances for the matrix and vector releases.
///
/// GLM: `σ₁² = 32 r⁴ ln(2.5/δ)/ε²`, `σ₂² = 32 r² ln(2.5/δ)/ε²`.
/// Regression: same `σ₁²`, and `σ₂² = 32 r² (L r + |f(0)| + C)² ln(2.5/δ)/ε²`
/// where `L = sup |f′|`.
pub fn noise_scales(
    mode: Mode,
    bounds: &DataBounds,
    link: &LinkFunction,
    privacy: &PrivacyParams,
) -> Result<NoiseScales> {
    if privacy.is_disabled() {
        return Ok(NoiseScales::disabled());
    }
    let (eps, delta) = (privacy.epsilon, privacy.delta);
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPrivacy { epsilon: eps, delta });
    }
    let r = bounds.r;
    let log_term = ln(2.5 / delta) / (eps * eps);
    let sigma1_sq = 32.0 * r * r * r * r * log_term;
    let sigma2_sq = match mode {
        Mode::Glm => 32.0 * r * r * log_term,
        Mode::Nlr => {
            let l = link
                .bound()
                .finite()
                .ok_or_else(|| Error::UnboundedLink(link.name().into()))?;
            let s = l * r + link.value_at_zero() + bounds.noise_bound;
            32.0 * r * r * s * s * log_term
        }
    };
    Ok(NoiseScales { sigma1_sq, sigma2_sq, disabled: false })
}

/// One user's randomized release.
#[derive(Debug, Clone, PartialEq)]
pub struct UserReport {
    dim: usize,
    /// Row-major `p × p`, `x xᵀ + E₁`.
    pub noisy_gram: Vec<f64>,
    /// `x y + E₂`.
    pub noisy_moment: Vec<f64>,
}

impl UserReport {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.noisy_gram[i * self.dim + j]
    }
}

/// Checks `‖x‖₁ ≤ r` and, in GLM mode, `|y| ≤ 1`.
pub fn validate_record(x: &[f64], y: f64, bounds: &DataBounds, mode: Mode) -> Result<()> {
    let norm = l1_norm(x);
    let limit = bounds.r * (1.0 + BOUND_SLACK);
    if !(norm <= limit) {
        return Err(Error::BoundViolation { what: "l1 norm", value: norm, limit: bounds.r });
    }
    if mode == Mode::Glm {
        let limit = bounds.y_bound * (1.0 + BOUND_SLACK);
        if !(y.abs() <= limit) {
            return Err(Error::BoundViolation { what: "|y|", value: y.abs(), limit: bounds.y_bound });
        }
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("label"));
    }
    Ok(())
}

/// Randomizes one record without checking bounds. The draws are the upper
/// triangle of `E₁` in row-major order followed by `E₂`.
pub fn randomize_unchecked<R: Rng + ?Sized>(
    x: &[f64],
    y: f64,
    scales: &NoiseScales,
    rng: &mut R,
) -> UserReport {
    let p = x.len();
    let mut gram = vec![0.0; p * p];
    let mut moment: Vec<f64> = x.iter().map(|&v| v * y).collect();
    let noisy = !scales.disabled;
    let s1 = sqrt(scales.sigma1_sq);
    let s2 = sqrt(scales.sigma2_sq);
    for i in 0..p {
        for j in i..p {
            let mut v = x[i] * x[j];
            if noisy {
                let e: f64 = rng.sample(StandardNormal);
                v += s1 * e;
            }
            gram[i * p + j] = v;
            gram[j * p + i] = v;
        }
    }
    if noisy {
        for m in moment.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *m += s2 * e;
        }
    }
    UserReport { dim: p, noisy_gram: gram, noisy_moment: moment }
}

/// The per-user release: checks the record against the declared bounds and
/// perturbs it. Out-of-bound records are rejected, never clipped.
#[derive(Debug, Clone, Copy)]
pub struct Randomizer {
    pub mode: Mode,
    pub bounds: DataBounds,
    pub scales: NoiseScales,
}

impl Randomizer {
    pub fn new(mode: Mode, bounds: DataBounds, scales: NoiseScales) -> Self {
        Self { mode, bounds, scales }
    }

    pub fn randomize<R: Rng + ?Sized>(&self, x: &[f64], y: f64, rng: &mut R) -> Result<UserReport> {
        validate_record(x, y, &self.bounds, self.mode)?;
        Ok(randomize_unchecked(x, y, &self.scales, rng))
    }
}
