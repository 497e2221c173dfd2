//! Server-side aggregation of user reports and the least-squares solve.
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Add;

use crate::linalg::{solve_symmetric, SquareMatrix};
use crate::mechanism::UserReport;
use crate::{Error, Result};

/// Default relative threshold below which the system is reported as
/// ill-conditioned (`min |λ| < tol · max |λ|`).
pub const DEFAULT_TOL: f64 = 1e-12;

/// Summed (or, after augmentation, averaged) noisy sufficient statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub gram: SquareMatrix,
    pub moment: Vec<f64>,
    pub n_private: usize,
    pub m_public_in_gram: usize,
    /// `false`: raw sums over users. `true`: means (public augmentation).
    pub normalized: bool,
}

impl SufficientStats {
    pub fn zeros(p: usize) -> Self {
        Self {
            gram: SquareMatrix::zeros(p),
            moment: vec![0.0; p],
            n_private: 0,
            m_public_in_gram: 0,
            normalized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    /// Folds one report into the running sums.
    pub fn push(&mut self, report: &UserReport) -> Result<()> {
        if report.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: report.dim() });
        }
        if self.normalized {
            return Err(Error::AlreadyAugmented);
        }
        self.gram.add_assign(&report.noisy_gram);
        self.moment.iter_mut().zip(&report.noisy_moment).for_each(|(a, b)| *a += b);
        self.n_private += 1;
        Ok(())
    }

    /// Entrywise sum of two un-normalized aggregates.
    pub fn merge(mut self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        if self.normalized || other.normalized {
            return Err(Error::AlreadyAugmented);
        }
        self.gram.add_assign(other.gram.as_slice());
        self.moment.iter_mut().zip(&other.moment).for_each(|(a, b)| *a += b);
        self.n_private += other.n_private;
        self.m_public_in_gram += other.m_public_in_gram;
        Ok(self)
    }
}

impl Add<&SufficientStats> for SufficientStats {
    type Output = SufficientStats;

    /// Panics on mismatched dimensions or flags; use [`SufficientStats::merge`]
    /// to get an error instead.
    fn add(self, rhs: &SufficientStats) -> SufficientStats {
        self.merge(rhs).expect("incompatible sufficient statistics")
    }
}

/// Sums a sequence of reports. An empty sequence gives zero statistics of
/// dimension `p`.
pub fn aggregate<'a, I>(p: usize, reports: I) -> Result<SufficientStats>
where
    I: IntoIterator<Item = &'a UserReport>,
{
    let mut stats = SufficientStats::zeros(p);
    for r in reports {
        stats.push(r)?;
    }
    Ok(stats)
}

/// Blends exact public second moments into the noisy Gram matrix:
/// `gram = (Σ noisy + Σ_public x xᵀ)/(n + m)` and `moment = Σ noisy / n`.
pub fn augment_with_public<'a, I>(mut stats: SufficientStats, public_x: I) -> Result<SufficientStats>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if stats.normalized || stats.m_public_in_gram > 0 {
        return Err(Error::AlreadyAugmented);
    }
    if stats.n_private == 0 {
        return Err(Error::NoReports);
    }
    let p = stats.dim();
    let mut m = 0usize;
    for x in public_x {
        if x.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: x.len() });
        }
        stats.gram.add_outer(x);
        m += 1;
    }
    let n = stats.n_private;
    stats.gram.scale(1.0 / (n + m) as f64);
    let inv_n = 1.0 / n as f64;
    stats.moment.iter_mut().for_each(|v| *v *= inv_n);
    stats.m_public_in_gram = m;
    stats.normalized = true;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsResult {
    pub w_ols: Vec<f64>,
    pub min_singular_estimate: f64,
    pub max_singular_estimate: f64,
    pub condition_warning: bool,
}

impl OlsResult {
    pub fn condition_estimate(&self) -> f64 {
        self.max_singular_estimate / self.min_singular_estimate
    }
}

/// Solves `gram · w = moment`. Works for indefinite noisy Gram matrices.
pub fn solve_ols(stats: &SufficientStats, tol: f64) -> Result<OlsResult> {
    let sol = solve_symmetric(&stats.gram, &stats.moment)?;
    if sol.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ols solution"));
    }
    Ok(OlsResult {
        condition_warning: sol.min_singular < tol * sol.max_singular,
        w_ols: sol.x,
        min_singular_estimate: sol.min_singular,
        max_singular_estimate: sol.max_singular,
    })
}
