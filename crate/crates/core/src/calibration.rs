//! Estimation of the rescaling constant `ĉ` from public unlabeled data.
//!
//! With `ỹⱼ = ⟨xⱼ, ŵ_ols⟩` over the public points, `ĉ` is the root of
//!
//! ```text
//! F(c) = (c/m) Σⱼ g(c ỹⱼ) = 1
//! ```
//!
//! where `g` is `Φ″` for a GLM loss and `f′` for a regression link. Newton's
//! method is used when `g′` is available, with bisection as the fallback.
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linkfn::LinkFunction;
use crate::math::dot;
use crate::{Error, Result};

/// Lower end of the bisection bracket.
pub const BRACKET_LO: f64 = 1e-9;
/// Number of times the upper end may be doubled.
pub const MAX_DOUBLINGS: u32 = 40;
/// Newton iterates must stay in `(0, NEWTON_CEILING]`.
pub const NEWTON_CEILING: f64 = 1e9;
const MIN_DENOMINATOR: f64 = 1e-14;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    Bisection,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Newton => "newton",
            Method::Bisection => "bisection",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Newton starting point.
    pub c0: f64,
    /// Tolerance on `|F(ĉ) − 1|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial upper end of the bisection bracket (`c̄`).
    pub bracket_hint: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { c0: 1.0, tol: 1e-10, max_iter: 100, bracket_hint: 6.0 }
    }
}

impl CalibrationOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidOption("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidOption("max_iter must be at least 1"));
        }
        if !(self.bracket_hint > 0.0) {
            return Err(Error::InvalidOption("bracket_hint must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub c_hat: f64,
    pub method: Method,
    pub iterations: usize,
    /// `F(ĉ) − 1`.
    pub residual: f64,
    pub bracket_used: Option<(f64, f64)>,
}

/// `ỹⱼ = ⟨xⱼ, w⟩` for every public point.
pub fn project_public<'a, I>(public_x: I, w_ols: &[f64]) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = Vec::new();
    for x in public_x {
        if x.len() != w_ols.len() {
            return Err(Error::DimensionMismatch { expected: w_ols.len(), got: x.len() });
        }
        out.push(dot(x, w_ols));
    }
    if out.is_empty() {
        return Err(Error::EmptyPublicSet);
    }
    Ok(out)
}

/// `F(c) = (c/m) Σⱼ g(c ỹⱼ)`.
pub fn empirical_f(link: &LinkFunction, ytilde: &[f64], c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let s: f64 = ytilde.iter().map(|&y| link.calib_d(c * y)).sum();
    c * s / ytilde.len() as f64
}

/// `F′(c) = (1/m) Σⱼ [g(c ỹⱼ) + c ỹⱼ g′(c ỹⱼ)]`.
fn empirical_f_prime(link: &LinkFunction, ytilde: &[f64], c: f64) -> Result<f64> {
    let mut s = 0.0;
    for &y in ytilde {
        let z = c * y;
        s += link.calib_d(z) + z * link.calib_dd(z)?;
    }
    Ok(s / ytilde.len() as f64)
}

fn nonempty(ytilde: &[f64]) -> Result<()> {
    if ytilde.is_empty() {
        Err(Error::EmptyPublicSet)
    } else {
        Ok(())
    }
}

/// Newton iteration `c ← c − (F(c) − 1)/F′(c)` from `opts.c0`.
pub fn newton_calibrate(
    link: &LinkFunction,
    ytilde: &[f64],
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    opts.check()?;
    nonempty(ytilde)?;
    if !link.has_calib_dd() {
        return Err(Error::DerivativeUnavailable(link.name().into()));
    }
    let mut c = opts.c0;
    if !(c > 0.0 && c <= NEWTON_CEILING) {
        return Err(Error::NewtonDiverged("initial value outside (0, 1e9]"));
    }
    for iterations in 0..=opts.max_iter {
        let residual = empirical_f(link, ytilde, c) - 1.0;
        if !residual.is_finite() {
            return Err(Error::NewtonDiverged("non-finite residual"));
        }
        if residual.abs() <= opts.tol {
            return Ok(CalibrationResult {
                c_hat: c,
                method: Method::Newton,
                iterations,
                residual,
                bracket_used: None,
            });
        }
        if iterations == opts.max_iter {
            break;
        }
        let d = empirical_f_prime(link, ytilde, c)?;
        if !d.is_finite() || d.abs() < MIN_DENOMINATOR {
            return Err(Error::NewtonDiverged("vanishing derivative"));
        }
        c -= residual / d;
        if !(c > 0.0 && c <= NEWTON_CEILING) {
            return Err(Error::NewtonDiverged("iterate left (0, 1e9]"));
        }
    }
    Err(Error::NewtonDiverged("iteration limit reached"))
}

/// Bisection on the sign of `F(c) − 1` over `[1e-9, hi]`, where `hi` starts
/// at `opts.bracket_hint` and is doubled until `F(hi) ≥ 1`.
pub fn bisection_calibrate(
    link: &LinkFunction,
    ytilde: &[f64],
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    opts.check()?;
    nonempty(ytilde)?;
    let g = |c: f64| empirical_f(link, ytilde, c) - 1.0;
    let mut lo = BRACKET_LO;
    let mut hi = opts.bracket_hint;
    let f_lo = g(lo);
    let mut f_hi = g(hi);
    let mut doublings = 0;
    while !(f_hi >= 0.0) && doublings < MAX_DOUBLINGS {
        hi *= 2.0;
        f_hi = g(hi);
        doublings += 1;
    }
    if !(f_lo < 0.0 && f_hi >= 0.0) {
        if f_lo.abs() <= opts.tol {
            return Ok(CalibrationResult {
                c_hat: lo,
                method: Method::Bisection,
                iterations: 0,
                residual: f_lo,
                bracket_used: Some((lo, hi)),
            });
        }
        return Err(Error::NoRootInBracket { lo, hi, f_lo: f_lo + 1.0, f_hi: f_hi + 1.0 });
    }
    let bracket = (lo, hi);
    if f_hi <= opts.tol {
        return Ok(CalibrationResult {
            c_hat: hi,
            method: Method::Bisection,
            iterations: 0,
            residual: f_hi,
            bracket_used: Some(bracket),
        });
    }
    // Stop once the residual certificate holds and the bracket is narrower
    // than `tol`, so `ĉ` itself is accurate to `tol` as well.
    let mut best: Option<(f64, f64)> = None;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let f_mid = g(mid);
        if f_mid.abs() <= opts.tol {
            best = Some((mid, f_mid));
            if hi - lo <= opts.tol {
                break;
            }
        }
        if f_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    match best {
        Some((c_hat, residual)) => Ok(bisection_result(c_hat, residual, iterations, bracket)),
        None => Err(Error::BisectionStalled { lo, hi, residual: g(lo + 0.5 * (hi - lo)) }),
    }
}

fn bisection_result(c_hat: f64, residual: f64, iterations: usize, bracket: (f64, f64)) -> CalibrationResult {
    CalibrationResult { c_hat, method: Method::Bisection, iterations, residual, bracket_used: Some(bracket) }
}

/// Newton where possible, bisection otherwise or when Newton fails or lands
/// on a non-positive root.
pub fn calibrate(
    link: &LinkFunction,
    ytilde: &[f64],
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    if link.has_calib_dd() {
        match newton_calibrate(link, ytilde, opts) {
            Ok(r) if r.c_hat > 0.0 => return Ok(r),
            Ok(_) | Err(Error::NewtonDiverged(_)) => {}
            Err(e) => return Err(e),
        }
    }
    bisection_calibrate(link, ytilde, opts)
}

/// Calibrates several links against the same projections. Failures are
/// reported per link.
pub fn calibrate_many(
    links: &[LinkFunction],
    ytilde: &[f64],
    opts: &CalibrationOptions,
) -> BTreeMap<String, Result<CalibrationResult>> {
    links
        .iter()
        .map(|l| (String::from(l.name()), calibrate(l, ytilde, opts)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkfn::{Bound, LinkKind};
    use alloc::sync::Arc;
    use alloc::vec;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn opts() -> CalibrationOptions {
        CalibrationOptions::default()
    }

    fn constant(l: f64, with_d3: bool) -> LinkFunction {
        LinkFunction::custom(
            "constant",
            LinkKind::GlmLoss,
            Arc::new(move |z| 0.5 * l * z * z),
            Arc::new(move |z| l * z),
            Arc::new(move |_| l),
            if with_d3 { Some(Arc::new(|_| 0.0)) } else { None },
            Bound::Finite(0.0),
            Bound::Finite(l),
        )
    }

    fn certified(link: &LinkFunction, y: &[f64], r: &CalibrationResult) {
        assert!((empirical_f(link, y, r.c_hat) - 1.0).abs() <= opts().tol);
        assert!(r.residual.abs() <= opts().tol);
        assert!(r.c_hat > 0.0);
    }

    #[test]
    fn projection_examples() {
        let y = project_public([&[0.3, -0.7][..]], &[1.0, 0.0]).unwrap();
        assert_eq!(y, [0.3]);
        let y = project_public([&[0.3, -0.7][..], &[1.0, 2.0][..]], &[0.0, 0.0]).unwrap();
        assert_eq!(y, [0.0, 0.0]);
        assert_eq!(project_public(core::iter::empty(), &[1.0]), Err(Error::EmptyPublicSet));
        assert!(matches!(
            project_public([&[1.0][..]], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn empirical_f_examples() {
        let logistic = LinkFunction::logistic();
        assert_eq!(empirical_f(&logistic, &[0.0; 3], 4.0), 1.0);
        assert_eq!(empirical_f(&logistic, &[0.3, -2.0], 0.0), 0.0);
        assert_eq!(empirical_f(&LinkFunction::cubic(), &[1.0, 2.0], 1.0), 2.5);
    }

    #[test]
    fn newton_examples() {
        let logistic = LinkFunction::logistic();
        let r = newton_calibrate(&logistic, &[0.0; 5], &opts()).unwrap();
        assert_eq!(r.c_hat, 4.0);
        assert_eq!(r.iterations, 1);
        certified(&logistic, &[0.0; 5], &r);

        let cubic = LinkFunction::cubic();
        let r = newton_calibrate(&cubic, &[1.0], &opts()).unwrap();
        assert_eq!(r.c_hat, 1.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn newton_agrees_with_bisection_on_small_projections() {
        let logistic = LinkFunction::logistic();
        let mut rng = SmallRng::seed_from_u64(400);
        let y: Vec<f64> = (0..200).map(|_| rng.sample::<f64, _>(StandardNormal) / 20.0).collect();
        let n = newton_calibrate(&logistic, &y, &opts()).unwrap();
        let b = bisection_calibrate(&logistic, &y, &opts()).unwrap();
        certified(&logistic, &y, &n);
        certified(&logistic, &y, &b);
        assert!((n.c_hat - b.c_hat).abs() < 1e-8);
    }

    #[test]
    fn bisection_examples() {
        let r = bisection_calibrate(&LinkFunction::logistic(), &[0.0; 4], &opts()).unwrap();
        assert!((r.c_hat - 4.0).abs() < 1e-9);
        assert_eq!(r.method, Method::Bisection);
        for l in [0.1, 0.25, 2.0] {
            let link = constant(l, false);
            let r = bisection_calibrate(&link, &[0.2, -0.1], &opts()).unwrap();
            assert!((r.c_hat - 1.0 / l).abs() <= opts().tol, "{l}: {}", r.c_hat);
            certified(&link, &[0.2, -0.1], &r);
        }
        let s = LinkFunction::sigmoid();
        let r = bisection_calibrate(&s, &[0.0; 3], &opts()).unwrap();
        assert!((r.c_hat - 4.0).abs() < 1e-9);
    }

    #[test]
    fn no_root_for_wide_projections() {
        // F saturates near 1/(s√(2π)) < 1 for large spread s.
        let mut rng = SmallRng::seed_from_u64(2);
        let y: Vec<f64> = (0..500).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let e = calibrate(&LinkFunction::logistic(), &y, &opts());
        assert!(matches!(e, Err(Error::NoRootInBracket { .. })), "{e:?}");
    }

    #[test]
    fn composite_dispatch() {
        let logistic = LinkFunction::logistic();
        let r = calibrate(&logistic, &[0.0; 3], &opts()).unwrap();
        assert_eq!((r.c_hat, r.method), (4.0, Method::Newton));
        let r = calibrate(&constant(0.25, false), &[0.1], &opts()).unwrap();
        assert_eq!(r.method, Method::Bisection);
        // A far-off start makes Newton leave the admissible region.
        let far = CalibrationOptions { c0: 1e8, ..opts() };
        let y = vec![0.05; 10];
        let r = calibrate(&logistic, &y, &far).unwrap();
        certified(&logistic, &y, &r);
    }

    #[test]
    fn many_links() {
        let links = [LinkFunction::logistic(), LinkFunction::boosting()];
        let m = calibrate_many(&links, &[0.0; 3], &opts());
        assert_eq!(m["logistic"].as_ref().unwrap().c_hat, 4.0);
        assert_eq!(m["boosting"].as_ref().unwrap().c_hat, 4.0);
        assert!(calibrate_many(&[], &[0.0], &opts()).is_empty());

        let y = [0.03, -0.01, 0.07];
        let alone = calibrate(&links[0], &y, &opts()).unwrap();
        let batch = calibrate_many(&links, &y, &opts());
        assert_eq!(batch["logistic"].as_ref().unwrap(), &alone);
    }

    #[test]
    fn invalid_options() {
        let l = LinkFunction::logistic();
        let bad = CalibrationOptions { tol: 0.0, ..opts() };
        assert!(matches!(calibrate(&l, &[0.0], &bad), Err(Error::InvalidOption(_))));
        assert_eq!(calibrate(&l, &[], &opts()), Err(Error::EmptyPublicSet));
    }
}
