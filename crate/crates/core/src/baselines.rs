//! Non-private references: exact OLS, a gradient-descent GLM fit, and
//! Monte-Carlo estimates of the population calibration function.
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{solve_symmetric, SquareMatrix};
use crate::linkfn::{LinkFunction, LinkKind};
use crate::math::{dot, sqrt};
use crate::pipeline::Features;
use crate::seed::{rng_for, stream};
use crate::{Error, Result};

/// Least squares on the raw data, `(XᵀX)⁻¹ Xᵀy`.
pub fn exact_ols(features: &Features, labels: &[f64]) -> Result<Vec<f64>> {
    let p = features.dim();
    if labels.len() != features.len() {
        return Err(Error::DimensionMismatch { expected: features.len(), got: labels.len() });
    }
    if features.len() < p {
        return Err(Error::DimensionMismatch { expected: p, got: features.len() });
    }
    let mut gram = SquareMatrix::zeros(p);
    let mut moment = vec![0.0; p];
    for (x, &y) in features.rows().zip(labels) {
        gram.add_outer(x);
        moment.iter_mut().zip(x).for_each(|(m, v)| *m += v * y);
    }
    Ok(solve_symmetric(&gram, &moment)?.x)
}

/// `(1/n) Σ [Φ(⟨xᵢ, w⟩) − yᵢ⟨xᵢ, w⟩]`.
pub fn glm_objective(features: &Features, labels: &[f64], link: &LinkFunction, w: &[f64]) -> f64 {
    let n = features.len() as f64;
    features
        .rows()
        .zip(labels)
        .map(|(x, &y)| {
            let z = dot(x, w);
            link.value(z) - y * z
        })
        .sum::<f64>()
        / n
}

/// `(1/n) Σ (Φ′(⟨xᵢ, w⟩) − yᵢ) xᵢ`.
pub fn glm_gradient(features: &Features, labels: &[f64], link: &LinkFunction, w: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; features.dim()];
    for (x, &y) in features.rows().zip(labels) {
        let r = link.d1(dot(x, w)) - y;
        g.iter_mut().zip(x).for_each(|(gi, xi)| *gi += r * xi);
    }
    let n = features.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

/// Full-batch gradient descent on the GLM objective from `w = 0` with a
/// fixed step size.
pub fn nonprivate_glm_fit(
    features: &Features,
    labels: &[f64],
    link: &LinkFunction,
    iters: usize,
    step: f64,
) -> Result<Vec<f64>> {
    if link.kind() != LinkKind::GlmLoss {
        return Err(Error::KindMismatch);
    }
    if labels.len() != features.len() {
        return Err(Error::DimensionMismatch { expected: features.len(), got: labels.len() });
    }
    let mut w = vec![0.0; features.dim()];
    for _ in 0..iters {
        let g = glm_gradient(features, labels, link, &w);
        w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= step * gi);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient descent iterate"));
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub const MIN_MC_SAMPLES: usize = 10_000;
const MC_CHUNK: usize = 1 << 16;

/// Monte-Carlo mean of `h(Z)` for `Z ~ N(0, s²)`, chunked over derived
/// streams.
fn gaussian_mc<F: Fn(f64) -> f64>(s: f64, samples: usize, seed: u64, h: F) -> Result<McEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidOption("at least 10^4 Monte-Carlo samples are required"));
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut done = 0;
    let mut chunk = 0u64;
    while done < samples {
        let len = MC_CHUNK.min(samples - done);
        let mut rng = rng_for(seed, &[stream::MONTE_CARLO, chunk]);
        let (mut cs, mut css) = (0.0, 0.0);
        for _ in 0..len {
            let z: f64 = rng.sample(StandardNormal);
            let v = h(s * z);
            cs += v;
            css += v * v;
        }
        sum += cs;
        sum_sq += css;
        done += len;
        chunk += 1;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(McEstimate { value: mean, std_error: sqrt(var / n), samples })
}

/// Standard deviation of `⟨x, w⟩` for `x ~ N(0, I_p/p)`.
fn projection_scale(w: &[f64]) -> f64 {
    sqrt(dot(w, w) / w.len() as f64)
}

/// `c · E[g(c⟨x, w⟩)]` for `x ~ N(0, I_p/p)`, simulated through the exact
/// one-dimensional law `⟨x, w⟩ ~ N(0, ‖w‖²/p)`.
pub fn population_f_mc(link: &LinkFunction, w: &[f64], c: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    if c == 0.0 {
        if samples < MIN_MC_SAMPLES {
            return Err(Error::InvalidOption("at least 10^4 Monte-Carlo samples are required"));
        }
        return Ok(McEstimate { value: 0.0, std_error: 0.0, samples });
    }
    gaussian_mc(projection_scale(w), samples, seed, |z| c * link.calib_d(c * z))
}

/// Derivative in `c` of [`population_f_mc`]'s target:
/// `E[g(cz) + cz·g′(cz)]`.
pub fn population_f_prime_mc(
    link: &LinkFunction,
    w: &[f64],
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !link.has_calib_dd() {
        return Err(Error::DerivativeUnavailable(link.name().into()));
    }
    gaussian_mc(projection_scale(w), samples, seed, |z| {
        let u = c * z;
        link.calib_d(u) + u * link.calib_dd(u).unwrap_or(0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    fn random_problem(seed: u64, n: usize, p: usize) -> (Features, Vec<f64>) {
        let mut rng = SmallRng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0) / p as f64).collect();
        let labels = (0..n).map(|_| f64::from(rng.random::<bool>())).collect();
        (Features::new(p, data).unwrap(), labels)
    }

    #[test]
    fn exact_ols_examples() {
        let x = Features::from_rows(2, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let w = exact_ols(&x, &[3.0, -1.0]).unwrap();
        assert!((w[0] - 3.0).abs() < 1e-15 && (w[1] + 1.0).abs() < 1e-15);

        let (x, y) = random_problem(1, 30, 3);
        let w = exact_ols(&x, &y).unwrap();
        let doubled = Features::new(3, [x.as_slice(), x.as_slice()].concat()).unwrap();
        let w2 = exact_ols(&doubled, &[y.clone(), y].concat()).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        assert!(exact_ols(&x, &[1.0]).is_err());
    }

    #[test]
    fn first_gradient_step_matches_loop() {
        let (x, y) = random_problem(2, 50, 4);
        let logistic = LinkFunction::logistic();
        let w = nonprivate_glm_fit(&x, &y, &logistic, 1, 1.0).unwrap();
        let mut g = [0.0; 4];
        for i in 0..50 {
            for k in 0..4 {
                g[k] += (0.5 - y[i]) * x.row(i)[k];
            }
        }
        for k in 0..4 {
            assert!((w[k] + g[k] / 50.0).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_data_has_zero_gradient_at_origin() {
        let (x, y) = random_problem(3, 20, 3);
        let logistic = LinkFunction::logistic();
        let neg: Vec<f64> = x.as_slice().iter().map(|v| -v).collect();
        let flipped: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();

        let xs = Features::new(3, [x.as_slice(), &neg].concat()).unwrap();
        let g = glm_gradient(&xs, &[y.clone(), y.clone()].concat(), &logistic, &[0.0; 3]);
        assert!(g.iter().all(|&v| v.abs() < 1e-17), "{g:?}");

        let xs = Features::new(3, [x.as_slice(), x.as_slice()].concat()).unwrap();
        let g = glm_gradient(&xs, &[y.clone(), flipped.clone()].concat(), &logistic, &[0.0; 3]);
        assert!(g.iter().all(|&v| v.abs() < 1e-17), "{g:?}");

        // (−x, 1−y) mirrors the logistic model and doubles the gradient instead.
        let xs = Features::new(3, [x.as_slice(), &neg].concat()).unwrap();
        let g2 = glm_gradient(&xs, &[y.clone(), flipped].concat(), &logistic, &[0.0; 3]);
        let g1 = glm_gradient(&x, &y, &logistic, &[0.0; 3]);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn objective_never_increases() {
        let logistic = LinkFunction::logistic();
        for seed in 0..10 {
            let (x, y) = random_problem(100 + seed, 80, 3);
            let mut w = vec![0.0; 3];
            let mut last = glm_objective(&x, &y, &logistic, &w);
            for _ in 0..50 {
                let g = glm_gradient(&x, &y, &logistic, &w);
                w.iter_mut().zip(&g).for_each(|(a, b)| *a -= 0.5 * b);
                let now = glm_objective(&x, &y, &logistic, &w);
                assert!(now <= last + 1e-15);
                last = now;
            }
        }
        assert!(nonprivate_glm_fit(&Features::new(1, vec![0.5]).unwrap(), &[1.0], &LinkFunction::cubic(), 1, 0.1)
            .is_err());
    }

    #[test]
    fn divergent_step_is_reported() {
        let x = Features::from_rows(1, &[[1.0], [1.0]]).unwrap();
        let quad = LinkFunction::custom(
            "quad",
            LinkKind::GlmLoss,
            alloc::sync::Arc::new(|z| z * z * 1e300),
            alloc::sync::Arc::new(|z| 2e300 * z),
            alloc::sync::Arc::new(|_| 2e300),
            None,
            crate::Bound::Unbounded,
            crate::Bound::Unbounded,
        );
        assert_eq!(nonprivate_glm_fit(&x, &[1.0, 1.0], &quad, 10, 1.0), Err(Error::NonFinite("gradient descent iterate")));
    }

    #[test]
    fn population_f_examples() {
        let p = 100;
        let logistic = LinkFunction::logistic();
        let w_ols = vec![1.0 / 20.0; p]; // ‖w‖₂ = √p/20
        let f6 = population_f_mc(&logistic, &w_ols, 6.0, 1_000_000, 1).unwrap();
        assert!(f6.value > 1.15 && f6.std_error > 0.0);
        let w_star = vec![0.25; p]; // ‖w‖₂ = √p/4
        let e = population_f_mc(&logistic, &w_star, 1.0, 1_000_000, 2).unwrap();
        assert!(e.value > 1.0 / 6.0);
        let z = population_f_mc(&logistic, &w_star, 0.0, 10_000, 2).unwrap();
        assert_eq!((z.value, z.std_error), (0.0, 0.0));
        assert!(population_f_mc(&logistic, &w_star, 1.0, 100, 2).is_err());
    }

    #[test]
    fn standard_error_shrinks_like_root_n() {
        let logistic = LinkFunction::logistic();
        let w = vec![0.5; 10];
        for seed in 0..5 {
            let a = population_f_mc(&logistic, &w, 3.0, 40_000, seed).unwrap();
            let b = population_f_mc(&logistic, &w, 3.0, 160_000, seed + 100).unwrap();
            let ratio = b.std_error / a.std_error;
            assert!((0.4..=0.6).contains(&ratio), "{ratio}");
        }
    }
}
