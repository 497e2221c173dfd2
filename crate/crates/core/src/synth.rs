//! Synthetic designs and label models.
//!
//! Rows are generated in fixed-size blocks, each from its own derived
//! stream, so the output does not depend on how the work is scheduled.
use alloc::vec;
use alloc::vec::Vec;

use rand::rngs::SmallRng;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::linkfn::{sigmoid, LinkFunction};
use crate::math::{l1_norm, sqrt};
use crate::mechanism::DataBounds;
use crate::pipeline::{Dataset, Features, Provenance};
use crate::seed::{rng_for, stream};

pub const BLOCK_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// Entries `±1/p` with probability 1/2 each, so every row has `‖x‖₁ = 1`.
    Bernoulli,
    /// Entries i.i.d. `N(0, 1/p)`.
    Gaussian,
}

#[derive(Debug, Clone)]
pub enum LabelModel {
    /// `P(y = 1 | x) = 1/(1 + e^{−⟨x, w*⟩})`.
    Logistic,
    /// `y = f(⟨x, w*⟩) + σ`, `σ ~ Uniform[−C, C]`.
    Nonlinear { link: LinkFunction, noise_bound: f64 },
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub design: Design,
    pub p: usize,
    pub w_star: Vec<f64>,
    pub label_model: LabelModel,
    pub n_private: usize,
    pub m_public: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// `w* = (1, …, 1)/√p`.
    pub fn uniform_w_star(p: usize) -> Vec<f64> {
        vec![1.0 / sqrt(p as f64); p]
    }
}

fn fill_rows(design: Design, p: usize, rows: usize, seed: u64, tag: u64) -> Features {
    let mut data = vec![0.0; rows * p];
    for (block, chunk) in data.chunks_mut(BLOCK_ROWS * p).enumerate() {
        let mut rng = rng_for(seed, &[tag, block as u64]);
        match design {
            Design::Bernoulli => fill_bernoulli(chunk, p, &mut rng),
            Design::Gaussian => {
                let s = sqrt(1.0 / p as f64);
                for v in chunk.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = s * z;
                }
            }
        }
    }
    Features::new(p, data).expect("p > 0")
}

fn fill_bernoulli(chunk: &mut [f64], p: usize, rng: &mut SmallRng) {
    let mag = 1.0 / p as f64;
    let mut bits = 0u64;
    let mut left = 0u32;
    for v in chunk.iter_mut() {
        if left == 0 {
            bits = rng.next_u64();
            left = 64;
        }
        *v = if bits & 1 == 1 { mag } else { -mag };
        bits >>= 1;
        left -= 1;
    }
}

/// Private and public feature matrices drawn from the same design.
pub fn gen_design(spec: &SynthSpec) -> (Features, Features) {
    assert!(spec.p >= 1, "dimension must be positive");
    let private = fill_rows(spec.design, spec.p, spec.n_private, spec.seed, stream::PRIVATE_DESIGN);
    let public = fill_rows(spec.design, spec.p, spec.m_public, spec.seed, stream::PUBLIC_DESIGN);
    (private, public)
}

/// Labels for `features` under `spec.label_model`.
pub fn gen_labels(features: &Features, spec: &SynthSpec) -> Vec<f64> {
    assert_eq!(features.dim(), spec.w_star.len(), "w* dimension");
    let mut out = Vec::with_capacity(features.len());
    let rows: Vec<&[f64]> = features.rows().collect();
    for (block, chunk) in rows.chunks(BLOCK_ROWS).enumerate() {
        let mut rng = rng_for(spec.seed, &[stream::LABELS, block as u64]);
        for x in chunk {
            let z: f64 = x.iter().zip(&spec.w_star).map(|(a, b)| a * b).sum();
            let y = match &spec.label_model {
                LabelModel::Logistic => {
                    let u: f64 = rng.random();
                    if u < sigmoid(z) {
                        1.0
                    } else {
                        0.0
                    }
                }
                LabelModel::Nonlinear { link, noise_bound } => {
                    let mean = link.value(z);
                    if *noise_bound > 0.0 {
                        mean + rng.random_range(-*noise_bound..=*noise_bound)
                    } else {
                        mean
                    }
                }
            };
            out.push(y);
        }
    }
    out
}

/// Labeled private set and unlabeled public set.
///
/// Bernoulli rows have `‖x‖₁ = 1`, so the declared radius is 1. Gaussian
/// rows are unbounded; their declared radius is the largest ℓ1 norm among
/// the private rows, which is only meaningful with noise disabled.
pub fn synthesize(spec: &SynthSpec) -> (Dataset, Dataset) {
    let (private_x, public_x) = gen_design(spec);
    let labels = gen_labels(&private_x, spec);
    let (r, provenance) = match spec.design {
        Design::Bernoulli => (1.0, Provenance::SyntheticBernoulli),
        Design::Gaussian => {
            let r = private_x.rows().map(l1_norm).fold(0.0, f64::max);
            (if r > 0.0 { r } else { 1.0 }, Provenance::SyntheticGaussian)
        }
    };
    let bounds = match &spec.label_model {
        LabelModel::Logistic => DataBounds::glm(r),
        LabelModel::Nonlinear { noise_bound, .. } => DataBounds::nlr(r, *noise_bound),
    };
    let private = Dataset { features: private_x, labels: Some(labels), bounds, provenance };
    let public = Dataset { features: public_x, labels: None, bounds, provenance };
    (private, public)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(design: Design, n: usize, model: LabelModel, w_star: Vec<f64>) -> SynthSpec {
        SynthSpec { design, p: 10, w_star, label_model: model, n_private: n, m_public: 7, seed: 17 }
    }

    #[test]
    fn bernoulli_rows_on_the_unit_sphere() {
        let s = spec(Design::Bernoulli, 5000, LabelModel::Logistic, SynthSpec::uniform_w_star(10));
        let (x, public) = gen_design(&s);
        assert_eq!(public.len(), 7);
        for row in x.rows().chain(public.rows()) {
            assert!(row.iter().all(|&v| v == 0.1 || v == -0.1));
            assert!((l1_norm(row) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bernoulli_coordinates_are_centered() {
        let s = spec(Design::Bernoulli, 100_000, LabelModel::Logistic, SynthSpec::uniform_w_star(10));
        let (x, _) = gen_design(&s);
        let n = x.len() as f64;
        let se = 0.1 / n.sqrt();
        for k in 0..10 {
            let mean: f64 = x.rows().map(|r| r[k]).sum::<f64>() / n;
            assert!(mean.abs() < 5.0 * se, "coordinate {k}: {mean}");
        }
    }

    #[test]
    fn gaussian_coordinate_variance() {
        let s = spec(Design::Gaussian, 100_000, LabelModel::Logistic, SynthSpec::uniform_w_star(10));
        let (x, _) = gen_design(&s);
        let n = x.len() as f64;
        for k in 0..10 {
            let var: f64 = x.rows().map(|r| r[k] * r[k]).sum::<f64>() / n;
            assert!((var / 0.1 - 1.0).abs() < 0.05, "coordinate {k}: {var}");
        }
    }

    #[test]
    fn logistic_labels_with_zero_signal_are_fair() {
        let s = spec(Design::Bernoulli, 100_000, LabelModel::Logistic, vec![0.0; 10]);
        let (x, _) = gen_design(&s);
        let y = gen_labels(&x, &s);
        assert!(y.iter().all(|&v| v == 0.0 || v == 1.0));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 0.5).abs() < 5.0 * (0.25 / y.len() as f64).sqrt());
    }

    #[test]
    fn nonlinear_labels() {
        let w = SynthSpec::uniform_w_star(10);
        let cubic = LinkFunction::cubic();
        let exact = spec(
            Design::Bernoulli,
            1000,
            LabelModel::Nonlinear { link: cubic.clone(), noise_bound: 0.0 },
            w.clone(),
        );
        let (x, _) = gen_design(&exact);
        let y = gen_labels(&x, &exact);
        for (row, v) in x.rows().zip(&y) {
            let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert_eq!(*v, z * z * z / 3.0);
        }
        let noisy = SynthSpec { label_model: LabelModel::Nonlinear { link: cubic, noise_bound: 0.001 }, ..exact };
        let y = gen_labels(&x, &noisy);
        let mut max_dev: f64 = 0.0;
        for (row, v) in x.rows().zip(&y) {
            let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            max_dev = max_dev.max((v - z * z * z / 3.0).abs());
        }
        assert!(max_dev <= 0.001 && max_dev > 0.0);
    }

    #[test]
    fn synthesize_is_deterministic_and_bounded() {
        let s = spec(Design::Gaussian, 300, LabelModel::Logistic, SynthSpec::uniform_w_star(10));
        let (a, pa) = synthesize(&s);
        let (b, _) = synthesize(&s);
        assert_eq!(a, b);
        assert!(pa.labels.is_none());
        for row in a.features.rows() {
            assert!(l1_norm(row) <= a.bounds.r);
        }
    }
}
