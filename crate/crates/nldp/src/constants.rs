//! Monte-Carlo checks of the population calibration constants under the
//! Gaussian design `x ~ N(0, I_p/p)`.
use nldp_core::baselines::population_f_mc;
use nldp_core::LinkFunction;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DIMENSION: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCheck {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub threshold: f64,
    pub passed: bool,
}

impl ConstantCheck {
    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.6} (se {:.2e}, {} samples) > {:.6}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.std_error,
            self.samples,
            self.threshold
        )
    }
}

fn w_with_norm(p: usize, norm: f64) -> Vec<f64> {
    vec![norm / (p as f64).sqrt(); p]
}

/// `c · E[g(c⟨x, w⟩)]` at `c = 6` with `‖w‖ = √p/20`, and at `c = 1`
/// with `‖w‖ = √p/4`, for the logistic and boosting losses and the
/// sigmoid link.
pub fn verify_constants(samples: usize, seed: u64) -> nldp_core::Result<Vec<ConstantCheck>> {
    let p = DIMENSION;
    let root_p = (p as f64).sqrt();
    let cases: [(f64, f64, f64, &str); 2] =
        [(root_p / 20.0, 6.0, 1.15, "f(6), |w| = sqrt(p)/20"), (root_p / 4.0, 1.0, 1.0 / 6.0, "E[g], |w| = sqrt(p)/4")];
    let mut out = Vec::new();
    for (k, link) in [LinkFunction::logistic(), LinkFunction::boosting(), LinkFunction::sigmoid()].iter().enumerate() {
        for (j, &(norm, c, threshold, label)) in cases.iter().enumerate() {
            let w = w_with_norm(p, norm);
            let est = population_f_mc(link, &w, c, samples, nldp_core::seed::derive(seed, &[k as u64, j as u64]))?;
            out.push(ConstantCheck {
                name: format!("{} {label}", link.name()),
                value: est.value,
                std_error: est.std_error,
                samples: est.samples,
                threshold,
                passed: est.value > threshold,
            });
        }
    }
    Ok(out)
}
