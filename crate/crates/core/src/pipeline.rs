//! End-to-end estimation.
//!
//! The private side runs exactly once per user: each record is randomized
//! into a [`UserReport`] and folded into running sums, after which the raw
//! record is no longer needed. Everything downstream of
//! [`server_estimate`] sees only the aggregated reports and the public
//! features.
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::calibration::{calibrate, project_public, CalibrationOptions, CalibrationResult};
use crate::linkfn::{LinkFunction, LinkKind};
use crate::math::dot;
use crate::mechanism::{noise_scales, DataBounds, Mode, NoiseScales, PrivacyParams, Randomizer, UserReport};
use crate::regression::{augment_with_public, solve_ols, OlsResult, SufficientStats, DEFAULT_TOL};
use crate::seed::user_rng;
use crate::{Error, Result};

/// Row-major `n × p` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    p: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn new(p: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 || data.len() % p != 0 {
            return Err(Error::DimensionMismatch { expected: p, got: data.len() });
        }
        Ok(Self { p, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(p: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * p);
        for r in rows {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { p, data })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SyntheticBernoulli,
    SyntheticGaussian,
    Ingested,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Features,
    /// Absent for the public pool.
    pub labels: Option<Vec<f64>>,
    pub bounds: DataBounds,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Blend exact public second moments into the Gram matrix.
    pub augment: bool,
    pub calibration: CalibrationOptions,
    /// Master seed; user `i` draws from a stream derived from `(seed, i)`.
    pub seed: u64,
    pub ols_tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { augment: false, calibration: CalibrationOptions::default(), seed: 0, ols_tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Randomize,
    Aggregate,
    Augment,
    Solve,
    Project,
    Calibrate,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Setup => "setup",
            Stage::Randomize => "randomize",
            Stage::Aggregate => "aggregate",
            Stage::Augment => "augment",
            Stage::Solve => "solve",
            Stage::Project => "project",
            Stage::Calibrate => "calibrate",
        }
    }
}

/// An [`Error`] tagged with the pipeline stage that raised it.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineError {
    pub stage: Stage,
    pub error: Error,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage.as_str(), self.error)
    }
}

impl core::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.error)
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> core::result::Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> core::result::Result<T, PipelineError> {
        self.map_err(|error| PipelineError { stage, error })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    pub w_ols: Vec<f64>,
    pub c_hat: f64,
    /// `ĉ · ŵ_ols`.
    pub w_final: Vec<f64>,
    pub calibration: CalibrationResult,
    pub ols: OlsResult,
    pub mode: Mode,
    pub augmented: bool,
    /// Set when `ε ≥ 1`, outside the range the privacy guarantee is stated for.
    pub privacy_warning: bool,
}

fn expected_kind(mode: Mode) -> LinkKind {
    match mode {
        Mode::Glm => LinkKind::GlmLoss,
        Mode::Nlr => LinkKind::NlrLink,
    }
}

/// Client side: randomizes every private record and folds the reports into
/// sufficient statistics.
pub fn collect_reports(
    private: &Dataset,
    randomizer: &Randomizer,
    seed: u64,
) -> core::result::Result<SufficientStats, PipelineError> {
    let labels = private.labels.as_ref().ok_or(Error::MissingLabels).at(Stage::Setup)?;
    if labels.len() != private.len() {
        return Err(Error::DimensionMismatch { expected: private.len(), got: labels.len() }).at(Stage::Setup);
    }
    let mut stats = SufficientStats::zeros(private.dim());
    for (i, (x, &y)) in private.features.rows().zip(labels).enumerate() {
        let mut rng = user_rng(seed, i as u64);
        let report = randomizer.randomize(x, y, &mut rng).at(Stage::Randomize)?;
        stats.push(&report).at(Stage::Aggregate)?;
    }
    Ok(stats)
}

/// Server side over already-collected reports.
pub fn estimate_from_reports<'a, I>(
    mode: Mode,
    p: usize,
    reports: I,
    public: &Features,
    link: &LinkFunction,
    opts: &EstimateOptions,
) -> core::result::Result<EstimatorOutput, PipelineError>
where
    I: IntoIterator<Item = &'a UserReport>,
{
    let stats = crate::regression::aggregate(p, reports).at(Stage::Aggregate)?;
    server_estimate(mode, stats, public, link, opts)
}

/// Shared least-squares stage: optional augmentation, then the solve.
fn server_ols(
    stats: SufficientStats,
    public: &Features,
    opts: &EstimateOptions,
) -> core::result::Result<OlsResult, PipelineError> {
    let stats = if opts.augment {
        augment_with_public(stats, public.rows()).at(Stage::Augment)?
    } else {
        stats
    };
    solve_ols(&stats, opts.ols_tol).at(Stage::Solve)
}

fn finish(
    mode: Mode,
    ols: OlsResult,
    calibration: CalibrationResult,
    augmented: bool,
) -> EstimatorOutput {
    let c_hat = calibration.c_hat;
    EstimatorOutput {
        w_final: ols.w_ols.iter().map(|w| c_hat * w).collect(),
        w_ols: ols.w_ols.clone(),
        c_hat,
        calibration,
        ols,
        mode,
        augmented,
        privacy_warning: false,
    }
}

/// Server side: OLS on the aggregated reports, projection of the public
/// points, calibration, and rescaling.
pub fn server_estimate(
    mode: Mode,
    stats: SufficientStats,
    public: &Features,
    link: &LinkFunction,
    opts: &EstimateOptions,
) -> core::result::Result<EstimatorOutput, PipelineError> {
    if link.kind() != expected_kind(mode) {
        return Err(Error::KindMismatch).at(Stage::Setup);
    }
    let ols = server_ols(stats, public, opts)?;
    let ytilde = project_public(public.rows(), &ols.w_ols).at(Stage::Project)?;
    let cal = calibrate(link, &ytilde, &opts.calibration).at(Stage::Calibrate)?;
    Ok(finish(mode, ols, cal, opts.augment))
}

/// Runs the full protocol: noise calibration, per-user release,
/// aggregation, optional public augmentation, OLS, projection of the public
/// points, and calibration of `ĉ`.
pub fn estimate(
    mode: Mode,
    private: &Dataset,
    public: &Dataset,
    link: &LinkFunction,
    privacy: &PrivacyParams,
    opts: &EstimateOptions,
) -> core::result::Result<EstimatorOutput, PipelineError> {
    if link.kind() != expected_kind(mode) {
        return Err(Error::KindMismatch).at(Stage::Setup);
    }
    if public.dim() != private.dim() {
        return Err(Error::DimensionMismatch { expected: private.dim(), got: public.dim() }).at(Stage::Setup);
    }
    let scales = noise_scales(mode, &private.bounds, link, privacy).at(Stage::Setup)?;
    let randomizer = Randomizer::new(mode, private.bounds, scales);
    let stats = collect_reports(private, &randomizer, opts.seed)?;
    let mut out = server_estimate(mode, stats, &public.features, link, opts)?;
    out.privacy_warning = privacy.outside_guarantee();
    Ok(out)
}

/// One OLS fit shared by several links.
#[derive(Debug, Clone)]
pub struct MultiEstimate {
    pub ols: OlsResult,
    pub outputs: BTreeMap<String, Result<EstimatorOutput>>,
}

/// Estimates with several links from one private release. In regression
/// mode the vector release uses the largest noise scale demanded by any
/// of the links.
pub fn estimate_many(
    mode: Mode,
    private: &Dataset,
    public: &Dataset,
    links: &[LinkFunction],
    privacy: &PrivacyParams,
    opts: &EstimateOptions,
) -> core::result::Result<MultiEstimate, PipelineError> {
    if links.iter().any(|l| l.kind() != expected_kind(mode)) {
        return Err(Error::KindMismatch).at(Stage::Setup);
    }
    let mut scales = NoiseScales::disabled();
    for (k, link) in links.iter().enumerate() {
        let s = noise_scales(mode, &private.bounds, link, privacy).at(Stage::Setup)?;
        if k == 0 || s.sigma2_sq > scales.sigma2_sq {
            scales = s;
        }
    }
    let randomizer = Randomizer::new(mode, private.bounds, scales);
    let stats = collect_reports(private, &randomizer, opts.seed)?;
    let ols = server_ols(stats, &public.features, opts)?;
    let ytilde = project_public(public.features.rows(), &ols.w_ols).at(Stage::Project)?;
    let outputs = links
        .iter()
        .map(|link| {
            let out = calibrate(link, &ytilde, &opts.calibration).map(|cal| {
                let mut o = finish(mode, ols.clone(), cal, opts.augment);
                o.privacy_warning = privacy.outside_guarantee();
                o
            });
            (String::from(link.name()), out)
        })
        .collect();
    Ok(MultiEstimate { ols, outputs })
}

/// Class prediction: `1` iff `⟨x, w⟩ ≥ 0`, i.e. `σ(⟨x, w⟩) ≥ 1/2`. Ties go
/// to the positive class.
pub fn predict_binary(w: &[f64], x: &[f64]) -> Result<u8> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: x.len() });
    }
    Ok(u8::from(dot(w, x) >= 0.0))
}
