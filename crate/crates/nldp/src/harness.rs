//! Trial execution and sweeps.
//!
//! Every trial derives its seed from the master seed, a hash of the cell
//! and the trial index, so results do not depend on scheduling. Rows are
//! sorted before they are written.
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nldp_core::calibration::{empirical_f, project_public};
use nldp_core::mechanism::{DataBounds, Mode, PrivacyParams};
use nldp_core::pipeline::{estimate, predict_binary, Dataset, EstimateOptions, EstimatorOutput, PipelineError};
use nldp_core::seed::derive;
use nldp_core::synth::{gen_design, gen_labels, synthesize, Design, LabelModel, SynthSpec};
use nldp_core::{Bound, LinkFunction};
use rand::seq::index::sample;
use rayon::prelude::*;

use crate::config::{Cell, DesignSource, Epsilon, ExperimentConfig, Metric};
use crate::error::{Error, Result};
use crate::ingest::read_dataset;

pub const RAW_HEADER: [&str; 14] = [
    "mode",
    "link",
    "design",
    "p",
    "n",
    "m",
    "epsilon",
    "delta",
    "trial",
    "metric",
    "value",
    "calib_method",
    "condition_warning",
    "stage_error",
];

pub const AGG_HEADER: [&str; 13] =
    ["mode", "link", "design", "p", "n", "m", "epsilon", "delta", "metric", "trials", "failures", "mean", "se"];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub mode: Mode,
    pub link: String,
    pub design: &'static str,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    pub epsilon: Epsilon,
    pub delta: Option<f64>,
    pub trial: usize,
    pub metric: Metric,
    /// `None` exactly when `stage_error` is set.
    pub value: Option<f64>,
    pub calib_method: Option<&'static str>,
    pub condition_warning: Option<bool>,
    pub stage_error: Option<String>,
}

impl MetricsRow {
    pub fn fields(&self) -> [String; 14] {
        [
            self.mode.as_str().to_string(),
            self.link.clone(),
            self.design.to_string(),
            self.p.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.epsilon.to_string(),
            self.delta.map_or_else(|| "-".to_string(), |d| d.to_string()),
            self.trial.to_string(),
            self.metric.as_str().to_string(),
            self.value.map_or_else(String::new, |v| v.to_string()),
            self.calib_method.unwrap_or("").to_string(),
            self.condition_warning.map_or_else(String::new, |w| w.to_string()),
            self.stage_error.clone().unwrap_or_default(),
        ]
    }
}

/// Rows of one trial plus the independently recomputed calibration
/// residual `|f̂(ĉ) − 1|`, when the trial got that far.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub rows: Vec<MetricsRow>,
    pub calibration_residual: Option<f64>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.stage_error.is_some())
    }
}

/// Everything an estimator sees in one trial.
pub struct TrialData {
    pub private: Dataset,
    pub public: Dataset,
    /// Held-out labeled rows used for `accuracy`.
    pub test: Option<Dataset>,
    pub w_star: Option<Vec<f64>>,
    /// Link with constants resolved for the data radius.
    pub link: LinkFunction,
    pub privacy: PrivacyParams,
    pub options: EstimateOptions,
}

struct RealData {
    p: usize,
    train: Dataset,
    test: Dataset,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub struct Sweep {
    pub config: ExperimentConfig,
    real: Option<RealData>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub cells: usize,
    pub trials: usize,
    pub failed_trials: usize,
    /// Cells in which every trial failed.
    pub failed_cells: usize,
    pub wall_time: Duration,
    pub rows: usize,
    pub max_calibration_residual: Option<f64>,
}

impl Summary {
    pub fn report(&self) -> String {
        let residual = self.max_calibration_residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
        format!(
            "cells={} trials={} failed_trials={} failed_cells={} rows={} max_calibration_residual={} wall_time={:.2}s",
            self.cells,
            self.trials,
            self.failed_trials,
            self.failed_cells,
            self.rows,
            residual,
            self.wall_time.as_secs_f64()
        )
    }
}

fn rel_error(w: &[f64], truth: &[f64], norm: impl Fn(&mut dyn Iterator<Item = f64>) -> f64) -> f64 {
    let diff = norm(&mut w.iter().zip(truth).map(|(a, b)| a - b));
    diff / norm(&mut truth.iter().copied())
}

fn linf(it: &mut dyn Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, v| m.max(v.abs()))
}

fn l2(it: &mut dyn Iterator<Item = f64>) -> f64 {
    it.map(|v| v * v).sum::<f64>().sqrt()
}

/// Fraction of rows of `test` whose predicted class matches the label.
pub fn accuracy(w: &[f64], test: &Dataset) -> Result<f64> {
    let labels = test.labels.as_ref().ok_or_else(|| Error::config("test set has no labels"))?;
    if labels.is_empty() {
        return Err(Error::config("test set is empty"));
    }
    let mut hits = 0usize;
    for (x, &y) in test.features.rows().zip(labels) {
        hits += usize::from(f64::from(predict_binary(w, x)?) == y);
    }
    Ok(hits as f64 / labels.len() as f64)
}

/// Metric value of the final estimate.
pub fn metric_value(metric: Metric, w: &[f64], data: &TrialData) -> Result<f64> {
    let truth = || data.w_star.as_deref().ok_or_else(|| Error::config("metric needs a true parameter"));
    match metric {
        Metric::RelInf => Ok(rel_error(w, truth()?, linf)),
        Metric::SqRelInf => Ok(rel_error(w, truth()?, linf).powi(2)),
        Metric::RelL2 => Ok(rel_error(w, truth()?, l2)),
        Metric::Accuracy => accuracy(w, data.test.as_ref().ok_or_else(|| Error::config("no test set"))?),
    }
}

/// The link as used for noise calibration: unbounded derivative bounds
/// are replaced by their values on the range `|⟨x, w⟩| ≤ radius`.
pub fn resolve_link(link: &LinkFunction, radius: f64) -> LinkFunction {
    if link.bound() == Bound::Unbounded || link.lipschitz() == Bound::Unbounded {
        link.restricted_to(radius)
    } else {
        link.clone()
    }
}

impl Sweep {
    /// Validates the config and loads ingested data, if any.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.check()?;
        let real = match &config.design {
            DesignSource::Ingested { train, test } => Some(load_real(train, test, &config)?),
            _ => None,
        };
        Ok(Sweep { config, real })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = self.config.cells();
        if let Some(real) = &self.real {
            for c in &mut cells {
                c.p = real.p;
            }
        }
        cells
    }

    fn cell_seed(&self, cell: &Cell, trial: usize) -> u64 {
        let key = format!(
            "{}|{}|{}|{}|{}|{}|{}|{}",
            self.config.mode.as_str(),
            self.config.link.name(),
            self.config.design.as_str(),
            cell.p,
            cell.n,
            cell.m,
            cell.epsilon,
            cell.delta.map_or_else(|| "-".to_string(), |d| d.to_string()),
        );
        derive(self.config.master_seed, &[fnv1a(key.as_bytes()), trial as u64])
    }

    /// Builds the data and options of one trial.
    pub fn trial_data(&self, cell: &Cell, trial: usize) -> Result<TrialData> {
        let cfg = &self.config;
        let seed = self.cell_seed(cell, trial);
        let privacy = match (cell.epsilon, cell.delta) {
            (Epsilon::Finite(e), Some(d)) => PrivacyParams::new(e, d)?,
            _ => PrivacyParams::disabled(),
        };
        let options = EstimateOptions { augment: cfg.augment, seed: derive(seed, &[2]), ..Default::default() };
        match &self.real {
            Some(real) => {
                let pool = real.train.len();
                if cell.n + cell.m > pool {
                    return Err(Error::config(format!(
                        "n + m = {} exceeds the {pool} train rows",
                        cell.n + cell.m
                    )));
                }
                let mut rng = nldp_core::seed::rng_for(seed, &[1]);
                let picked = sample(&mut rng, pool, cell.n + cell.m).into_vec();
                let (priv_idx, pub_idx) = picked.split_at(cell.n);
                let take = |idx: &[usize], labels: bool| -> Result<Dataset> {
                    let mut x = Vec::with_capacity(idx.len() * real.p);
                    for &i in idx {
                        x.extend_from_slice(real.train.features.row(i));
                    }
                    let y = real.train.labels.as_ref().expect("train labels");
                    Ok(Dataset {
                        features: nldp_core::Features::new(real.p, x)?,
                        labels: labels.then(|| idx.iter().map(|&i| y[i]).collect()),
                        bounds: real.train.bounds,
                        provenance: real.train.provenance,
                    })
                };
                Ok(TrialData {
                    private: take(priv_idx, true)?,
                    public: take(pub_idx, false)?,
                    test: Some(real.test.clone()),
                    w_star: None,
                    link: resolve_link(&cfg.link, real.train.bounds.r),
                    privacy,
                    options,
                })
            }
            None => {
                let design = match cfg.design {
                    DesignSource::Gaussian => Design::Gaussian,
                    _ => Design::Bernoulli,
                };
                let w_star = SynthSpec::uniform_w_star(cell.p);
                let label_model = match cfg.mode {
                    Mode::Glm => LabelModel::Logistic,
                    Mode::Nlr => LabelModel::Nonlinear { link: cfg.link.clone(), noise_bound: cfg.noise_bound },
                };
                let spec = SynthSpec {
                    design,
                    p: cell.p,
                    w_star: w_star.clone(),
                    label_model,
                    n_private: cell.n,
                    m_public: cell.m,
                    seed: derive(seed, &[1]),
                };
                let (private, public) = synthesize(&spec);
                let test = if cfg.metrics.contains(&Metric::Accuracy) {
                    let tspec =
                        SynthSpec { n_private: cfg.test_size, m_public: 0, seed: derive(seed, &[3]), ..spec.clone() };
                    let (x, _) = gen_design(&tspec);
                    let y = gen_labels(&x, &tspec);
                    Some(Dataset { features: x, labels: Some(y), bounds: private.bounds, provenance: private.provenance })
                } else {
                    None
                };
                let w_max = w_star.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Ok(TrialData {
                    link: resolve_link(&cfg.link, private.bounds.r * w_max),
                    private,
                    public,
                    test,
                    w_star: Some(w_star),
                    privacy,
                    options,
                })
            }
        }
    }

    pub fn run_trial(&self, cell: &Cell, trial: usize) -> Result<TrialRecord> {
        self.run_trial_with(cell, trial, |d| {
            estimate(self.config.mode, &d.private, &d.public, &d.link, &d.privacy, &d.options)
        })
    }

    /// Runs one trial with a caller-supplied estimator. Estimator failures
    /// become rows with `stage_error` set; only setup problems are errors.
    pub fn run_trial_with<F>(&self, cell: &Cell, trial: usize, estimator: F) -> Result<TrialRecord>
    where
        F: FnOnce(&TrialData) -> std::result::Result<EstimatorOutput, PipelineError>,
    {
        let data = self.trial_data(cell, trial)?;
        let cfg = &self.config;
        let base = MetricsRow {
            mode: cfg.mode,
            link: cfg.link.name().to_string(),
            design: cfg.design.as_str(),
            p: cell.p,
            n: cell.n,
            m: cell.m,
            epsilon: cell.epsilon,
            delta: cell.delta,
            trial,
            metric: Metric::RelInf,
            value: None,
            calib_method: None,
            condition_warning: None,
            stage_error: None,
        };
        let (rows, residual) = match estimator(&data) {
            Ok(out) => {
                let ytilde = project_public(data.public.features.rows(), &out.w_ols)?;
                let residual = (empirical_f(&data.link, &ytilde, out.c_hat) - 1.0).abs();
                let mut rows = Vec::with_capacity(cfg.metrics.len());
                for &metric in &cfg.metrics {
                    let mut row = MetricsRow {
                        metric,
                        calib_method: Some(out.calibration.method.as_str()),
                        condition_warning: Some(out.ols.condition_warning),
                        ..base.clone()
                    };
                    let value = metric_value(metric, &out.w_final, &data)?;
                    if value.is_finite() {
                        row.value = Some(value);
                    } else {
                        row.stage_error = Some(format!("metric: non-finite {}", metric.as_str()));
                    }
                    rows.push(row);
                }
                (rows, Some(residual))
            }
            Err(e) => {
                let rows = cfg
                    .metrics
                    .iter()
                    .map(|&metric| MetricsRow { metric, stage_error: Some(e.to_string()), ..base.clone() })
                    .collect();
                (rows, None)
            }
        };
        Ok(TrialRecord { cell: cell.index, trial, rows, calibration_residual: residual })
    }

    /// Runs every trial of every cell on the global rayon pool, sorted by
    /// cell and trial.
    pub fn run_all(&self) -> Result<Vec<TrialRecord>> {
        let cells = self.cells();
        let jobs: Vec<(usize, usize)> =
            (0..cells.len()).flat_map(|c| (0..self.config.trials).map(move |t| (c, t))).collect();
        let mut records =
            jobs.par_iter().map(|&(c, t)| self.run_trial(&cells[c], t)).collect::<Result<Vec<_>>>()?;
        records.sort_by_key(|r| (r.cell, r.trial));
        Ok(records)
    }

    /// Runs the sweep, writes `out` and `<out>.agg.csv`.
    pub fn run(&self, out: &Path) -> Result<(Summary, Vec<TrialRecord>)> {
        let start = Instant::now();
        let records = self.run_all()?;
        let rows: Vec<&MetricsRow> = records.iter().flat_map(|r| &r.rows).collect();
        write_raw(out, rows.iter().copied())?;
        let agg = aggregate(rows.iter().copied());
        write_aggregate(&agg_path(out), &agg)?;
        let cells = self.cells().len();
        let mut failed_per_cell = vec![0usize; cells];
        for r in &records {
            if r.failed() {
                failed_per_cell[r.cell] += 1;
            }
        }
        let max_res = records.iter().filter_map(|r| r.calibration_residual).fold(None, |m: Option<f64>, v| {
            Some(m.map_or(v, |m| m.max(v)))
        });
        let summary = Summary {
            cells,
            trials: records.len(),
            failed_trials: failed_per_cell.iter().sum(),
            failed_cells: failed_per_cell.iter().filter(|&&f| f == self.config.trials).count(),
            wall_time: start.elapsed(),
            rows: rows.len(),
            max_calibration_residual: max_res,
        };
        Ok((summary, records))
    }
}

fn load_real(train: &Path, test: &Path, cfg: &ExperimentConfig) -> Result<RealData> {
    let as_dataset = |path: &Path| -> Result<(usize, Dataset)> {
        let file = read_dataset(path)?;
        let labels = file.labels.ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: crate::ingest::LABEL_COLUMN.to_string(),
        })?;
        let r = file.features.rows().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let bounds = match cfg.mode {
            Mode::Glm => DataBounds::glm(r),
            Mode::Nlr => DataBounds::nlr(r, cfg.noise_bound),
        };
        let p = file.features.dim();
        Ok((p, Dataset { features: file.features, labels: Some(labels), bounds, provenance: nldp_core::Provenance::Ingested }))
    };
    let (p, train) = as_dataset(train)?;
    let (q, test) = as_dataset(test)?;
    if p != q {
        return Err(Error::config(format!("train has {p} features but test has {q}")));
    }
    Ok(RealData { p, train, test })
}

pub fn agg_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".agg.csv");
    PathBuf::from(s)
}

pub fn write_raw<'a, I>(path: &Path, rows: I) -> Result<()>
where
    I: IntoIterator<Item = &'a MetricsRow>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(RAW_HEADER).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row.fields()).map_err(|e| Error::csv(path, e))?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Per-cell, per-metric mean and standard error over successful trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub key: [String; 9],
    pub trials: usize,
    pub failures: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation over `√trials`; needs two successes.
    pub se: Option<f64>,
}

pub fn aggregate<'a, I>(rows: I) -> Vec<AggregateRow>
where
    I: IntoIterator<Item = &'a MetricsRow>,
{
    // Keyed by first appearance so the output follows the raw row order.
    let mut order: Vec<[String; 9]> = Vec::new();
    let mut groups: BTreeMap<[String; 9], (Vec<f64>, usize)> = BTreeMap::new();
    for row in rows {
        let f = row.fields();
        let key = [
            f[0].clone(),
            f[1].clone(),
            f[2].clone(),
            f[3].clone(),
            f[4].clone(),
            f[5].clone(),
            f[6].clone(),
            f[7].clone(),
            f[9].clone(),
        ];
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), 0)
        });
        match row.value {
            Some(v) => entry.0.push(v),
            None => entry.1 += 1,
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (values, failures) = groups.remove(&key).expect("group");
            let k = values.len();
            let mean = (k > 0).then(|| values.iter().sum::<f64>() / k as f64);
            let se = mean.filter(|_| k > 1).map(|mu| {
                let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (k - 1) as f64;
                (var / k as f64).sqrt()
            });
            AggregateRow { key, trials: k + failures, failures, mean, se }
        })
        .collect()
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(AGG_HEADER).map_err(|e| Error::csv(path, e))?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for row in rows {
        let mut fields: Vec<String> = row.key.to_vec();
        fields.push(row.trials.to_string());
        fields.push(row.failures.to_string());
        fields.push(opt(row.mean));
        fields.push(opt(row.se));
        w.write_record(&fields).map_err(|e| Error::csv(path, e))?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nldp_core::calibration::{CalibrationResult, Method};
    use nldp_core::regression::OlsResult;

    fn config(extra: &str) -> ExperimentConfig {
        let text = format!(
            "mode = \"glm\"\nlink = \"logistic\"\ndesign = \"bernoulli\"\nepsilon = \"inf\"\nn = 2000\np = 5\ntrials = 2\n{extra}"
        );
        ExperimentConfig::from_toml(&text, None).unwrap()
    }

    fn injected(w: &[f64]) -> EstimatorOutput {
        EstimatorOutput {
            w_ols: w.to_vec(),
            c_hat: 1.0,
            w_final: w.to_vec(),
            calibration: CalibrationResult {
                c_hat: 1.0,
                method: Method::Newton,
                iterations: 0,
                residual: 0.0,
                bracket_used: None,
            },
            ols: OlsResult {
                w_ols: w.to_vec(),
                min_singular_estimate: 1.0,
                max_singular_estimate: 1.0,
                condition_warning: false,
            },
            mode: Mode::Glm,
            augmented: false,
            privacy_warning: false,
        }
    }

    #[test]
    fn injected_truth_has_zero_error() {
        let sweep = Sweep::new(config("metrics = [\"rel_inf\", \"sq_rel_inf\", \"rel_l2\"]")).unwrap();
        let cell = sweep.cells()[0];
        let rec = sweep
            .run_trial_with(&cell, 0, |d| Ok(injected(d.w_star.as_ref().unwrap())))
            .unwrap();
        assert_eq!(rec.rows.len(), 3);
        assert!(rec.rows.iter().all(|r| r.value == Some(0.0)));
    }

    #[test]
    fn infinite_epsilon_writes_a_dash() {
        let sweep = Sweep::new(config("")).unwrap();
        let cell = sweep.cells()[0];
        let data = sweep.trial_data(&cell, 0).unwrap();
        assert!(data.privacy.is_disabled());
        let rec = sweep.run_trial(&cell, 0).unwrap();
        assert_eq!(rec.rows[0].fields()[7], "-");
        assert_eq!(rec.rows[0].fields()[6], "inf");
    }

    #[test]
    fn estimator_failures_become_rows() {
        let sweep = Sweep::new(config("metrics = [\"rel_inf\", \"rel_l2\"]")).unwrap();
        let cell = sweep.cells()[0];
        let rec = sweep
            .run_trial_with(&cell, 1, |_| {
                Err(PipelineError {
                    stage: nldp_core::pipeline::Stage::Calibrate,
                    error: nldp_core::Error::NewtonDiverged("test"),
                })
            })
            .unwrap();
        assert!(rec.failed());
        assert_eq!(rec.rows.len(), 2);
        for row in &rec.rows {
            assert!(row.value.is_none());
            assert!(row.stage_error.as_deref().unwrap().starts_with("calibrate"));
        }
    }

    #[test]
    fn trial_seeds_differ_across_cells_and_trials() {
        let sweep = Sweep::new(config("")).unwrap();
        let cell = sweep.cells()[0];
        let other = Cell { n: 3000, ..cell };
        assert_ne!(sweep.cell_seed(&cell, 0), sweep.cell_seed(&cell, 1));
        assert_ne!(sweep.cell_seed(&cell, 0), sweep.cell_seed(&other, 0));
        assert_eq!(sweep.cell_seed(&cell, 4), sweep.cell_seed(&cell, 4));
    }

    #[test]
    fn accuracy_of_perfect_and_inverted_rules() {
        let features = nldp_core::Features::from_rows(1, &[[0.5], [-0.5], [0.2]]).unwrap();
        let test = Dataset {
            features,
            labels: Some(vec![1.0, 0.0, 1.0]),
            bounds: DataBounds::glm(1.0),
            provenance: nldp_core::Provenance::Ingested,
        };
        assert_eq!(accuracy(&[1.0], &test).unwrap(), 1.0);
        assert_eq!(accuracy(&[-1.0], &test).unwrap(), 0.0);
    }

    #[test]
    fn cubic_constants_follow_the_projection_range() {
        let link = resolve_link(&LinkFunction::cubic(), 0.5);
        assert_eq!(link.bound(), Bound::Finite(0.25));
        assert_eq!(link.lipschitz(), Bound::Finite(1.0));
        let logistic = LinkFunction::logistic();
        assert_eq!(resolve_link(&logistic, 0.5).bound(), logistic.bound());
    }

    #[test]
    fn aggregate_skips_failures() {
        let sweep = Sweep::new(config("")).unwrap();
        let cell = sweep.cells()[0];
        let mut rows = Vec::new();
        for (t, v) in [Some(1.0), None, Some(3.0)].into_iter().enumerate() {
            let rec = sweep
                .run_trial_with(&cell, t, |d| match v {
                    Some(s) => Ok(injected(&d.w_star.as_ref().unwrap().iter().map(|w| w * (1.0 + s)).collect::<Vec<_>>())),
                    None => Err(PipelineError {
                        stage: nldp_core::pipeline::Stage::Solve,
                        error: nldp_core::Error::NoReports,
                    }),
                })
                .unwrap();
            rows.extend(rec.rows);
        }
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 1);
        assert_eq!((agg[0].trials, agg[0].failures), (3, 1));
        let mean = agg[0].mean.unwrap();
        assert!((mean - 5.0).abs() < 1e-12, "{mean}");
        assert!((agg[0].se.unwrap() - 4.0).abs() < 1e-12);
    }
}
