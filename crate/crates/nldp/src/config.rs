//! Sweep configuration.
//!
//! The file is TOML. Axis keys accept a single value or a list; `epsilon`
//! also accepts the string `"inf"`, which disables the noise.
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nldp_core::mechanism::Mode;
use nldp_core::{LinkFunction, Registry};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Finite(f64),
    Infinite,
}

impl Epsilon {
    pub fn value(self) -> f64 {
        match self {
            Epsilon::Finite(e) => e,
            Epsilon::Infinite => f64::INFINITY,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Epsilon::Infinite);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_infinite() && v > 0.0 => Ok(Epsilon::Infinite),
            Ok(v) if v > 0.0 => Ok(Epsilon::Finite(v)),
            _ => Err(Error::config(format!("epsilon must be positive or \"inf\", got {s:?}"))),
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Finite(e) => write!(f, "{e}"),
            Epsilon::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    OneOverN,
    Fixed(f64),
}

impl DeltaRule {
    pub fn delta(self, n: usize) -> f64 {
        match self {
            DeltaRule::OneOverN => 1.0 / n as f64,
            DeltaRule::Fixed(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    RelInf,
    SqRelInf,
    RelL2,
    Accuracy,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::RelInf, Metric::SqRelInf, Metric::RelL2, Metric::Accuracy];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RelInf => "rel_inf",
            Metric::SqRelInf => "sq_rel_inf",
            Metric::RelL2 => "rel_l2",
            Metric::Accuracy => "accuracy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown metric {s:?}")))
    }

    pub fn needs_truth(self) -> bool {
        self != Metric::Accuracy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignSource {
    Bernoulli,
    Gaussian,
    /// Preprocessed train/test files as written by `ingest`.
    Ingested { train: PathBuf, test: PathBuf },
}

impl DesignSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignSource::Bernoulli => "bernoulli",
            DesignSource::Gaussian => "gaussian",
            DesignSource::Ingested { .. } => "ingested",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub link: LinkFunction,
    pub design: DesignSource,
    pub epsilon: Vec<Epsilon>,
    pub n: Vec<usize>,
    /// `None`: the public set has the same size as the private set.
    pub m: Option<Vec<usize>>,
    /// Ignored for ingested data, whose dimension is fixed by the files.
    pub p: Vec<usize>,
    pub trials: usize,
    pub metrics: Vec<Metric>,
    pub delta_rule: DeltaRule,
    pub augment: bool,
    pub master_seed: u64,
    /// Half-width `C` of the uniform label noise in regression mode.
    pub noise_bound: f64,
    /// Size of the synthetic held-out set used for `accuracy`.
    pub test_size: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrWord {
    Num(f64),
    Word(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: String,
    link: String,
    design: String,
    epsilon: OneOrMany<NumOrWord>,
    n: OneOrMany<usize>,
    m: Option<OneOrMany<usize>>,
    p: Option<OneOrMany<usize>>,
    trials: Option<usize>,
    metrics: Option<OneOrMany<String>>,
    delta_rule: Option<NumOrWord>,
    augment: Option<bool>,
    master_seed: Option<u64>,
    noise_bound: Option<f64>,
    test_size: Option<usize>,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
}

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_TEST_SIZE: usize = 10_000;

fn nonempty<T>(name: &str, v: Vec<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::config(format!("axis {name} is empty")));
    }
    Ok(v)
}

impl ExperimentConfig {
    /// Parses and validates a TOML config. Relative data paths are resolved
    /// against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let mode = match raw.mode.as_str() {
            "glm" => Mode::Glm,
            "nlr" => Mode::Nlr,
            other => return Err(Error::config(format!("mode must be glm or nlr, got {other:?}"))),
        };
        let link = Registry::builtin().get(&raw.link).map_err(|e| Error::config(e.to_string()))?;
        let resolve = |p: PathBuf| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        };
        let design = match raw.design.as_str() {
            "bernoulli" => DesignSource::Bernoulli,
            "gaussian" => DesignSource::Gaussian,
            "ingested" => match (raw.train, raw.test) {
                (Some(train), Some(test)) => DesignSource::Ingested { train: resolve(train), test: resolve(test) },
                _ => return Err(Error::config("design = \"ingested\" needs both train and test files")),
            },
            other => return Err(Error::config(format!("unknown design {other:?}"))),
        };
        let epsilon = nonempty("epsilon", raw.epsilon.into_vec())?
            .into_iter()
            .map(|e| match e {
                NumOrWord::Num(v) => Epsilon::parse(&v.to_string()),
                NumOrWord::Word(w) => Epsilon::parse(&w),
            })
            .collect::<Result<Vec<_>>>()?;
        let n = nonempty("n", raw.n.into_vec())?;
        let m = raw.m.map(|m| nonempty("m", m.into_vec())).transpose()?;
        let p = match raw.p {
            Some(p) => nonempty("p", p.into_vec())?,
            None if matches!(design, DesignSource::Ingested { .. }) => vec![0],
            None => return Err(Error::config("synthetic designs need a p axis")),
        };
        let metrics = match raw.metrics {
            Some(m) => nonempty("metrics", m.into_vec())?.iter().map(|s| Metric::parse(s)).collect::<Result<_>>()?,
            None => vec![Metric::SqRelInf],
        };
        let delta_rule = match raw.delta_rule {
            None => DeltaRule::OneOverN,
            Some(NumOrWord::Word(w)) if w == "one_over_n" => DeltaRule::OneOverN,
            Some(NumOrWord::Num(d)) if d > 0.0 && d < 1.0 => DeltaRule::Fixed(d),
            Some(_) => return Err(Error::config("delta_rule must be \"one_over_n\" or a number in (0, 1)")),
        };
        let cfg = ExperimentConfig {
            mode,
            link,
            design,
            epsilon,
            n,
            m,
            p,
            trials: raw.trials.unwrap_or(DEFAULT_TRIALS),
            metrics,
            delta_rule,
            augment: raw.augment.unwrap_or(false),
            master_seed: raw.master_seed.unwrap_or(0),
            noise_bound: raw.noise_bound.unwrap_or(0.0),
            test_size: raw.test_size.unwrap_or(DEFAULT_TEST_SIZE),
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn check(&self) -> Result<()> {
        use nldp_core::LinkKind;
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        let want = match self.mode {
            Mode::Glm => LinkKind::GlmLoss,
            Mode::Nlr => LinkKind::NlrLink,
        };
        if self.link.kind() != want {
            return Err(Error::config(format!("link {} does not fit mode {}", self.link.name(), self.mode.as_str())));
        }
        if self.n.contains(&0) || self.m.as_ref().is_some_and(|m| m.contains(&0)) {
            return Err(Error::config("n and m must be positive"));
        }
        if !matches!(self.design, DesignSource::Ingested { .. }) && self.p.contains(&0) {
            return Err(Error::config("p must be positive"));
        }
        if !(self.noise_bound >= 0.0 && self.noise_bound.is_finite()) {
            return Err(Error::config("noise_bound must be a nonnegative number"));
        }
        let ingested = matches!(self.design, DesignSource::Ingested { .. });
        for metric in &self.metrics {
            if ingested && metric.needs_truth() {
                return Err(Error::config(format!("{} needs a known true parameter; ingested data has none", metric.as_str())));
            }
            if *metric == Metric::Accuracy && self.mode != Mode::Glm {
                return Err(Error::config("accuracy is defined for binary GLM labels only"));
            }
            if *metric == Metric::Accuracy && !ingested && self.test_size == 0 {
                return Err(Error::config("accuracy needs test_size > 0"));
            }
        }
        Ok(())
    }

    /// The cross product of the axes, ordered `p`, `epsilon`, `n`, `m`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &p in &self.p {
            for &epsilon in &self.epsilon {
                for &n in &self.n {
                    let ms = self.m.clone().unwrap_or_else(|| vec![n]);
                    for m in ms {
                        let delta = match epsilon {
                            Epsilon::Infinite => None,
                            Epsilon::Finite(_) => Some(self.delta_rule.delta(n)),
                        };
                        out.push(Cell { index: out.len(), p, n, m, epsilon, delta });
                    }
                }
            }
        }
        out
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    pub epsilon: Epsilon,
    /// `None` when noise is disabled.
    pub delta: Option<f64>,
}
