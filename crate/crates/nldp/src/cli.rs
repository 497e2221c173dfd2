use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nldp_core::mechanism::{DataBounds, Mode, PrivacyParams};
use nldp_core::pipeline::{estimate, Dataset, EstimateOptions, EstimatorOutput};
use nldp_core::{Bound, Provenance, Registry};
use serde_json::json;

use crate::config::{Epsilon, ExperimentConfig};
use crate::constants::{verify_constants, DEFAULT_SAMPLES};
use crate::error::{Error, Result, EXIT_ESTIMATOR, EXIT_OK};
use crate::harness::{agg_path, resolve_link, Sweep};
use crate::ingest::{load_csv, preprocess, read_dataset, write_dataset, IngestSpec};

#[derive(Parser, Debug)]
#[command(name = "nldp", version, about = "Locally private GLM and single-index estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Glm,
    Nlr,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Glm => Mode::Glm,
            ModeArg::Nlr => Mode::Nlr,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every cell and trial of a sweep config and write raw and aggregated CSV
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate from a private labeled CSV and a public unlabeled CSV
    Estimate {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        link: String,
        /// Positive number or `inf`
        #[arg(long)]
        epsilon: String,
        /// Defaults to 1/n
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        private: PathBuf,
        #[arg(long)]
        public: PathBuf,
        #[arg(long)]
        augment: bool,
        /// Declared bound on the ℓ1 norm of every private row
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Half-width of the label noise (regression mode)
        #[arg(long, default_value_t = 0.0)]
        noise_bound: f64,
        /// Bound on |⟨x, w⟩| for links with unbounded derivatives
        #[arg(long)]
        index_bound: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Preprocess a raw CSV into train and test dataset files
    Ingest {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Monte-Carlo checks of the calibration constants
    VerifyConstants {
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (summary, _) = Sweep::new(cfg)?.run(&out)?;
            eprintln!("{}", summary.report());
            eprintln!("wrote {} and {}", out.display(), agg_path(&out).display());
            Ok(EXIT_OK)
        }
        Command::Estimate {
            mode,
            link,
            epsilon,
            delta,
            private,
            public,
            augment,
            radius,
            noise_bound,
            index_bound,
            seed,
        } => {
            let args = EstimateArgs {
                mode: mode.into(),
                link,
                epsilon: Epsilon::parse(&epsilon)?,
                delta,
                private,
                public,
                augment,
                radius,
                noise_bound,
                index_bound,
                seed,
            };
            match run_estimate(&args)? {
                Ok(record) => {
                    println!("{record}");
                    Ok(EXIT_OK)
                }
                Err(record) => {
                    println!("{record}");
                    Ok(EXIT_ESTIMATOR)
                }
            }
        }
        Command::Ingest { spec, out_train, out_test } => {
            let spec = IngestSpec::load(&spec)?;
            let table = load_csv(&spec)?;
            let out = preprocess(&table, &spec)?;
            for name in &out.dropped_features {
                eprintln!("warning: dropped zero-variance feature {name:?}");
            }
            write_dataset(&out_train, &out.feature_names, &out.train)?;
            write_dataset(&out_test, &out.feature_names, &out.test)?;
            eprintln!(
                "rows={} features={} train={} test={} test_rows_rescaled={}",
                table.len(),
                out.feature_names.len(),
                out.train.len(),
                out.test.len(),
                out.test_rows_rescaled
            );
            Ok(EXIT_OK)
        }
        Command::VerifyConstants { samples, seed } => {
            let checks = verify_constants(samples, seed)?;
            for c in &checks {
                println!("{}", c.line());
            }
            Ok(if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_ESTIMATOR })
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimateArgs {
    pub mode: Mode,
    pub link: String,
    pub epsilon: Epsilon,
    pub delta: Option<f64>,
    pub private: PathBuf,
    pub public: PathBuf,
    pub augment: bool,
    pub radius: f64,
    pub noise_bound: f64,
    pub index_bound: Option<f64>,
    pub seed: u64,
}

/// Runs one estimate. The outer error covers bad arguments and unreadable
/// files; the inner result is the printed record, `Err` when the estimator
/// itself failed.
pub fn run_estimate(args: &EstimateArgs) -> Result<std::result::Result<String, String>> {
    if !(args.radius > 0.0 && args.radius.is_finite()) {
        return Err(Error::config("radius must be a positive number"));
    }
    let link = Registry::builtin().get(&args.link)?;
    let link = match (link.bound(), args.index_bound) {
        (Bound::Unbounded, Some(b)) => resolve_link(&link, b),
        (Bound::Unbounded, None) if args.epsilon != Epsilon::Infinite => {
            return Err(Error::config(format!("link {} needs --index-bound", link.name())))
        }
        _ => link,
    };
    let private_file = read_dataset(&args.private)?;
    let labels = private_file.labels.ok_or_else(|| Error::MissingColumn {
        path: args.private.clone(),
        column: crate::ingest::LABEL_COLUMN.to_string(),
    })?;
    let public_file = read_dataset(&args.public)?;
    let n = private_file.features.len();
    let bounds = match args.mode {
        Mode::Glm => DataBounds::glm(args.radius),
        Mode::Nlr => DataBounds::nlr(args.radius, args.noise_bound),
    };
    let privacy = match args.epsilon {
        Epsilon::Infinite => PrivacyParams::disabled(),
        Epsilon::Finite(e) => match args.delta {
            Some(d) => PrivacyParams::new(e, d)?,
            None => PrivacyParams::with_default_delta(e, n)?,
        },
    };
    let private = Dataset { features: private_file.features, labels: Some(labels), bounds, provenance: Provenance::Ingested };
    let public =
        Dataset { features: public_file.features, labels: None, bounds, provenance: Provenance::Ingested };
    let opts = EstimateOptions { augment: args.augment, seed: args.seed, ..Default::default() };
    let delta = (!privacy.is_disabled()).then(|| privacy.delta());
    let header = json!({
        "mode": args.mode.as_str(),
        "link": link.name(),
        "epsilon": args.epsilon.to_string(),
        "delta": delta,
        "n": n,
        "m": public.len(),
        "p": private.dim(),
    });
    Ok(match estimate(args.mode, &private, &public, &link, &privacy, &opts) {
        Ok(out) => Ok(record(header, &out)),
        Err(e) => {
            let mut v = header;
            v["error"] = json!({ "stage": e.stage.as_str(), "message": e.error.to_string() });
            Err(v.to_string())
        }
    })
}

fn record(mut v: serde_json::Value, out: &EstimatorOutput) -> String {
    let extra = json!({
        "augmented": out.augmented,
        "w_ols": out.w_ols,
        "c_hat": out.c_hat,
        "w_final": out.w_final,
        "calib_method": out.calibration.method.as_str(),
        "calib_iterations": out.calibration.iterations,
        "calib_residual": out.calibration.residual,
        "condition_warning": out.ols.condition_warning,
        "min_singular_estimate": out.ols.min_singular_estimate,
        "max_singular_estimate": out.ols.max_singular_estimate,
        "privacy_warning": out.privacy_warning,
    });
    if let (Some(a), serde_json::Value::Object(b)) = (v.as_object_mut(), extra) {
        a.extend(b);
    }
    v.to_string()
}
