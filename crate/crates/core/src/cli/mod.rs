//! Command-line entry points: `run`, `sweep` and `verify-dp`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration,
//! 3 dataset error, 4 privacy verification failure.

mod config;
mod csv;
mod verify;

pub use config::{AttackSection, DataSection, ModelSection, MoreauSection, PartitionSection, RunConfigFile};
pub use csv::{fmt_f64, run_csv, sweep_csv, SweepRun, MOREAU_COLUMN, RUN_HEADER, SWEEP_HEADER, VERIFY_HEADER};
pub use verify::{verify_csv, verify_dp, MechanismKind, VerifyOptions, VerifyRow};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fedsim::{run_training, PrivacyConfig, RunMetrics, SimConfig};
use crate::paramcore::{write_checkpoint, Model};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DP_FAILURE: i32 = 4;

pub const ENV_SEED: &str = "DP_RSA_SEED";
pub const ENV_OUT: &str = "DP_RSA_OUT";

#[derive(Debug, Parser)]
#[command(name = "dp-rsa", version, about = "Byzantine-robust, differentially private federated learning simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train once from a TOML config and write per-round CSV.
    Run { config: PathBuf },
    /// Cross product of parameter values and seeds, as one long CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        seeds: Vec<u64>,
        /// Run configurations one after another instead of on the thread pool.
        #[arg(long)]
        serial: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the calibrated mechanisms against their privacy budget.
    VerifyDp {
        #[arg(long, value_enum)]
        mechanism: MechanismKind,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma_scale: f64,
        #[arg(long, default_value_t = 0.02)]
        delta_u: f64,
        #[arg(long)]
        u_bound: Option<f64>,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Epsilon,
    NumByzantine,
    Lambda,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::NumByzantine => "num_byzantine",
            SweepParam::Lambda => "lambda",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("sweep needs at least one seed".into()));
        }
        if self.param == SweepParam::NumByzantine && self.values.iter().any(|v| !(v.fract() == 0.0 && *v >= 0.0)) {
            return Err(Error::Config("num_byzantine values must be nonnegative integers".into()));
        }
        Ok(())
    }

    /// The base file with `param = value` and the given seed.
    pub fn apply(&self, base: &RunConfigFile, value: f64, seed: u64) -> RunConfigFile {
        let mut f = base.clone();
        f.seed = seed;
        match self.param {
            SweepParam::Epsilon => {
                let mut p = f.privacy.unwrap_or_else(|| PrivacyConfig::new(value));
                p.epsilon = value;
                f.privacy = Some(p);
            }
            SweepParam::NumByzantine => f.num_byzantine = value as usize,
            SweepParam::Lambda => f.lambda = value,
        }
        f
    }
}

/// Maps an error to the exit-code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Data(_) => EXIT_DATA,
        _ => EXIT_RUNTIME,
    }
}

/// Output file after applying `DP_RSA_OUT`, or `None` for stdout.
pub fn resolve_output(explicit: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    match std::env::var_os(ENV_OUT) {
        Some(dir) => {
            let name = explicit.and_then(Path::file_name).map(PathBuf::from).unwrap_or_else(|| default_name.into());
            Some(PathBuf::from(dir).join(name))
        }
        None => explicit.map(Path::to_path_buf),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(ENV_SEED) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{ENV_SEED}={s} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// A fully prepared run: configuration, model and data.
pub struct Prepared {
    pub file: RunConfigFile,
    pub sim: SimConfig,
    pub model: Model,
    pub train: crate::data::Dataset,
    pub test: crate::data::Dataset,
}

impl Prepared {
    pub fn new(file: RunConfigFile) -> Result<Self> {
        let sim = file.sim_config()?;
        let (train, test) = file.load_data()?;
        let model = file.model(&train)?;
        Ok(Self {
            file,
            sim,
            model,
            train,
            test,
        })
    }

    pub fn run(&self) -> Result<RunMetrics> {
        run_training(self.sim.clone(), &self.model, &self.train, &self.test)
    }
}

/// `run`: returns the CSV text, also writing it (and any checkpoint) where
/// configured.
pub fn cmd_run(config: &Path) -> Result<String> {
    let mut file = RunConfigFile::load(config)?;
    if let Some(seed) = env_seed()? {
        file.seed = seed;
    }
    let prepared = Prepared::new(file)?;
    let metrics = prepared.run()?;
    let text = run_csv(&metrics.logs, &prepared.sim);
    emit(resolve_output(prepared.file.output.as_deref(), "run.csv").as_deref(), &text)?;
    if let (Some(path), Model::Mlp(mlp)) = (&prepared.file.checkpoint, &prepared.model) {
        let path = resolve_output(Some(path), "model.ckpt").expect("explicit path");
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, mlp, metrics.final_model())?;
        emit_bytes(&path, &buf)?;
    }
    report(&prepared.sim, &metrics);
    Ok(text)
}

fn emit_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn report(cfg: &SimConfig, m: &RunMetrics) {
    eprintln!(
        "{} seed {}: final test accuracy {:.4}, final train loss {:.6}",
        cfg.algorithm.name(),
        cfg.seed,
        m.final_test_accuracy,
        m.final_train_loss
    );
    if m.mechanism.is_private() {
        eprintln!(
            "per-round epsilon {}; naive composition over {} rounds gives {} (a loose bound)",
            m.mechanism.epsilon(),
            m.logs.len(),
            m.naive_total_epsilon()
        );
        let v = m.total_u_bound_violations();
        if v > 0 {
            eprintln!("warning: {v} entries of x0 - xk exceeded u_entry_bound; the calibration assumption did not hold there");
        }
    } else {
        eprintln!("non-private run");
    }
    let unconverged = m.logs.iter().filter(|l| l.median_unconverged).count();
    if unconverged > 0 {
        eprintln!("warning: geometric median hit its iteration cap in {unconverged} rounds; the last iterate was used");
    }
}

/// `sweep`: every (value, seed) pair, rows in value-major, seed, round order.
pub fn cmd_sweep(config: &Path, spec: &SweepSpec, parallel: bool) -> Result<String> {
    let base = RunConfigFile::load(config)?;
    let text = sweep(&base, spec, parallel)?;
    Ok(text)
}

pub fn sweep(base: &RunConfigFile, spec: &SweepSpec, parallel: bool) -> Result<String> {
    spec.validate()?;
    let jobs: Vec<(f64, u64)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let prepared: Vec<Prepared> = jobs
        .iter()
        .map(|&(v, s)| Prepared::new(spec.apply(base, v, s)))
        .collect::<Result<_>>()?;
    let results: Vec<RunMetrics> = if parallel {
        prepared.par_iter().map(Prepared::run).collect::<Result<_>>()?
    } else {
        prepared.iter().map(Prepared::run).collect::<Result<_>>()?
    };
    let runs: Vec<SweepRun<'_>> = jobs
        .iter()
        .zip(&prepared)
        .zip(&results)
        .map(|((&(value, _), p), m)| SweepRun {
            value,
            cfg: &p.sim,
            logs: &m.logs,
        })
        .collect();
    Ok(sweep_csv(spec.param.name(), &runs, base.moreau.is_some()))
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Run { config } => cmd_run(&config).map(|_| EXIT_OK),
        Command::Sweep {
            config,
            param,
            values,
            seeds,
            serial,
            out,
        } => {
            let spec = SweepSpec { param, values, seeds };
            cmd_sweep(&config, &spec, !serial)
                .and_then(|text| emit(resolve_output(out.as_deref(), "sweep.csv").as_deref(), &text))
                .map(|_| EXIT_OK)
        }
        Command::VerifyDp {
            mechanism,
            epsilon,
            dims,
            trials,
            sigma_scale,
            delta_u,
            u_bound,
            resolution,
            seed,
            out,
        } => (|| {
            let opts = VerifyOptions {
                mechanism,
                epsilon,
                dims,
                trials,
                sigma_scale,
                delta_u,
                u_entry_bound: u_bound,
                margin: 0.05,
                resolution,
                seed: env_seed()?.unwrap_or(seed),
            };
            let rows = verify_dp(&opts).map_err(|e| match e {
                Error::Config(_) | Error::Data(_) => e,
                other => Error::Config(other.to_string()),
            })?;
            emit(resolve_output(out.as_deref(), "verify.csv").as_deref(), &verify_csv(&rows))?;
            let failures = rows.iter().filter(|r| !r.pass).count();
            if failures > 0 {
                eprintln!("privacy verification failed in {failures} of {} cases", rows.len());
                Ok(EXIT_DP_FAILURE)
            } else {
                Ok(EXIT_OK)
            }
        })(),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
