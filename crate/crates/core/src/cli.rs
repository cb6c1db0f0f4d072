//! The `powerbayes` command line.
//!
//! Each subcommand resolves its settings from built-in defaults, then an
//! optional TOML file, then flags, and writes `manifest.toml` beside its
//! outputs. The manifest's `[config]` table is itself a valid `--config`
//! file, so a run can be repeated exactly.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::csn;
use crate::data::{self, Side};
use crate::error_model::ObservationVariant;
use crate::inference::{self, diagnostics, io as draws_io, BodyKind, McmcConfig, Model, PriorConfig};
use crate::predictive;
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Parser)]
#[command(name = "powerbayes", version, about = "Power-law severity models under missingness, noise and heaping")]
pub struct Cli {
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its sealed ground truth.
    Simulate(SimulateArgs),
    /// Fit a power-law tail by KS minimisation, with bootstrap and GOF test.
    FitCsn(FitCsnArgs),
    /// Pilot-tune and run the Metropolis-Hastings sampler.
    Infer(InferArgs),
    /// Predict n_true, total severity and the recording threshold from draws.
    Predict(PredictArgs),
    /// ESS, acceptance and trace export for an inference run.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub n_true: Option<usize>,
    /// US or Native.
    #[arg(long)]
    pub side: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitCsnArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap rounds; 0 skips the uncertainty step.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Synthetic datasets for the goodness-of-fit test; 0 skips it.
    #[arg(long)]
    pub gof: Option<usize>,
    #[arg(long)]
    pub max_count: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub pilot: Option<usize>,
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// power-law or log-normal.
    #[arg(long)]
    pub body: Option<String>,
    /// exponential-linear, exponential-quadratic or logistic.
    #[arg(long)]
    pub variant: Option<String>,
    /// Write full latent vectors every this many kept draws; 0 disables.
    #[arg(long)]
    pub latent_stride: Option<usize>,
    #[arg(long)]
    pub progress_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory of an `infer` run.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Defaults to the dataset recorded in the run's manifest.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Recording-probability level for the threshold.
    #[arg(long)]
    pub threshold_level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub run: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub p: f64,
    pub n_true: usize,
    pub side: Side,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let s = data::SimulationConfig::default();
        Self {
            seed: 1,
            alpha: s.alpha,
            lambda: s.lambda,
            mu: s.mu,
            p: s.p,
            n_true: s.n_true,
            side: s.side,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitCsnConfig {
    pub data: PathBuf,
    pub seed: u64,
    pub bootstrap: usize,
    pub gof: usize,
    pub max_count: u64,
}

impl Default for FitCsnConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::new(),
            seed: 1,
            bootstrap: 1000,
            gof: 1000,
            max_count: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferConfig {
    pub data: PathBuf,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub pilot: usize,
    pub block_size: usize,
    pub chains: usize,
    pub body: BodyKind,
    pub variant: ObservationVariant,
    pub latent_stride: usize,
    pub progress_every: usize,
    pub audit_every: usize,
    pub prior: PriorConfig,
}

impl Default for InferConfig {
    fn default() -> Self {
        let m = McmcConfig::default();
        Self {
            data: PathBuf::new(),
            seed: 1,
            iterations: m.iterations,
            burn_in: m.burn_in,
            thin: m.thin,
            pilot: 100_000,
            block_size: m.latent_block_size,
            chains: 1,
            body: BodyKind::PowerLaw,
            variant: ObservationVariant::ExponentialLinear,
            latent_stride: 100,
            progress_every: m.progress_every,
            audit_every: m.audit_every,
            prior: PriorConfig::default(),
        }
    }
}

impl InferConfig {
    pub fn mcmc(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            latent_block_size: self.block_size,
            seed,
            latent_stride: self.latent_stride,
            audit_every: self.audit_every,
            progress_every: self.progress_every,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.as_os_str().is_empty() {
            return Err(Error::config("no data file given (--data)"));
        }
        self.mcmc(self.seed).validate()?;
        if self.pilot > 0 && self.pilot < inference::tune::MIN_PILOT {
            return Err(Error::config(format!(
                "pilot must be 0 or at least {}",
                inference::tune::MIN_PILOT
            )));
        }
        if self.chains < 1 {
            return Err(Error::config("chains must be at least 1"));
        }
        check_seed(self.seed)?;
        self.prior.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub run: PathBuf,
    /// Empty means the dataset named in the run manifest.
    pub data: PathBuf,
    pub seed: u64,
    pub level: f64,
    pub threshold_level: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            run: PathBuf::new(),
            data: PathBuf::new(),
            seed: 1,
            level: 0.95,
            threshold_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub run: PathBuf,
}

/// Manifest written by every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest<C, R> {
    pub command: String,
    pub version: String,
    pub config: C,
    pub results: R,
}

#[derive(Deserialize)]
struct ConfigOnly<C> {
    config: C,
}

/// Read the `[config]` table of a TOML file.
pub fn read_config<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: ConfigOnly<C> =
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    Ok(parsed.config)
}

fn write_manifest<C: Serialize, R: Serialize>(out: &Path, command: &str, config: &C, results: &R) -> Result<()> {
    let m = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        results,
    };
    let text = toml::to_string(&m).map_err(|e| Error::Numerical(format!("manifest serialisation: {e}")))?;
    let path = out.join(MANIFEST);
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn read_manifest<C: DeserializeOwned, R: DeserializeOwned>(run: &Path) -> Result<Manifest<C, R>> {
    let path = run.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    toml::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn base_config<C: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<C> {
    match path {
        Some(p) => read_config(p),
        None => Ok(C::default()),
    }
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn check_seed(seed: u64) -> Result<()> {
    if seed > crate::rng::MAX_SEED {
        return Err(Error::config(format!("seed must be at most {}", crate::rng::MAX_SEED)));
    }
    Ok(())
}

fn parse_opt<T: std::str::FromStr<Err = Error>>(v: &Option<String>) -> Result<Option<T>> {
    v.as_deref().map(str::parse).transpose()
}

// ---- simulate ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateResults {
    pub dataset: String,
    pub ground_truth: String,
    pub n_obs: usize,
    pub total_true: u64,
    pub total_observed: u64,
}

pub fn resolve_simulate(args: &SimulateArgs) -> Result<SimulateConfig> {
    let mut c: SimulateConfig = base_config(&args.config)?;
    set(&mut c.seed, args.seed);
    set(&mut c.alpha, args.alpha);
    set(&mut c.lambda, args.lambda);
    set(&mut c.mu, args.mu);
    set(&mut c.p, args.p);
    set(&mut c.n_true, args.n_true);
    set(&mut c.side, parse_opt(&args.side)?);
    check_seed(c.seed)?;
    Ok(c)
}

/// Ground truth lives in its own subdirectory so inference never reads it.
pub const GROUND_TRUTH: &str = "sealed/ground_truth.csv";

pub fn cmd_simulate(config: &SimulateConfig, out: &Path) -> Result<SimulateResults> {
    let sim = data::SimulationConfig {
        alpha: config.alpha,
        lambda: config.lambda,
        mu: config.mu,
        p: config.p,
        n_true: config.n_true,
        side: config.side,
    };
    sim.validate()?;
    create_dir(&out.join("sealed"))?;
    let mut rng = crate::rng::stream(config.seed, 0);
    let study = data::generate_simulation_study(&sim, &mut rng)?;
    data::save_csv(&study.dataset, out.join("data.csv"))?;
    data::write_ground_truth(&study.ground_truth, create_file(&out.join(GROUND_TRUTH))?)?;
    let results = SimulateResults {
        dataset: "data.csv".into(),
        ground_truth: GROUND_TRUTH.into(),
        n_obs: study.dataset.records.len(),
        total_true: study.total_true(),
        total_observed: study.total_observed(),
    };
    write_manifest(out, "simulate", config, &results)?;
    Ok(results)
}

// ---- fit-csn ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitCsnResults {
    pub sides: Vec<FitCsnSide>,
    /// "omitted" when `bootstrap = 0`.
    pub bootstrap: String,
    pub gof: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitCsnSide {
    pub side: Side,
    pub n: usize,
    pub xmin_hat: u64,
    pub alpha_hat: f64,
    pub ks_distance: f64,
    pub n_tail: usize,
    pub p_value: Option<f64>,
    pub xmin_sd: Option<f64>,
    pub alpha_sd: Option<f64>,
    pub bootstrap_failures: Option<usize>,
}

pub fn resolve_fit_csn(args: &FitCsnArgs) -> Result<FitCsnConfig> {
    let mut c: FitCsnConfig = base_config(&args.config)?;
    set(&mut c.data, args.data.clone());
    set(&mut c.seed, args.seed);
    set(&mut c.bootstrap, args.bootstrap);
    set(&mut c.gof, args.gof);
    set(&mut c.max_count, args.max_count);
    if c.data.as_os_str().is_empty() {
        return Err(Error::config("no data file given (--data)"));
    }
    if c.max_count < 1 {
        return Err(Error::config("max-count must be at least 1"));
    }
    check_seed(c.seed)?;
    Ok(c)
}

fn sd(xs: &[f64]) -> Option<f64> {
    (xs.len() >= 2).then(|| diagnostics::variance(xs).sqrt())
}

pub fn cmd_fit_csn(config: &FitCsnConfig, out: &Path) -> Result<FitCsnResults> {
    let dataset = data::load_csv(&config.data)?;
    create_dir(out)?;
    data::frequency_table(&dataset, config.max_count).write(create_file(&out.join("frequency.csv"))?)?;

    let mut sides = Vec::new();
    let mut boot_rows = csv::Writer::from_writer(Vec::new());
    boot_rows.write_record(["side", "replicate", "xmin_hat", "alpha_hat", "ks_distance", "n_tail", "error"])?;
    for (k, side) in dataset.sides().into_iter().enumerate() {
        let z = dataset.counts(side);
        let points = data::ccdf_points(&dataset, side)?;
        data::write_ccdf(&points, create_file(&out.join(format!("ccdf_{side}.csv")))?)?;

        let side_err = |e: Error| Error::data(format!("{side}: {e}"));
        let fit = csn::estimate_xmin(&z, None).map_err(side_err)?;
        let seed = crate::rng::derive_seed(config.seed, k as u64);
        let p_value = if config.gof > 0 {
            Some(csn::gof_pvalue(&z, &fit, config.gof, seed).map_err(side_err)?)
        } else {
            None
        };
        let (mut xmin_sd, mut alpha_sd, mut failures) = (None, None, None);
        if config.bootstrap > 0 {
            let boot = csn::bootstrap_uncertainty(&z, config.bootstrap, seed).map_err(side_err)?;
            for (r, rep) in boot.replicates.iter().enumerate() {
                match rep {
                    Ok(f) => boot_rows.write_record([
                        side.to_string(),
                        r.to_string(),
                        f.xmin_hat.to_string(),
                        f.alpha_hat.to_string(),
                        f.ks_distance.to_string(),
                        f.n_tail.to_string(),
                        String::new(),
                    ])?,
                    Err(e) => boot_rows.write_record([
                        side.to_string(),
                        r.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        e.clone(),
                    ])?,
                }
            }
            let xs: Vec<f64> = boot.successes().map(|f| f.xmin_hat as f64).collect();
            let al: Vec<f64> = boot.successes().map(|f| f.alpha_hat).collect();
            xmin_sd = sd(&xs);
            alpha_sd = sd(&al);
            failures = Some(boot.failures());
        }
        sides.push(FitCsnSide {
            side,
            n: z.len(),
            xmin_hat: fit.xmin_hat,
            alpha_hat: fit.alpha_hat,
            ks_distance: fit.ks_distance,
            n_tail: fit.n_tail,
            p_value,
            xmin_sd,
            alpha_sd,
            bootstrap_failures: failures,
        });
    }

    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(create_file(&out.join("fit_summary.csv"))?);
    w.write_record([
        "side", "n", "xmin_hat", "alpha_hat", "ks_distance", "n_tail", "p_value", "xmin_sd", "alpha_sd", "bootstrap_failures",
    ])?;
    for s in &sides {
        w.write_record([
            s.side.to_string(),
            s.n.to_string(),
            s.xmin_hat.to_string(),
            s.alpha_hat.to_string(),
            s.ks_distance.to_string(),
            s.n_tail.to_string(),
            opt(s.p_value),
            opt(s.xmin_sd),
            opt(s.alpha_sd),
            s.bootstrap_failures.map(|f| f.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out.join("fit_summary.csv"), e))?;

    let bootstrap = if config.bootstrap > 0 {
        let bytes = boot_rows.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        let path = out.join("bootstrap.csv");
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
        "bootstrap.csv".to_string()
    } else {
        "omitted".to_string()
    };
    let results = FitCsnResults {
        sides,
        bootstrap,
        gof: if config.gof > 0 { "fit_summary.csv".into() } else { "omitted".into() },
    };
    write_manifest(out, "fit-csn", config, &results)?;
    Ok(results)
}

// ---- infer ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferResults {
    pub chains: Vec<ChainResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainResult {
    pub chain: usize,
    pub seed: u64,
    pub draws_file: String,
    pub latents_file: Option<String>,
    pub n_draws: usize,
    pub acceptance_rate: f64,
    pub pilot_acceptance: Option<f64>,
    pub pilot_fallback: Option<bool>,
    pub pilot_note: Option<String>,
    /// Row-major proposal covariance over transformed coordinates.
    pub proposal_cov: Vec<Vec<f64>>,
}

pub fn resolve_infer(args: &InferArgs) -> Result<InferConfig> {
    let mut c: InferConfig = base_config(&args.config)?;
    set(&mut c.data, args.data.clone());
    set(&mut c.seed, args.seed);
    set(&mut c.iterations, args.iterations);
    set(&mut c.burn_in, args.burn_in);
    set(&mut c.thin, args.thin);
    set(&mut c.pilot, args.pilot);
    set(&mut c.block_size, args.block_size);
    set(&mut c.chains, args.chains);
    set(&mut c.body, parse_opt(&args.body)?);
    set(&mut c.variant, parse_opt(&args.variant)?);
    set(&mut c.latent_stride, args.latent_stride);
    set(&mut c.progress_every, args.progress_every);
    c.validate()?;
    Ok(c)
}

fn chain_seed(seed: u64, chains: usize, k: usize) -> u64 {
    if chains == 1 {
        seed
    } else {
        crate::rng::derive_seed(seed, k as u64)
    }
}

pub fn cmd_infer(config: &InferConfig, out: &Path) -> Result<InferResults> {
    config.validate()?;
    let dataset = data::load_csv(&config.data)?;
    let model = Model::from_dataset(&dataset, config.body, config.variant, config.prior)?;
    create_dir(out)?;

    use rayon::prelude::*;
    let runs: Vec<Result<(Option<inference::TuneResult>, inference::PosteriorSample)>> = (0..config.chains)
        .into_par_iter()
        .map(|k| {
            let mcmc = config.mcmc(chain_seed(config.seed, config.chains, k));
            if config.pilot > 0 {
                let (t, s) = inference::tune_and_run(&model, &mcmc, config.pilot)?;
                Ok((Some(t), s))
            } else {
                Ok((None, inference::run_chain(&model, &mcmc)?))
            }
        })
        .collect();

    let mut chains = Vec::new();
    let mut summary = csv::Writer::from_writer(create_file(&out.join("summary.csv"))?);
    summary.write_record(["chain", "parameter", "mean", "sd", "median", "lo", "hi", "ess"])?;
    for (k, run) in runs.into_iter().enumerate() {
        let (tune, sample) = run?;
        let draws_file = format!("draws_chain{k}.csv");
        draws_io::write_draws(&sample.names, &sample.sides, &sample.draws, create_file(&out.join(&draws_file))?)?;
        let latents_file = if config.latent_stride > 0 {
            let f = format!("latents_chain{k}.csv");
            draws_io::write_latents(&sample.sides, &sample.latent_snapshots, create_file(&out.join(&f))?)?;
            Some(f)
        } else {
            None
        };
        for (j, name) in sample.names.iter().enumerate() {
            let col = sample.column(name).expect("name from the sample");
            let s = diagnostics::summarize(&col, 0.95)?;
            summary.write_record([
                k.to_string(),
                name.clone(),
                s.mean.to_string(),
                s.sd.to_string(),
                s.median.to_string(),
                s.lo.to_string(),
                s.hi.to_string(),
                sample.ess[j].map(|e| e.to_string()).unwrap_or_default(),
            ])?;
        }
        let cov = &sample.proposal_cov;
        chains.push(ChainResult {
            chain: k,
            seed: chain_seed(config.seed, config.chains, k),
            draws_file,
            latents_file,
            n_draws: sample.draws.len(),
            acceptance_rate: sample.acceptance_rate,
            pilot_acceptance: tune.as_ref().map(|t| t.pilot_acceptance),
            pilot_fallback: tune.as_ref().map(|t| t.fallback),
            pilot_note: tune.as_ref().map(|t| t.note.clone()).filter(|n| !n.is_empty()),
            proposal_cov: (0..cov.nrows()).map(|i| cov.row(i).iter().copied().collect()).collect(),
        });
        log::info!("chain {k}: {} draws, acceptance {:.3}", sample.draws.len(), sample.acceptance_rate);
    }
    summary.flush().map_err(|e| Error::io(out.join("summary.csv"), e))?;
    let results = InferResults { chains };
    write_manifest(out, "infer", config, &results)?;
    Ok(results)
}

/// Load every chain's draws from an `infer` output directory, checking
/// each file against the manifest.
pub fn load_run(run: &Path) -> Result<(InferConfig, InferResults, Vec<draws_io::DrawTable>)> {
    let m: Manifest<InferConfig, InferResults> = read_manifest(run)?;
    if m.command != "infer" {
        return Err(Error::data(format!("{} is not an infer run", run.display())));
    }
    let mut tables = Vec::new();
    for c in &m.results.chains {
        let path = run.join(&c.draws_file);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let t = draws_io::read_draws(file, &path.display().to_string())?;
        if t.draws.len() != c.n_draws {
            return Err(Error::data(format!(
                "{} holds {} draws, the manifest records {}",
                path.display(),
                t.draws.len(),
                c.n_draws
            )));
        }
        tables.push(t);
    }
    if tables.is_empty() {
        return Err(Error::data(format!("{} lists no chains", run.display())));
    }
    Ok((m.config, m.results, tables))
}

// ---- predict ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictResults {
    pub n_draws: usize,
    pub predictions: String,
    pub summary: String,
    pub thresholds: Vec<ThresholdResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub side: Side,
    pub level: f64,
    pub x: u64,
}

pub fn resolve_predict(args: &PredictArgs) -> Result<PredictConfig> {
    let mut c: PredictConfig = base_config(&args.config)?;
    set(&mut c.run, args.run.clone());
    set(&mut c.data, args.data.clone());
    set(&mut c.seed, args.seed);
    set(&mut c.level, args.level);
    set(&mut c.threshold_level, args.threshold_level);
    if c.run.as_os_str().is_empty() {
        return Err(Error::config("no inference run given (--run)"));
    }
    if !(c.level > 0.0 && c.level < 1.0) {
        return Err(Error::config("level must lie in (0, 1)"));
    }
    if !(0.0..1.0).contains(&c.threshold_level) {
        return Err(Error::config("threshold level must lie in [0, 1)"));
    }
    check_seed(c.seed)?;
    Ok(c)
}

pub fn cmd_predict(config: &PredictConfig, out: &Path) -> Result<PredictResults> {
    let (infer, _, tables) = load_run(&config.run)?;
    let data_path = if config.data.as_os_str().is_empty() {
        infer.data.clone()
    } else {
        config.data.clone()
    };
    let dataset = data::load_csv(&data_path)?;
    let draws: Vec<inference::Draw> = tables.iter().flat_map(|t| t.draws.iter().cloned()).collect();
    create_dir(out)?;

    let preds = predictive::predictive_totals(&draws, &dataset, config.seed)?;
    predictive::write_predictions(&preds, create_file(&out.join("predictions.csv"))?)?;
    let rows = predictive::summarize_predictions(&preds, config.level)?;
    predictive::write_summaries(&rows, config.level, create_file(&out.join("predictive_summary.csv"))?)?;

    let mut thresholds = Vec::new();
    let mut w = csv::Writer::from_writer(create_file(&out.join("thresholds.csv"))?);
    w.write_record(["side", "level", "x_threshold"])?;
    for side in &tables[0].sides {
        let x = predictive::x_threshold(&draws, *side, config.threshold_level)?;
        w.write_record([side.to_string(), config.threshold_level.to_string(), x.to_string()])?;
        thresholds.push(ThresholdResult {
            side: *side,
            level: config.threshold_level,
            x,
        });
    }
    w.flush().map_err(|e| Error::io(out.join("thresholds.csv"), e))?;

    let results = PredictResults {
        n_draws: draws.len(),
        predictions: "predictions.csv".into(),
        summary: "predictive_summary.csv".into(),
        thresholds,
    };
    write_manifest(out, "predict", config, &results)?;
    Ok(results)
}

// ---- diagnose ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnoseResults {
    pub diagnostics: String,
    pub trace: String,
    pub chains: usize,
}

pub fn resolve_diagnose(args: &DiagnoseArgs) -> Result<DiagnoseConfig> {
    let mut c: DiagnoseConfig = base_config(&args.config)?;
    set(&mut c.run, args.run.clone());
    if c.run.as_os_str().is_empty() {
        return Err(Error::config("no inference run given (--run)"));
    }
    Ok(c)
}

pub fn cmd_diagnose(config: &DiagnoseConfig, out: &Path) -> Result<DiagnoseResults> {
    let (_, results, tables) = load_run(&config.run)?;
    create_dir(out)?;
    let mut diag = csv::Writer::from_writer(create_file(&out.join("diagnostics.csv"))?);
    diag.write_record(["chain", "parameter", "mean", "sd", "ess", "acceptance_rate", "n_draws"])?;
    let mut trace = csv::Writer::from_writer(create_file(&out.join("trace.csv"))?);
    trace.write_record(["chain", "iteration", "parameter", "value"])?;
    for (c, t) in results.chains.iter().zip(&tables) {
        let mut series: Vec<(String, Vec<f64>)> = t
            .names
            .iter()
            .enumerate()
            .map(|(j, n)| (n.clone(), t.draws.iter().map(|d| d.params.values()[j]).collect()))
            .collect();
        series.push(("log_posterior".into(), t.draws.iter().map(|d| d.log_posterior).collect()));
        for (name, xs) in &series {
            let ess = diagnostics::effective_sample_size(xs).ok();
            diag.write_record([
                c.chain.to_string(),
                name.clone(),
                diagnostics::mean(xs).to_string(),
                diagnostics::variance(xs).sqrt().to_string(),
                ess.map(|e| e.to_string()).unwrap_or_default(),
                c.acceptance_rate.to_string(),
                xs.len().to_string(),
            ])?;
            for (d, v) in t.draws.iter().zip(xs) {
                trace.write_record([c.chain.to_string(), d.iteration.to_string(), name.clone(), v.to_string()])?;
            }
        }
    }
    diag.flush().map_err(|e| Error::io(out.join("diagnostics.csv"), e))?;
    trace.flush().map_err(|e| Error::io(out.join("trace.csv"), e))?;
    let results = DiagnoseResults {
        diagnostics: "diagnostics.csv".into(),
        trace: "trace.csv".into(),
        chains: tables.len(),
    };
    write_manifest(out, "diagnose", config, &results)?;
    Ok(results)
}

/// Proposal covariance from a manifest row list.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let c = resolve_simulate(&a)?;
            cmd_simulate(&c, &a.out).map(|_| ())
        }
        Command::FitCsn(a) => {
            let c = resolve_fit_csn(&a)?;
            cmd_fit_csn(&c, &a.out).map(|_| ())
        }
        Command::Infer(a) => {
            let c = resolve_infer(&a)?;
            cmd_infer(&c, &a.out).map(|_| ())
        }
        Command::Predict(a) => {
            let c = resolve_predict(&a)?;
            cmd_predict(&c, &a.out).map(|_| ())
        }
        Command::Diagnose(a) => {
            let c = resolve_diagnose(&a)?;
            cmd_diagnose(&c, &a.out).map(|_| ())
        }
    }
}

/// Process exit code for a result: 0, 1 for runtime errors, 2 for usage.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_usage() => 2,
        Err(_) => 1,
    }
}
