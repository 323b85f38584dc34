//! Command-line front end: simulate data, fit models, compute posteriors and
//! run convergence studies.
//!
//! Every option can also be set in a TOML file passed with `--config`; flags
//! given on the command line take precedence. Exit codes: 0 success, 2 usage
//! or configuration error, 3 data error, 4 numerical failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data_io::{self, Table};
use crate::error::{Error, Result};
use crate::evaluation::{convergence_study, Benchmark};
use crate::kernels::bandwidth_grid;
use crate::likelihood::{
    average_likelihood, estimate_likelihood_loss, sample_log_likelihood, select_likelihood_model,
    LikelihoodData, LikelihoodSelection, TensorSeries, ThetaGrid, DEFAULT_GRID_RESOLUTION,
    DEFAULT_I_MAX, DEFAULT_PERMUTATIONS,
};
use crate::persist::{load_model, save_model, ModelFile, ModelPayload, Provenance};
use crate::ratio::{plugin_ratio_loss, select_ratio_model, RatioData};
use crate::sample::{
    derive_seed, split_joint, split_sample, JointSample, SampleSet, SplitFractions, Standardizer,
};
use crate::simulators::{simulate_gaussian_shift, ModelKind, ParamBox, SimulatorSpec};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_STUDY_SEEDS: usize = 10;

#[derive(Debug, Parser)]
#[command(
    name = "spectral-series",
    version,
    about = "Spectral series density ratio and likelihood estimation"
)]
pub struct Cli {
    /// TOML file with default values for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write simulated draws to CSV.
    Generate(GenerateArgs),
    /// Fit a density ratio model from F and G samples.
    FitRatio(FitRatioArgs),
    /// Fit a likelihood model from a joint (theta, x) sample.
    FitLikelihood(FitLikelihoodArgs),
    /// Posterior over a parameter grid for a set of observations.
    Posterior(PosteriorArgs),
    /// Convergence study over sample sizes or observation counts.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// spiral, klein, edges or gaussian-shift.
    #[arg(long)]
    pub simulator: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Fixed parameter; parameters are drawn from the prior box otherwise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// Data dimension for gaussian-shift.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Vec<f64>,
    #[arg(long)]
    pub j_max: Option<usize>,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',')]
    pub splits: Vec<f64>,
    /// z-score data columns with training-split statistics.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct FitRatioArgs {
    /// CSV sample from the numerator distribution.
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// CSV sample from the denominator distribution.
    #[arg(long)]
    pub g: Option<PathBuf>,
    /// Simulate F = N(mu, I), G = N(0, I) instead of reading files.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub selection: SelectionArgs,
}

#[derive(Debug, Args)]
pub struct FitLikelihoodArgs {
    /// CSV with theta_* and x_* columns.
    #[arg(long)]
    pub joint: Option<PathBuf>,
    /// CSV sample of x from the marginal.
    #[arg(long)]
    pub marginal: Option<PathBuf>,
    /// Simulate from a built-in model instead of reading files.
    #[arg(long)]
    pub simulator: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Prior box as lo,hi pairs.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub param_box: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub theta_eps_grid: Vec<f64>,
    #[arg(long)]
    pub i_max: Option<usize>,
    #[arg(long)]
    pub b_permutations: Option<usize>,
    #[arg(long)]
    pub grid_resolution: Option<usize>,
    #[command(flatten)]
    pub selection: SelectionArgs,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    /// Likelihood model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV of observations (x_* columns).
    #[arg(long)]
    pub observations: Option<PathBuf>,
    #[arg(long)]
    pub grid_resolution: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// gaussian-shift, spiral, klein or edges.
    #[arg(long)]
    pub benchmark: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Number of seeds, counted up from --seed.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Per-sample training size for the likelihood benchmarks.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub j_max: Option<usize>,
    #[arg(long)]
    pub i_max: Option<usize>,
    #[arg(long)]
    pub b_permutations: Option<usize>,
    #[arg(long)]
    pub grid_resolution: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub assert_monotone: bool,
}

/// Every configurable value. Unset fields fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_eps_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_permutations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splits: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assert_monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_box: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

fn non_empty<T: Clone>(v: &[T]) -> Option<Vec<T>> {
    (!v.is_empty()).then(|| v.to_vec())
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Values set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfig) -> Result<Self> {
        let mut base = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        let top = serde_json::to_value(over).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(b), Some(t)) = (base.as_object_mut(), top.as_object()) {
            for (k, v) in t {
                b.insert(k.clone(), v.clone());
            }
        }
        serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))
    }

    fn from_selection(s: &SelectionArgs) -> Self {
        RunConfig {
            eps_grid: non_empty(&s.eps_grid),
            j_max: s.j_max,
            splits: non_empty(&s.splits),
            standardize: flag(s.standardize),
            ..Default::default()
        }
    }

    fn from_command(cmd: &Command) -> Self {
        match cmd {
            Command::Generate(a) => RunConfig {
                simulator: a.simulator.clone(),
                n: a.n,
                theta: non_empty(&a.theta),
                dim: a.dim,
                output: a.output.clone(),
                ..Default::default()
            },
            Command::FitRatio(a) => RunConfig {
                f: a.f.clone(),
                g: a.g.clone(),
                mu: a.mu,
                n: a.n,
                dim: a.dim,
                ..Self::from_selection(&a.selection)
            },
            Command::FitLikelihood(a) => RunConfig {
                joint: a.joint.clone(),
                marginal: a.marginal.clone(),
                simulator: a.simulator.clone(),
                n: a.n,
                param_box: non_empty(&a.param_box),
                theta_eps_grid: non_empty(&a.theta_eps_grid),
                i_max: a.i_max,
                b_permutations: a.b_permutations,
                grid_resolution: a.grid_resolution,
                ..Self::from_selection(&a.selection)
            },
            Command::Posterior(a) => RunConfig {
                model: a.model.clone(),
                observations: a.observations.clone(),
                grid_resolution: a.grid_resolution,
                output: a.output.clone(),
                ..Default::default()
            },
            Command::Study(a) => RunConfig {
                benchmark: a.benchmark.clone(),
                sizes: non_empty(&a.sizes),
                seeds: a.seeds,
                n: a.n,
                j_max: a.j_max,
                i_max: a.i_max,
                b_permutations: a.b_permutations,
                grid_resolution: a.grid_resolution,
                trials: a.trials,
                assert_monotone: flag(a.assert_monotone),
                ..Default::default()
            },
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn splits(&self) -> Result<SplitFractions> {
        match self.splits.as_deref() {
            None => Ok(SplitFractions::default()),
            Some([a, b, c]) => SplitFractions::new(*a, *b, *c),
            Some(v) => Err(Error::Config(format!(
                "--splits needs three fractions, got {}",
                v.len()
            ))),
        }
    }

    fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
        v.clone()
            .ok_or_else(|| Error::Config(format!("missing required option --{name}")))
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Numerical(_) | Error::DegenerateKernel { .. } | Error::SelectionFailed(_) => 4,
        _ => 3,
    }
}

/// Parse arguments, run the subcommand and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Resolved configuration for a parsed command line.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        seed: cli.seed,
        out_dir: cli.out_dir.clone(),
        ..RunConfig::from_command(&cli.command)
    };
    file.overlay(flags)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match cli.command {
        Command::Generate(_) => cmd_generate(&cfg),
        Command::FitRatio(_) => cmd_fit_ratio(&cfg),
        Command::FitLikelihood(_) => cmd_fit_likelihood(&cfg),
        Command::Posterior(_) => cmd_posterior(&cfg),
        Command::Study(_) => cmd_study(&cfg),
    }
}

fn parse_kind(name: &str) -> Result<ModelKind> {
    name.parse()
        .map_err(|e: Error| Error::Config(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<()> {
    let kind = parse_kind(&RunConfig::required(&cfg.simulator, "simulator")?)?;
    let n = RunConfig::required(&cfg.n, "n")?;
    let mut spec = match (kind, cfg.dim) {
        (ModelKind::GaussianShift, Some(d)) => SimulatorSpec::gaussian_shift(d),
        _ => SimulatorSpec::of_kind(kind),
    };
    let joint = match &cfg.theta {
        Some(theta) => {
            if kind == ModelKind::GaussianShift {
                spec = spec.with_box(ParamBox(vec![(theta[0], theta[0])]));
            }
            let x = spec.simulate(theta, n, cfg.seed())?;
            let t = SampleSet::from_rows(&vec![theta.clone(); n])?;
            JointSample::new(t, x)?
        }
        None => spec.simulate_joint(n, cfg.seed())?,
    };
    let path = match &cfg.output {
        Some(p) => p.clone(),
        None => cfg.out_dir()?.join(format!("{kind}.csv")),
    };
    data_io::write_joint(create(&path)?, &joint)?;
    println!(
        "wrote {} rows x {} columns to {}",
        joint.n(),
        joint.theta().dim() + joint.x().dim(),
        path.display()
    );
    Ok(())
}

fn standardize_all(
    on: bool,
    reference: &SampleSet,
    sets: &mut [&mut SampleSet],
) -> Result<Option<Standardizer>> {
    if !on {
        return Ok(None);
    }
    let st = Standardizer::fit(reference);
    for s in sets.iter_mut() {
        **s = st.apply(s)?;
    }
    Ok(Some(st))
}

#[derive(Debug, Serialize)]
struct RatioSummary<'a> {
    selected_eps: f64,
    selected_j: usize,
    validation_loss: f64,
    test_loss: Option<f64>,
    failures: &'a [(f64, String)],
    config_hash: &'a str,
}

pub fn cmd_fit_ratio(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seed();
    let (f, g) = match (&cfg.f, &cfg.g, cfg.mu) {
        (Some(f), Some(g), _) => data_io::read_sample_pair(f, g)?,
        (None, None, Some(mu)) => {
            let n = RunConfig::required(&cfg.n, "n")?;
            let d = cfg.dim.unwrap_or(1);
            (
                simulate_gaussian_shift(mu, n, d, derive_seed(seed, 1))?,
                simulate_gaussian_shift(0.0, n, d, derive_seed(seed, 2))?,
            )
        }
        _ => {
            return Err(Error::Config(
                "fit-ratio needs --f and --g, or --mu and --n".into(),
            ))
        }
    };
    let splits = cfg.splits()?;
    let sf = split_sample(&f, &splits, derive_seed(seed, 3))?;
    let sg = split_sample(&g, &splits, derive_seed(seed, 4))?;
    let mut data = RatioData {
        train_g: sg.train,
        train_f: sf.train,
        val_g: sg.validation,
        val_f: sf.validation,
    };
    let (mut test_f, mut test_g) = (sf.test, sg.test);
    let reference = data.train_g.clone();
    let mut sets: Vec<&mut SampleSet> = vec![
        &mut data.train_g,
        &mut data.train_f,
        &mut data.val_g,
        &mut data.val_f,
    ];
    sets.extend(test_f.as_mut());
    sets.extend(test_g.as_mut());
    let standardizer = standardize_all(cfg.standardize.unwrap_or(false), &reference, &mut sets)?;

    let grid = match &cfg.eps_grid {
        Some(g) => g.clone(),
        None => bandwidth_grid(&data.train_g)?,
    };
    let j_max = cfg.j_max.unwrap_or(crate::ratio::DEFAULT_J_MAX);
    let (model, report) = select_ratio_model(&data, &grid, j_max)?;
    let test_loss = match (&test_g, &test_f) {
        (Some(tg), Some(tf)) => Some(plugin_ratio_loss(&model, tg, tf)?),
        _ => None,
    };

    let out = cfg.out_dir()?;
    let provenance = Provenance::new(cfg, seed)?;
    let hash = provenance.config_hash.clone();
    save_model(
        &out.join("ratio_model.json"),
        &ModelFile::new(ModelPayload::Ratio { model }, provenance, standardizer),
    )?;
    data_io::write_ratio_report(create(&out.join("ratio_loss.csv"))?, &report)?;
    write_json(
        &out.join("ratio_summary.json"),
        &RatioSummary {
            selected_eps: report.selected.eps,
            selected_j: report.selected.j,
            validation_loss: report.selected.loss,
            test_loss,
            failures: &report.failures,
            config_hash: &hash,
        },
    )?;
    println!(
        "selected eps = {}, J = {}, validation loss = {}",
        report.selected.eps, report.selected.j, report.selected.loss
    );
    if let Some(t) = test_loss {
        println!("test loss = {t}");
    }
    Ok(())
}

fn box_from_flat(v: &[f64]) -> Result<ParamBox> {
    if v.is_empty() || !v.len().is_multiple_of(2) {
        return Err(Error::Config("--param-box needs lo,hi pairs".into()));
    }
    ParamBox::new(v.chunks(2).map(|c| (c[0], c[1])).collect())
        .map_err(|e| Error::Config(e.to_string()))
}

fn bounding_box(s: &SampleSet) -> Result<ParamBox> {
    let b: Vec<(f64, f64)> = s
        .points()
        .columns()
        .into_iter()
        .map(|c| {
            c.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
        })
        .collect();
    ParamBox::new(b).map_err(|e| Error::Data {
        row: 1,
        column: "theta".into(),
        message: format!("parameter range is degenerate: {e}"),
    })
}

/// Leading rows of both samples, trimmed to a common size.
fn equal_sizes(g: SampleSet, j: JointSample) -> Result<(SampleSet, JointSample)> {
    let n = g.n().min(j.n());
    Ok((g.head(n)?, j.head(n)?))
}

#[derive(Debug, Serialize)]
struct LikelihoodSummary<'a> {
    selected_eps_x: f64,
    selected_eps_theta: f64,
    selected_i: usize,
    selected_j: usize,
    validation_loss: f64,
    test_loss: Option<f64>,
    test_average_likelihood: Option<f64>,
    failures: &'a [String],
    config_hash: &'a str,
}

pub fn cmd_fit_likelihood(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seed();
    let (joint, marginal, default_box) = match (&cfg.joint, &cfg.simulator) {
        (Some(path), _) => {
            let joint = data_io::read_joint(path)?;
            let theta_box = bounding_box(joint.theta())?;
            let (joint, marginal) = match &cfg.marginal {
                Some(m) => (joint, Table::read_path(m)?.x_samples()?),
                None => {
                    let half = SplitFractions::new(0.5, 0.5, 0.0)?;
                    let s = split_joint(&joint, &half, derive_seed(seed, 7))?;
                    (s.train, s.validation.x().clone())
                }
            };
            (joint, marginal, theta_box)
        }
        (None, Some(name)) => {
            let spec = SimulatorSpec::of_kind(parse_kind(name)?);
            let n = RunConfig::required(&cfg.n, "n")?;
            (
                spec.simulate_joint(n, derive_seed(seed, 1))?,
                spec.simulate_marginal(n, derive_seed(seed, 2))?,
                spec.param_box,
            )
        }
        _ => {
            return Err(Error::Config(
                "fit-likelihood needs --joint or --simulator".into(),
            ))
        }
    };
    let param_box = match &cfg.param_box {
        Some(v) => box_from_flat(v)?,
        None => default_box,
    };
    if param_box.dim() != joint.theta().dim() {
        return Err(Error::Config(
            "parameter box dimension differs from theta columns".into(),
        ));
    }

    let splits = cfg.splits()?;
    let sj = split_joint(&joint, &splits, derive_seed(seed, 3))?;
    let sg = split_sample(&marginal, &splits, derive_seed(seed, 4))?;
    let (mut train, mut train_g) = (sj.train, sg.train);
    let (mut val_g, mut val) = equal_sizes(sg.validation, sj.validation)?;
    let mut test = match (sg.test, sj.test) {
        (Some(g), Some(j)) => Some(equal_sizes(g, j)?),
        _ => None,
    };
    let standardizer = if cfg.standardize.unwrap_or(false) {
        let st = Standardizer::fit(&train_g);
        let fix = |j: &JointSample| JointSample::new(j.theta().clone(), st.apply(j.x())?);
        train = fix(&train)?;
        val = fix(&val)?;
        train_g = st.apply(&train_g)?;
        val_g = st.apply(&val_g)?;
        if let Some((g, j)) = test.take() {
            test = Some((st.apply(&g)?, fix(&j)?));
        }
        Some(st)
    } else {
        None
    };

    let b = cfg.b_permutations.unwrap_or(DEFAULT_PERMUTATIONS);
    let selection = LikelihoodSelection {
        eps_x: match &cfg.eps_grid {
            Some(g) => g.clone(),
            None => bandwidth_grid(&train_g)?,
        },
        eps_theta: match &cfg.theta_eps_grid {
            Some(g) => g.clone(),
            None => bandwidth_grid(train.theta())?,
        },
        i_max: cfg.i_max.unwrap_or(DEFAULT_I_MAX),
        j_max: cfg.j_max.unwrap_or(crate::likelihood::DEFAULT_J_MAX),
        permutations: b,
        seed: derive_seed(seed, 5),
    };
    let data = LikelihoodData {
        train,
        train_g,
        val,
        val_g,
    };
    let (model, report) = select_likelihood_model(&data, &selection)?;
    let grid = ThetaGrid::new(
        &param_box,
        cfg.grid_resolution.unwrap_or(DEFAULT_GRID_RESOLUTION),
    )?;
    let (test_loss, test_al) = match &test {
        Some((g, j)) => {
            let (i, jj) = model.truncation();
            let loss = estimate_likelihood_loss(&model, g, j, b, i, jj, derive_seed(seed, 6))?;
            let al = match average_likelihood(&model, j, &grid) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("average likelihood unavailable: {e}");
                    None
                }
            };
            (Some(loss), al)
        }
        None => (None, None),
    };

    let out = cfg.out_dir()?;
    let provenance = Provenance::new(cfg, seed)?;
    let hash = provenance.config_hash.clone();
    save_model(
        &out.join("likelihood_model.json"),
        &ModelFile::new(
            ModelPayload::Likelihood { model, param_box },
            provenance,
            standardizer,
        ),
    )?;
    data_io::write_likelihood_report(create(&out.join("likelihood_loss.csv"))?, &report)?;
    let s = &report.selected;
    write_json(
        &out.join("likelihood_summary.json"),
        &LikelihoodSummary {
            selected_eps_x: s.eps_x,
            selected_eps_theta: s.eps_theta,
            selected_i: s.i,
            selected_j: s.j,
            validation_loss: s.loss,
            test_loss,
            test_average_likelihood: test_al,
            failures: &report.failures,
            config_hash: &hash,
        },
    )?;
    println!(
        "selected eps_x = {}, eps_theta = {}, I = {}, J = {}, validation loss = {}",
        s.eps_x, s.eps_theta, s.i, s.j, s.loss
    );
    if let Some(t) = test_loss {
        println!("test loss = {t}");
    }
    if let Some(a) = test_al {
        println!("test average normalised likelihood = {a}");
    }
    Ok(())
}

pub fn cmd_posterior(cfg: &RunConfig) -> Result<()> {
    let file = load_model(&RunConfig::required(&cfg.model, "model")?)?;
    let (model, param_box) = file
        .likelihood()
        .ok_or_else(|| Error::Config("posterior needs a likelihood model file".into()))?;
    let mut obs = data_io::read_samples(&RunConfig::required(&cfg.observations, "observations")?)?;
    if obs.dim() != model.x_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.x_dim(),
            got: obs.dim(),
        });
    }
    if let Some(st) = &file.standardizer {
        obs = st.apply(&obs)?;
    }
    let grid = ThetaGrid::new(
        param_box,
        cfg.grid_resolution.unwrap_or(DEFAULT_GRID_RESOLUTION),
    )?;
    let post = sample_log_likelihood(model, &obs, &grid)?;
    let path = match &cfg.output {
        Some(p) => p.clone(),
        None => cfg.out_dir()?.join("posterior.csv"),
    };
    data_io::write_posterior(create(&path)?, &grid, &post)?;
    let cv = grid.cell_volume();
    let mean: Vec<f64> = (0..param_box.dim())
        .map(|d| {
            post.density
                .iter()
                .enumerate()
                .map(|(g, p)| grid.points().points()[[g, d]] * p * cv)
                .sum()
        })
        .collect();
    println!(
        "{} observations, {} grid points, total mass {}",
        obs.n(),
        grid.len(),
        post.density.sum() * cv
    );
    println!("posterior mean = {mean:?}");
    if post.uninformative {
        println!("warning: every likelihood estimate is at the floor; the posterior is flat");
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_study(cfg: &RunConfig) -> Result<()> {
    let mut bench = Benchmark::from_name(&RunConfig::required(&cfg.benchmark, "benchmark")?)?;
    let splits = cfg.splits()?;
    match &mut bench {
        Benchmark::GaussianShiftMise(b) => {
            if let Some(j) = cfg.j_max {
                b.j_max = j;
            }
            b.splits = splits;
        }
        Benchmark::PosteriorDistance(b) => {
            b.n = cfg.n.unwrap_or(b.n);
            b.i_max = cfg.i_max.unwrap_or(b.i_max);
            b.j_max = cfg.j_max.unwrap_or(b.j_max);
            b.permutations = cfg.b_permutations.unwrap_or(b.permutations);
            b.grid_resolution = cfg.grid_resolution.unwrap_or(b.grid_resolution);
            b.trials = cfg.trials.unwrap_or(b.trials);
            b.splits = splits;
        }
    }
    let sizes = cfg.sizes.clone().unwrap_or_else(|| bench.default_sizes());
    let base = cfg.seed();
    let seeds: Vec<u64> = (0..cfg.seeds.unwrap_or(DEFAULT_STUDY_SEEDS) as u64)
        .map(|k| base + k)
        .collect();
    let table = convergence_study(&bench, &sizes, &seeds)?;
    let out = cfg.out_dir()?;
    table.write_study_csv(create(&out.join("study.csv"))?)?;
    table.write_summary_csv(create(&out.join("summary.csv"))?)?;
    println!("{:>8} {:>14} {:>14}", "size", "mean", "se");
    for r in &table.summary {
        let se =
            r.se.map(|s| format!("{s:.6}"))
                .unwrap_or_else(|| "-".into());
        println!("{:>8} {:>14.6} {:>14}", r.size, r.mean, se);
    }
    if cfg.assert_monotone.unwrap_or(false) && !table.is_monotone_non_increasing() {
        return Err(Error::Numerical(format!(
            "mean {} is not non-increasing across sizes {sizes:?}",
            table.metric
        )));
    }
    Ok(())
}
