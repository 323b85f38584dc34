//! Baselines, error metrics and seeded experiment protocols.

use std::f64::consts::PI;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::bandwidth_grid;
use crate::likelihood::{
    average_distance_over_trials, average_likelihood, select_likelihood_model, LikelihoodData,
    LikelihoodLossReport, LikelihoodModel, LikelihoodSelection, ThetaGrid, Trial,
    DEFAULT_GRID_RESOLUTION, DEFAULT_I_MAX, DEFAULT_J_MAX, DEFAULT_PERMUTATIONS,
};
use crate::ratio::{
    plugin_ratio_loss, select_ratio_model, RatioData, RatioLossReport, RatioModel, RatioPredictor,
};
use crate::sample::{
    derive_seed, split_joint, split_sample, JointSample, SampleSet, SplitFractions,
};
use crate::simulators::{simulate_gaussian_shift, ModelKind, SimulatorSpec};

/// Denominator floor of the KDE ratio baseline.
pub const G_FLOOR: f64 = 1e-12;

/// Largest dimension for which KDE bandwidths are cross-validated.
pub const KDE_CV_MAX_DIM: usize = 4;

const KDE_CV_FACTORS: [f64; 7] = [0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0];

/// Reference-rule bandwidth `mean_sd * (4 / ((d + 2) n))^(1 / (d + 4))`.
pub fn silverman_bandwidth(samples: &SampleSet) -> Result<f64> {
    let (n, d) = (samples.n(), samples.dim());
    if n < 2 {
        return Err(Error::input(
            "reference bandwidth needs at least two points",
        ));
    }
    let means = samples.column_means();
    let sd_mean = samples
        .points()
        .columns()
        .into_iter()
        .zip(means.iter())
        .map(|(c, m)| (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt())
        .sum::<f64>()
        / d as f64;
    if sd_mean <= 0.0 {
        return Err(Error::Numerical("sample has zero spread".into()));
    }
    Ok(sd_mean * (4.0 / ((d + 2) as f64 * n as f64)).powf(1.0 / (d as f64 + 4.0)))
}

/// Product-Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    samples: SampleSet,
    bandwidth: f64,
}

impl Kde {
    /// `bandwidth` defaults to the reference rule.
    pub fn new(samples: SampleSet, bandwidth: Option<f64>) -> Result<Self> {
        let bandwidth = match bandwidth {
            Some(h) => h,
            None => silverman_bandwidth(&samples)?,
        };
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::input(format!(
                "KDE bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Kde { samples, bandwidth })
    }

    /// Bandwidth maximising held-out log density over multiples of the
    /// reference rule when `d <= 4`; the reference rule otherwise.
    pub fn cross_validated(samples: SampleSet, held_out: &SampleSet) -> Result<Self> {
        let h0 = silverman_bandwidth(&samples)?;
        if samples.dim() > KDE_CV_MAX_DIM {
            return Kde::new(samples, Some(h0));
        }
        let mut best = (f64::NEG_INFINITY, h0);
        for f in KDE_CV_FACTORS {
            let kde = Kde::new(samples.clone(), Some(h0 * f))?;
            let ll = kde
                .density_batch(held_out)?
                .iter()
                .map(|v| v.max(f64::MIN_POSITIVE).ln())
                .sum::<f64>();
            if ll > best.0 {
                best = (ll, h0 * f);
            }
        }
        Kde::new(samples, Some(best.1))
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.samples.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.dim(),
                got: x.len(),
            });
        }
        let h = self.bandwidth;
        let d = x.len() as i32;
        let norm = (2.0 * PI).sqrt().powi(d) * h.powi(d);
        let s: f64 = self
            .samples
            .points()
            .rows()
            .into_iter()
            .map(|r| {
                let q: f64 = r.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                (-q / (2.0 * h * h)).exp()
            })
            .sum();
        Ok(s / (self.samples.n() as f64 * norm))
    }

    pub fn density_batch(&self, xs: &SampleSet) -> Result<Vec<f64>> {
        xs.check_dim(self.samples.dim())?;
        (0..xs.n())
            .into_par_iter()
            .map(|i| self.density(xs.row(i).as_slice().unwrap()))
            .collect()
    }
}

/// `(1/n) sum_k prod_dims N(x; sample_k, h^2)`; reference-rule `h` when unset.
pub fn kde_density(samples: &SampleSet, bandwidth: Option<f64>, x: &[f64]) -> Result<f64> {
    Kde::new(samples.clone(), bandwidth)?.density(x)
}

/// Ratio of two kernel density estimates, `f_hat / max(g_hat, g_floor)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeRatio {
    pub f: Kde,
    pub g: Kde,
    pub g_floor: f64,
}

impl KdeRatio {
    /// Bandwidths are cross-validated on the validation sets when given.
    pub fn fit(
        train_f: &SampleSet,
        train_g: &SampleSet,
        val_f: Option<&SampleSet>,
        val_g: Option<&SampleSet>,
    ) -> Result<Self> {
        train_f.check_dim(train_g.dim())?;
        let f = match val_f {
            Some(v) => Kde::cross_validated(train_f.clone(), v)?,
            None => Kde::new(train_f.clone(), None)?,
        };
        let g = match val_g {
            Some(v) => Kde::cross_validated(train_g.clone(), v)?,
            None => Kde::new(train_g.clone(), None)?,
        };
        Ok(KdeRatio {
            f,
            g,
            g_floor: G_FLOOR,
        })
    }

    /// Ratio value and whether the denominator was floored.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, bool)> {
        let g = self.g.density(x)?;
        let f = self.f.density(x)?;
        if g < self.g_floor {
            Ok((f / self.g_floor, true))
        } else {
            Ok((f / g, false))
        }
    }
}

impl RatioPredictor for KdeRatio {
    fn predict_batch(&self, xs: &SampleSet) -> Result<Vec<f64>> {
        let f = self.f.density_batch(xs)?;
        let g = self.g.density_batch(xs)?;
        let floored = g.iter().filter(|&&v| v < self.g_floor).count();
        if floored > 0 {
            log::warn!(
                "KDE ratio: {floored} denominators floored at {}",
                self.g_floor
            );
        }
        Ok(f.iter()
            .zip(&g)
            .map(|(f, g)| f / g.max(self.g_floor))
            .collect())
    }
}

/// Monte Carlo `mean_k (pred(x_k) - truth(x_k))^2` over an evaluation sample.
pub fn mise_vs_truth<P, T>(pred: &P, truth: T, eval: &SampleSet) -> Result<f64>
where
    P: RatioPredictor + ?Sized,
    T: Fn(&[f64]) -> f64,
{
    mise_from_predictions(&pred.predict_batch(eval)?, truth, eval)
}

fn mise_from_predictions<T: Fn(&[f64]) -> f64>(
    p: &[f64],
    truth: T,
    eval: &SampleSet,
) -> Result<f64> {
    let se: f64 = p
        .iter()
        .zip(eval.points().rows())
        .map(|(v, x)| (v - truth(&x.to_vec())).powi(2))
        .sum();
    Ok(se / eval.n() as f64)
}

/// Mean with its standard error across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Requires at least two values; `se = sd / sqrt(n)`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::input("a standard error needs at least two seeds"));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Estimate {
            mean,
            se: (var / n as f64).sqrt(),
        })
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Summary of one method over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: String,
    pub loss: Option<Estimate>,
    pub avg_likelihood: Option<Estimate>,
    /// `(m, estimate)` pairs.
    pub avg_distance: Vec<(usize, Estimate)>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
}

/// Shift family `F = N(mu 1, I_d)` against `G = N(0, I_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBenchmark {
    pub mu: f64,
    pub dim: usize,
    pub j_max: usize,
    /// Size of the fresh `G` sample used for MISE and the mean prediction.
    pub eval_size: usize,
    pub splits: SplitFractions,
}

impl Default for RatioBenchmark {
    fn default() -> Self {
        RatioBenchmark {
            mu: 0.5,
            dim: 1,
            j_max: crate::ratio::DEFAULT_J_MAX,
            eval_size: 5000,
            splits: SplitFractions::default(),
        }
    }
}

/// Split samples of one benchmark replicate.
#[derive(Debug, Clone)]
pub struct RatioReplicate {
    pub data: RatioData,
    pub test_f: SampleSet,
    pub test_g: SampleSet,
    pub eval_g: SampleSet,
}

/// Outcome of the series estimator on one replicate.
#[derive(Debug, Clone)]
pub struct RatioRun {
    pub model: RatioModel,
    pub report: RatioLossReport,
    pub test_loss: f64,
    pub mean_prediction: f64,
    pub mise: f64,
}

impl RatioBenchmark {
    /// `exp(mu sum(x) - d mu^2 / 2)`
    pub fn truth(&self, x: &[f64]) -> f64 {
        (self.mu * x.iter().sum::<f64>() - self.dim as f64 * self.mu * self.mu / 2.0).exp()
    }

    /// `n` draws from each of `F` and `G`, split by the benchmark fractions.
    pub fn replicate(&self, n: usize, seed: u64) -> Result<RatioReplicate> {
        let f = simulate_gaussian_shift(self.mu, n, self.dim, derive_seed(seed, 1))?;
        let g = simulate_gaussian_shift(0.0, n, self.dim, derive_seed(seed, 2))?;
        let sf = split_sample(&f, &self.splits, derive_seed(seed, 3))?;
        let sg = split_sample(&g, &self.splits, derive_seed(seed, 4))?;
        let eval_g = simulate_gaussian_shift(0.0, self.eval_size, self.dim, derive_seed(seed, 5))?;
        let (Some(test_f), Some(test_g)) = (sf.test, sg.test) else {
            return Err(Error::input("benchmark split needs a test part"));
        };
        Ok(RatioReplicate {
            data: RatioData {
                train_g: sg.train,
                train_f: sf.train,
                val_g: sg.validation,
                val_f: sf.validation,
            },
            test_f,
            test_g,
            eval_g,
        })
    }

    pub fn run_series(&self, rep: &RatioReplicate) -> Result<RatioRun> {
        let grid = bandwidth_grid(&rep.data.train_g)?;
        let (model, report) = select_ratio_model(&rep.data, &grid, self.j_max)?;
        let test_loss = plugin_ratio_loss(&model, &rep.test_g, &rep.test_f)?;
        let preds = model.predict_batch(&rep.eval_g)?;
        let mise = mise_from_predictions(&preds, |x| self.truth(x), &rep.eval_g)?;
        Ok(RatioRun {
            mean_prediction: mean(&preds),
            model,
            report,
            test_loss,
            mise,
        })
    }

    /// Test loss of the KDE ratio baseline.
    pub fn run_kde(&self, rep: &RatioReplicate) -> Result<f64> {
        let d = &rep.data;
        let kde = KdeRatio::fit(&d.train_f, &d.train_g, Some(&d.val_f), Some(&d.val_g))?;
        plugin_ratio_loss(&kde, &rep.test_g, &rep.test_f)
    }

    /// Series and KDE test losses over seeds at sample size `n`.
    pub fn compare(&self, n: usize, seeds: &[u64]) -> Result<[ExperimentResult; 2]> {
        let runs: Vec<(f64, f64)> = seeds
            .par_iter()
            .map(|&s| {
                let rep = self.replicate(n, s)?;
                Ok((self.run_series(&rep)?.test_loss, self.run_kde(&rep)?))
            })
            .collect::<Result<_>>()?;
        let config = serde_json::json!({ "benchmark": self, "n": n });
        let make = |method: &str, vals: Vec<f64>| -> Result<ExperimentResult> {
            Ok(ExperimentResult {
                method: method.into(),
                loss: Some(Estimate::from_values(&vals)?),
                avg_likelihood: None,
                avg_distance: Vec::new(),
                config: config.clone(),
                seeds: seeds.to_vec(),
            })
        };
        Ok([
            make("series", runs.iter().map(|r| r.0).collect())?,
            make("kde", runs.iter().map(|r| r.1).collect())?,
        ])
    }
}

/// Simulator-based likelihood benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodBenchmark {
    pub simulator: SimulatorSpec,
    /// Draws from each of the joint and the marginal.
    pub n: usize,
    pub i_max: usize,
    pub j_max: usize,
    pub permutations: usize,
    pub grid_resolution: usize,
    /// True parameters per seed for the distance curve.
    pub trials: usize,
    pub splits: SplitFractions,
}

impl LikelihoodBenchmark {
    pub fn new(simulator: SimulatorSpec) -> Self {
        LikelihoodBenchmark {
            simulator,
            n: 2000,
            i_max: DEFAULT_I_MAX,
            j_max: DEFAULT_J_MAX,
            permutations: DEFAULT_PERMUTATIONS,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            trials: 50,
            splits: SplitFractions::default(),
        }
    }

    pub fn grid(&self) -> Result<ThetaGrid> {
        ThetaGrid::new(&self.simulator.param_box, self.grid_resolution)
    }

    /// Simulate, split and select a model for one seed. Returns the model,
    /// its loss report and the test part of the joint sample.
    pub fn fit(&self, seed: u64) -> Result<(LikelihoodModel, LikelihoodLossReport, JointSample)> {
        let joint = self
            .simulator
            .simulate_joint(self.n, derive_seed(seed, 1))?;
        let marginal = self
            .simulator
            .simulate_marginal(self.n, derive_seed(seed, 2))?;
        let sj = split_joint(&joint, &self.splits, derive_seed(seed, 3))?;
        let sg = split_sample(&marginal, &self.splits, derive_seed(seed, 4))?;
        let test = sj
            .test
            .ok_or_else(|| Error::input("benchmark split needs a test part"))?;
        let cfg = LikelihoodSelection {
            eps_x: bandwidth_grid(&sg.train)?,
            eps_theta: bandwidth_grid(sj.train.theta())?,
            i_max: self.i_max,
            j_max: self.j_max,
            permutations: self.permutations,
            seed: derive_seed(seed, 5),
        };
        let data = LikelihoodData {
            train: sj.train,
            train_g: sg.train,
            val: sj.validation,
            val_g: sg.validation,
        };
        let (model, report) = select_likelihood_model(&data, &cfg)?;
        Ok((model, report, test))
    }

    /// Posterior distance for each `m`, with nested observation sets per trial.
    pub fn distance_curve(
        &self,
        model: &LikelihoodModel,
        ms: &[usize],
        seed: u64,
    ) -> Result<Vec<f64>> {
        let m_max = *ms
            .iter()
            .max()
            .ok_or_else(|| Error::input("empty observation grid"))?;
        if ms.contains(&0) {
            return Err(Error::input("observation counts must be positive"));
        }
        let grid = self.grid()?;
        let stars = self
            .simulator
            .simulate_joint(self.trials, derive_seed(seed, 6))?;
        let full: Vec<Trial> = (0..self.trials)
            .map(|t| {
                let theta_star = stars.theta().row(t).to_vec();
                let observations = self.simulator.simulate(
                    &theta_star,
                    m_max,
                    derive_seed(seed, 100 + t as u64),
                )?;
                Ok(Trial {
                    theta_star,
                    observations,
                })
            })
            .collect::<Result<_>>()?;
        ms.iter()
            .map(|&m| {
                let trials: Vec<Trial> = full
                    .iter()
                    .map(|t| {
                        Ok(Trial {
                            theta_star: t.theta_star.clone(),
                            observations: t.observations.head(m)?,
                        })
                    })
                    .collect::<Result<_>>()?;
                average_distance_over_trials(model, &trials, &grid)
            })
            .collect()
    }

    /// Normalised likelihood on the test pairs and the distance curve, over seeds.
    pub fn evaluate(&self, ms: &[usize], seeds: &[u64]) -> Result<ExperimentResult> {
        let grid = self.grid()?;
        let per_seed: Vec<(f64, Vec<f64>)> = seeds
            .par_iter()
            .map(|&s| {
                let (model, _, test) = self.fit(s)?;
                let al = average_likelihood(&model, &test, &grid)?;
                Ok((al, self.distance_curve(&model, ms, s)?))
            })
            .collect::<Result<_>>()?;
        let al: Vec<f64> = per_seed.iter().map(|r| r.0).collect();
        let avg_distance = ms
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let v: Vec<f64> = per_seed.iter().map(|r| r.1[i]).collect();
                Ok((m, Estimate::from_values(&v)?))
            })
            .collect::<Result<_>>()?;
        Ok(ExperimentResult {
            method: "series".into(),
            loss: None,
            avg_likelihood: Some(Estimate::from_values(&al)?),
            avg_distance,
            config: serde_json::json!({ "benchmark": self, "m_grid": ms }),
            seeds: seeds.to_vec(),
        })
    }
}

/// Convergence-study benchmark. Sizes are per-sample `n` for the ratio
/// benchmark and observation counts `m` for the likelihood benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Benchmark {
    GaussianShiftMise(RatioBenchmark),
    PosteriorDistance(LikelihoodBenchmark),
}

impl Benchmark {
    /// `gaussian-shift`, `spiral`, `klein` or `edges` with default settings.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian-shift" => Ok(Benchmark::GaussianShiftMise(RatioBenchmark::default())),
            other => match other.parse::<ModelKind>() {
                Ok(ModelKind::GaussianShift) | Err(_) => Err(Error::Config(format!(
                    "unknown benchmark '{name}' (expected gaussian-shift, spiral, klein or edges)"
                ))),
                Ok(kind) => Ok(Benchmark::PosteriorDistance(LikelihoodBenchmark::new(
                    SimulatorSpec::of_kind(kind),
                ))),
            },
        }
    }

    pub fn default_sizes(&self) -> Vec<usize> {
        match self {
            Benchmark::GaussianShiftMise(_) => vec![250, 1000, 4000],
            Benchmark::PosteriorDistance(_) => vec![1, 5, 25],
        }
    }

    pub fn metric_name(&self) -> &'static str {
        match self {
            Benchmark::GaussianShiftMise(_) => "mise",
            Benchmark::PosteriorDistance(_) => "avg_distance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub size: usize,
    pub seed: u64,
    pub metric: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub size: usize,
    pub mean: f64,
    /// `None` with fewer than two valid cells.
    pub se: Option<f64>,
    pub valid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub metric: String,
    /// Sorted by `(size, seed)`.
    pub cells: Vec<StudyCell>,
    /// One row per size, in grid order.
    pub summary: Vec<StudyRow>,
}

impl StudyTable {
    /// Means never increase along the size grid (and every size has a valid cell).
    pub fn is_monotone_non_increasing(&self) -> bool {
        self.summary.iter().all(|r| r.valid > 0)
            && self.summary.windows(2).all(|w| w[1].mean <= w[0].mean)
    }

    /// `size,seed,metric` rows; invalid cells leave the metric empty.
    pub fn write_study_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["size", "seed", self.metric.as_str()])?;
        for c in &self.cells {
            out.write_record([
                c.size.to_string(),
                c.seed.to_string(),
                c.metric.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `size,mean,se` rows.
    pub fn write_summary_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["size", "mean", "se"])?;
        for r in &self.summary {
            out.write_record([
                r.size.to_string(),
                r.mean.to_string(),
                r.se.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn cell(size: usize, seed: u64, r: Result<f64>) -> StudyCell {
    match r {
        Ok(v) if v.is_finite() => StudyCell {
            size,
            seed,
            metric: Some(v),
            error: None,
        },
        Ok(v) => StudyCell {
            size,
            seed,
            metric: None,
            error: Some(format!("non-finite metric {v}")),
        },
        Err(e) => StudyCell {
            size,
            seed,
            metric: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs the benchmark for every size and seed. Failed cells are recorded and
/// excluded from the summary.
pub fn convergence_study(
    benchmark: &Benchmark,
    sizes: &[usize],
    seeds: &[u64],
) -> Result<StudyTable> {
    if sizes.is_empty() || seeds.is_empty() {
        return Err(Error::input("study needs at least one size and one seed"));
    }
    let mut cells: Vec<StudyCell> = match benchmark {
        Benchmark::GaussianShiftMise(b) => sizes
            .iter()
            .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(n, s)| {
                cell(
                    n,
                    s,
                    b.replicate(n, s)
                        .and_then(|r| b.run_series(&r))
                        .map(|r| r.mise),
                )
            })
            .collect(),
        Benchmark::PosteriorDistance(b) => seeds
            .par_iter()
            .flat_map_iter(|&s| {
                match b
                    .fit(s)
                    .and_then(|(m, _, _)| b.distance_curve(&m, sizes, s))
                {
                    Ok(curve) => sizes
                        .iter()
                        .zip(curve)
                        .map(|(&m, v)| cell(m, s, Ok(v)))
                        .collect::<Vec<_>>(),
                    Err(e) => {
                        let msg = e.to_string();
                        sizes
                            .iter()
                            .map(|&m| StudyCell {
                                size: m,
                                seed: s,
                                metric: None,
                                error: Some(msg.clone()),
                            })
                            .collect()
                    }
                }
            })
            .collect(),
    };
    for c in cells.iter().filter(|c| c.error.is_some()) {
        log::warn!(
            "study cell size={} seed={} failed: {}",
            c.size,
            c.seed,
            c.error.as_deref().unwrap_or("")
        );
    }
    cells.sort_by_key(|c| (c.size, c.seed));
    let summary = sizes
        .iter()
        .map(|&size| {
            let vals: Vec<f64> = cells
                .iter()
                .filter(|c| c.size == size)
                .filter_map(|c| c.metric)
                .collect();
            StudyRow {
                size,
                mean: if vals.is_empty() {
                    f64::NAN
                } else {
                    mean(&vals)
                },
                se: Estimate::from_values(&vals).ok().map(|e| e.se),
                valid: vals.len(),
            }
        })
        .collect();
    Ok(StudyTable {
        metric: benchmark.metric_name().into(),
        cells,
        summary,
    })
}

/// Mean prediction of a ratio estimate over a sample.
pub fn mean_prediction<P: RatioPredictor + ?Sized>(pred: &P, xs: &SampleSet) -> Result<f64> {
    Ok(mean(&pred.predict_batch(xs)?))
}

/// Trapezoid rule for samples on a uniform 1-d grid.
pub fn trapezoid(values: &Array1<f64>, step: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    step * (values.sum() - 0.5 * (values[0] + values[n - 1]))
}
