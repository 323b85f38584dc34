//! Synthetic benchmark simulators.
//!
//! | model | theta | x |
//! |-------|-------|---|
//! | spiral | `t` in (0, 15) | `(t cos t, t sin t) + N(0, I)` |
//! | Klein bottle | `(t1, t2)` in (0, 2pi)^2 | 4-d immersion + `N(0, I)` |
//! | edges | `(alpha, lambda)` in [0, pi] x [-5, 5] | 20x20 binary edge image |
//! | Gaussian shift | `mu` | `N(mu, I_d)` |
//!
//! Edge images: each draw takes an angle `a = alpha + N(0, angle_sd)` and a
//! displacement `l = lambda + N_T(0, shift_sd)` truncated to `|l| <= max_shift`
//! pixels. With pixel centres `u = c + 0.5 - 10` (rightwards) and
//! `v = 10 - (r + 0.5)` (upwards), pixel `(r, c)` is 1 when
//! `u cos a + v sin a < l` and 0 otherwise. Images are flattened row-major.
//!
//! Joint draws use two independent ChaCha streams derived from the seed, one
//! for parameters and one for observation noise, so a joint draw over a
//! degenerate box reproduces the fixed-parameter simulator exactly.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{JointSample, SampleSet};

pub const EDGE_SIDE: usize = 20;
pub const EDGE_PIXELS: usize = EDGE_SIDE * EDGE_SIDE;

const NOISE_STREAM: u64 = 0;
const PARAM_STREAM: u64 = 1;
const MAX_REJECTIONS: usize = 100_000;

/// Per-parameter `(low, high)` bounds of a uniform prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox(pub Vec<(f64, f64)>);

impl ParamBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        let b = ParamBox(bounds);
        b.validate(false)?;
        Ok(b)
    }

    /// `allow_point` admits `low == high` (a point-mass prior).
    pub fn validate(&self, allow_point: bool) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::input("parameter box has no dimensions"));
        }
        for (i, &(lo, hi)) in self.0.iter().enumerate() {
            let ok = lo.is_finite() && hi.is_finite() && (lo < hi || (allow_point && lo == hi));
            if !ok {
                return Err(Error::input(format!(
                    "parameter {i}: invalid bounds ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn volume(&self) -> f64 {
        self.0.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(&self.0)
                .all(|(t, (lo, hi))| *lo <= *t && *t <= *hi)
    }

    /// Map each component to `[0, 1]` by its bounds.
    pub fn standardize(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.0)
            .map(|(t, (lo, hi))| (t - lo) / (hi - lo))
            .collect()
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.0
            .iter()
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Spiral {
        noise_sd: f64,
    },
    KleinBottle {
        noise_sd: f64,
    },
    Edges {
        angle_sd: f64,
        shift_sd: f64,
        max_shift: f64,
    },
    GaussianShift {
        dim: usize,
    },
}

/// Named model families, as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Spiral,
    Klein,
    Edges,
    GaussianShift,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spiral" => Ok(ModelKind::Spiral),
            "klein" | "klein-bottle" => Ok(ModelKind::Klein),
            "edges" => Ok(ModelKind::Edges),
            "gaussian-shift" => Ok(ModelKind::GaussianShift),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected spiral, klein, edges or gaussian-shift)"
            ))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Spiral => "spiral",
            ModelKind::Klein => "klein",
            ModelKind::Edges => "edges",
            ModelKind::GaussianShift => "gaussian-shift",
        })
    }
}

/// A simulation model with its uniform prior box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorSpec {
    pub model: Model,
    pub param_box: ParamBox,
}

impl SimulatorSpec {
    pub fn spiral() -> Self {
        SimulatorSpec {
            model: Model::Spiral { noise_sd: 1.0 },
            param_box: ParamBox(vec![(0.0, 15.0)]),
        }
    }

    pub fn klein() -> Self {
        SimulatorSpec {
            model: Model::KleinBottle { noise_sd: 1.0 },
            param_box: ParamBox(vec![(0.0, TAU), (0.0, TAU)]),
        }
    }

    pub fn edges() -> Self {
        SimulatorSpec {
            model: Model::Edges {
                angle_sd: FRAC_PI_4,
                shift_sd: 0.5,
                max_shift: 8.0,
            },
            param_box: ParamBox(vec![(0.0, PI), (-5.0, 5.0)]),
        }
    }

    pub fn gaussian_shift(dim: usize) -> Self {
        SimulatorSpec {
            model: Model::GaussianShift { dim },
            param_box: ParamBox(vec![(-1.0, 1.0)]),
        }
    }

    pub fn of_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Spiral => Self::spiral(),
            ModelKind::Klein => Self::klein(),
            ModelKind::Edges => Self::edges(),
            ModelKind::GaussianShift => Self::gaussian_shift(1),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            Model::Spiral { .. } => ModelKind::Spiral,
            Model::KleinBottle { .. } => ModelKind::Klein,
            Model::Edges { .. } => ModelKind::Edges,
            Model::GaussianShift { .. } => ModelKind::GaussianShift,
        }
    }

    /// Same model with every noise scale set to zero.
    pub fn noiseless(mut self) -> Self {
        self.model = match self.model {
            Model::Spiral { .. } => Model::Spiral { noise_sd: 0.0 },
            Model::KleinBottle { .. } => Model::KleinBottle { noise_sd: 0.0 },
            Model::Edges { max_shift, .. } => Model::Edges {
                angle_sd: 0.0,
                shift_sd: 0.0,
                max_shift,
            },
            m @ Model::GaussianShift { .. } => m,
        };
        self
    }

    pub fn with_box(mut self, param_box: ParamBox) -> Self {
        self.param_box = param_box;
        self
    }

    pub fn theta_dim(&self) -> usize {
        match self.model {
            Model::Spiral { .. } | Model::GaussianShift { .. } => 1,
            Model::KleinBottle { .. } | Model::Edges { .. } => 2,
        }
    }

    pub fn x_dim(&self) -> usize {
        match self.model {
            Model::Spiral { .. } => 2,
            Model::KleinBottle { .. } => 4,
            Model::Edges { .. } => EDGE_PIXELS,
            Model::GaussianShift { dim } => dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.param_box.validate(true)?;
        if self.param_box.dim() != self.theta_dim() {
            return Err(Error::input(format!(
                "{} takes {} parameter(s), box has {}",
                self.kind(),
                self.theta_dim(),
                self.param_box.dim()
            )));
        }
        let scales_ok = match self.model {
            Model::Spiral { noise_sd } | Model::KleinBottle { noise_sd } => noise_sd >= 0.0,
            Model::Edges {
                angle_sd,
                shift_sd,
                max_shift,
            } => angle_sd >= 0.0 && shift_sd >= 0.0 && max_shift > 0.0,
            Model::GaussianShift { dim } => dim >= 1,
        };
        if !scales_ok {
            return Err(Error::input(format!(
                "invalid noise settings for {:?}",
                self.model
            )));
        }
        if let Model::Edges { max_shift, .. } = self.model {
            let (lo, hi) = self.param_box.0[1];
            if lo < -max_shift || hi > max_shift {
                return Err(Error::input(
                    "edge displacement box exceeds the truncation bound",
                ));
            }
        }
        Ok(())
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.theta_dim(),
                got: theta.len(),
            });
        }
        if !self.param_box.contains(theta) {
            return Err(Error::input(format!(
                "parameter {theta:?} outside the box {:?}",
                self.param_box.0
            )));
        }
        Ok(())
    }

    fn draw_one(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self.model {
            Model::Spiral { noise_sd } => {
                let t = theta[0];
                vec![
                    t * t.cos() + noise_sd * gauss(rng),
                    t * t.sin() + noise_sd * gauss(rng),
                ]
            }
            Model::KleinBottle { noise_sd } => klein_point(theta[0], theta[1])
                .into_iter()
                .map(|c| c + noise_sd * gauss(rng))
                .collect(),
            Model::GaussianShift { dim } => (0..dim).map(|_| theta[0] + gauss(rng)).collect(),
            Model::Edges {
                angle_sd,
                shift_sd,
                max_shift,
            } => {
                let angle = theta[0] + angle_sd * gauss(rng);
                let shift = theta[1]
                    + truncated_normal(
                        rng,
                        0.0,
                        shift_sd,
                        -max_shift - theta[1],
                        max_shift - theta[1],
                    );
                rasterize_edge(angle, shift)
            }
        }
    }

    /// `n` draws of `x` at a fixed parameter.
    pub fn simulate(&self, theta: &[f64], n: usize, seed: u64) -> Result<SampleSet> {
        self.validate()?;
        self.check_theta(theta)?;
        if n == 0 {
            return Err(Error::input("cannot simulate an empty sample"));
        }
        let mut rng = stream_rng(seed, NOISE_STREAM);
        let mut data = Vec::with_capacity(n * self.x_dim());
        for _ in 0..n {
            data.extend(self.draw_one(theta, &mut rng));
        }
        SampleSet::new(Array2::from_shape_vec((n, self.x_dim()), data).expect("shape"))
    }

    /// `n` pairs with `theta ~ Uniform(box)` and one `x` per parameter draw.
    pub fn simulate_joint(&self, n: usize, seed: u64) -> Result<JointSample> {
        self.validate()?;
        if n == 0 {
            return Err(Error::input("cannot simulate an empty sample"));
        }
        let mut prng = stream_rng(seed, PARAM_STREAM);
        let mut nrng = stream_rng(seed, NOISE_STREAM);
        let p = self.theta_dim();
        let mut thetas = Vec::with_capacity(n * p);
        let mut xs = Vec::with_capacity(n * self.x_dim());
        for _ in 0..n {
            let theta = self.param_box.sample(&mut prng);
            xs.extend(self.draw_one(&theta, &mut nrng));
            thetas.extend(theta);
        }
        JointSample::new(
            SampleSet::new(Array2::from_shape_vec((n, p), thetas).expect("shape"))?,
            SampleSet::new(Array2::from_shape_vec((n, self.x_dim()), xs).expect("shape"))?,
        )
    }

    /// Marginal sample of `x`: a joint draw with the parameters discarded.
    pub fn simulate_marginal(&self, n: usize, seed: u64) -> Result<SampleSet> {
        Ok(self.simulate_joint(n, seed)?.x().clone())
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Noiseless Klein-bottle immersion in R^4.
pub fn klein_point(t1: f64, t2: f64) -> [f64; 4] {
    let r = 2.0 * (t2.cos() + 1.0);
    [
        r * t1.cos(),
        r * t1.sin(),
        2.0 * t2.sin() * (t1 / 2.0).cos(),
        2.0 * t2.sin() * (t1 / 2.0).sin(),
    ]
}

/// Binary 20x20 half-plane image for an edge with normal angle `angle` and
/// signed offset `shift` (pixels) from the image centre.
pub fn rasterize_edge(angle: f64, shift: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    let half = EDGE_SIDE as f64 / 2.0;
    let mut img = Vec::with_capacity(EDGE_PIXELS);
    for r in 0..EDGE_SIDE {
        let v = half - (r as f64 + 0.5);
        for col in 0..EDGE_SIDE {
            let u = col as f64 + 0.5 - half;
            img.push(if u * c + v * s < shift { 1.0 } else { 0.0 });
        }
    }
    img
}

/// Normal draw conditioned on `[lo, hi]`, by rejection.
pub fn truncated_normal(rng: &mut impl Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if sd == 0.0 {
        return mean.clamp(lo, hi);
    }
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        let v = mean + sd * z;
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
    // acceptance region deep in a tail
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn simulate_spiral(theta: f64, n: usize, seed: u64) -> Result<SampleSet> {
    SimulatorSpec::spiral().simulate(&[theta], n, seed)
}

pub fn simulate_klein(theta1: f64, theta2: f64, n: usize, seed: u64) -> Result<SampleSet> {
    SimulatorSpec::klein().simulate(&[theta1, theta2], n, seed)
}

pub fn simulate_edges(alpha: f64, lambda: f64, n: usize, seed: u64) -> Result<SampleSet> {
    SimulatorSpec::edges().simulate(&[alpha, lambda], n, seed)
}

/// `n` i.i.d. draws from `N(mu, I_d)`. The mean is not restricted to a prior box.
pub fn simulate_gaussian_shift(mu: f64, n: usize, d: usize, seed: u64) -> Result<SampleSet> {
    SimulatorSpec::gaussian_shift(d)
        .with_box(ParamBox(vec![(mu, mu)]))
        .simulate(&[mu], n, seed)
}

pub fn simulate_joint(spec: &SimulatorSpec, n: usize, seed: u64) -> Result<JointSample> {
    spec.simulate_joint(n, seed)
}
