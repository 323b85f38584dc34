#![allow(dead_code)]

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spectral_series::likelihood::TensorSeries;
use spectral_series::ratio::RatioSeries;
use spectral_series::sample::{JointSample, SampleSet};
use spectral_series::Result;

pub fn normal_sample(n: usize, d: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SampleSet::new(Array2::from_shape_simple_fn((n, d), || {
        StandardNormal.sample(&mut rng)
    }))
    .unwrap()
}

/// Joint sample with `theta ~ N(0, 1)` and `x = theta + N(0, 1)` per coordinate.
pub fn shifted_joint(n: usize, dx: usize, seed: u64) -> JointSample {
    let theta = normal_sample(n, 1, seed);
    let noise = normal_sample(n, dx, seed + 1000);
    let x = Array2::from_shape_fn((n, dx), |(k, c)| {
        theta.points()[[k, 0]] + noise.points()[[k, c]]
    });
    JointSample::new(theta, SampleSet::new(x).unwrap()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Single-term ratio series equal to `c` everywhere.
pub struct ConstRatio(pub f64);

impl RatioSeries for ConstRatio {
    fn n_terms(&self) -> usize {
        1
    }

    fn clip_negative(&self) -> bool {
        true
    }

    fn term_matrix(&self, xs: &SampleSet) -> Result<Array2<f64>> {
        Ok(Array2::from_elem((xs.n(), 1), self.0))
    }
}

/// One-by-one tensor series equal to `c` everywhere.
pub struct ConstTensor {
    coeff: Array2<f64>,
}

impl ConstTensor {
    pub fn new(c: f64) -> Self {
        ConstTensor {
            coeff: Array2::from_elem((1, 1), c),
        }
    }
}

impl TensorSeries for ConstTensor {
    fn n_x_terms(&self) -> usize {
        1
    }

    fn n_theta_terms(&self) -> usize {
        1
    }

    fn truncation(&self) -> (usize, usize) {
        (1, 1)
    }

    fn clip_negative(&self) -> bool {
        true
    }

    fn x_features(&self, xs: &SampleSet) -> Result<Array2<f64>> {
        Ok(Array2::ones((xs.n(), 1)))
    }

    fn theta_features(&self, thetas: &SampleSet) -> Result<Array2<f64>> {
        Ok(Array2::ones((thetas.n(), 1)))
    }

    fn coeff_matrix(&self) -> &Array2<f64> {
        &self.coeff
    }
}
