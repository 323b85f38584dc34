//! Sample containers and the seeded train/validation/test split.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x d` matrix of points, one point per row. Always non-empty and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    points: Array2<f64>,
}

impl SampleSet {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 {
            return Err(Error::input("sample set must contain at least one point"));
        }
        if d == 0 {
            return Err(Error::input("sample set must have dimension >= 1"));
        }
        if let Some(((i, j), v)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry {v} at row {i}, column {j}"
            )));
        }
        Ok(SampleSet { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::input(e.to_string()))?;
        Self::new(points)
    }

    /// A 1-d sample from a slice of scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let points = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::input(e.to_string()))?;
        Self::new(points)
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn into_points(self) -> Array2<f64> {
        self.points
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.points.select(Axis(0), idx))
    }

    /// The first `k` rows.
    pub fn head(&self, k: usize) -> Result<Self> {
        let k = k.min(self.n());
        Self::new(self.points.slice(ndarray::s![..k, ..]).to_owned())
    }

    pub fn column_means(&self) -> Array1<f64> {
        self.points.mean_axis(Axis(0)).expect("non-empty")
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Paired `(theta, x)` draws from a joint distribution, row-aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSample {
    theta: SampleSet,
    x: SampleSet,
}

impl JointSample {
    pub fn new(theta: SampleSet, x: SampleSet) -> Result<Self> {
        if theta.n() != x.n() {
            return Err(Error::input(format!(
                "theta labels ({}) and data rows ({}) differ in count",
                theta.n(),
                x.n()
            )));
        }
        Ok(JointSample { theta, x })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn theta(&self) -> &SampleSet {
        &self.theta
    }

    pub fn x(&self) -> &SampleSet {
        &self.x
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        JointSample::new(self.theta.select(idx)?, self.x.select(idx)?)
    }

    pub fn head(&self, k: usize) -> Result<Self> {
        JointSample::new(self.theta.head(k)?, self.x.head(k)?)
    }
}

/// Independent child seed for a labelled sub-task.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng.next_u64()
}

/// Fractions for a three-way split; they must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let s = SplitFractions {
            train,
            validation,
            test,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!(
                "split fractions out of [0, 1]: {parts:?}"
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1: {parts:?}"
            )));
        }
        if self.train == 0.0 || self.validation == 0.0 {
            return Err(Error::Config(
                "train and validation fractions must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Shuffled index partition of `0..n`. The test part may be empty.
    pub fn partition(&self, n: usize, seed: u64) -> Result<[Vec<usize>; 3]> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (self.train * n as f64).round() as usize;
        let n_val = ((self.validation * n as f64).round() as usize).min(n - n_train.min(n));
        if n_train == 0 || n_val == 0 {
            return Err(Error::input(format!(
                "{n} rows are too few for split {:?}",
                (self.train, self.validation, self.test)
            )));
        }
        let test = idx.split_off(n_train + n_val);
        let val = idx.split_off(n_train);
        Ok([idx, val, test])
    }
}

/// Train/validation/test pieces of one sample.
#[derive(Debug, Clone)]
pub struct Split<T> {
    pub train: T,
    pub validation: T,
    pub test: Option<T>,
}

pub fn split_sample(s: &SampleSet, fr: &SplitFractions, seed: u64) -> Result<Split<SampleSet>> {
    let [a, b, c] = fr.partition(s.n(), seed)?;
    Ok(Split {
        train: s.select(&a)?,
        validation: s.select(&b)?,
        test: if c.is_empty() {
            None
        } else {
            Some(s.select(&c)?)
        },
    })
}

pub fn split_joint(s: &JointSample, fr: &SplitFractions, seed: u64) -> Result<Split<JointSample>> {
    let [a, b, c] = fr.partition(s.n(), seed)?;
    Ok(Split {
        train: s.select(&a)?,
        validation: s.select(&b)?,
        test: if c.is_empty() {
            None
        } else {
            Some(s.select(&c)?)
        },
    })
}

/// Per-column z-scoring with statistics frozen from a reference sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Columns with zero spread keep a unit scale.
    pub fn fit(reference: &SampleSet) -> Self {
        let mean = reference.column_means();
        let n = reference.n() as f64;
        let scale = reference
            .points()
            .axis_iter(Axis(1))
            .zip(mean.iter())
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer {
            mean: mean.to_vec(),
            scale,
        }
    }

    pub fn apply(&self, s: &SampleSet) -> Result<SampleSet> {
        s.check_dim(self.mean.len())?;
        let mut pts = s.points().clone();
        for mut row in pts.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        SampleSet::new(pts)
    }
}
