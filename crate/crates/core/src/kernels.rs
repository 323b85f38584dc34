//! Positive-definite kernels, Gram matrices and the default bandwidth grid.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::SampleSet;

/// Quantile levels of the squared pairwise distances used to build [`bandwidth_grid`].
pub const BANDWIDTH_QUANTILES: [f64; 5] = [0.05, 0.10, 0.25, 0.50, 0.75];

/// Largest subsample the bandwidth grid looks at.
pub const BANDWIDTH_SUBSAMPLE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `exp(-|z - y|^2 / (4 eps))`
    Gaussian,
}

/// A kernel family together with its bandwidth `eps` (a squared-distance scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub eps: f64,
}

impl KernelSpec {
    pub fn gaussian(eps: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Gaussian,
            eps,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::input(format!(
                "kernel bandwidth must be positive and finite, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// Kernel value as a function of squared distance.
    #[inline]
    pub fn from_sq_dist(&self, d2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-d2 / (4.0 * self.eps)).exp(),
        }
    }

    #[inline]
    pub(crate) fn between(&self, z: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        self.from_sq_dist(sq_dist(z, y))
    }
}

#[inline]
pub(crate) fn sq_dist(z: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    match (z.as_slice(), y.as_slice()) {
        (Some(a), Some(b)) => sq_dist_slices(a, b),
        _ => z.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum(),
    }
}

#[inline]
fn sq_dist_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += (x - y) * (x - y);
    }
    s
}

/// `K(z, y)` for two points of equal dimension.
pub fn eval_kernel(spec: &KernelSpec, z: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    if z.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: y.len(),
        });
    }
    if z.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::input("kernel arguments must be finite"));
    }
    Ok(spec.between(ArrayView1::from(z), ArrayView1::from(y)))
}

/// Symmetric `n x n` Gram matrix. The upper triangle is computed and mirrored,
/// so the result is exactly symmetric with a unit diagonal.
pub fn gram_matrix(spec: &KernelSpec, samples: &SampleSet) -> Result<Array2<f64>> {
    spec.validate()?;
    let pts = samples.points().as_standard_layout();
    let d = samples.dim();
    let flat = pts.as_slice().expect("standard layout");
    let n = samples.n();
    let row = |i: usize| &flat[i * d..(i + 1) * d];
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = row(i);
            (i + 1..n)
                .map(|j| spec.from_sq_dist(sq_dist_slices(zi, row(j))))
                .collect()
        })
        .collect();
    let mut gram = Array2::<f64>::eye(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            gram[[i, j]] = v;
            gram[[j, i]] = v;
        }
    }
    Ok(gram)
}

/// `m x n` matrix of kernel values between query rows and reference rows.
pub fn cross_kernel(
    spec: &KernelSpec,
    queries: &SampleSet,
    reference: &SampleSet,
) -> Result<Array2<f64>> {
    spec.validate()?;
    queries.check_dim(reference.dim())?;
    let (m, n, d) = (queries.n(), reference.n(), reference.dim());
    let q = queries.points().as_standard_layout();
    let r = reference.points().as_standard_layout();
    let (q, r) = (
        q.as_slice().expect("standard layout"),
        r.as_slice().expect("standard layout"),
    );
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let qi = &q[i * d..(i + 1) * d];
            (0..n).map(move |j| spec.from_sq_dist(sq_dist_slices(qi, &r[j * d..(j + 1) * d])))
        })
        .collect();
    Ok(Array2::from_shape_vec((m, n), rows).expect("shape"))
}

/// Default bandwidth grid: the [`BANDWIDTH_QUANTILES`] of squared pairwise
/// distances among the first `min(n, 1000)` rows, divided by 4. Zero
/// quantiles (duplicate points) are dropped; the result is ascending and
/// free of duplicates.
pub fn bandwidth_grid(samples: &SampleSet) -> Result<Vec<f64>> {
    let sub = samples.head(BANDWIDTH_SUBSAMPLE)?;
    let n = sub.n();
    if n < 2 {
        return Err(Error::input("bandwidth grid needs at least two points"));
    }
    let pts = sub.points();
    let mut d2: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d2.push(sq_dist(pts.row(i), pts.row(j)));
        }
    }
    d2.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = BANDWIDTH_QUANTILES
        .iter()
        .map(|&q| quantile_sorted(&d2, q) / 4.0)
        .filter(|e| *e > 0.0)
        .collect();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::input("all pairwise distances are zero"));
    }
    Ok(grid)
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}
