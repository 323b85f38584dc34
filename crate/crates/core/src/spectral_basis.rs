//! Empirical kernel eigenbasis and its Nyström extension.
//!
//! The Gram matrix of a sample from `G` is diagonalised; its leading unit-norm
//! eigenvectors `v_j` with eigenvalues `l_j` define basis functions
//!
//! ```text
//! psi_j(x) = sqrt(n) / l_j * sum_k v_j[k] K(x, x_k)
//! ```
//!
//! which are orthonormal in the empirical `L2(G)` inner product and agree with
//! `sqrt(n) v_j[k]` at every training point `x_k`.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{cross_kernel, gram_matrix, KernelSpec};
use crate::sample::SampleSet;

/// Eigenvalues at or below this fraction of the largest one are discarded.
pub const EIGVAL_FLOOR_REL: f64 = 1e-10;

/// Consecutive retained eigenvalues closer than this fraction of the largest
/// one flag the basis as near-degenerate.
pub const GAP_WARN_REL: f64 = 1e-8;

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    /// Eigenvectors as columns, aligned with `values`.
    pub vectors: Array2<f64>,
}

/// Dense symmetric eigendecomposition. Only the lower triangle is read.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<SymmetricEigen> {
    let (n, m) = matrix.dim();
    if n != m || n == 0 {
        return Err(Error::input(format!(
            "expected a non-empty square matrix, got {n}x{m}"
        )));
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| matrix[[i, j]]);
    let evd = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer returns ascending order
    let values = Array1::from_iter((0..n).rev().map(|i| s[i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| u[(r, n - 1 - c)]);
    Ok(SymmetricEigen { values, vectors })
}

/// Fitted eigenbasis. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    kernel: KernelSpec,
    train_points: SampleSet,
    /// `n x J` unit-norm eigenvectors, columns ordered by descending eigenvalue.
    eigvecs: Array2<f64>,
    eigvals: Array1<f64>,
    near_degenerate: bool,
}

impl SpectralBasis {
    /// Diagonalise the Gram matrix of `samples` and keep up to `j_max`
    /// leading components whose eigenvalues clear the floor.
    pub fn fit(samples: &SampleSet, kernel: KernelSpec, j_max: usize) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::input("j_max must be at least 1"));
        }
        if samples.n() < 2 {
            return Err(Error::input("a spectral basis needs at least two points"));
        }
        let gram = gram_matrix(&kernel, samples)?;
        let eig = symmetric_eigen(&gram)?;
        let top = eig.values[0];
        let floor = EIGVAL_FLOOR_REL * top;
        let available = eig
            .values
            .iter()
            .take_while(|&&l| l > floor && l > 0.0)
            .count();
        if available == 0 {
            return Err(Error::DegenerateKernel { eps: kernel.eps });
        }
        let kept = available.min(j_max);
        let mut eigvecs = eig.vectors.slice(ndarray::s![.., ..kept]).to_owned();
        for mut col in eigvecs.columns_mut() {
            fix_sign(&mut col);
        }
        let eigvals = eig.values.slice(ndarray::s![..kept]).to_owned();
        let near_degenerate = eigvals
            .windows(2)
            .into_iter()
            .any(|w| w[0] - w[1] < GAP_WARN_REL * top);
        if near_degenerate {
            log::warn!(
                "eps = {}: retained eigenvalues are nearly tied; eigenvectors may be unstable",
                kernel.eps
            );
        }
        Ok(SpectralBasis {
            kernel,
            train_points: samples.clone(),
            eigvecs,
            eigvals,
            near_degenerate,
        })
    }

    /// Rebuild a basis from stored parts, re-checking its invariants.
    pub fn from_parts(
        kernel: KernelSpec,
        train_points: SampleSet,
        eigvecs: Array2<f64>,
        eigvals: Array1<f64>,
    ) -> Result<Self> {
        kernel.validate()?;
        if eigvecs.nrows() != train_points.n()
            || eigvecs.ncols() != eigvals.len()
            || eigvals.is_empty()
        {
            return Err(Error::input(
                "eigenvector/eigenvalue shapes disagree with training points",
            ));
        }
        if eigvals.iter().any(|l| !(l.is_finite() && *l > 0.0))
            || eigvecs.iter().any(|v| !v.is_finite())
        {
            return Err(Error::input(
                "eigenvalues must be positive and all entries finite",
            ));
        }
        let top = eigvals[0];
        let near_degenerate = eigvals
            .windows(2)
            .into_iter()
            .any(|w| w[0] - w[1] < GAP_WARN_REL * top);
        Ok(SpectralBasis {
            kernel,
            train_points,
            eigvecs,
            eigvals,
            near_degenerate,
        })
    }

    /// Re-check invariants of a deserialized basis.
    pub(crate) fn revalidate(self) -> Result<Self> {
        let points = SampleSet::new(self.train_points.into_points())?;
        Self::from_parts(self.kernel, points, self.eigvecs, self.eigvals)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn train_points(&self) -> &SampleSet {
        &self.train_points
    }

    pub fn eigvecs(&self) -> &Array2<f64> {
        &self.eigvecs
    }

    pub fn eigvals(&self) -> &Array1<f64> {
        &self.eigvals
    }

    /// Number of retained components.
    pub fn n_kept(&self) -> usize {
        self.eigvals.len()
    }

    pub fn n_train(&self) -> usize {
        self.train_points.n()
    }

    pub fn dim(&self) -> usize {
        self.train_points.dim()
    }

    pub fn near_degenerate(&self) -> bool {
        self.near_degenerate
    }

    /// Nyström extension at a single point.
    pub fn evaluate(&self, x: &[f64]) -> Result<Array1<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let q = SampleSet::from_rows(&[x.to_vec()])?;
        Ok(self.evaluate_batch(&q)?.index_axis_move(Axis(0), 0))
    }

    /// Nyström extension at every row of `xs`; returns `m x J`.
    pub fn evaluate_batch(&self, xs: &SampleSet) -> Result<Array2<f64>> {
        xs.check_dim(self.dim())?;
        let k = cross_kernel(&self.kernel, xs, &self.train_points)?;
        let mut out = k.dot(&self.eigvecs);
        let root_n = (self.n_train() as f64).sqrt();
        for (mut col, l) in out.columns_mut().into_iter().zip(self.eigvals.iter()) {
            col *= root_n / l;
        }
        Ok(out)
    }
}

/// Flip a vector so its largest-magnitude entry (first on ties) is positive.
fn fix_sign(col: &mut ndarray::ArrayViewMut1<'_, f64>) {
    let mut best = 0;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.mapv_inplace(|v| -v);
    }
}

/// Convenience wrapper around [`SpectralBasis::fit`].
pub fn fit_basis(samples: &SampleSet, kernel: KernelSpec, j_max: usize) -> Result<SpectralBasis> {
    SpectralBasis::fit(samples, kernel, j_max)
}
