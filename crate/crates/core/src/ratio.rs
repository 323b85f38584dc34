//! Spectral series estimator of a density ratio `f(x) / g(x)`.
//!
//! The basis is fitted on the `G` sample, coefficients are `F`-sample means of
//! the basis functions, and the estimate is the positive part of the truncated
//! series. Truncation `J` and bandwidth are chosen on held-out data by
//! minimising
//!
//! ```text
//! L(J) = mean_G[ b_J(x)^2 ] - 2 mean_F[ b_J(x) ]
//! ```
//!
//! which equals the `L2(G)` error up to a constant. Coefficients do not depend
//! on `J`, so one basis evaluation per validation point serves every `J`.

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::sample::SampleSet;
use crate::spectral_basis::SpectralBasis;

/// Default truncation limit for ratio model selection.
pub const DEFAULT_J_MAX: usize = 8;

/// A truncatable series whose partial sums predict a ratio.
pub trait RatioSeries {
    fn n_terms(&self) -> usize;

    fn clip_negative(&self) -> bool;

    /// `m x n_terms` matrix whose `(k, j)` entry is the `j`-th series term at `xs[k]`.
    fn term_matrix(&self, xs: &SampleSet) -> Result<Array2<f64>>;
}

/// Anything that produces ratio predictions at a batch of points.
pub trait RatioPredictor {
    fn predict_batch(&self, xs: &SampleSet) -> Result<Vec<f64>>;
}

#[inline]
pub(crate) fn positive_part(v: f64, clip: bool) -> f64 {
    if clip && v < 0.0 {
        0.0
    } else {
        v
    }
}

/// `b_j = mean over F of psi_j(x)`.
pub fn fit_ratio_coeffs(basis: &SpectralBasis, samples_f: &SampleSet) -> Result<Array1<f64>> {
    let psi = basis.evaluate_batch(samples_f)?;
    Ok(psi.mean_axis(Axis(0)).expect("sample sets are non-empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioModel {
    basis: SpectralBasis,
    coeffs: Array1<f64>,
    j_selected: usize,
    clip_negative: bool,
}

impl RatioModel {
    /// Fit coefficients for every retained component; `J` starts at its maximum.
    pub fn fit(basis: SpectralBasis, samples_f: &SampleSet) -> Result<Self> {
        let coeffs = fit_ratio_coeffs(&basis, samples_f)?;
        let j = basis.n_kept();
        Self::from_parts(basis, coeffs, j, true)
    }

    pub fn from_parts(
        basis: SpectralBasis,
        coeffs: Array1<f64>,
        j_selected: usize,
        clip_negative: bool,
    ) -> Result<Self> {
        if coeffs.len() != basis.n_kept() {
            return Err(Error::DimensionMismatch {
                expected: basis.n_kept(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical("non-finite ratio coefficient".into()));
        }
        if j_selected == 0 || j_selected > basis.n_kept() {
            return Err(Error::input(format!(
                "J = {j_selected} outside 1..={}",
                basis.n_kept()
            )));
        }
        Ok(RatioModel {
            basis,
            coeffs,
            j_selected,
            clip_negative,
        })
    }

    pub(crate) fn revalidate(self) -> Result<Self> {
        Self::from_parts(
            self.basis.revalidate()?,
            self.coeffs,
            self.j_selected,
            self.clip_negative,
        )
    }

    pub fn with_j(mut self, j: usize) -> Result<Self> {
        self.check_j(j)?;
        self.j_selected = j;
        Ok(self)
    }

    pub fn with_clip(mut self, clip: bool) -> Self {
        self.clip_negative = clip;
        self
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &Array1<f64> {
        &self.coeffs
    }

    pub fn j_selected(&self) -> usize {
        self.j_selected
    }

    pub fn j_kept(&self) -> usize {
        self.basis.n_kept()
    }

    pub fn kernel(&self) -> &KernelSpec {
        self.basis.kernel()
    }

    fn check_j(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.j_kept() {
            return Err(Error::input(format!(
                "J = {j} outside 1..={}",
                self.j_kept()
            )));
        }
        Ok(())
    }

    /// Estimated ratio at `x` using the first `j` terms (default: selected `J`).
    pub fn predict(&self, x: &[f64], j: Option<usize>) -> Result<f64> {
        let j = j.unwrap_or(self.j_selected);
        self.check_j(j)?;
        let psi = self.basis.evaluate(x)?;
        let s: f64 = (0..j).map(|i| self.coeffs[i] * psi[i]).sum();
        Ok(positive_part(s, self.clip_negative))
    }

    pub fn predict_batch_j(&self, xs: &SampleSet, j: Option<usize>) -> Result<Vec<f64>> {
        let j = j.unwrap_or(self.j_selected);
        self.check_j(j)?;
        let psi = self.basis.evaluate_batch(xs)?;
        Ok(psi
            .rows()
            .into_iter()
            .map(|r| {
                let s: f64 = (0..j).map(|i| self.coeffs[i] * r[i]).sum();
                positive_part(s, self.clip_negative)
            })
            .collect())
    }
}

impl RatioSeries for RatioModel {
    fn n_terms(&self) -> usize {
        self.j_kept()
    }

    fn clip_negative(&self) -> bool {
        self.clip_negative
    }

    fn term_matrix(&self, xs: &SampleSet) -> Result<Array2<f64>> {
        let mut psi = self.basis.evaluate_batch(xs)?;
        for mut row in psi.rows_mut() {
            row *= &self.coeffs;
        }
        Ok(psi)
    }
}

impl RatioPredictor for RatioModel {
    fn predict_batch(&self, xs: &SampleSet) -> Result<Vec<f64>> {
        self.predict_batch_j(xs, None)
    }
}

/// Held-out loss of the `j`-term predictor.
pub fn estimate_ratio_loss<M: RatioSeries + ?Sized>(
    model: &M,
    val_g: &SampleSet,
    val_f: &SampleSet,
    j: usize,
) -> Result<f64> {
    if j == 0 || j > model.n_terms() {
        return Err(Error::input(format!(
            "J = {j} outside 1..={}",
            model.n_terms()
        )));
    }
    let clip = model.clip_negative();
    let predict = |terms: &Array2<f64>| -> Vec<f64> {
        terms
            .rows()
            .into_iter()
            .map(|r| {
                let mut s = 0.0;
                for t in r.iter().take(j) {
                    s += t;
                }
                positive_part(s, clip)
            })
            .collect()
    };
    let pg = predict(&model.term_matrix(val_g)?);
    let pf = predict(&model.term_matrix(val_f)?);
    Ok(loss_from_predictions(&pg, &pf))
}

fn loss_from_predictions(pg: &[f64], pf: &[f64]) -> f64 {
    let mut sq = 0.0;
    for p in pg {
        sq += p * p;
    }
    let mut lin = 0.0;
    for p in pf {
        lin += p;
    }
    sq / pg.len() as f64 - 2.0 * lin / pf.len() as f64
}

/// Loss of an arbitrary predictor under the same held-out criterion.
pub fn plugin_ratio_loss<P: RatioPredictor + ?Sized>(
    pred: &P,
    val_g: &SampleSet,
    val_f: &SampleSet,
) -> Result<f64> {
    let pg = pred.predict_batch(val_g)?;
    let pf = pred.predict_batch(val_f)?;
    Ok(loss_from_predictions(&pg, &pf))
}

/// Held-out loss for every `J = 1..=n_terms` from one pass over the term matrices.
pub fn ratio_j_scan<M: RatioSeries + ?Sized>(
    model: &M,
    val_g: &SampleSet,
    val_f: &SampleSet,
) -> Result<Vec<(usize, f64)>> {
    let jmax = model.n_terms();
    let clip = model.clip_negative();
    let accumulate = |terms: &Array2<f64>, square: bool| -> Vec<f64> {
        let mut acc = vec![0.0; jmax];
        for r in terms.rows() {
            let mut s = 0.0;
            for (j, t) in r.iter().enumerate() {
                s += t;
                let p = positive_part(s, clip);
                acc[j] += if square { p * p } else { p };
            }
        }
        acc
    };
    let sq = accumulate(&model.term_matrix(val_g)?, true);
    let lin = accumulate(&model.term_matrix(val_f)?, false);
    let (ng, nf) = (val_g.n() as f64, val_f.n() as f64);
    Ok((0..jmax)
        .map(|j| (j + 1, sq[j] / ng - 2.0 * lin[j] / nf))
        .collect())
}

/// Training and validation samples for ratio model selection.
#[derive(Debug, Clone)]
pub struct RatioData {
    pub train_g: SampleSet,
    pub train_f: SampleSet,
    pub val_g: SampleSet,
    pub val_f: SampleSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioLossEntry {
    pub eps: f64,
    pub j: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioLossReport {
    /// Every evaluated `(eps, J)` in grid order, then `J` ascending.
    pub entries: Vec<RatioLossEntry>,
    pub selected: RatioLossEntry,
    pub grid: Vec<f64>,
    /// Bandwidths that could not be fitted, with the reason.
    pub failures: Vec<(f64, String)>,
}

impl RatioLossReport {
    /// Loss curve over `J` at one bandwidth.
    pub fn per_j(&self, eps: f64) -> Vec<(usize, f64)> {
        self.entries
            .iter()
            .filter(|e| e.eps == eps)
            .map(|e| (e.j, e.loss))
            .collect()
    }
}

type ScanFit = (RatioModel, Vec<(usize, f64)>);

/// Joint choice of bandwidth and truncation minimising held-out loss.
/// Ties go to the smaller `J`, then the smaller bandwidth.
pub fn select_ratio_model(
    data: &RatioData,
    eps_grid: &[f64],
    j_max: usize,
) -> Result<(RatioModel, RatioLossReport)> {
    if eps_grid.is_empty() {
        return Err(Error::input("bandwidth grid is empty"));
    }
    if j_max == 0 {
        return Err(Error::input("j_max must be at least 1"));
    }
    let fits: Vec<(f64, Result<ScanFit>)> = eps_grid
        .par_iter()
        .map(|&eps| {
            let res = (|| {
                let kernel = KernelSpec::gaussian(eps)?;
                let basis = SpectralBasis::fit(&data.train_g, kernel, j_max)?;
                let model = RatioModel::fit(basis, &data.train_f)?;
                let scan = ratio_j_scan(&model, &data.val_g, &data.val_f)?;
                Ok((model, scan))
            })();
            (eps, res)
        })
        .collect();

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<(RatioLossEntry, usize)> = None;
    let mut models = Vec::with_capacity(fits.len());
    for (eps, res) in fits {
        match res {
            Ok((model, scan)) => {
                for (j, loss) in scan {
                    let e = RatioLossEntry { eps, j, loss };
                    entries.push(e);
                    if loss.is_finite() && best.as_ref().is_none_or(|(b, _)| better(&e, b)) {
                        best = Some((e, models.len()));
                    }
                }
                models.push(Some(model));
            }
            Err(err) => {
                log::warn!("bandwidth {eps} skipped: {err}");
                failures.push((eps, err.to_string()));
                models.push(None);
            }
        }
    }
    let Some((selected, idx)) = best else {
        return Err(Error::SelectionFailed(
            failures
                .iter()
                .map(|(e, m)| format!("eps {e}: {m}"))
                .collect(),
        ));
    };
    let model = models[idx]
        .take()
        .expect("selected model exists")
        .with_j(selected.j)?;
    Ok((
        model,
        RatioLossReport {
            entries,
            selected,
            grid: eps_grid.to_vec(),
            failures,
        },
    ))
}

fn better(a: &RatioLossEntry, b: &RatioLossEntry) -> bool {
    a.loss
        .total_cmp(&b.loss)
        .then(a.j.cmp(&b.j))
        .then(a.eps.total_cmp(&b.eps))
        .is_lt()
}
