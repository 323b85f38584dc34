//! Spectral series estimator of the likelihood ratio `L(x; theta) = f(x | theta) / g(x)`.
//!
//! Two eigenbases are fitted: `psi_j` on a marginal sample of `x` and `phi_i` on
//! the parameter draws of the joint sample. The tensor products
//! `psi_j(x) phi_i(theta)` are orthonormal under `G x F_theta`, so the
//! coefficients are plain joint-sample means
//!
//! ```text
//! b_ij = mean_k psi_j(x_k) phi_i(theta_k)
//! ```
//!
//! and the doubly truncated series `sum_{i <= I, j <= J} b_ij psi_j(x) phi_i(theta)`
//! estimates `L`. Held-out loss pairs marginal draws with randomly permuted
//! validation parameters to approximate the product measure.

use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::ratio::positive_part;
use crate::sample::{JointSample, SampleSet};
use crate::simulators::ParamBox;
use crate::spectral_basis::SpectralBasis;

/// Default number of permutations in the held-out loss.
pub const DEFAULT_PERMUTATIONS: usize = 20;

/// Floor applied to single-observation likelihoods before taking logs.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Default truncation limits for likelihood model selection.
pub const DEFAULT_I_MAX: usize = 50;
pub const DEFAULT_J_MAX: usize = 50;

/// Default grid points per parameter dimension.
pub const DEFAULT_GRID_RESOLUTION: usize = 50;

/// A tensor-product series in `(x, theta)`.
pub trait TensorSeries {
    /// Retained `x` components (`J` upper bound).
    fn n_x_terms(&self) -> usize;

    /// Retained `theta` components (`I` upper bound).
    fn n_theta_terms(&self) -> usize;

    /// Selected `(I, J)`.
    fn truncation(&self) -> (usize, usize);

    fn clip_negative(&self) -> bool;

    /// `m x J` basis values at the rows of `xs`.
    fn x_features(&self, xs: &SampleSet) -> Result<Array2<f64>>;

    /// `m x I` basis values at the rows of `thetas`.
    fn theta_features(&self, thetas: &SampleSet) -> Result<Array2<f64>>;

    /// `J x I` coefficient matrix.
    fn coeff_matrix(&self) -> &Array2<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodModel {
    basis_x: SpectralBasis,
    basis_theta: SpectralBasis,
    /// `J_kept x I_kept`
    coeffs: Array2<f64>,
    i_selected: usize,
    j_selected: usize,
    clip_negative: bool,
}

/// `b = Psi^T Phi / n` with rows of `psi` and `phi` aligned by draw.
fn cross_mean(psi: &Array2<f64>, phi: &Array2<f64>) -> Array2<f64> {
    psi.t().dot(phi) / psi.nrows() as f64
}

/// Coefficients of the tensor series for fixed bases.
pub fn fit_likelihood_coeffs(
    basis_x: &SpectralBasis,
    basis_theta: &SpectralBasis,
    joint: &JointSample,
) -> Result<Array2<f64>> {
    let psi = basis_x.evaluate_batch(joint.x())?;
    let phi = basis_theta.evaluate_batch(joint.theta())?;
    Ok(cross_mean(&psi, &phi))
}

impl LikelihoodModel {
    /// Fit both bases and the coefficient matrix; `(I, J)` start at their maxima.
    pub fn fit(
        joint: &JointSample,
        samples_g: &SampleSet,
        kernel_x: KernelSpec,
        kernel_theta: KernelSpec,
        i_max: usize,
        j_max: usize,
    ) -> Result<Self> {
        if i_max == 0 || j_max == 0 {
            return Err(Error::input("truncation limits must be at least 1"));
        }
        joint.x().check_dim(samples_g.dim())?;
        let basis_x = SpectralBasis::fit(samples_g, kernel_x, j_max)?;
        let basis_theta = SpectralBasis::fit(joint.theta(), kernel_theta, i_max)?;
        let coeffs = fit_likelihood_coeffs(&basis_x, &basis_theta, joint)?;
        let (i, j) = (basis_theta.n_kept(), basis_x.n_kept());
        Self::from_parts(basis_x, basis_theta, coeffs, i, j, true)
    }

    pub fn from_parts(
        basis_x: SpectralBasis,
        basis_theta: SpectralBasis,
        coeffs: Array2<f64>,
        i_selected: usize,
        j_selected: usize,
        clip_negative: bool,
    ) -> Result<Self> {
        if coeffs.dim() != (basis_x.n_kept(), basis_theta.n_kept()) {
            return Err(Error::input(format!(
                "coefficient matrix is {:?}, bases need ({}, {})",
                coeffs.dim(),
                basis_x.n_kept(),
                basis_theta.n_kept()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical("non-finite likelihood coefficient".into()));
        }
        let m = LikelihoodModel {
            basis_x,
            basis_theta,
            coeffs,
            i_selected,
            j_selected,
            clip_negative,
        };
        m.check_truncation(i_selected, j_selected)?;
        Ok(m)
    }

    pub(crate) fn revalidate(self) -> Result<Self> {
        Self::from_parts(
            self.basis_x.revalidate()?,
            self.basis_theta.revalidate()?,
            self.coeffs,
            self.i_selected,
            self.j_selected,
            self.clip_negative,
        )
    }

    pub fn with_truncation(mut self, i: usize, j: usize) -> Result<Self> {
        self.check_truncation(i, j)?;
        self.i_selected = i;
        self.j_selected = j;
        Ok(self)
    }

    pub fn with_clip(mut self, clip: bool) -> Self {
        self.clip_negative = clip;
        self
    }

    fn check_truncation(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || i > self.basis_theta.n_kept() || j == 0 || j > self.basis_x.n_kept() {
            return Err(Error::input(format!(
                "(I, J) = ({i}, {j}) outside (1..={}, 1..={})",
                self.basis_theta.n_kept(),
                self.basis_x.n_kept()
            )));
        }
        Ok(())
    }

    pub fn basis_x(&self) -> &SpectralBasis {
        &self.basis_x
    }

    pub fn basis_theta(&self) -> &SpectralBasis {
        &self.basis_theta
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub fn i_selected(&self) -> usize {
        self.i_selected
    }

    pub fn j_selected(&self) -> usize {
        self.j_selected
    }

    pub fn x_dim(&self) -> usize {
        self.basis_x.dim()
    }

    pub fn theta_dim(&self) -> usize {
        self.basis_theta.dim()
    }

    /// Unclipped series value with explicit truncation.
    pub fn series_value(&self, x: &[f64], theta: &[f64], i: usize, j: usize) -> Result<f64> {
        self.check_truncation(i, j)?;
        let psi = self.basis_x.evaluate(x)?;
        let phi = self.basis_theta.evaluate(theta)?;
        Ok(tensor_value(
            psi.as_slice().unwrap(),
            phi.as_slice().unwrap(),
            &self.coeffs,
            i,
            j,
        ))
    }

    /// Estimated likelihood at `(x, theta)`; truncations default to the selected ones.
    pub fn predict(
        &self,
        x: &[f64],
        theta: &[f64],
        i: Option<usize>,
        j: Option<usize>,
    ) -> Result<f64> {
        let v = self.series_value(
            x,
            theta,
            i.unwrap_or(self.i_selected),
            j.unwrap_or(self.j_selected),
        )?;
        Ok(positive_part(v, self.clip_negative))
    }
}

impl TensorSeries for LikelihoodModel {
    fn n_x_terms(&self) -> usize {
        self.basis_x.n_kept()
    }

    fn n_theta_terms(&self) -> usize {
        self.basis_theta.n_kept()
    }

    fn truncation(&self) -> (usize, usize) {
        (self.i_selected, self.j_selected)
    }

    fn clip_negative(&self) -> bool {
        self.clip_negative
    }

    fn x_features(&self, xs: &SampleSet) -> Result<Array2<f64>> {
        self.basis_x.evaluate_batch(xs)
    }

    fn theta_features(&self, thetas: &SampleSet) -> Result<Array2<f64>> {
        self.basis_theta.evaluate_batch(thetas)
    }

    fn coeff_matrix(&self) -> &Array2<f64> {
        &self.coeffs
    }
}

/// `sum_{i < ti} phi_i sum_{j < tj} b_ji psi_j`, summed in the same order as
/// the incremental scan.
fn tensor_value(psi: &[f64], phi: &[f64], coeffs: &Array2<f64>, ti: usize, tj: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..ti {
        let mut r = 0.0;
        for j in 0..tj {
            r += coeffs[[j, i]] * psi[j];
        }
        total += phi[i] * r;
    }
    total
}

/// Adds the clipped value (or its square) of every `(I, J)` partial sum
/// into `acc` (`I x J`, row-major).
fn accumulate_partial_sums(
    psi: &[f64],
    phi: &[f64],
    coeffs: &Array2<f64>,
    clip: bool,
    square: bool,
    row: &mut [f64],
    acc: &mut [f64],
) {
    let (nj, ni) = coeffs.dim();
    row.iter_mut().for_each(|v| *v = 0.0);
    let mut cum = vec![0.0; nj];
    for i in 0..ni {
        let mut r = 0.0;
        for j in 0..nj {
            r += coeffs[[j, i]] * psi[j];
            cum[j] = r;
        }
        let p = phi[i];
        let out = &mut acc[i * nj..(i + 1) * nj];
        for j in 0..nj {
            row[j] += p * cum[j];
            let v = positive_part(row[j], clip);
            out[j] += if square { v * v } else { v };
        }
    }
}

/// `b` seeded random permutations of `0..n`.
pub fn permutations(n: usize, b: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..b)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect()
}

fn check_perms(perms: &[Vec<usize>], n: usize) -> Result<()> {
    if perms.is_empty() {
        return Err(Error::input("at least one permutation is required"));
    }
    for p in perms {
        let mut seen = vec![false; n];
        if p.len() != n
            || !p
                .iter()
                .all(|&k| k < n && !std::mem::replace(&mut seen[k], true))
        {
            return Err(Error::input("invalid permutation"));
        }
    }
    Ok(())
}

fn check_validation(val_g: &SampleSet, val_joint: &JointSample) -> Result<()> {
    if val_g.n() != val_joint.n() {
        return Err(Error::input(format!(
            "validation marginal ({}) and joint ({}) samples must have equal size",
            val_g.n(),
            val_joint.n()
        )));
    }
    Ok(())
}

/// Pre-evaluated validation features.
struct ValidationFeatures {
    psi_g: Array2<f64>,
    psi_f: Array2<f64>,
    phi: Array2<f64>,
}

/// Loss table over every `(I, J)`; entry `[i - 1, j - 1]`.
fn scan_features(
    v: &ValidationFeatures,
    coeffs: &Array2<f64>,
    perms: &[Vec<usize>],
    clip: bool,
) -> Array2<f64> {
    let (nj, ni) = coeffs.dim();
    let n = v.psi_g.nrows();
    let mut row = vec![0.0; nj];
    let mut first = vec![0.0; ni * nj];
    let mut acc = vec![0.0; ni * nj];
    for p in perms {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (k, &pk) in p.iter().enumerate() {
            let psi = v.psi_g.row(k);
            let phi = v.phi.row(pk);
            accumulate_partial_sums(
                &psi.as_slice().unwrap()[..nj],
                &phi.as_slice().unwrap()[..ni],
                coeffs,
                clip,
                true,
                &mut row,
                &mut acc,
            );
        }
        for (f, a) in first.iter_mut().zip(&acc) {
            *f += a / n as f64;
        }
    }
    let mut lin = vec![0.0; ni * nj];
    for k in 0..n {
        accumulate_partial_sums(
            &v.psi_f.row(k).as_slice().unwrap()[..nj],
            &v.phi.row(k).as_slice().unwrap()[..ni],
            coeffs,
            clip,
            false,
            &mut row,
            &mut lin,
        );
    }
    let b = perms.len() as f64;
    Array2::from_shape_fn((ni, nj), |(i, j)| {
        let idx = i * nj + j;
        first[idx] / b - 2.0 * lin[idx] / n as f64
    })
}

fn loss_features(
    v: &ValidationFeatures,
    coeffs: &Array2<f64>,
    perms: &[Vec<usize>],
    clip: bool,
    ti: usize,
    tj: usize,
) -> f64 {
    let n = v.psi_g.nrows();
    let mut first = 0.0;
    for p in perms {
        let mut acc = 0.0;
        for (k, &pk) in p.iter().enumerate() {
            let s = tensor_value(
                v.psi_g.row(k).as_slice().unwrap(),
                v.phi.row(pk).as_slice().unwrap(),
                coeffs,
                ti,
                tj,
            );
            let q = positive_part(s, clip);
            acc += q * q;
        }
        first += acc / n as f64;
    }
    let mut lin = 0.0;
    for k in 0..n {
        let s = tensor_value(
            v.psi_f.row(k).as_slice().unwrap(),
            v.phi.row(k).as_slice().unwrap(),
            coeffs,
            ti,
            tj,
        );
        lin += positive_part(s, clip);
    }
    first / perms.len() as f64 - 2.0 * lin / n as f64
}

fn features<M: TensorSeries + ?Sized>(
    model: &M,
    val_g: &SampleSet,
    val_joint: &JointSample,
) -> Result<ValidationFeatures> {
    check_validation(val_g, val_joint)?;
    Ok(ValidationFeatures {
        psi_g: model.x_features(val_g)?.as_standard_layout().to_owned(),
        psi_f: model
            .x_features(val_joint.x())?
            .as_standard_layout()
            .to_owned(),
        phi: model
            .theta_features(val_joint.theta())?
            .as_standard_layout()
            .to_owned(),
    })
}

/// Held-out loss at truncation `(i, j)` with explicit permutations.
pub fn estimate_likelihood_loss_with_perms<M: TensorSeries + ?Sized>(
    model: &M,
    val_g: &SampleSet,
    val_joint: &JointSample,
    perms: &[Vec<usize>],
    i: usize,
    j: usize,
) -> Result<f64> {
    if i == 0 || i > model.n_theta_terms() || j == 0 || j > model.n_x_terms() {
        return Err(Error::input(format!("(I, J) = ({i}, {j}) out of range")));
    }
    check_perms(perms, val_joint.n())?;
    let v = features(model, val_g, val_joint)?;
    Ok(loss_features(
        &v,
        model.coeff_matrix(),
        perms,
        model.clip_negative(),
        i,
        j,
    ))
}

/// Held-out loss at truncation `(i, j)` averaged over `b` seeded permutations.
pub fn estimate_likelihood_loss<M: TensorSeries + ?Sized>(
    model: &M,
    val_g: &SampleSet,
    val_joint: &JointSample,
    b: usize,
    i: usize,
    j: usize,
    seed: u64,
) -> Result<f64> {
    if b == 0 {
        return Err(Error::input("number of permutations must be at least 1"));
    }
    check_validation(val_g, val_joint)?;
    let perms = permutations(val_joint.n(), b, seed);
    estimate_likelihood_loss_with_perms(model, val_g, val_joint, &perms, i, j)
}

/// Loss for every `(I, J)` from one basis evaluation per validation point.
/// Entry `[i - 1, j - 1]` holds the loss at truncation `(i, j)`.
pub fn likelihood_ij_scan<M: TensorSeries + ?Sized>(
    model: &M,
    val_g: &SampleSet,
    val_joint: &JointSample,
    perms: &[Vec<usize>],
) -> Result<Array2<f64>> {
    check_perms(perms, val_joint.n())?;
    let v = features(model, val_g, val_joint)?;
    Ok(scan_features(
        &v,
        model.coeff_matrix(),
        perms,
        model.clip_negative(),
    ))
}

/// Training and validation samples for likelihood model selection.
#[derive(Debug, Clone)]
pub struct LikelihoodData {
    /// Joint `(theta, x)` draws for the coefficients and the parameter basis.
    pub train: JointSample,
    /// Marginal `x` draws for the data basis.
    pub train_g: SampleSet,
    pub val: JointSample,
    pub val_g: SampleSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSelection {
    pub eps_x: Vec<f64>,
    pub eps_theta: Vec<f64>,
    pub i_max: usize,
    pub j_max: usize,
    pub permutations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodLossEntry {
    pub eps_x: f64,
    pub eps_theta: f64,
    pub i: usize,
    pub j: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodLossReport {
    pub entries: Vec<LikelihoodLossEntry>,
    pub selected: LikelihoodLossEntry,
    pub failures: Vec<String>,
}

fn better(a: &LikelihoodLossEntry, b: &LikelihoodLossEntry) -> bool {
    a.loss
        .total_cmp(&b.loss)
        .then((a.i + a.j).cmp(&(b.i + b.j)))
        .then(a.eps_x.total_cmp(&b.eps_x))
        .then(a.eps_theta.total_cmp(&b.eps_theta))
        .then(a.i.cmp(&b.i))
        .is_lt()
}

struct XFit {
    basis: SpectralBasis,
    train: Array2<f64>,
    val_g: Array2<f64>,
    val_f: Array2<f64>,
}

struct ThetaFit {
    basis: SpectralBasis,
    train: Array2<f64>,
    val: Array2<f64>,
}

/// Joint choice of both bandwidths and `(I, J)` minimising the permutation loss.
/// Ties go to the smaller `I + J`, then the smaller bandwidths.
pub fn select_likelihood_model(
    data: &LikelihoodData,
    cfg: &LikelihoodSelection,
) -> Result<(LikelihoodModel, LikelihoodLossReport)> {
    if cfg.eps_x.is_empty() || cfg.eps_theta.is_empty() {
        return Err(Error::input("bandwidth grids must be non-empty"));
    }
    if cfg.i_max == 0 || cfg.j_max == 0 || cfg.permutations == 0 {
        return Err(Error::input(
            "i_max, j_max and the permutation count must be positive",
        ));
    }
    check_validation(&data.val_g, &data.val)?;
    data.train.x().check_dim(data.train_g.dim())?;
    let perms = permutations(data.val.n(), cfg.permutations, cfg.seed);

    let x_fits: Vec<(f64, Result<XFit>)> = cfg
        .eps_x
        .par_iter()
        .map(|&eps| {
            let r = (|| {
                let basis =
                    SpectralBasis::fit(&data.train_g, KernelSpec::gaussian(eps)?, cfg.j_max)?;
                Ok(XFit {
                    train: basis.evaluate_batch(data.train.x())?,
                    val_g: basis.evaluate_batch(&data.val_g)?,
                    val_f: basis.evaluate_batch(data.val.x())?,
                    basis,
                })
            })();
            (eps, r)
        })
        .collect();
    let t_fits: Vec<(f64, Result<ThetaFit>)> = cfg
        .eps_theta
        .par_iter()
        .map(|&eps| {
            let r = (|| {
                let basis =
                    SpectralBasis::fit(data.train.theta(), KernelSpec::gaussian(eps)?, cfg.i_max)?;
                Ok(ThetaFit {
                    train: basis.evaluate_batch(data.train.theta())?,
                    val: basis.evaluate_batch(data.val.theta())?,
                    basis,
                })
            })();
            (eps, r)
        })
        .collect();

    let mut failures = Vec::new();
    for (eps, r) in &x_fits {
        if let Err(e) = r {
            failures.push(format!("x eps {eps}: {e}"));
        }
    }
    for (eps, r) in &t_fits {
        if let Err(e) = r {
            failures.push(format!("theta eps {eps}: {e}"));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..x_fits.len())
        .flat_map(|a| (0..t_fits.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| x_fits[a].1.is_ok() && t_fits[b].1.is_ok())
        .collect();
    if pairs.is_empty() {
        return Err(Error::SelectionFailed(failures));
    }

    let scans: Vec<(usize, usize, Array2<f64>, Array2<f64>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let xf = x_fits[a].1.as_ref().unwrap();
            let tf = t_fits[b].1.as_ref().unwrap();
            let coeffs = cross_mean(&xf.train, &tf.train);
            let v = ValidationFeatures {
                psi_g: xf.val_g.clone(),
                psi_f: xf.val_f.clone(),
                phi: tf.val.clone(),
            };
            let table = scan_features(&v, &coeffs, &perms, true);
            (a, b, coeffs, table)
        })
        .collect();

    let mut entries = Vec::new();
    let mut best: Option<(LikelihoodLossEntry, usize)> = None;
    for (idx, (a, b, _, table)) in scans.iter().enumerate() {
        let (eps_x, eps_theta) = (x_fits[*a].0, t_fits[*b].0);
        for ((i0, j0), &loss) in table.indexed_iter() {
            let e = LikelihoodLossEntry {
                eps_x,
                eps_theta,
                i: i0 + 1,
                j: j0 + 1,
                loss,
            };
            entries.push(e);
            if loss.is_finite() && best.as_ref().is_none_or(|(b, _)| better(&e, b)) {
                best = Some((e, idx));
            }
        }
    }
    let Some((selected, idx)) = best else {
        failures.push("no finite loss".into());
        return Err(Error::SelectionFailed(failures));
    };
    let (a, b, coeffs, _) = scans.into_iter().nth(idx).unwrap();
    let basis_x = x_fits.into_iter().nth(a).unwrap().1.unwrap().basis;
    let basis_theta = t_fits.into_iter().nth(b).unwrap().1.unwrap().basis;
    let model =
        LikelihoodModel::from_parts(basis_x, basis_theta, coeffs, selected.i, selected.j, true)?;
    Ok((
        model,
        LikelihoodLossReport {
            entries,
            selected,
            failures,
        },
    ))
}

/// Cell-centred grid over a parameter box, last dimension varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    param_box: ParamBox,
    resolution: Vec<usize>,
    points: SampleSet,
    cell_volume: f64,
}

impl ThetaGrid {
    /// `per_dim` cells along every parameter.
    pub fn new(param_box: &ParamBox, per_dim: usize) -> Result<Self> {
        Self::with_resolution(param_box, vec![per_dim; param_box.dim()])
    }

    pub fn with_resolution(param_box: &ParamBox, resolution: Vec<usize>) -> Result<Self> {
        param_box.validate(false)?;
        if resolution.len() != param_box.dim() || resolution.contains(&0) {
            return Err(Error::input(
                "grid resolution must be positive in every dimension",
            ));
        }
        let total: usize = resolution.iter().product();
        let p = param_box.dim();
        let mut pts = Array2::zeros((total, p));
        for g in 0..total {
            let mut rem = g;
            for d in (0..p).rev() {
                let r = resolution[d];
                let idx = rem % r;
                rem /= r;
                let (lo, hi) = param_box.0[d];
                pts[[g, d]] = lo + (idx as f64 + 0.5) * (hi - lo) / r as f64;
            }
        }
        Ok(ThetaGrid {
            param_box: param_box.clone(),
            resolution,
            points: SampleSet::new(pts)?,
            cell_volume: param_box.volume() / total as f64,
        })
    }

    pub fn points(&self) -> &SampleSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn param_box(&self) -> &ParamBox {
        &self.param_box
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }
}

/// Normalised posterior density over a [`ThetaGrid`] (uniform prior).
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    /// Density values; `sum(density) * cell_volume == 1`.
    pub density: Array1<f64>,
    /// Summed log-likelihood per grid point, before normalisation.
    pub log_likelihood: Array1<f64>,
    /// Every single-observation estimate was at or below the floor.
    pub uninformative: bool,
}

impl Posterior {
    /// Normalise non-negative weights over `grid`.
    pub fn from_weights(weights: Array1<f64>, grid: &ThetaGrid) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: weights.len(),
            });
        }
        let total: f64 = weights.sum() * grid.cell_volume();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Numerical(
                "posterior weights cannot be normalised".into(),
            ));
        }
        Ok(Posterior {
            log_likelihood: weights.mapv(f64::ln),
            density: weights / total,
            uninformative: false,
        })
    }

    fn from_log(log_likelihood: Array1<f64>, grid: &ThetaGrid, uninformative: bool) -> Self {
        let max = log_likelihood
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let w = log_likelihood.mapv(|l| (l - max).exp());
        let total = w.sum() * grid.cell_volume();
        Posterior {
            density: w / total,
            log_likelihood,
            uninformative,
        }
    }

    /// Mean of the standardised Euclidean distance to `theta_star`.
    pub fn expected_distance(&self, grid: &ThetaGrid, theta_star: &[f64]) -> Result<f64> {
        if theta_star.len() != grid.param_box().dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.param_box().dim(),
                got: theta_star.len(),
            });
        }
        let b = grid.param_box();
        let star = b.standardize(theta_star);
        let mut acc = 0.0;
        for (g, d) in self.density.iter().enumerate() {
            let t = b.standardize(grid.points().row(g).as_slice().unwrap());
            let dist = t
                .iter()
                .zip(&star)
                .map(|(a, c)| (a - c).powi(2))
                .sum::<f64>()
                .sqrt();
            acc += dist * d;
        }
        Ok(acc * grid.cell_volume())
    }
}

/// `m x G` clipped (per the model flag) likelihood values between observations and grid points.
pub fn likelihood_matrix<M: TensorSeries + ?Sized>(
    model: &M,
    xs: &SampleSet,
    thetas: &SampleSet,
) -> Result<Array2<f64>> {
    let (ti, tj) = model.truncation();
    let psi = model.x_features(xs)?;
    let phi = model.theta_features(thetas)?;
    let b = model.coeff_matrix().slice(s![..tj, ..ti]);
    let mut l = psi
        .slice(s![.., ..tj])
        .dot(&b)
        .dot(&phi.slice(s![.., ..ti]).t());
    if model.clip_negative() {
        l.mapv_inplace(|v| positive_part(v, true));
    }
    Ok(l)
}

fn posterior_from_matrix(lik: ndarray::ArrayView2<'_, f64>, grid: &ThetaGrid) -> Posterior {
    let uninformative = lik.iter().all(|&v| v <= LIKELIHOOD_FLOOR);
    let log = lik.map_axis(Axis(0), |col| {
        col.iter()
            .map(|&v| v.max(LIKELIHOOD_FLOOR).ln())
            .sum::<f64>()
    });
    if uninformative {
        log::warn!("every likelihood estimate is at the floor; posterior is flat");
    }
    Posterior::from_log(log, grid, uninformative)
}

/// Posterior over `grid` from the product of single-observation estimates.
pub fn sample_log_likelihood<M: TensorSeries + ?Sized>(
    model: &M,
    observations: &SampleSet,
    grid: &ThetaGrid,
) -> Result<Posterior> {
    let lik = likelihood_matrix(model, observations, grid.points())?;
    Ok(posterior_from_matrix(lik.view(), grid))
}

/// Mean over test pairs of the grid-normalised likelihood at the true
/// parameter, relative to the uniform density on the box (a flat estimate scores 1).
pub fn average_likelihood<M: TensorSeries + ?Sized>(
    model: &M,
    test: &JointSample,
    grid: &ThetaGrid,
) -> Result<f64> {
    let on_grid = likelihood_matrix(model, test.x(), grid.points())?;
    let (ti, tj) = model.truncation();
    let psi = model.x_features(test.x())?;
    let phi = model.theta_features(test.theta())?;
    let coeffs = model.coeff_matrix();
    let volume = grid.param_box().volume();
    let mut acc = 0.0;
    for k in 0..test.n() {
        let z: f64 = on_grid.row(k).sum() * grid.cell_volume();
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Numerical(format!(
                "likelihood of test point {k} vanishes on the whole grid"
            )));
        }
        let v = tensor_value(
            psi.row(k).as_slice().unwrap(),
            phi.row(k).as_slice().unwrap(),
            coeffs,
            ti,
            tj,
        );
        acc += positive_part(v, model.clip_negative()) / z * volume;
    }
    Ok(acc / test.n() as f64)
}

/// One posterior-concentration trial: a true parameter and observations drawn at it.
#[derive(Debug, Clone)]
pub struct Trial {
    pub theta_star: Vec<f64>,
    pub observations: SampleSet,
}

/// Mean expected standardised distance over trials.
pub fn average_distance_over_trials<M: TensorSeries + ?Sized>(
    model: &M,
    trials: &[Trial],
    grid: &ThetaGrid,
) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::input("no trials"));
    }
    let phi = model.theta_features(grid.points())?;
    let (ti, tj) = model.truncation();
    let right = model
        .coeff_matrix()
        .slice(s![..tj, ..ti])
        .dot(&phi.slice(s![.., ..ti]).t());
    let mut acc = 0.0;
    for t in trials {
        let psi = model.x_features(&t.observations)?;
        let mut lik = psi.slice(s![.., ..tj]).dot(&right);
        if model.clip_negative() {
            lik.mapv_inplace(|v| positive_part(v, true));
        }
        let post = posterior_from_matrix(lik.view(), grid);
        acc += post.expected_distance(grid, &t.theta_star)?;
    }
    Ok(acc / trials.len() as f64)
}

/// [`average_distance_over_trials`] with one observation per test pair.
pub fn average_distance_to_truth<M: TensorSeries + ?Sized>(
    model: &M,
    test: &JointSample,
    grid: &ThetaGrid,
) -> Result<f64> {
    let trials: Vec<Trial> = (0..test.n())
        .map(|k| {
            Ok(Trial {
                theta_star: test.theta().row(k).to_vec(),
                observations: test.x().select(&[k])?,
            })
        })
        .collect::<Result<_>>()?;
    average_distance_over_trials(model, &trials, grid)
}
