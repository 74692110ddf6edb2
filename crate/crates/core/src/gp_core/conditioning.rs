//! Gaussian conditioning with jittered Cholesky solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative jitter ladder: 0, then 1e-10 · tr/dim escalating ×10 to 1e-4 · tr/dim.
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Mean vector and covariance of a Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBlock {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBlock {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || cov.nrows() != mean.len() {
            return Err(Error::InvalidArgument(format!(
                "mean of length {} with covariance {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(Self { mean, cov })
    }

    /// Symmetric within `1e-10·‖cov‖` and min eigenvalue `≥ -1e-8·max eigenvalue`.
    pub fn is_valid(&self) -> bool {
        is_symmetric_psd(&self.cov)
    }
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn is_symmetric_psd(a: &DMatrix<f64>) -> bool {
    if !a.is_square() {
        return false;
    }
    if a.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let norm = a.norm();
    if (a - a.transpose()).norm() > 1e-10 * norm.max(f64::MIN_POSITIVE) {
        return false;
    }
    if a.nrows() == 0 {
        return true;
    }
    let eig = symmetrize(a).symmetric_eigen().eigenvalues;
    let max = eig.max();
    let min = eig.min();
    min >= -1e-8 * max.abs().max(f64::MIN_POSITIVE)
}

/// Symmetric part of `a` with negative eigenvalues clipped to zero.
pub fn nearest_psd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return symmetrize(a);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    symmetrize(
        &(&eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()),
    )
}

/// A Cholesky factor together with the diagonal jitter that was needed.
#[derive(Debug, Clone)]
pub struct JitteredCholesky {
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

impl JitteredCholesky {
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

/// Cholesky with the jitter escalation policy. The input is symmetrised first.
pub fn jittered_cholesky(a: &DMatrix<f64>) -> Result<JitteredCholesky> {
    let a = symmetrize(a);
    let dim = a.nrows().max(1) as f64;
    let scale = (a.trace() / dim).abs().max(f64::MIN_POSITIVE);
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(JitteredCholesky { chol, jitter: 0.0 });
    }
    let mut rel = JITTER_START;
    let mut jitter = rel * scale;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        jitter = rel * scale;
        let mut shifted = a.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok(JitteredCholesky { chol, jitter });
        }
        rel *= 10.0;
    }
    Err(Error::Conditioning { jitter })
}

/// Conditions a latent Gaussian on a linear-Gaussian observation.
///
/// `cross_cov` is `Cov(latent, observation)`, `obs_cov` the marginal
/// observation covariance and `obs_mean` its prior mean.
pub fn condition_gaussian(
    prior: &GaussianBlock,
    cross_cov: &DMatrix<f64>,
    obs_cov: &DMatrix<f64>,
    obs_mean: &DVector<f64>,
    observation: &DVector<f64>,
) -> Result<GaussianBlock> {
    let m = prior.mean.len();
    let p = observation.len();
    if cross_cov.nrows() != m
        || cross_cov.ncols() != p
        || obs_cov.nrows() != p
        || obs_cov.ncols() != p
        || obs_mean.len() != p
    {
        return Err(Error::InvalidArgument(format!(
            "inconsistent conditioning dimensions: latent {m}, observation {p}"
        )));
    }
    let chol = jittered_cholesky(obs_cov)?;
    let innovation = observation - obs_mean;
    let gain_t = chol.solve(&cross_cov.transpose());
    let mean = &prior.mean + gain_t.transpose() * innovation;
    let cov = symmetrize(&(&prior.cov - cross_cov * gain_t));
    Ok(GaussianBlock { mean, cov })
}
