//! Squared-exponential covariance and its closed-form derivative blocks.

use nalgebra::{DMatrix, DVector};

use super::vech::VechIndex;
use crate::error::{Error, Result};

/// Hyperparameters of `k(x, x') = s² exp(-½ (x - x')ᵀ V (x - x'))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeKernelParams {
    sigma_sq: f64,
    inv_lengthscale: DMatrix<f64>,
}

impl SeKernelParams {
    /// Validates `sigma_sq > 0` and that `inv_lengthscale` is symmetric
    /// positive definite.
    pub fn new(sigma_sq: f64, inv_lengthscale: DMatrix<f64>) -> Result<Self> {
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel variance must be positive, got {sigma_sq}"
            )));
        }
        let v = &inv_lengthscale;
        if !v.is_square() || v.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "inverse lengthscale must be a non-empty square matrix".into(),
            ));
        }
        let scale = v.amax().max(f64::MIN_POSITIVE);
        if (v - v.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument(
                "inverse lengthscale must be symmetric".into(),
            ));
        }
        let eig = v.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidArgument(
                "inverse lengthscale must be positive definite".into(),
            ));
        }
        Ok(Self {
            sigma_sq,
            inv_lengthscale,
        })
    }

    /// Diagonal `V` from per-coordinate inverse squared lengthscales.
    pub fn diagonal(sigma_sq: f64, diag: &[f64]) -> Result<Self> {
        Self::new(
            sigma_sq,
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        )
    }

    /// `V = scale · I_n`.
    pub fn isotropic(sigma_sq: f64, scale: f64, n: usize) -> Result<Self> {
        Self::new(sigma_sq, DMatrix::identity(n, n) * scale)
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn inv_lengthscale(&self) -> &DMatrix<f64> {
        &self.inv_lengthscale
    }

    pub fn dim(&self) -> usize {
        self.inv_lengthscale.nrows()
    }

    fn check_dims(&self, x: &DVector<f64>, xp: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() || xp.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "kernel dimension {} but points have {} and {}",
                self.dim(),
                x.len(),
                xp.len()
            )));
        }
        Ok(())
    }
}

/// `s² exp(-½ (x - x')ᵀ V (x - x'))`.
pub fn se_kernel(x: &DVector<f64>, x_prime: &DVector<f64>, params: &SeKernelParams) -> Result<f64> {
    params.check_dims(x, x_prime)?;
    Ok(SeJet::new(x, x_prime, params).k)
}

/// Derivative block of the SE kernel.
///
/// `order_x` selects the value (0), gradient (1) or half-vectorised Hessian
/// (2) with respect to `x`; `order_xp` selects value (0) or gradient (1) with
/// respect to `x_prime`. The block has one row per component of the
/// `x`-side quantity and one column per component of the `x'`-side quantity,
/// matching the stacking `(f, g, vech H)`.
pub fn se_kernel_jet(
    x: &DVector<f64>,
    x_prime: &DVector<f64>,
    params: &SeKernelParams,
    order_x: usize,
    order_xp: usize,
) -> Result<DMatrix<f64>> {
    params.check_dims(x, x_prime)?;
    let jet = SeJet::new(x, x_prime, params);
    match (order_x, order_xp) {
        (0, 0) => Ok(DMatrix::from_element(1, 1, jet.k)),
        (0, 1) => Ok(DMatrix::from_row_slice(
            1,
            jet.u.len(),
            jet.value_grad().as_slice(),
        )),
        (1, 0) => Ok(jet.grad_value()),
        (1, 1) => Ok(jet.grad_grad()),
        (2, 0) => Ok(jet.hess_value()),
        (2, 1) => Ok(jet.hess_grad()),
        _ => Err(Error::InvalidArgument(format!(
            "unsupported derivative orders ({order_x}, {order_xp})"
        ))),
    }
}

/// Shared intermediates for the derivative blocks at one point pair:
/// `u = V (x - x')` and `k`.
pub(crate) struct SeJet<'a> {
    pub(crate) k: f64,
    pub(crate) u: DVector<f64>,
    v: &'a DMatrix<f64>,
}

impl<'a> SeJet<'a> {
    pub(crate) fn new(x: &DVector<f64>, xp: &DVector<f64>, params: &'a SeKernelParams) -> Self {
        let d = x - xp;
        let u = &params.inv_lengthscale * &d;
        let k = params.sigma_sq * (-0.5 * d.dot(&u)).exp();
        Self {
            k,
            u,
            v: &params.inv_lengthscale,
        }
    }

    /// `∂k/∂x'` as a column: `u k`.
    pub(crate) fn value_grad(&self) -> DVector<f64> {
        &self.u * self.k
    }

    /// `∇ₓ k = -u k` (n × 1).
    pub(crate) fn grad_value(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.u.len(), 1, (&self.u * -self.k).as_slice())
    }

    /// `∂²k/∂xᵢ∂x'ⱼ = (Vᵢⱼ - uᵢuⱼ) k`.
    pub(crate) fn grad_grad(&self) -> DMatrix<f64> {
        (self.v - &self.u * self.u.transpose()) * self.k
    }

    /// `∂²k/∂xᵢ∂xⱼ = (uᵢuⱼ - Vᵢⱼ) k`, half-vectorised (m × 1).
    pub(crate) fn hess_value(&self) -> DMatrix<f64> {
        let n = self.u.len();
        let idx = VechIndex::new(n);
        DMatrix::from_iterator(
            idx.len(),
            1,
            idx.pairs()
                .map(|(i, j)| (self.u[i] * self.u[j] - self.v[(i, j)]) * self.k),
        )
    }

    /// `∂³k/∂xᵢ∂xⱼ∂x'ₗ = [(uᵢuⱼ - Vᵢⱼ) uₗ - Vᵢₗuⱼ - uᵢVⱼₗ] k` (m × n).
    pub(crate) fn hess_grad(&self) -> DMatrix<f64> {
        let n = self.u.len();
        let idx = VechIndex::new(n);
        let u = &self.u;
        let v = self.v;
        let mut out = DMatrix::zeros(idx.len(), n);
        for (p, (i, j)) in idx.pairs().enumerate() {
            let a = u[i] * u[j] - v[(i, j)];
            for l in 0..n {
                out[(p, l)] = (a * u[l] - v[(i, l)] * u[j] - u[i] * v[(j, l)]) * self.k;
            }
        }
        out
    }
}
