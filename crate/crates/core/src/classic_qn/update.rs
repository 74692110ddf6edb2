//! Secant updates of a symmetric Hessian approximation.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp_core::symmetrize;

/// Minimiser of `‖B - B_prev‖²_W = tr(W (B - B_prev)ᵀ W (B - B_prev))` over
/// symmetric `B` satisfying `B s = y`:
///
/// `B = B_prev + (c rᵀ + r cᵀ)/(sᵀc) - (rᵀs) c cᵀ/(sᵀc)²` with `c = W⁻¹s`,
/// `r = y - B_prev s`. `W = I` gives the Powell-symmetric-Broyden update.
pub fn weighted_symmetric_update(
    b_prev: &DMatrix<f64>,
    s: &DVector<f64>,
    y: &DVector<f64>,
    w: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = s.len();
    if b_prev.shape() != (n, n) || w.shape() != (n, n) || y.len() != n {
        return Err(Error::InvalidArgument("update dimension mismatch".into()));
    }
    if !(s.norm() > 0.0) {
        return Err(Error::InvalidArgument("zero step in secant update".into()));
    }
    let chol = Cholesky::new(symmetrize(w)).ok_or_else(|| {
        Error::InvalidArgument("weighting matrix must be positive definite".into())
    })?;
    let c = chol.solve(s);
    let denom = s.dot(&c);
    if !(denom > 0.0) {
        return Err(Error::InvalidArgument("sᵀW⁻¹s must be positive".into()));
    }
    let r = y - b_prev * s;
    let rs = r.dot(s);
    let update = (&c * r.transpose() + &r * c.transpose()) / denom
        - (&c * c.transpose()) * (rs / (denom * denom));
    Ok(symmetrize(&(b_prev + update)))
}

/// `tr(W Δᵀ W Δ)`.
pub fn weighted_frobenius_sq(delta: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (w * delta.transpose() * w * delta).trace()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsUpdate {
    pub matrix: DMatrix<f64>,
    /// Set when the curvature condition failed and `B_prev` was kept.
    pub skipped: bool,
}

/// `B - B s sᵀ B / (sᵀ B s) + y yᵀ / (yᵀ s)`, skipped when
/// `yᵀs ≤ 1e-12 ‖y‖ ‖s‖`.
pub fn bfgs_update(b_prev: &DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) -> BfgsUpdate {
    let ys = y.dot(s);
    let bs = b_prev * s;
    let sbs = s.dot(&bs);
    if !(ys > 1e-12 * y.norm() * s.norm()) || !(sbs > 0.0) {
        return BfgsUpdate {
            matrix: b_prev.clone(),
            skipped: true,
        };
    }
    let matrix = b_prev - &bs * bs.transpose() / sbs + y * y.transpose() / ys;
    BfgsUpdate {
        matrix: symmetrize(&matrix),
        skipped: false,
    }
}
