use nalgebra::{DMatrix, DVector};

use crate::gp_core::symmetrize;

/// Newton direction `-B̃⁻¹ g` where `B̃` is `b_hat` with every eigenvalue
/// raised to at least `floor_ratio · max(max |λ|, 1)`.
///
/// The clamped matrix is positive definite, so `gᵀp < 0` whenever `g ≠ 0`.
/// A zero gradient yields the zero vector.
pub fn safeguarded_direction(
    b_hat: &DMatrix<f64>,
    g: &DVector<f64>,
    floor_ratio: f64,
) -> DVector<f64> {
    if g.iter().all(|&v| v == 0.0) {
        return DVector::zeros(g.len());
    }
    let eig = symmetrize(b_hat).symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let floor = floor_ratio * largest.max(1.0);
    let q = &eig.eigenvectors;
    let coeffs = q.transpose() * g;
    let scaled = DVector::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &l)| -c / l.max(floor)),
    );
    q * scaled
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn identity_gives_steepest_descent() {
        let p = safeguarded_direction(&DMatrix::identity(2, 2), &dvector![1.0, 0.0], 1e-6);
        assert!((p - dvector![-1.0, 0.0]).amax() < 1e-15);
    }

    #[test]
    fn negative_curvature_is_clamped() {
        let b = DMatrix::from_diagonal(&dvector![1.0, -1.0]);
        let g = dvector![1.0, 1.0];
        let p = safeguarded_direction(&b, &g, 1e-6);
        assert!((p[0] + 1.0).abs() < 1e-9);
        assert!((p[1] + 1e6).abs() < 1e-3);
        assert!(g.dot(&p) < 0.0);
    }

    #[test]
    fn zero_gradient_gives_zero_step() {
        let p = safeguarded_direction(&DMatrix::identity(3, 3), &DVector::zeros(3), 1e-6);
        assert_eq!(p, DVector::zeros(3));
    }
}
