use nalgebra::{DMatrix, DVector};
use probqn::gp_core::{
    condition_gaussian, duplication_matrix, elimination_matrix, is_symmetric_psd,
    jittered_cholesky, nearest_psd, se_kernel, se_kernel_jet, unvech, vec, vech, GaussianBlock,
    SeKernelParams,
};
use proptest::prelude::*;

fn symmetric(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
    (&a + a.transpose()) * 0.5
}

fn kernel(n: usize, diag: &[f64], sigma_sq: f64) -> SeKernelParams {
    SeKernelParams::diagonal(sigma_sq, &diag[..n]).unwrap()
}

proptest! {
    #[test]
    fn vech_round_trip(n in 1usize..7, vals in prop::collection::vec(-10.0f64..10.0, 36)) {
        let a = symmetric(n, &vals);
        prop_assert_eq!(unvech(&vech(&a)), a.clone());
        prop_assert_eq!(&duplication_matrix(n) * vech(&a), vec(&a));
        prop_assert_eq!(&elimination_matrix(n) * vec(&a), vech(&a));
    }

    #[test]
    fn kernel_is_symmetric_and_bounded(
        n in 1usize..4,
        x in prop::collection::vec(-3.0f64..3.0, 3),
        xp in prop::collection::vec(-3.0f64..3.0, 3),
        diag in prop::collection::vec(0.1f64..3.0, 3),
        s2 in 0.1f64..5.0,
    ) {
        let p = kernel(n, &diag, s2);
        let (x, xp) = (DVector::from_column_slice(&x[..n]), DVector::from_column_slice(&xp[..n]));
        let k = se_kernel(&x, &xp, &p).unwrap();
        prop_assert!((k - se_kernel(&xp, &x, &p).unwrap()).abs() <= 1e-15 * s2);
        prop_assert!(k > 0.0 && k <= s2);
        let g = se_kernel_jet(&x, &xp, &p, 1, 1).unwrap();
        let gt = se_kernel_jet(&xp, &x, &p, 1, 1).unwrap().transpose();
        prop_assert!((g - gt).amax() <= 1e-12 * s2);
        let a = se_kernel_jet(&x, &xp, &p, 1, 0).unwrap();
        let b = se_kernel_jet(&xp, &x, &p, 0, 1).unwrap().transpose();
        prop_assert!((a - b).amax() <= 1e-12 * s2);
    }

    #[test]
    fn kernel_gradient_matches_finite_differences(
        x in prop::collection::vec(-2.0f64..2.0, 3),
        xp in prop::collection::vec(-2.0f64..2.0, 3),
        diag in prop::collection::vec(0.2f64..2.0, 3),
    ) {
        let p = kernel(3, &diag, 1.5);
        let (x, xp) = (DVector::from_column_slice(&x), DVector::from_column_slice(&xp));
        let g = se_kernel_jet(&x, &xp, &p, 1, 0).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut e = DVector::zeros(3);
            e[i] = h;
            let fd = (se_kernel(&(&x + &e), &xp, &p).unwrap() - se_kernel(&(&x - &e), &xp, &p).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[(i, 0)]).abs() < 1e-6);
        }
    }

    #[test]
    fn nearest_psd_is_psd_and_idempotent_on_psd(vals in prop::collection::vec(-5.0f64..5.0, 16)) {
        let a = symmetric(4, &vals);
        let p = nearest_psd(&a);
        prop_assert!(p.symmetric_eigenvalues().min() >= -1e-10);
        let q = &p * &p;
        prop_assert!((nearest_psd(&q) - &q).amax() < 1e-8 * q.amax().max(1.0));
    }
}

#[test]
fn gram_of_gradient_observations_is_psd() {
    let p = SeKernelParams::isotropic(2.0, 0.7, 2).unwrap();
    let pts = [[0.0, 0.0], [0.5, -0.3], [1.2, 0.8], [-0.9, 0.4]];
    let n = pts.len();
    let mut k = DMatrix::zeros(3 * n, 3 * n);
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let (a, b) = (DVector::from_column_slice(a), DVector::from_column_slice(b));
            k[(3 * i, 3 * j)] = se_kernel(&a, &b, &p).unwrap();
            k.view_mut((3 * i, 3 * j + 1), (1, 2))
                .copy_from(&se_kernel_jet(&a, &b, &p, 0, 1).unwrap());
            k.view_mut((3 * i + 1, 3 * j), (2, 1))
                .copy_from(&se_kernel_jet(&a, &b, &p, 1, 0).unwrap());
            k.view_mut((3 * i + 1, 3 * j + 1), (2, 2))
                .copy_from(&se_kernel_jet(&a, &b, &p, 1, 1).unwrap());
        }
    }
    assert!((&k - k.transpose()).amax() < 1e-12);
    assert!(is_symmetric_psd(&k));
    let chol = jittered_cholesky(&k).unwrap();
    let l = chol.chol.l();
    assert!((&l * l.transpose() - &k).amax() < 1e-6);
}

#[test]
fn conditioning_on_exact_observation_interpolates() {
    let prior = GaussianBlock::new(
        DVector::zeros(2),
        DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
    )
    .unwrap();
    let h = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let cross = &prior.cov * h.transpose();
    let obs_cov = &h * &prior.cov * h.transpose();
    let post = condition_gaussian(
        &prior,
        &cross,
        &obs_cov,
        &DVector::zeros(1),
        &DVector::from_element(1, 3.0),
    )
    .unwrap();
    assert!(((&h * &post.mean)[0] - 3.0).abs() < 1e-8);
    assert!(((&h * &post.cov * h.transpose())[(0, 0)]).abs() < 1e-8);
}
