use nalgebra::{DMatrix, DVector};
use probqn::classic_qn::{
    bfgs_update, optimize_bfgs, weighted_frobenius_sq, weighted_symmetric_update, BfgsParams,
};
use probqn::problems::FunctionOracle;
use probqn::Termination;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mat(n: usize, vals: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| vals[i * n + j])
}

fn spd(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let a = mat(n, vals);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.1
}

proptest! {
    #[test]
    fn weighted_update_is_symmetric_secant(
        n in 1usize..6,
        b in prop::collection::vec(-3.0f64..3.0, 25),
        w in prop::collection::vec(-1.0f64..1.0, 25),
        s in prop::collection::vec(-1.0f64..1.0, 5),
        y in prop::collection::vec(-2.0f64..2.0, 5),
    ) {
        let s = DVector::from_column_slice(&s[..n]);
        prop_assume!(s.norm() > 1e-3);
        let y = DVector::from_column_slice(&y[..n]);
        let b = mat(n, &b);
        let b = (&b + b.transpose()) * 0.5;
        let bn = weighted_symmetric_update(&b, &s, &y, &spd(n, &w)).unwrap();
        prop_assert!((&bn - bn.transpose()).amax() <= 1e-12);
        prop_assert!((&bn * &s - &y).amax() <= 1e-9 * (1.0 + b.amax() + y.amax()));
    }

    #[test]
    fn weighted_update_beats_secant_perturbations(
        b in prop::collection::vec(-2.0f64..2.0, 9),
        w in prop::collection::vec(-1.0f64..1.0, 9),
        s in prop::collection::vec(-1.0f64..1.0, 3),
        y in prop::collection::vec(-2.0f64..2.0, 3),
        z in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let s = DVector::from_column_slice(&s);
        prop_assume!(s.norm() > 1e-2);
        let y = DVector::from_column_slice(&y);
        let b = mat(3, &b);
        let b = (&b + b.transpose()) * 0.5;
        let w = spd(3, &w);
        let bn = weighted_symmetric_update(&b, &s, &y, &w).unwrap();
        // P z P with P projecting out s keeps the secant equation.
        let p = DMatrix::identity(3, 3) - &s * s.transpose() / s.dot(&s);
        let z = mat(3, &z);
        let e = &p * (&z + z.transpose()) * &p;
        let base = weighted_frobenius_sq(&(&bn - &b), &w);
        let alt = weighted_frobenius_sq(&(&bn + e - &b), &w);
        prop_assert!(alt - base >= -1e-9 * (1.0 + base));
    }

    #[test]
    fn bfgs_update_keeps_positive_definiteness(
        b in prop::collection::vec(-1.0f64..1.0, 9),
        s in prop::collection::vec(-1.0f64..1.0, 3),
        y in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let b = spd(3, &b);
        let s = DVector::from_column_slice(&s);
        let y = DVector::from_column_slice(&y);
        let u = bfgs_update(&b, &s, &y);
        if u.skipped {
            prop_assert_eq!(u.matrix, b);
        } else {
            prop_assert!((&u.matrix * &s - &y).amax() < 1e-8 * (1.0 + u.matrix.amax()));
            prop_assert!(u.matrix.symmetric_eigenvalues().min() > 0.0);
        }
    }
}

#[test]
fn bfgs_minimises_rosenbrock() {
    let oracle = FunctionOracle::rosenbrock();
    let x0 = DVector::from_column_slice(&[-1.2, 1.0]);
    let params = BfgsParams {
        max_iters: 200,
        ..BfgsParams::default()
    };
    let t = optimize_bfgs(&oracle, &x0, &params, &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(t.termination, Termination::Converged);
    let x = t.final_x().unwrap();
    assert!(
        (x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6,
        "{x}"
    );
}

#[test]
fn bfgs_is_exact_on_quadratic_in_n_steps() {
    let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
    let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
    let oracle = FunctionOracle::quadratic(a.clone(), b.clone());
    let t = optimize_bfgs(
        &oracle,
        &DVector::zeros(3),
        &BfgsParams::default(),
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    let x_star = a.lu().solve(&b).unwrap();
    assert!((t.final_x().unwrap() - x_star).amax() < 1e-7);
    assert!(t.iterations() <= 20);
}
