use nalgebra::{DMatrix, DVector};
use probqn::gp_core::{unvech, SeKernelParams};
use probqn::hessian_gp::{
    noisy_line_search, optimize_alg1, safeguarded_direction, update_belief, EarlyStop,
    GaussLegendre, HessianBelief, LineSegment, NoisyLineSearchParams, OptimizerParams,
};
use probqn::problems::{FunctionOracle, NoisyOracle};
use probqn::Termination;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn belief(n: usize, b0: f64, v: f64) -> HessianBelief {
    let m = n * (n + 1) / 2;
    let kernel = SeKernelParams::isotropic(1.0, v, n).unwrap();
    HessianBelief::from_matrices(
        &(DMatrix::identity(n, n) * b0),
        DMatrix::identity(m, m),
        kernel,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn safeguarded_direction_descends(
        vals in prop::collection::vec(-10.0f64..10.0, 9),
        g in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let a = DMatrix::from_fn(3, 3, |i, j| vals[i * 3 + j]);
        let b = (&a + a.transpose()) * 0.5;
        let g = DVector::from_column_slice(&g);
        prop_assume!(g.norm() > 1e-6);
        let p = safeguarded_direction(&b, &g, 1e-6);
        prop_assert!(g.dot(&p) < 0.0);
    }

    #[test]
    fn belief_update_keeps_symmetric_psd_covariance(
        s in prop::collection::vec(-1.0f64..1.0, 2),
        y in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let s = DVector::from_column_slice(&s);
        prop_assume!(s.norm() > 1e-3);
        let b = belief(2, 1.0, 0.1).with_obs_noise(DMatrix::identity(2, 2) * 1e-6);
        let seg = LineSegment::new(DVector::zeros(2), s, DVector::from_column_slice(&y)).unwrap();
        let next = update_belief(&b, &seg, seg.y(), 20).unwrap();
        let c = &next.cov;
        prop_assert!((c - c.transpose()).amax() < 1e-10);
        prop_assert!(c.symmetric_eigenvalues().min() >= -1e-10);
    }
}

#[test]
fn gauss_legendre_weights_are_exact_for_polynomials() {
    let q = GaussLegendre::new(20);
    assert!((q.integrate(|t| t.powi(7)) - 1.0 / 8.0).abs() < 1e-14);
    assert!((q.integrate_2d(|t, u| t * u * u) - 1.0 / 6.0).abs() < 1e-14);
    let coarse = GaussLegendre::new(10).integrate(|t| (3.0 * t).exp());
    let fine = GaussLegendre::new(20).integrate(|t| (3.0 * t).exp());
    assert!((coarse - fine).abs() < 1e-12);
}

#[test]
fn noisy_line_search_accepts_descent_step() {
    let oracle = FunctionOracle::quadratic(DMatrix::identity(2, 2), DVector::zeros(2));
    let x = DVector::from_column_slice(&[1.0, -1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let e = oracle.evaluate(&x, &mut rng).unwrap();
    let p = -&e.grad;
    let out = noisy_line_search(
        &oracle,
        &x,
        &p,
        e.cost,
        &e.grad,
        0.0,
        &NoisyLineSearchParams::default(),
        &mut rng,
    )
    .unwrap();
    assert!(out.accepted);
    assert_eq!(out.alpha, 1.0);
    assert!(out.x.norm() < 1e-12);
}

#[test]
fn alg1_learns_hessian_and_converges() {
    let a = DMatrix::from_row_slice(2, 2, &[7.0, 1.5, 1.5, 2.0]);
    let b = DVector::from_column_slice(&[1.0, 1.0]);
    let oracle = FunctionOracle::quadratic(a.clone(), b.clone());
    let x0 = DVector::from_column_slice(&[3.0, -2.0]);
    let params = OptimizerParams {
        max_iters: 20,
        ..OptimizerParams::default()
    };
    let t = optimize_alg1(
        &oracle,
        &x0,
        &belief(2, 1.0, 1e-3),
        &params,
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    let at = t.records.len().min(7) - 1;
    let h = unvech(t.records[at].hessian_vech.as_ref().unwrap());
    assert!((h - &a).norm() / a.norm() < 1e-2);
    let x_star = a.lu().solve(&b).unwrap();
    assert!((t.final_x().unwrap() - x_star).amax() < 1e-8);
    for w in t.records.windows(2) {
        assert!(w[1].iteration > w[0].iteration);
    }
}

#[test]
fn alg1_early_stop_is_opt_in() {
    // cosh keeps the gradient from hitting zero exactly.
    let oracle = FunctionOracle::new(2, |x| {
        let f = x[0].cosh() + (2.0 * x[1]).cosh();
        (
            f,
            DVector::from_column_slice(&[x[0].sinh(), 2.0 * (2.0 * x[1]).sinh()]),
        )
    });
    let x0 = DVector::from_column_slice(&[1.0, 1.0]);
    let mut params = OptimizerParams {
        max_iters: 50,
        ..OptimizerParams::default()
    };
    let t = optimize_alg1(
        &oracle,
        &x0,
        &belief(2, 1.0, 1e-3),
        &params,
        &mut ChaCha8Rng::seed_from_u64(2),
    );
    assert_eq!(t.iterations(), 50);
    params.early_stop = Some(EarlyStop {
        window: 3,
        threshold: 1e-8,
    });
    let t = optimize_alg1(
        &oracle,
        &x0,
        &belief(2, 1.0, 1e-3),
        &params,
        &mut ChaCha8Rng::seed_from_u64(2),
    );
    assert!(t.iterations() < 50);
    assert_eq!(t.termination, Termination::Converged);
}

#[test]
fn alg1_runs_are_reproducible() {
    let oracle = FunctionOracle::rosenbrock().with_noise(0.01, 0.1);
    let x0 = DVector::from_column_slice(&[-1.0, 1.5]);
    let params = OptimizerParams {
        max_iters: 30,
        ..OptimizerParams::default()
    };
    let run = |seed| {
        optimize_alg1(
            &oracle,
            &x0,
            &belief(2, 100.0, 1e-3),
            &params,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).records, run(6).records);
}
