//! Fast invariant checks behind the `validate` subcommand.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classic_qn::{optimize_bfgs, weighted_symmetric_update, BfgsParams};
use crate::gp_core::{
    duplication_matrix, elimination_matrix, se_kernel, se_kernel_jet, vec, vech, SeKernelParams,
};
use crate::hessian_gp::{optimize_alg1, safeguarded_direction, HessianBelief, OptimizerParams};
use crate::problems::{
    bootstrap_pf, kalman_loglik_grad, simulate_lgss, FunctionOracle, LinearSsmParams, NoisyOracle,
};
use crate::surrogate_gp::SurrogateDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tol {tol:.0e})"),
    }
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn vech_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let d = duplication_matrix(n);
        let l = elimination_matrix(n);
        let m = d.ncols();
        worst = worst.max((&l * &d - DMatrix::identity(m, m)).amax());
        let a = random_symmetric(n, &mut rng);
        worst = worst.max((&d * vech(&a) - vec(&a)).amax());
    }
    check("vech/duplication identities", worst, 0.0)
}

fn kernel_finite_differences() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = 3;
        let v = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.2..2.0)));
        let p = SeKernelParams::new(rng.random_range(0.5..2.0), v).unwrap();
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let xp = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let analytic = se_kernel_jet(&x, &xp, &p, 1, 0).unwrap();
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = h;
            let fd = (se_kernel(&(&x + &e), &xp, &p).unwrap()
                - se_kernel(&(&x - &e), &xp, &p).unwrap())
                / (2.0 * h);
            worst = worst.max((fd - analytic[(i, 0)]).abs());
        }
    }
    check("SE kernel gradient vs finite differences", worst, 1e-5)
}

fn symmetric_update_secant() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 4;
        let b = random_symmetric(n, &mut rng);
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let w = &a * a.transpose() + DMatrix::identity(n, n);
        let bn = weighted_symmetric_update(&b, &s, &y, &w).unwrap();
        worst = worst
            .max((&bn * &s - &y).amax())
            .max((&bn - bn.transpose()).amax());
    }
    check("weighted update symmetry and secant", worst, 1e-10)
}

fn safeguard_descent() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0.0;
    for _ in 0..200 {
        let b = random_symmetric(3, &mut rng) * 10.0;
        let g = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        if g.dot(&safeguarded_direction(&b, &g, 1e-6)) >= 0.0 {
            violations += 1.0;
        }
    }
    check(
        "safeguarded direction is a descent direction",
        violations,
        0.0,
    )
}

fn kalman_gradient() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y = simulate_lgss(&LinearSsmParams::TRUTH, 50, &mut rng);
    let p = LinearSsmParams::new(0.7, 1.2, 0.2, 0.4).unwrap();
    let (_, g) = kalman_loglik_grad(&p, &y).unwrap();
    let h = 1e-6;
    let base = p.to_vector();
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let mut up = base.clone();
        let mut dn = base.clone();
        up[i] += h;
        dn[i] -= h;
        let fu = kalman_loglik_grad(&LinearSsmParams::from_vector(&up).unwrap(), &y)
            .unwrap()
            .0;
        let fd = kalman_loglik_grad(&LinearSsmParams::from_vector(&dn).unwrap(), &y)
            .unwrap()
            .0;
        let num = (fu - fd) / (2.0 * h);
        worst = worst.max((num - g[i]).abs() / num.abs().max(1.0));
    }
    check("Kalman gradient vs finite differences", worst, 1e-5)
}

fn particle_weights() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let y = simulate_lgss(&LinearSsmParams::TRUTH, 30, &mut rng);
    let (_, sys) = bootstrap_pf(&LinearSsmParams::TRUTH, &y, 200, &mut rng).unwrap();
    let sum: f64 = sys.weights().iter().sum();
    check("particle weights sum to one", (sum - 1.0).abs(), 1e-12)
}

fn surrogate_interpolation() -> Check {
    let kernel = SeKernelParams::isotropic(4.0, 0.5, 2).unwrap();
    let mut ds = SurrogateDataset::new(kernel, 1e-12, DMatrix::identity(2, 2) * 1e-12, 50).unwrap();
    let f = |x: &DVector<f64>| {
        (
            x[0] * x[0] + 0.5 * x[1] * x[1],
            DVector::from_column_slice(&[2.0 * x[0], x[1]]),
        )
    };
    let pts = [
        DVector::from_column_slice(&[0.0, 0.0]),
        DVector::from_column_slice(&[1.0, 0.5]),
        DVector::from_column_slice(&[-0.7, 1.2]),
    ];
    for x in &pts {
        let (c, g) = f(x);
        ds.add_observation(x, c, &g).unwrap();
    }
    let mut worst: f64 = 0.0;
    for x in &pts {
        let (c, g) = f(x);
        let p = ds.predict(x).unwrap();
        worst = worst.max((p.f_mean - c).abs()).max((p.g_mean - g).amax());
    }
    check("surrogate interpolates noise-free data", worst, 1e-5)
}

fn optimisers_on_quadratic() -> Check {
    let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]);
    let b = DVector::from_column_slice(&[1.0, -2.0]);
    let oracle = FunctionOracle::quadratic(a.clone(), b.clone());
    let x0 = DVector::from_column_slice(&[4.0, 4.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kernel = SeKernelParams::isotropic(1.0, 1e-3, 2).unwrap();
    let belief =
        HessianBelief::from_matrices(&DMatrix::identity(2, 2), DMatrix::identity(3, 3), kernel)
            .unwrap();
    let params = OptimizerParams {
        max_iters: 20,
        ..OptimizerParams::default()
    };
    let t1 = optimize_alg1(&oracle, &x0, &belief, &params, &mut rng);
    let t2 = optimize_bfgs(&oracle, &x0, &BfgsParams::default(), &mut rng);
    let grad = |t: &crate::OptimizationTrace| {
        t.final_x().map_or(f64::INFINITY, |x| {
            oracle
                .evaluate(x, &mut ChaCha8Rng::seed_from_u64(0))
                .unwrap()
                .grad
                .norm()
        })
    };
    check(
        "Hessian-belief and BFGS solve a quadratic",
        grad(&t1).max(grad(&t2)),
        1e-6,
    )
}

/// Runs every check; the whole suite takes well under a second.
pub fn run_validation() -> Vec<Check> {
    vec![
        vech_identities(),
        kernel_finite_differences(),
        symmetric_update_secant(),
        safeguard_descent(),
        kalman_gradient(),
        particle_weights(),
        surrogate_interpolation(),
        optimisers_on_quadratic(),
    ]
}
