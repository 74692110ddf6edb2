use nalgebra::{DMatrix, DVector};
use probqn::gp_core::SeKernelParams;
use probqn::problems::{quadratic_oracle, FunctionOracle};
use probqn::surrogate_gp::{
    inner_minimize, optimize_alg2, InnerParams, SurrogateDataset, SurrogateParams, ELITE_COUNT,
};
use probqn::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn surface(x: &DVector<f64>) -> (f64, DVector<f64>) {
    let f = x[0] * x[0] + 0.5 * x[1] * x[1] + x[0].sin();
    (
        f,
        DVector::from_column_slice(&[2.0 * x[0] + x[0].cos(), x[1]]),
    )
}

fn dataset(points: &[DVector<f64>], noise: f64, capacity: usize) -> SurrogateDataset {
    let kernel = SeKernelParams::isotropic(4.0, 0.5, 2).unwrap();
    let mut ds =
        SurrogateDataset::new(kernel, noise, DMatrix::identity(2, 2) * noise, capacity).unwrap();
    for x in points {
        let (f, g) = surface(x);
        match ds.add_observation(x, f, &g) {
            Ok(()) | Err(Error::DuplicatePoint { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
    ds
}

fn points_strategy(max: usize) -> impl Strategy<Value = Vec<DVector<f64>>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..max).prop_map(|v| {
        v.into_iter()
            .map(|(a, b)| DVector::from_column_slice(&[a, b]))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hessian_prediction_is_symmetric(pts in points_strategy(8), q in (-2.0f64..2.0, -2.0f64..2.0)) {
        let ds = dataset(&pts, 1e-4, 50);
        let (_, _, h) = ds.predict_mean(&DVector::from_column_slice(&[q.0, q.1])).unwrap();
        prop_assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax().max(1.0));
    }

    #[test]
    fn prediction_is_invariant_to_insertion_order(pts in points_strategy(8), q in (-2.0f64..2.0, -2.0f64..2.0)) {
        let fwd = dataset(&pts, 1e-2, 50);
        let rev: Vec<_> = pts.iter().rev().cloned().collect();
        let bwd = dataset(&rev, 1e-2, 50);
        prop_assume!(fwd.len() == bwd.len());
        let x = DVector::from_column_slice(&[q.0, q.1]);
        let (a, b) = (fwd.predict(&x).unwrap(), bwd.predict(&x).unwrap());
        prop_assert!((a.f_mean - b.f_mean).abs() < 1e-10);
        prop_assert!((a.g_mean - b.g_mean).amax() < 1e-10);
        prop_assert!((a.h_mean - b.h_mean).amax() < 1e-10);
    }

    #[test]
    fn variance_is_nonnegative_and_shrinks(
        pts in points_strategy(8),
        extra in (-2.0f64..2.0, -2.0f64..2.0),
        q in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let mut ds = dataset(&pts, 1e-3, 50);
        let x = DVector::from_column_slice(&[q.0, q.1]);
        let before = ds.predict(&x).unwrap().f_var;
        prop_assert!(before >= 0.0);
        let e = DVector::from_column_slice(&[extra.0, extra.1]);
        let (f, g) = surface(&e);
        if ds.add_observation(&e, f, &g).is_ok() {
            let after = ds.predict(&x).unwrap().f_var;
            prop_assert!(after >= 0.0);
            prop_assert!(after <= before + 1e-8);
        }
    }
}

#[test]
fn capacity_is_enforced_and_best_points_survive() {
    let kernel = SeKernelParams::isotropic(4.0, 0.5, 1).unwrap();
    let mut ds = SurrogateDataset::new(kernel, 1e-4, DMatrix::identity(1, 1) * 1e-4, 10).unwrap();
    for i in 0..30 {
        let x = DVector::from_element(1, i as f64 * 0.1);
        // Lowest costs come first, so the oldest points are the elites.
        ds.add_observation(&x, i as f64, &DVector::zeros(1))
            .unwrap();
        assert!(ds.len() <= 10);
    }
    let mut costs: Vec<f64> = ds.costs().to_vec();
    costs.sort_by(f64::total_cmp);
    assert_eq!(&costs[..ELITE_COUNT], &[0.0, 1.0, 2.0, 3.0, 4.0]);
    assert_eq!(&costs[ELITE_COUNT..], &[25.0, 26.0, 27.0, 28.0, 29.0]);
}

#[test]
fn inner_search_descends_on_surrogate() {
    let pts: Vec<_> = [
        [-1.5, 1.0],
        [0.5, -1.0],
        [1.0, 1.5],
        [-0.5, -0.5],
        [0.0, 0.5],
    ]
    .iter()
    .map(|p| DVector::from_column_slice(p))
    .collect();
    let ds = dataset(&pts, 1e-6, 50);
    let start = DVector::from_column_slice(&[1.0, 1.5]);
    let out = inner_minimize(&ds, &start, &InnerParams::default()).unwrap();
    assert!(out.f_min <= ds.predict_cost(&start).unwrap());
}

#[test]
fn alg2_minimises_noise_free_bowl() {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let b = DVector::from_column_slice(&[1.0, -1.0]);
    let oracle = FunctionOracle::quadratic(a.clone(), b.clone());
    let kernel = SeKernelParams::isotropic(100.0, 0.05, 2).unwrap();
    let params = SurrogateParams::new(kernel);
    let t = optimize_alg2(
        &oracle,
        &DVector::from_column_slice(&[2.0, 2.0]),
        &params,
        &mut ChaCha8Rng::seed_from_u64(3),
    );
    let x_star = a.lu().solve(&b).unwrap();
    assert!(
        (t.final_x().unwrap() - x_star).amax() < 1e-3,
        "{:?}",
        t.final_x()
    );
}

#[test]
fn alg2_respects_observation_budget_and_is_reproducible() {
    let oracle = quadratic_oracle(20.0, 1.0);
    let kernel = SeKernelParams::isotropic(1e6, 0.01, 1).unwrap();
    let mut params = SurrogateParams::new(kernel);
    params.max_observations = Some(10);
    let x0 = DVector::from_element(1, -10.0);
    let run = |seed| optimize_alg2(&oracle, &x0, &params, &mut ChaCha8Rng::seed_from_u64(seed));
    let t = run(9);
    assert_eq!(t, run(9));
    assert!(t.records.len() <= 11);
    assert!((t.final_x().unwrap()[0] - 5.0).abs() < 1.0);
}
