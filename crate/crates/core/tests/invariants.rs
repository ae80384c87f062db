use std::sync::{Arc, OnceLock};

use lrd_core::duality::ArCoefficient;
use lrd_core::kernels::{b_closed_form, KernelTable};
use lrd_core::model::LrdModel;
use lrd_core::montecarlo::{covariance, uniform_grid, PathSimulator};
use lrd_core::prediction::{error_variance, DiscretePredictor, ErrorMode, FinitePredictor, PredictionWindow};
use lrd_core::quad::QuadratureConfig;
use proptest::prelude::*;

fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn fbm_predictor() -> &'static (FinitePredictor, Vec<f64>) {
    static CELL: OnceLock<(FinitePredictor, Vec<f64>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let ar = Arc::new(ArCoefficient::new(&LrdModel::fbm(0.75).unwrap()).unwrap());
        let w = PredictionWindow::new(1.0, 0.0, 1.0).unwrap();
        let table = Arc::new(KernelTable::build(ar, w.t2(), &q()).unwrap());
        let pred = FinitePredictor::new(table, w, &q()).unwrap();
        (pred, uniform_grid(-1.0, 1.0, 1.0 / 32.0).unwrap())
    })
}

fn two_index_sim() -> &'static PathSimulator {
    static CELL: OnceLock<PathSimulator> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = LrdModel::two_index(0.75, 0.6, None).unwrap();
        PathSimulator::new(&m, &uniform_grid(-1.0, 1.0, 0.125).unwrap(), &q()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_positive_and_homogeneous(d in 0.01f64..0.49, t in 1e-3f64..1e3, s in 1e-3f64..1e3, lam in 1e-2f64..1e2) {
        let b = b_closed_form(d, t, s);
        prop_assert!(b > 0.0);
        let scaled = b_closed_form(d, lam * t, lam * s) * lam;
        prop_assert!((scaled / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fbm_covariance_is_symmetric(h in 0.51f64..0.99, t in -5.0f64..5.0, s in -5.0f64..5.0) {
        let m = LrdModel::fbm(h).unwrap();
        let a = covariance(&m, t, s, &q()).unwrap();
        let b = covariance(&m, s, t, &q()).unwrap();
        prop_assert_eq!(a, b);
        let vt = covariance(&m, t, t, &q()).unwrap();
        let vs = covariance(&m, s, s, &q()).unwrap();
        prop_assert!(a * a <= vt * vs * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn fbm_variogram_scales(h in 0.51f64..0.99, t in 1e-2f64..1e2, lam in 1e-2f64..1e2) {
        let m = LrdModel::fbm(h).unwrap();
        let v = m.variogram(t, &q()).unwrap();
        let w = m.variogram(lam * t, &q()).unwrap();
        prop_assert!((w / (v * lam.powf(2.0 * h)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_hurst_is_rejected(h in prop_oneof![0.0f64..0.5, 1.0f64..2.0]) {
        prop_assert!(LrdModel::fbm(h).is_err());
    }

    #[test]
    fn window_needs_increasing_times(t0 in 0.01f64..10.0, t1 in 0.0f64..5.0, gap in 0.0f64..5.0) {
        prop_assert!(PredictionWindow::new(t0, t1, t1 - gap).is_err());
        prop_assert!(PredictionWindow::new(t0, t1, t1 + gap + 1e-3).is_ok());
    }

    #[test]
    fn discrete_predictor_is_linear(xs in prop::collection::vec(-3.0f64..3.0, 65), ys in prop::collection::vec(-3.0f64..3.0, 65), a in -2.0f64..2.0, shift in -5.0f64..5.0) {
        let (pred, grid) = fbm_predictor();
        let dp = DiscretePredictor::new(pred, grid).unwrap();
        let mixed: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + y).collect();
        let lhs = dp.apply(&mixed);
        let rhs = a * dp.apply(&xs) + dp.apply(&ys);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        let lam = dp.weights(grid.len());
        let dot: f64 = lam.iter().zip(&xs).map(|(l, x)| l * x).sum();
        prop_assert!((dot - dp.apply(&xs)).abs() < 1e-9);
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        prop_assert!((dp.apply(&moved) - dp.apply(&xs) - shift).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), rep in 0u64..1000) {
        let sim = two_index_sim();
        let a = sim.sample(seed, rep);
        let b = sim.sample(seed, rep);
        prop_assert_eq!(&a.values, &b.values);
        let zero = a.grid_times.iter().position(|&t| t == 0.0).unwrap();
        prop_assert_eq!(a.values[zero], 0.0);
        prop_assert_ne!(&a.values, &sim.sample(seed, rep + 1).values);
    }
}

#[test]
fn covariance_matrix_is_symmetric_and_pinned_at_zero() {
    let sim = two_index_sim();
    let c = sim.covariance();
    let zero = sim.grid().iter().position(|&t| t == 0.0).unwrap();
    assert_eq!(c.nrows(), 17);
    for i in 0..c.nrows() {
        assert_eq!(c[(i, zero)], 0.0);
        assert_eq!(i == zero, c[(i, i)] == 0.0);
        for j in 0..i {
            assert_eq!(c[(i, j)], c[(j, i)]);
        }
    }
}

#[test]
fn finite_error_decreases_towards_infinite() {
    let ar = Arc::new(ArCoefficient::new(&LrdModel::fbm(0.75).unwrap()).unwrap());
    let mut last = f64::INFINITY;
    let mut infinite = 0.0;
    for t0 in [0.5, 2.0, 8.0] {
        let w = PredictionWindow::new(t0, 0.0, 1.0).unwrap();
        let table = Arc::new(KernelTable::build(ar.clone(), w.t2(), &q()).unwrap());
        let pred = FinitePredictor::new(table, w, &q()).unwrap();
        let e = error_variance(&ar, Some(&pred), &w, ErrorMode::FinitePast, &q()).unwrap();
        assert!(e.total < last);
        assert!(e.dn_terms.iter().all(|&x| x >= 0.0));
        infinite = e.infinite;
        last = e.total;
    }
    assert!(last > infinite);
    // trivial predictor X(t1) has error equal to the variogram at the lead
    assert!(last < LrdModel::fbm(0.75).unwrap().variogram(1.0, &q()).unwrap());
}
