mod common;

use approx::assert_relative_eq;
use dircount::calculus::nabla;
use dircount::transfer::{
    apply_power, build_transfer, log_perron_value, perron_data, perron_data_with, spectral_radius_twisted, EigenMethod,
};
use dircount::{fixtures, DirectedGraph};
use nalgebra::DVector;
use proptest::prelude::*;

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

#[test]
fn fibonacci_perron_vectors_in_closed_form() {
    let g = fixtures::fibonacci();
    let sd = perron_data(&g, &DVector::zeros(3), 1e-12).unwrap();
    let l = golden();
    assert_relative_eq!(sd.lambda, l, max_relative = 1e-14);
    // The adjacency matrix is symmetric, so both eigenvectors are proportional to (l, 1).
    let phi = DVector::from_vec(vec![l, 1.0]) / (l + 1.0);
    let f = DVector::from_vec(vec![l, 1.0]) / phi.dot(&DVector::from_vec(vec![l, 1.0]));
    assert_relative_eq!(sd.phi, phi, max_relative = 1e-12);
    assert_relative_eq!(sd.f, f, max_relative = 1e-12);
    assert_relative_eq!(sd.gap.unwrap(), 1.0 / (l * l), max_relative = 1e-10);
}

#[test]
fn full_shift_and_cycle() {
    for k in 1..=5 {
        let sd = perron_data(&fixtures::full_shift(k), &DVector::zeros(k), 1e-12).unwrap();
        assert_relative_eq!(sd.lambda, k as f64, max_relative = 1e-13);
    }
    let th = DVector::from_vec(vec![0.3, -0.2, 1.1, 0.05]);
    let sd = perron_data(&fixtures::cycle(4), &th, 1e-12).unwrap();
    assert_relative_eq!(sd.log_lambda(), -th.sum() / 4.0, epsilon = 1e-13);
    assert_relative_eq!(log_perron_value(&fixtures::cycle(4), &th).unwrap(), -th.sum() / 4.0, epsilon = 1e-15);
}

#[test]
fn large_weights_do_not_overflow() {
    let g = fixtures::fibonacci();
    let th = DVector::from_vec(vec![-800.0, -790.0, -805.0]);
    let lv = log_perron_value(&g, &th).unwrap();
    let shifted = log_perron_value(&g, &th.add_scalar(800.0)).unwrap();
    assert_relative_eq!(lv, shifted + 800.0, epsilon = 1e-9);
    assert!(build_transfer(&g, &th).is_err());
}

#[test]
fn single_precision_agrees() {
    let g = fixtures::three_state();
    let th = DVector::from_vec(vec![0.1, -0.3, 0.2, 0.0, 0.4]);
    let d = perron_data(&g, &th, 1e-12).unwrap();
    let s = perron_data::<f32>(&g, &th.map(|v| v as f32), 1e-5).unwrap();
    assert!((d.lambda - s.lambda as f64).abs() < 1e-5);
}

#[test]
fn periodic_powers_follow_phase_classes() {
    let g = fixtures::bipartite();
    let th = DVector::from_vec(vec![0.2, -0.1, 0.3, 0.0, 0.15, -0.05]);
    let sd = perron_data(&g, &th, 1e-12).unwrap();
    let ones = DVector::from_element(4, 1.0);
    for n in [40, 41] {
        let exact = apply_power(&g, &th, n, &ones).unwrap();
        for q in 0..4 {
            assert_relative_eq!(exact[q], sd.power_asymptotics(n, q, &ones), max_relative = 1e-6);
        }
    }
}

fn weights(g: &DirectedGraph) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0f64..2.0, g.num_edges()).prop_map(DVector::from_vec)
}

proptest! {
    #[test]
    fn perron_data_is_consistent((g, th) in common::connected_graph(5, 6).prop_flat_map(|g| { let w = weights(&g); (Just(g), w) })) {
        let sd = perron_data(&g, &th, 1e-12).unwrap();
        prop_assert!(sd.residual(&g).unwrap() < 1e-10);
        prop_assert!(sd.f.iter().all(|v| *v > 0.0));
        prop_assert!(sd.phi.iter().all(|v| *v > 0.0));
        prop_assert!((sd.phi.sum() - 1.0).abs() < 1e-12);
        prop_assert!((sd.phi.dot(&sd.f) - 1.0).abs() < 1e-12);
        let lv = log_perron_value(&g, &th).unwrap();
        prop_assert!((lv - sd.log_lambda()).abs() < 1e-10);
    }

    #[test]
    fn dense_and_power_iteration_agree((g, th) in common::connected_graph(5, 6).prop_flat_map(|g| { let w = weights(&g); (Just(g), w) })) {
        let pd = g.compute_period().unwrap();
        let d = perron_data_with(&g, &pd, &th, 1e-12, EigenMethod::Dense).unwrap();
        let p = perron_data_with(&g, &pd, &th, 1e-12, EigenMethod::PowerIteration).unwrap();
        prop_assert!((d.lambda / p.lambda - 1.0).abs() < 1e-9);
        prop_assert!((&d.f - &p.f).amax() < 1e-7 * d.f.amax());
    }

    #[test]
    fn gauge_shifts((g, th) in common::connected_graph(5, 6).prop_flat_map(|g| { let w = weights(&g); (Just(g), w) }),
                    c in -1.0f64..1.0, seed in prop::collection::vec(-1.0f64..1.0, 5)) {
        let h = DVector::from_fn(g.num_vertices(), |i, _| seed[i]);
        let moved = &th + nabla(&g, &h) + DVector::from_element(g.num_edges(), c);
        let a = log_perron_value(&g, &th).unwrap();
        let b = log_perron_value(&g, &moved).unwrap();
        prop_assert!((a - c - b).abs() < 1e-10);
    }

    #[test]
    fn log_lambda_is_convex_and_decreasing((g, th) in common::connected_graph(4, 5).prop_flat_map(|g| { let w = weights(&g); (Just(g), w) }),
                                           step in prop::collection::vec(0.0f64..1.0, 9)) {
        let d = DVector::from_fn(g.num_edges(), |i, _| step[i]);
        let f0 = log_perron_value(&g, &th).unwrap();
        let f1 = log_perron_value(&g, &(&th + &d)).unwrap();
        let f2 = log_perron_value(&g, &(&th + &d * 2.0)).unwrap();
        prop_assert!(f1 <= f0 + 1e-12);
        prop_assert!(f1 <= 0.5 * (f0 + f2) + 1e-10);
    }

    #[test]
    fn twisted_radius_is_dominated((g, th) in common::connected_graph(4, 5).prop_flat_map(|g| { let w = weights(&g); (Just(g), w) }),
                                   xi in prop::collection::vec(-1.0f64..1.0, 9), h in prop::collection::vec(-1.0f64..1.0, 4)) {
        let lambda = log_perron_value(&g, &th).unwrap().exp();
        let xi = DVector::from_fn(g.num_edges(), |i, _| xi[i]);
        prop_assert!(spectral_radius_twisted(&g, &th, &xi).unwrap() <= lambda * (1.0 + 1e-9));
        let integral = xi.map(|v| (3.0 * v).round());
        let gauge = nabla(&g, &DVector::from_fn(g.num_vertices(), |i, _| h[i]));
        let rho = spectral_radius_twisted(&g, &th, &(integral + gauge)).unwrap();
        prop_assert!((rho / lambda - 1.0).abs() < 1e-8);
    }
}
