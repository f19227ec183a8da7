mod common;

use approx::assert_relative_eq;
use dircount::calculus::{
    balance_defect, balanced_decompose, drift, e0_basis, gauge_generators, grad_lambda, hessian_log_lambda, nabla,
    nabla_matrix, nabla_perp_basis, orthogonal_complement, project_nabla,
};
use dircount::transfer::{log_perron_value, perron_data};
use dircount::{fixtures, DirectedGraph};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

fn with_weights(max_v: usize, max_extra: usize) -> impl Strategy<Value = (DirectedGraph, DVector<f64>)> {
    common::connected_graph(max_v, max_extra).prop_flat_map(|g| {
        let w = prop::collection::vec(-1.5f64..1.5, g.num_edges()).prop_map(DVector::from_vec);
        (Just(g), w)
    })
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// Central-difference Hessian of `log lambda`.
fn fd_hessian(g: &DirectedGraph, th: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let na = g.num_edges();
    let f = |t: &DVector<f64>| log_perron_value(g, t).unwrap();
    DMatrix::from_fn(na, na, |i, j| {
        let (ei, ej) = (unit(na, i) * h, unit(na, j) * h);
        (f(&(th + &ei + &ej)) - f(&(th + &ei - &ej)) - f(&(th - &ei + &ej)) + f(&(th - &ei - &ej))) / (4.0 * h * h)
    })
}

#[test]
fn fibonacci_drift_in_closed_form() {
    let g = fixtures::fibonacci();
    let sd = perron_data(&g, &DVector::zeros(3), 1e-12).unwrap();
    let l = (1.0 + 5f64.sqrt()) / 2.0;
    // Stationary edge frequencies of the maximal-entropy chain.
    let x1 = l / (l + 2.0);
    let x2 = 1.0 / (l + 2.0);
    assert_relative_eq!(drift(&g, &sd), DVector::from_vec(vec![x1, x2, x2]), max_relative = 1e-12);
}

#[test]
fn e0_dimensions() {
    for (name, g) in fixtures::all() {
        let r = e0_basis::<f64>(&g).ncols();
        assert_eq!(r, g.num_edges() - g.num_vertices(), "{name}");
        assert_eq!(nabla_perp_basis::<f64>(&g).ncols(), g.num_edges() - g.num_vertices() + 1, "{name}");
    }
}

#[test]
fn complement_of_full_rank_and_empty() {
    let m = DMatrix::<f64>::identity(3, 3);
    assert_eq!(orthogonal_complement(&m).ncols(), 0);
    let z = DMatrix::<f64>::zeros(3, 1);
    assert_eq!(orthogonal_complement(&z).ncols(), 3);
}

#[test]
fn single_precision_hessian() {
    let g = fixtures::three_state();
    let th = DVector::from_vec(vec![0.2, 0.1, -0.3, 0.4, 0.0]);
    let d = hessian_log_lambda(&g, &perron_data(&g, &th, 1e-12).unwrap()).unwrap();
    let s = hessian_log_lambda(&g, &perron_data::<f32>(&g, &th.map(|v| v as f32), 1e-5).unwrap()).unwrap();
    assert!((d.matrix - s.matrix.map(|v| v as f64)).amax() < 1e-4);
}

proptest! {
    #[test]
    fn gradient_matches_finite_differences((g, th) in with_weights(4, 5)) {
        let sd = perron_data(&g, &th, 1e-12).unwrap();
        let grad = grad_lambda(&g, &sd);
        let h = 1e-6;
        for a in 0..g.num_edges() {
            let e = unit(g.num_edges(), a) * h;
            let fd = (log_perron_value(&g, &(&th + &e)).unwrap().exp() - log_perron_value(&g, &(&th - &e)).unwrap().exp()) / (2.0 * h);
            prop_assert!((fd - grad.grad_lambda[a]).abs() < 1e-6 * sd.lambda.max(1.0), "edge {a}: {fd} vs {}", grad.grad_lambda[a]);
        }
        prop_assert!((grad.drift.sum() - 1.0).abs() < 1e-12);
        prop_assert!(grad.drift.iter().all(|v| *v > 0.0));
        // Drift is a probability flow, so it is orthogonal to nabla V.
        prop_assert!((nabla_matrix::<f64>(&g).transpose() * &grad.drift).amax() < 1e-12);
    }

    #[test]
    fn hessian_matches_finite_differences((g, th) in with_weights(4, 4)) {
        let sd = perron_data(&g, &th, 1e-12).unwrap();
        let hess = hessian_log_lambda(&g, &sd).unwrap();
        let fd = fd_hessian(&g, &th, 1e-4);
        prop_assert!((&hess.matrix - &fd).amax() < 1e-5, "{} vs {}", hess.matrix, fd);
    }

    #[test]
    fn hessian_kernel_and_definiteness((g, th) in with_weights(5, 5)) {
        let sd = perron_data(&g, &th, 1e-12).unwrap();
        let hess = hessian_log_lambda(&g, &sd).unwrap();
        let gens = gauge_generators::<f64>(&g);
        prop_assert!((&hess.matrix * &gens).amax() < 1e-10);
        prop_assert_eq!(hess.r(), g.num_edges() - g.num_vertices());
        if hess.r() > 0 {
            let eig = SymmetricEigen::new(hess.e0_gram.clone()).eigenvalues;
            prop_assert!(eig.min() > 1e-8, "{}", eig);
        }
        let bt_b = hess.e0_basis.transpose() * &hess.e0_basis;
        prop_assert!((bt_b - DMatrix::identity(hess.r(), hess.r())).amax() < 1e-12);
        prop_assert!((gens.transpose() * &hess.e0_basis).amax() < 1e-12);
    }

    #[test]
    fn balanced_decomposition_reconstructs((g, th) in with_weights(5, 5), seed in prop::collection::vec(-3.0f64..3.0, 10)) {
        let sd = perron_data(&g, &th, 1e-12).unwrap();
        let xi = DVector::from_fn(g.num_edges(), |i, _| seed[i]);
        let d = balanced_decompose(&g, &sd, &xi).unwrap();
        let rebuilt = DVector::from_element(g.num_edges(), d.c) + nabla(&g, &d.g) + &d.balanced;
        prop_assert!((rebuilt - &xi).amax() < 1e-10);
        prop_assert!(balance_defect(&g, &sd, &d.balanced).amax() < 1e-10);
        prop_assert_eq!(d.g[0], 0.0);
        // The constant is the drift average of xi.
        prop_assert!((d.c - drift(&g, &sd).dot(&xi)).abs() < 1e-10);
    }

    #[test]
    fn projection_onto_gauge((g, seed) in common::connected_graph(5, 5).prop_flat_map(|g| {
        let n = g.num_edges();
        (Just(g), prop::collection::vec(-2.0f64..2.0, n))
    })) {
        let v = DVector::from_vec(seed);
        let p = project_nabla(&g, &v);
        let rest = &v - &p;
        prop_assert!((nabla_matrix::<f64>(&g).transpose() * &rest).amax() < 1e-10);
        prop_assert!((project_nabla(&g, &p) - &p).amax() < 1e-10);
    }
}
