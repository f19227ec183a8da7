mod common;

use dircount::calculus::{drift, nabla};
use dircount::counting::{
    count_distribution, count_targeted, edge_coords, enumerate_distribution, global_count_exact, global_count_predicted,
    walk_counts, Budget, CountQuery, Predictor, Refusal,
};
use dircount::growth::Growth;
use dircount::transfer::perron_data;
use dircount::{fixtures, DirectedGraph, Error};
use nalgebra::DVector;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn serial() -> Budget {
    Budget { parallel: false, ..Budget::default() }
}

#[test]
fn full_shift_binomials() {
    let g = fixtures::full_shift(2);
    let p = Predictor::<f64>::new(&g).unwrap();
    for n in [0usize, 1, 7, 20, 33] {
        for k in 0..=n as i64 {
            let q = CountQuery { n, q: 0, q_prime: 0, target: vec![k, n as i64 - k] };
            assert_eq!(p.exact(&q).unwrap(), common::binomial(n as u64, k as u64), "n = {n}, k = {k}");
        }
    }
    let g3 = fixtures::full_shift(3);
    let dist = count_distribution(&g3, &edge_coords(&g3), 3, 9, 0, 0, &serial()).unwrap();
    for (k, v) in &dist {
        let (a, b) = (k[0] as u64, k[1] as u64);
        assert_eq!(*v, common::binomial(9, a) * common::binomial(9 - a, b));
    }
    assert_eq!(dist.values().sum::<BigUint>(), BigUint::from(3u32).pow(9));
}

#[test]
fn phase_obstruction_gives_zero() {
    let g = fixtures::bipartite();
    let p = Predictor::<f64>::new(&g).unwrap();
    let pd = g.compute_period().unwrap();
    for n in (1..=15).step_by(2) {
        for q in 0..4 {
            for qp in (0..4).filter(|&qp| pd.phase[qp] == pd.phase[q]) {
                assert!(walk_counts(&g, n, q)[qp].is_zero());
                let dist = count_distribution(&g, &edge_coords(&g), 6, n, q, qp, &serial()).unwrap();
                assert!(dist.is_empty());
                let query = CountQuery { n, q, q_prime: qp, target: vec![0; 6] };
                let pred = p.predict(&query).unwrap();
                assert_eq!(pred.refusal.unwrap().reason(), "phase");
            }
        }
    }
}

#[test]
fn screen_is_necessary_on_fixtures() {
    // Every occurrence vector that some path realises passes the pre-screen.
    for (name, g) in fixtures::all() {
        let p = Predictor::<f64>::new(&g).unwrap();
        let frame = p.frame();
        for n in 0..=12 {
            for q in 0..g.num_vertices() {
                for qp in 0..g.num_vertices() {
                    let dist = count_distribution(&g, &edge_coords(&g), g.num_edges(), n, q, qp, &serial()).unwrap();
                    for raw in dist.keys() {
                        let x = frame.normalizer.normalize(raw, q, qp);
                        let query = CountQuery { n, q, q_prime: qp, target: x };
                        assert!(p.prescreen(&query).is_ok(), "{name}: n = {n}, {q} -> {qp}");
                    }
                }
            }
        }
    }
}

#[test]
fn fiber_sums_match_label_counts() {
    let lg = fixtures::fibonacci_labelled();
    let g = lg.base();
    let sofic = Predictor::<f64>::sofic(&lg).unwrap();
    for n in 0..=12 {
        for q in 0..2 {
            for qp in 0..2 {
                let fine = count_distribution(g, &edge_coords(g), 3, n, q, qp, &serial()).unwrap();
                let coarse = count_distribution(g, &sofic.coords(), 2, n, q, qp, &serial()).unwrap();
                let mut summed = std::collections::BTreeMap::<Vec<i64>, BigUint>::new();
                for (x, v) in fine {
                    *summed.entry(lg.project_counts(&x)).or_default() += v;
                }
                assert_eq!(summed, coarse, "n = {n}, {q} -> {qp}");
            }
        }
    }
}

#[test]
fn prediction_ignores_gauge_choice() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for g in [fixtures::three_state(), fixtures::bipartite()] {
        let p = Predictor::<f64>::new(&g).unwrap();
        let dir = Growth::<f64>::new(&g).unwrap().x_g().unwrap();
        for (q, qp) in [(0, 0), (0, 1), (1, 2), (2, 0)] {
            let Some(target) = (20..=30).find_map(|n| {
                p.nearest_target(&dir, n, q, qp).map(|t| CountQuery { n, q, q_prime: qp, target: t })
            }) else {
                continue;
            };
            let pred = p.predict(&target).unwrap();
            let Some(log_value) = pred.log_value else { continue };
            let theta = pred.theta_star.unwrap();
            let psi = pred.psi.unwrap().finite().unwrap();
            for _ in 0..5 {
                let xi = DVector::from_fn(g.num_vertices(), |_, _| rng.random_range(-2.0..2.0));
                let moved = &theta + nabla(&g, &xi);
                let (lv, _) = p.predict_at(&target, &moved, psi).unwrap();
                assert!((lv - log_value).abs() < 1e-8, "{lv} vs {log_value}");
            }
        }
    }
}

#[test]
fn refusals_and_budgets() {
    let g = fixtures::fibonacci();
    let p = Predictor::<f64>::new(&g).unwrap();
    let gauge = CountQuery { n: 4, q: 0, q_prime: 0, target: vec![2, 2, 0] };
    assert_eq!(p.predict(&gauge).unwrap().refusal.unwrap().reason(), "gauge");
    let length = CountQuery { n: 5, q: 0, q_prime: 0, target: vec![2, 1, 1] };
    assert_eq!(p.predict(&length).unwrap().refusal.unwrap().reason(), "length");
    let negative = CountQuery { n: 0, q: 0, q_prime: 0, target: vec![2, -1, -1] };
    assert_eq!(p.predict(&negative).unwrap().refusal.unwrap().reason(), "negative");
    let zero = CountQuery { n: 0, q: 0, q_prime: 0, target: vec![0, 0, 0] };
    assert_eq!(p.predict(&zero).unwrap().refusal, Some(Refusal::PsiNotPositive));
    assert!(matches!(
        p.predict(&CountQuery { n: 2, q: 0, q_prime: 0, target: vec![1, 1] }),
        Err(Error::DimensionMismatch { .. })
    ));
    let tight = Predictor::<f64>::new(&g).unwrap().with_budget(Budget { max_length: 10, ..Budget::default() });
    let long = CountQuery { n: 12, q: 0, q_prime: 0, target: vec![6, 3, 3] };
    assert!(matches!(tight.exact(&long), Err(Error::BudgetExceeded(_))));
    let small = Predictor::<f64>::new(&g).unwrap().with_budget(Budget { max_bytes: 0, ..Budget::default() });
    assert!(matches!(small.exact(&long), Err(Error::BudgetExceeded(_))));
}

#[test]
fn global_counts_follow_the_perron_root() {
    for g in [fixtures::fibonacci(), fixtures::bipartite(), fixtures::three_state()] {
        let gr = Growth::<f64>::new(&g).unwrap();
        for q in 0..g.num_vertices() {
            for n in [30usize, 31] {
                let exact = global_count_exact(&g, n, q).to_f64().unwrap();
                let pred = global_count_predicted(&gr, n, q).unwrap();
                assert!((exact / pred - 1.0).abs() < 0.02, "n = {n}, q = {q}: {exact} vs {pred}");
            }
        }
    }
}

/// Exact lattice rays with three multiples below 40, then drift directions at random weights.
fn sample_rays(g: &DirectedGraph, rng: &mut ChaCha8Rng) -> Vec<(DVector<f64>, Vec<usize>)> {
    let mut out = Vec::new();
    for d in common::positive_circulations(g, 13).into_iter().take(14) {
        let s: i64 = d.iter().sum();
        let lengths = (1..).map(|k| (k * s) as usize).take_while(|n| *n <= 40).collect();
        out.push((DVector::from_iterator(d.len(), d.iter().map(|v| *v as f64)), lengths));
    }
    let p = g.compute_period().unwrap().period;
    for _ in 0..6 {
        let th = DVector::from_fn(g.num_edges(), |_, _| rng.random_range(-0.7..0.7));
        let x = drift(g, &perron_data(g, &th, 1e-12).unwrap());
        out.push((x, (24..=40).step_by(2 * p).collect()));
    }
    out
}

#[test]
fn ratios_settle_along_rays() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, g) in fixtures::all() {
        let p = Predictor::<f64>::new(&g).unwrap();
        let mut checked = 0;
        for (dir, lengths) in sample_rays(&g, &mut rng) {
            let report = p.convergence_report(&dir, 0, 0, &lengths).unwrap();
            let ratios: Vec<f64> = report.rows.iter().filter_map(|r| r.ratio).collect();
            if ratios.len() < 3 {
                // Refused: psi = 0 on cycles, or a target on the cone boundary.
                assert!(report.rows.iter().all(|r| r.prediction.refusal.is_some() || r.exact.is_zero()), "{name}");
                continue;
            }
            let last = *ratios.last().unwrap();
            assert!((0.8..=1.25).contains(&last), "{name} {dir}: {last}");
            assert!(report.tail_monotone, "{name} {dir}: {ratios:?}");
            checked += 1;
        }
        if !g.is_cyclic() {
            assert!(checked >= 10, "{name}: only {checked} directions");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dynamic_program_matches_enumeration(g in common::connected_graph(3, 4), n in 0usize..8, q in 0usize..3, qp in 0usize..3) {
        let (q, qp) = (q % g.num_vertices(), qp % g.num_vertices());
        let coords = edge_coords(&g);
        let listed = enumerate_distribution(&g, &coords, g.num_edges(), n, q, qp);
        for parallel in [false, true] {
            let budget = Budget { parallel, ..Budget::default() };
            let dist = count_distribution(&g, &coords, g.num_edges(), n, q, qp, &budget).unwrap();
            prop_assert_eq!(&dist, &listed);
            for (x, v) in &listed {
                prop_assert_eq!(&count_targeted(&g, &coords, x, n, q, qp, &budget).unwrap(), v);
            }
        }
        let total: BigUint = listed.values().sum();
        prop_assert_eq!(&total, &walk_counts(&g, n, q)[qp]);
    }

    #[test]
    fn unreachable_targets_count_zero(g in common::connected_graph(3, 3), n in 1usize..7, seed in prop::collection::vec(0i64..4, 6)) {
        let coords = edge_coords(&g);
        let target: Vec<i64> = (0..g.num_edges()).map(|a| seed[a]).collect();
        let listed = enumerate_distribution(&g, &coords, g.num_edges(), n, 0, 0);
        let want = listed.get(&target).cloned().unwrap_or_default();
        prop_assert_eq!(count_targeted(&g, &coords, &target, n, 0, 0, &serial()).unwrap(), want);
    }
}
