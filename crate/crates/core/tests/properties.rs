//! Randomised checks of the structural identities. Everything here is
//! exact or has a stated tolerance; Monte Carlo checks live elsewhere.

use proptest::prelude::*;

use sbm_recovery::harness::{beyond_red, red_agrees_with_threshold};
use sbm_recovery::ml::{ml_bisection, node_majority_failure, swap_cut_delta};
use sbm_recovery::sdp::{
    build_b, certificate_check, certificate_residual, sbm_laplacian, sdp_solve, SdpConfig,
};
use sbm_recovery::tail::{diff_binomial_tail, g_exponent, h_rate, tau_star, threshold_f};
use sbm_recovery::two_phase::{
    local_improvement, local_improvement_with, split_graph, ImproveOptions, SplitConfig,
};
use sbm_recovery::{
    agreement, count_edges_between, cut_size, generate_sbm, parse_graph, write_graph, Graph,
    Labeling, SbmParams,
};

fn graph(max_half: usize) -> impl Strategy<Value = Graph> {
    (2..=max_half)
        .prop_flat_map(|half| {
            let n = 2 * half;
            (Just(n), proptest::collection::vec(any::<bool>(), n * (n - 1) / 2))
        })
        .prop_map(|(n, bits)| {
            let pairs = (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)));
            let edges: Vec<_> = pairs.zip(bits).filter(|&(_, b)| b).map(|(e, _)| e).collect();
            Graph::new(n, edges).unwrap()
        })
}

fn balanced(n: usize) -> impl Strategy<Value = Labeling> {
    Just(Labeling::planted(n).values().to_vec())
        .prop_shuffle()
        .prop_map(|v| Labeling::new(v).unwrap())
}

fn graph_and_labels(max_half: usize) -> impl Strategy<Value = (Graph, Labeling)> {
    graph(max_half).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), balanced(n))
    })
}

fn sampled() -> impl Strategy<Value = (SbmParams, u64)> {
    (5usize..=30, 0.0f64..4.0, 0.0f64..1.0, any::<u64>()).prop_map(|(half, a, frac, seed)| {
        let n = 2 * half;
        (SbmParams::new(n, a, a * frac).unwrap(), seed)
    })
}

/// Brute force over every balanced labeling: minimum cut, number of optimal
/// partitions, and the optimum whose +1 set sorts first.
fn naive_bisection(g: &Graph) -> (usize, u64, Labeling) {
    let n = g.n();
    let mut best: Option<(usize, u64, Vec<usize>)> = None;
    for mask in 0u32..(1 << n) {
        if mask & 1 == 0 || mask.count_ones() as usize != n / 2 {
            continue;
        }
        let side = |v: usize| mask >> v & 1 == 1;
        let cut = g.edges().iter().filter(|&&(u, v)| side(u) != side(v)).count();
        let members: Vec<usize> = (0..n).filter(|&v| side(v)).collect();
        best = match best {
            None => Some((cut, 1, members)),
            Some((c, _, _)) if cut < c => Some((cut, 1, members)),
            Some((c, k, m)) if cut == c => Some((c, k + 1, m.min(members))),
            keep => keep,
        };
    }
    let (cut, count, members) = best.unwrap();
    let mut values = vec![-1i8; n];
    for v in members {
        values[v] = 1;
    }
    (cut, count, Labeling::new(values).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_is_a_pure_function((params, seed) in sampled()) {
        let (g1, x1) = generate_sbm(&params, seed).unwrap();
        let (g2, x2) = generate_sbm(&params, seed).unwrap();
        prop_assert_eq!(write_graph(&g1), write_graph(&g2));
        prop_assert_eq!(x1.to_text(), x2.to_text());
        prop_assert!(x1.is_balanced());
    }

    #[test]
    fn cut_is_flip_invariant((g, x) in graph_and_labels(10)) {
        prop_assert_eq!(cut_size(&g, &x).unwrap(), cut_size(&g, &x.negated()).unwrap());
    }

    #[test]
    fn agreement_symmetric_and_flip_invariant(x in balanced(16), y in balanced(16)) {
        let a = agreement(&x, &y).unwrap();
        prop_assert_eq!(a, agreement(&y, &x).unwrap());
        prop_assert_eq!(a, agreement(&x.negated(), &y).unwrap());
        prop_assert_eq!(a, agreement(&x, &y.negated()).unwrap());
        prop_assert!((0.5..=1.0).contains(&a));
        prop_assert_eq!(agreement(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn edges_split_into_within_and_across((g, x) in graph_and_labels(10)) {
        let a = x.positive();
        let b = x.negative();
        let across = count_edges_between(&g, &a, &b).unwrap();
        let within = |s: &[usize]| {
            g.edges().iter().filter(|&&(u, v)| s.contains(&u) && s.contains(&v)).count()
        };
        prop_assert_eq!(across + within(&a) + within(&b), g.edge_count());
        prop_assert_eq!(across, cut_size(&g, &x).unwrap());
    }

    #[test]
    fn serialization_round_trips((g, x) in graph_and_labels(12)) {
        let text = write_graph(&g);
        let back = parse_graph(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(write_graph(&back), text);
        prop_assert_eq!(Labeling::parse(&x.to_text()).unwrap(), x);
    }

    #[test]
    fn tail_covers_full_support(mz in 0u64..60, mw in 0u64..60, p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let r = diff_binomial_tail(mz, mw, p, q, -(mw as i64)).unwrap();
        prop_assert_eq!(r.probability, 1.0);
    }

    #[test]
    fn tail_monotone_in_s_p_q(m in 1u64..80, p in 0.01f64..0.5, q in 0.01f64..0.5, s in -5i64..10) {
        let t = |p: f64, q: f64, s: i64| diff_binomial_tail(m, m, p, q, s).unwrap().probability;
        let here = t(p, q, s);
        let slack = 1e-13;
        prop_assert!(t(p, q, s + 1) <= here + slack);
        prop_assert!(t((p + 0.05).min(1.0), q, s) <= here + slack);
        prop_assert!(t(p, (q + 0.05).min(1.0), s) >= here - slack);
    }

    #[test]
    fn tau_star_is_stationary(alpha in 0.1f64..40.0, beta in 0.1f64..10.0, eps in -5.0f64..5.0) {
        let tau = tau_star(alpha, beta, eps).unwrap();
        let prod = alpha * beta;
        prop_assert!((tau * (tau + eps) - prod).abs() <= 1e-12 * prod.max(1.0));
        let g = g_exponent(alpha, beta, eps).unwrap();
        let h = h_rate(alpha, beta, tau, eps).unwrap();
        prop_assert!((g - h).abs() <= 1e-10 * g.abs().max(1.0));
        let step = 1e-5 * tau.max(1e-3);
        let slope = (h_rate(alpha, beta, tau + step, eps).unwrap()
            - h_rate(alpha, beta, tau - step, eps).unwrap())
            / (2.0 * step);
        prop_assert!(slope.abs() <= 1e-6, "slope {}", slope);
    }

    #[test]
    fn threshold_matches_quadratic_form(alpha in 0.0f64..40.0, beta in 0.0f64..40.0) {
        prop_assume!((alpha - beta).abs() > 1e-6);
        let quad = (alpha - beta).powi(2) > 4.0 * (alpha + beta) - 4.0 && alpha + beta > 2.0;
        let v = threshold_f(alpha, beta).unwrap();
        // the two forms differ only within rounding of the boundary
        prop_assume!((v.f_value - 1.0).abs() > 1e-9);
        prop_assert_eq!(v.recoverable, quad);
        prop_assert_eq!(beyond_red(alpha, beta), v.recoverable);
        prop_assert!(red_agrees_with_threshold(alpha, beta).unwrap());
    }

    #[test]
    fn ml_matches_naive_enumeration(g in graph(5)) {
        let fast = ml_bisection(&g).unwrap();
        let (cut, count, best) = naive_bisection(&g);
        prop_assert_eq!(fast.min_cut, cut);
        prop_assert_eq!(fast.optima_count, count);
        prop_assert_eq!(fast.unique, count == 1);
        prop_assert_eq!(fast.best, best);
    }

    #[test]
    fn joint_majority_failure_defeats_ml((g, x) in graph_and_labels(6)) {
        let fail = |i| node_majority_failure(&g, &x, i).unwrap();
        let pair = x.positive().into_iter().find(|&i| fail(i))
            .zip(x.negative().into_iter().find(|&j| fail(j)));
        if let Some((i, j)) = pair {
            prop_assert!(swap_cut_delta(&g, &x, i, j).unwrap() <= 0);
            let ml = ml_bisection(&g).unwrap();
            prop_assert!(!(ml.unique && agreement(&ml.best, &x).unwrap() == 1.0));
        }
    }

    #[test]
    fn laplacian_annihilates_truth((params, seed) in sampled()) {
        let (g, x) = generate_sbm(&params, seed).unwrap();
        let truth: Vec<f64> = x.values().iter().map(|&v| f64::from(v)).collect();
        let l = sbm_laplacian(&g, &x).unwrap();
        prop_assert!(l.mul_vec(&truth).iter().all(|&v| v == 0.0));
        prop_assert_eq!(certificate_residual(&g, &x).unwrap(), 0);
    }

    #[test]
    fn duality_trace_identity((g, x) in graph_and_labels(12)) {
        let truth: Vec<f64> = x.values().iter().map(|&v| f64::from(v)).collect();
        let primal = build_b(&g).quadratic_form(&truth);
        let dual: i64 = (0..g.n())
            .map(|i| {
                let own = g.neighbors(i).iter().filter(|&&u| x.get(u) == x.get(i)).count() as i64;
                2 * (own - (g.degree(i) as i64 - own)) + 1
            })
            .sum();
        prop_assert_eq!(primal, dual as f64);
    }

    #[test]
    fn split_partitions_edges((params, seed) in sampled(), split_seed in any::<u64>()) {
        let (g, _) = generate_sbm(&params, seed).unwrap();
        let cfg = SplitConfig { c: 0.5, seed: split_seed };
        let (g1, g2) = split_graph(&g, &cfg).unwrap();
        prop_assert_eq!(g1.n(), g.n());
        prop_assert_eq!(g1.edge_count() + g2.edge_count(), g.edge_count());
        let mut merged: Vec<_> = g1.edges().iter().chain(g2.edges()).copied().collect();
        merged.sort_unstable();
        prop_assert_eq!(merged.as_slice(), g.edges());
    }

    #[test]
    fn improvement_balanced_and_equivariant((g, x) in graph_and_labels(12), subset in any::<bool>()) {
        let opts = ImproveOptions { balanced_subset: subset, rounds: 1 };
        let out = local_improvement_with(&g, &x, &opts).unwrap().labels;
        prop_assert!(out.is_balanced());
        let flipped = local_improvement_with(&g, &x.negated(), &opts).unwrap().labels;
        prop_assert_eq!(flipped, out.negated());
        let plain = local_improvement(&g, &x).unwrap();
        prop_assert!(plain == x || plain.values().iter().zip(x.values()).filter(|(a, b)| a != b).count() % 2 == 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn certificate_implies_solver_recovery(seed in any::<u64>(), alpha in 12.0f64..20.0) {
        let params = SbmParams::new(100, alpha, 1.0).unwrap();
        let (g, x) = generate_sbm(&params, seed).unwrap();
        let report = certificate_check(&g, &x).unwrap();
        if report.certified {
            let cfg = SdpConfig { seed, ..SdpConfig::default() };
            let sol = sdp_solve(&build_b(&g), &cfg).unwrap();
            prop_assert_eq!(agreement(&sol.rounded, &x).unwrap(), 1.0);
        }
    }
}
