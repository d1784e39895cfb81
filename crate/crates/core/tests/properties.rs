use std::sync::Arc;

use proptest::prelude::*;

use misca::fit::{fit_cycles, fit_exponential, fit_power, fit_power_ratio};
use misca::graph::{
    classify, enumerate_maximal_sets, enumerate_maximal_sets_scan, gen_random_graph, is_independent, mis_energy,
    Config, Graph, IndependenceClass,
};
use misca::markov::{absorbing_states, transition_row_with, UpdateRule};
use misca::pca::{run_to_absorption, PcaParams};
use misca::quantum::{build_pxp, Space, SpaceKind};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), pairs).prop_map(move |keep| {
            let edges = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(e, _)| e);
            Graph::new(n, edges).unwrap()
        })
    })
}

fn rule_strategy() -> impl Strategy<Value = UpdateRule> {
    prop_oneof![Just(UpdateRule::Local), Just(UpdateRule::ConflictFirst)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pivot_enumeration_matches_scan(g in graph_strategy(12)) {
        prop_assert_eq!(enumerate_maximal_sets(&g).unwrap(), enumerate_maximal_sets_scan(&g).unwrap());
    }

    #[test]
    fn maximal_sets_are_independent_and_saturated(g in graph_strategy(12)) {
        for c in enumerate_maximal_sets(&g).unwrap() {
            prop_assert!(is_independent(&g, &c).unwrap());
            for v in 0..g.n() {
                if !c.get(v) {
                    prop_assert!(g.neighbors(v).iter().any(|&w| c.get(w)));
                }
            }
        }
    }

    #[test]
    fn energy_minimizers_are_maximum_sets(g in graph_strategy(9), u in 1.01f64..5.0) {
        let n = g.n();
        let energies: Vec<f64> = (0..1u64 << n)
            .map(|s| mis_energy(&g, &Config::from_index(s, n), u).unwrap())
            .collect();
        let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        for (s, e) in energies.iter().enumerate() {
            let class = classify(&g, &Config::from_index(s as u64, n)).unwrap();
            prop_assert_eq!((e - min).abs() < 1e-12, class == IndependenceClass::Maximum);
        }
    }

    #[test]
    fn realized_degree_is_exact(n in 2usize..40, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let k = frac * (n - 1) as f64;
        let g = gen_random_graph(n, k, seed).unwrap();
        let m = (k * n as f64 / 2.0).round();
        prop_assert_eq!(g.edges().len() as f64, m);
        prop_assert!((g.average_degree() - 2.0 * m / n as f64).abs() < 1e-12);
    }

    #[test]
    fn transition_rows_are_stochastic(g in graph_strategy(8), s in any::<u64>(), p in 0.01f64..0.99, rule in rule_strategy()) {
        let c = Config::from_index(s & ((1u64 << g.n()) - 1), g.n());
        let row = transition_row_with(&g, &c, p, rule).unwrap();
        prop_assert!((row.total() - 1.0).abs() < 1e-12);
        prop_assert!(row.successors.values().all(|&q| q > 0.0));
    }

    #[test]
    fn kernel_absorbers_are_maximal_sets(g in graph_strategy(12), rule in rule_strategy()) {
        prop_assert_eq!(absorbing_states(&g, rule).unwrap(), enumerate_maximal_sets(&g).unwrap());
    }

    // Cliques at large p need one lone activation, which can take far longer
    // than the step budget; p <= 0.6 keeps absorption certain in practice.
    #[test]
    fn runs_are_deterministic_and_end_maximal(g in graph_strategy(14), p in 0.05f64..0.6, seed in any::<u64>()) {
        let params = PcaParams::new(p, seed);
        let a = run_to_absorption(&g, &params).unwrap();
        prop_assert_eq!(&a, &run_to_absorption(&g, &params).unwrap());
        prop_assert!(a.absorbed);
        prop_assert!(a.class.unwrap().is_maximal());
    }

    #[test]
    fn pxp_stays_in_independent_sets(g in graph_strategy(6)) {
        let space = Arc::new(Space::new(&g, SpaceKind::Full).unwrap());
        let h = build_pxp(&g, space.clone()).unwrap();
        for a in 0..space.dim() {
            if !g.is_independent_index(space.state(a)) {
                continue;
            }
            for &(b, _) in h.row(a) {
                prop_assert!(g.is_independent_index(space.state(b)));
            }
        }
    }

    #[test]
    fn fitters_recover_noiseless_parameters(c in 0.1f64..100.0, e in -2.0f64..4.0) {
        let xs = [1.5f64, 3.0, 7.0, 11.0, 20.0];
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        let f = fit_power(&xs, &xs.map(|x| c * x.powf(e))).unwrap();
        prop_assert!(rel(f.value("gamma"), c) < 1e-10);
        prop_assert!((f.value("delta") - e).abs() < 1e-10 * e.abs().max(1.0));
        let f = fit_cycles(&xs, &xs.map(|x| c * x.powf(e))).unwrap();
        prop_assert!(rel(f.value("a"), c) < 1e-10);
        let f = fit_exponential(&xs, &xs.map(|x| (e + 0.1 * c * x).exp())).unwrap();
        prop_assert!((f.value("Gamma") - e).abs() < 1e-10 * e.abs().max(1.0));
        prop_assert!(rel(f.value("Delta"), 0.1 * c) < 1e-10);
        let ks = [1.0f64, 2.5, 1.5, 4.0, 3.0];
        let ts: Vec<f64> = xs.iter().zip(&ks).map(|(n, k)| c * (n / k).powf(e)).collect();
        let f = fit_power_ratio(&xs, &ks, &ts).unwrap();
        prop_assert!(rel(f.value("alpha"), c) < 1e-10);
        prop_assert!(f.rmse >= 0.0);
    }
}
