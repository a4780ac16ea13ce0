mod common;

use common::*;
use congest_domset::cds::{build_cds, bfs_clustering, gs_graph, ruling_subset, CdsParams, CDS_PARAM_DIVISOR};
use congest_domset::coloring::Coloring;
use congest_domset::derand_color::derandomize_colorwise;
use congest_domset::derand_decomp::{n_one_shot, ClusterStageConfig, FixOrder};
use congest_domset::fractional::initial_fds;
use congest_domset::oracle::{brute_force_mds, DEFAULT_MDS_CAP};
use congest_domset::pipeline::{run_mds, PipelineParams, RunConfig, Variant};
use congest_domset::rounding::{
    conditional_expected_value, one_shot_instance, phase1, phase2, PartialAssignment, DEFAULT_ENUM_BUDGET,
};
use congest_domset::sim::SimConfig;
use congest_domset::{fractionality, validate_cfds, Exact, Graph};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn any_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let pairs = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v)));
            Graph::from_edges(n, pairs.zip(bits).filter(|(_, b)| *b).map(|(e, _)| e)).unwrap()
        })
    })
}

/// A random tree plus random extra edges.
fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let parents = proptest::collection::vec(any::<prop::sample::Index>(), n.saturating_sub(1));
        let extra = proptest::collection::vec((0..n, 0..n), 0..=2 * n);
        (parents, extra).prop_map(move |(parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, p)| (p.index(i + 1), i + 1)).collect();
            edges.extend(extra.into_iter().filter(|(u, v)| u != v));
            edges.sort_unstable_by_key(|&(u, v)| (u.min(v), u.max(v)));
            edges.dedup_by_key(|&mut (u, v)| (u.min(v), u.max(v)));
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

fn exact_ratio_le(size: &Exact, factor: f64, opt: usize) -> bool {
    let f = BigRational::from_float(factor).unwrap();
    *size <= f * BigRational::from_integer(BigInt::from(opt))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn parse_round_trips(g in any_graph(12)) {
        prop_assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn initial_fds_is_feasible_and_near_optimal(g in any_graph(10), eps in 0.05f64..1.0) {
        let init = initial_fds(&g, eps).unwrap();
        validate_cfds(&g, &init.cfds).unwrap();
        let (opt, _) = brute_force_mds(&g, DEFAULT_MDS_CAP).unwrap();
        prop_assert!(exact_ratio_le(&size(&init.cfds), 1.0 + eps, opt));
        let floor = eps / (2.0 * g.max_degree().max(1) as f64);
        prop_assert!(fractionality(&init.cfds).to_f64() >= floor.min(1.0) * (1.0 - 1e-12));
    }

    #[test]
    fn pipelines_dominate_within_bound(g in any_graph(10), eps in prop::sample::select(vec![0.25, 0.5, 1.0])) {
        let cfg = RunConfig { epsilon: eps, ..RunConfig::default() };
        let (opt, _) = brute_force_mds(&g, DEFAULT_MDS_CAP).unwrap();
        for variant in [Variant::MdsN, Variant::MdsDelta] {
            let run = run_mds(&g, variant, &cfg).unwrap();
            prop_assert!(g.is_dominating(&run.cfds.member_flags()));
            prop_assert!(run.cfds.is_integral());
            let bound = PipelineParams::new(&g, eps).unwrap().ratio_bound(&g);
            prop_assert!(run.set.len() as f64 <= bound * opt as f64);
            let last = run.report.stages.last().unwrap();
            prop_assert_eq!(last.fractionality, 1.0);
            prop_assert_eq!(last.size as usize, run.set.len());
        }
    }

    #[test]
    fn reports_are_reproducible(g in connected_graph(9), seed in any::<u64>()) {
        let cfg = RunConfig { seed, ..RunConfig::default() };
        let a = run_mds(&g, Variant::MdsN, &cfg).unwrap();
        let b = run_mds(&g, Variant::MdsN, &cfg).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    }

    /// Summing phase 1 and phase 2 over every coin outcome reproduces the
    /// analytic expectation.
    #[test]
    fn expectation_matches_enumeration(g in connected_graph(7)) {
        prop_assume!(g.delta_tilde() >= 2);
        let params = PipelineParams::new(&g, 0.5).unwrap();
        let init = initial_fds(&g, params.eps1).unwrap().cfds;
        let inst = one_shot_instance(&g, &init, g.delta_tilde()).unwrap();
        let parts = inst.participants();
        let free = PartialAssignment::free(inst.n());
        let analytic = g.nodes().fold(BigRational::zero(), |acc, v| {
            acc + conditional_expected_value::<Exact>(&inst, v, &free, DEFAULT_ENUM_BUDGET).unwrap()
        });
        let mut brute = BigRational::zero();
        for mask in 0u32..(1 << parts.len()) {
            let mut coins = vec![None; inst.n()];
            let mut pr = BigRational::one();
            for (i, &v) in parts.iter().enumerate() {
                let heads = mask >> i & 1 == 1;
                coins[v] = Some(heads);
                let p = inst.p[v].to_exact();
                pr *= if heads { p } else { BigRational::one() - p };
            }
            let out = phase2(&inst, &phase1(&inst, &coins).unwrap());
            brute += pr * size(&out);
        }
        prop_assert_eq!(analytic, brute);
    }

    #[test]
    fn colorwise_never_exceeds_expectation(g in connected_graph(8)) {
        prop_assume!(g.delta_tilde() >= 2);
        let params = PipelineParams::new(&g, 0.5).unwrap();
        let init = initial_fds(&g, params.eps1).unwrap().cfds;
        let inst = one_shot_instance(&g, &init, g.delta_tilde()).unwrap();
        let coloring = Coloring::trivial(g.n(), &inst.participants());
        let out = derandomize_colorwise(&inst, &coloring, DEFAULT_ENUM_BUDGET, &SimConfig::default()).unwrap();
        validate_cfds(&g, &out.cfds).unwrap();
        prop_assert!(out.cfds.is_integral());
        let expected = sum_x(&inst) + uncover_sum_independent(&inst, DEFAULT_ENUM_BUDGET);
        prop_assert!(size(&out.cfds) <= expected + inv_pow(g.n(), 7));
        prop_assert_eq!(out.replay(&inst).unwrap(), out.cfds);
    }

    #[test]
    fn gs_connectivity_follows_g(g in any_graph(10)) {
        let s: Vec<usize> = brute_force_mds(&g, DEFAULT_MDS_CAP).unwrap().1;
        let gs = gs_graph(&g, &s).unwrap();
        prop_assert_eq!(gs.is_connected(), g.is_connected());
        for (u, v, path) in &gs.edges {
            prop_assert!(path.len() <= 4);
            prop_assert_eq!((path[0], *path.last().unwrap()), (*u, *v));
            prop_assert!(path.windows(2).all(|w| g.has_edge(w[0], w[1])));
            prop_assert_eq!(Some(path.len() - 1), g.distance(*u, *v));
        }
    }

    #[test]
    fn ruling_subset_separates_and_covers(g in connected_graph(12), alpha in 1usize..4, slack in 0usize..3) {
        let s: Vec<usize> = g.nodes().filter(|v| v % 2 == 0).collect();
        let beta = alpha - 1 + slack;
        let r = ruling_subset(&g, &s, alpha, beta).unwrap();
        for (i, &a) in r.members.iter().enumerate() {
            prop_assert!(s.contains(&a));
            for &b in &r.members[i + 1..] {
                prop_assert!(g.distance(a, b).unwrap() >= alpha);
            }
        }
        for &v in &s {
            prop_assert!(r.members.iter().any(|&m| g.distance(v, m).unwrap() <= beta));
        }
    }

    #[test]
    fn pruned_trees_end_in_s(g in connected_graph(12)) {
        let s = brute_force_mds(&g, DEFAULT_MDS_CAP).unwrap().1;
        let params = CdsParams::for_n(g.n(), CDS_PARAM_DIVISOR);
        let rulers = ruling_subset(&g, &s, params.alpha, params.beta).unwrap().members;
        let cl = bfs_clustering(&g, &s, &rulers, &SimConfig::default()).unwrap();
        let tree = cl.tree_nodes();
        prop_assert!(s.iter().all(|v| tree.contains(v)));
        prop_assert!(tree.len() <= 3 * s.len());
        for &v in &tree {
            let has_child = tree.iter().any(|&u| cl.parent[u] == Some(v));
            prop_assert!(has_child || s.contains(&v), "leaf {} outside S", v);
            if let Some(p) = cl.parent[v] {
                prop_assert!(g.has_edge(v, p));
                prop_assert_eq!(cl.cluster_of[p], cl.cluster_of[v]);
            }
        }
    }

    #[test]
    fn cds_is_connected_dominating_and_bounded(g in connected_graph(12)) {
        let s = brute_force_mds(&g, DEFAULT_MDS_CAP).unwrap().1;
        let out = build_cds(&g, &s, CdsParams::for_n(g.n(), CDS_PARAM_DIVISOR), &SimConfig::default()).unwrap();
        let flags: Vec<bool> = g.nodes().map(|v| out.set.binary_search(&v).is_ok()).collect();
        prop_assert!(g.is_dominating(&flags));
        prop_assert!(g.induces_connected(&flags));
        prop_assert!(out.set.len() <= out.size_bound());
        prop_assert!(s.iter().all(|v| out.set.contains(v)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn clusterwise_orders_agree(g in any_graph(10)) {
        prop_assume!(g.delta_tilde() >= 2);
        let params = PipelineParams::new(&g, 0.5).unwrap();
        let init = initial_fds(&g, params.eps1).unwrap().cfds;
        let mut outs = Vec::new();
        for order in [FixOrder::Interleaved, FixOrder::Sequential] {
            let cfg = ClusterStageConfig { order, ..ClusterStageConfig::default() };
            let stage = n_one_shot(&g, &init, params.f, &cfg).unwrap();
            validate_cfds(&g, &stage.cfds).unwrap();
            prop_assert!(stage.cfds.is_integral());
            outs.push(stage.cfds);
        }
        prop_assert_eq!(&outs[0], &outs[1]);
    }
}

#[test]
fn disconnected_graphs_are_rejected_for_cds() {
    let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
    let err = build_cds(&g, &[0, 2], CdsParams::for_n(4, CDS_PARAM_DIVISOR), &SimConfig::default()).unwrap_err();
    assert!(err.is_precondition());
}

#[test]
fn non_dominating_input_is_rejected() {
    let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    assert!(gs_graph(&g, &[0]).unwrap_err().is_precondition());
}
