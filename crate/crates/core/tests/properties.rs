mod support;

use edgepool::data::kfold_splits;
use edgepool::nn::layers::{global_mean_pool, mean_conv};
use edgepool::rng::rng_from;
use edgepool::{
    batch, contract, edgepool_forward, select_contractions, unpool_chain, unpool_once, Combiner,
    ForwardOptions, Graph64, Matrix64, PoolParams, UnpoolPlan,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;
use support::{Instance, Kind, KINDS};

fn kind() -> impl Strategy<Value = Kind> {
    prop::sample::select(KINDS.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scores_are_normalized_per_destination(kind in kind(), n in 2usize..120, seed in any::<u64>()) {
        let inst = Instance::new(kind, n, seed);
        let out = inst.forward();
        prop_assert_eq!(support::check_scores(&inst.graph, &out.scores), Ok(()));
    }

    #[test]
    fn matching_is_valid_and_maximal(kind in kind(), n in 2usize..120, seed in any::<u64>()) {
        let inst = Instance::new(kind, n, seed);
        let out = inst.forward();
        prop_assert_eq!(support::check_matching(&inst.graph, &out.scores, &out.info, &out.pooled), Ok(()));
    }

    #[test]
    fn greedy_matches_repeated_argmax(kind in kind(), n in 2usize..8, seed in any::<u64>()) {
        let inst = Instance::new(kind, n, seed);
        let out = inst.forward();
        prop_assert_eq!(select_contractions(&inst.graph, &out.scores), support::naive_select(&inst.graph, &out.scores));
    }

    #[test]
    fn greedy_matches_repeated_argmax_with_ties(n in 2usize..8, levels in 1usize..4, seed in any::<u64>()) {
        // quantized scores force ties, broken by edge id
        let mut inst = Instance::new(Kind::ErdosRenyi, n, seed);
        inst.opts.training = false;
        let mut scores = inst.forward().scores;
        let mut rng = rng_from(seed ^ 1);
        for s in scores.normalized.iter_mut() {
            *s = 0.5 + rng.random_range(0..levels) as f64 * 0.25;
        }
        prop_assert_eq!(select_contractions(&inst.graph, &scores), support::naive_select(&inst.graph, &scores));
    }

    #[test]
    fn scores_are_local(kind in kind(), n in 2usize..60, seed in any::<u64>()) {
        let inst = Instance::new(kind, n, seed);
        prop_assert_eq!(support::check_locality(&inst, &mut rng_from(seed ^ 2)), Ok(()));
    }

    #[test]
    fn pooling_is_permutation_equivariant(kind in kind(), n in 2usize..60, seed in any::<u64>()) {
        let inst = Instance::new(kind, n, seed);
        let r = support::check_permutation(&inst.graph, &inst.params, &mut rng_from(seed ^ 3));
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn contract_then_unpool_restores_sums(kind in kind(), n in 2usize..80, seed in any::<u64>()) {
        let inst = Instance::new(kind, n, seed);
        let out = inst.forward();
        let u = unpool_once(out.pooled.node_features(), &out.info).unwrap();
        prop_assert_eq!(support::check_roundtrip(&inst.graph, &out, &u, 1e-9), Ok(()));
    }

    #[test]
    fn two_level_chain_roundtrips_per_level(n in 3usize..60, seed in any::<u64>()) {
        let inst = Instance::new(Kind::ErdosRenyi, n, seed);
        let opts = ForwardOptions::default();
        let l1 = edgepool_forward(&inst.graph, &inst.params, &opts).unwrap();
        let l2 = edgepool_forward(&l1.pooled, &inst.params, &opts).unwrap();
        let up2 = unpool_once(l2.pooled.node_features(), &l2.info).unwrap();
        prop_assert_eq!(support::check_roundtrip(&l1.pooled, &l2, &up2, 1e-9), Ok(()));
        let up1 = unpool_once(l1.pooled.node_features(), &l1.info).unwrap();
        prop_assert_eq!(support::check_roundtrip(&inst.graph, &l1, &up1, 1e-9), Ok(()));
        let plan = UnpoolPlan::new(vec![l1.info.clone(), l2.info.clone()]).unwrap();
        let chained = unpool_chain(l2.pooled.node_features(), &plan).unwrap();
        let manual = unpool_once(&up2, &l1.info).unwrap();
        prop_assert_eq!(chained.as_slice(), manual.as_slice());
    }

    #[test]
    fn unpool_is_linear(n in 2usize..50, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let inst = Instance::new(Kind::ErdosRenyi, n, seed);
        let out = inst.forward();
        let mut rng = rng_from(seed);
        let k = out.info.pooled_num_nodes;
        let p = Matrix64::from_fn(k, 2, |_, _| rng.random_range(-1.0..1.0));
        let q = Matrix64::from_fn(k, 2, |_, _| rng.random_range(-1.0..1.0));
        let lhs = unpool_once(&p.scale(a).add(&q.scale(b)).unwrap(), &out.info).unwrap();
        let rhs = unpool_once(&p, &out.info).unwrap().scale(a).add(&unpool_once(&q, &out.info).unwrap().scale(b)).unwrap();
        for (x, y) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrize_is_idempotent(n in 2usize..40, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let edges: Vec<(usize, usize)> = (0..2 * n)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .filter(|(a, b)| a != b)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let g = Graph64::build(n, &edges, Matrix64::zeros(n, 1), None).unwrap();
        let s = g.symmetrize();
        prop_assert!(s.is_symmetric());
        let twice = s.symmetrize();
        prop_assert_eq!(twice.edges(), s.edges());
        prop_assert!(s.num_edges() >= g.num_edges() && s.num_edges() <= 2 * g.num_edges());
    }

    #[test]
    fn batching_preserves_totals(sizes in prop::collection::vec(1usize..30, 1..10), seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let graphs: Vec<Graph64> = sizes.iter().map(|&s| support::random_graph(Kind::Path, s, 2, &mut rng)).collect();
        let refs: Vec<&Graph64> = graphs.iter().collect();
        let b = batch(&refs).unwrap();
        prop_assert_eq!(b.graph.num_nodes(), graphs.iter().map(|g| g.num_nodes()).sum::<usize>());
        prop_assert_eq!(b.graph.num_edges(), graphs.iter().map(|g| g.num_edges()).sum::<usize>());
        prop_assert_eq!(b.node_counts(), graphs.iter().map(|g| g.num_nodes()).collect::<Vec<_>>());
        for &(s, d) in b.graph.edges() {
            prop_assert_eq!(b.graph_id[s], b.graph_id[d]);
        }
    }

    #[test]
    fn pooling_never_crosses_graphs(sizes in prop::collection::vec(2usize..20, 1..6), seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let graphs: Vec<Graph64> = sizes.iter().map(|&s| support::random_graph(Kind::ErdosRenyi, s, 3, &mut rng)).collect();
        let b = batch(&graphs.iter().collect::<Vec<_>>()).unwrap();
        let params = PoolParams::random(3, None, &mut rng);
        let out = edgepool_forward(&b.graph, &params, &ForwardOptions::default()).unwrap();
        for &(i, j) in &out.info.matching {
            prop_assert_eq!(b.graph_id[i], b.graph_id[j]);
        }
        let ids = out.info.map_assignment(&b.graph_id);
        prop_assert_eq!(ids.len(), out.pooled.num_nodes());
    }

    #[test]
    fn folds_partition_indices(n in 1usize..300, k in 1usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_splits(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0usize; n];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            prop_assert_eq!(f.train.len() + f.test.len(), n);
            let mut all: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn mean_conv_is_permutation_equivariant(n in 2usize..30, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let g = support::random_graph(Kind::ErdosRenyi, n, 3, &mut rng);
        let ws = Matrix64::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let wn = Matrix64::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let bias = Matrix64::from_fn(1, 2, |_, _| rng.random_range(-1.0..1.0));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let pg = support::permute(&g, &perm);
        let (y, _) = mean_conv(g.topology(), g.node_features(), &ws, Some(&wn), &bias).unwrap();
        let (py, _) = mean_conv(pg.topology(), pg.node_features(), &ws, Some(&wn), &bias).unwrap();
        for i in 0..n {
            for (a, b) in y.row(i).iter().zip(py.row(perm[i])) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn global_mean_pool_is_permutation_invariant(n in 1usize..30, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let g = support::random_graph(Kind::Path, n, 3, &mut rng);
        let mut perm: Vec<usize> = (0..g.num_nodes()).collect();
        perm.shuffle(&mut rng);
        let pg = support::permute(&g, &perm);
        let a = batch(&[&g]).unwrap();
        let b = batch(&[&pg]).unwrap();
        let ya = global_mean_pool(&a, a.graph.node_features()).unwrap();
        let yb = global_mean_pool(&b, b.graph.node_features()).unwrap();
        for (x, y) in ya.as_slice().iter().zip(yb.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_combiner_with_unit_weights_is_sum(n in 2usize..40, seed in any::<u64>()) {
        let inst = Instance::new(Kind::ErdosRenyi, n, seed);
        let out = inst.forward();
        let unit = Combiner::Weighted { src: 1.0, dst: 1.0, edge: 0.0, reverse_edge: 0.0 };
        let (pooled, _) = contract(&inst.graph, &out.info.matched_edges, &out.scores, unit).unwrap();
        prop_assert_eq!(pooled.node_features(), out.pooled.node_features());
    }
}
