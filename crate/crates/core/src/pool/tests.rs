use super::*;

fn feats(v: &[f64]) -> Matrix<f64> {
    Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
}

fn sym(n: usize, edges: &[(usize, usize)], x: Matrix<f64>) -> Graph<f64> {
    Graph::build(n, edges, x, None).unwrap().symmetrize()
}

/// Repeated full scans for the best eligible edge.
fn naive_select(graph: &Graph<f64>, scores: &EdgeScores<f64>) -> Vec<usize> {
    let mut matched = vec![false; graph.num_nodes()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for (e, &(s, d)) in graph.edges().iter().enumerate() {
            if scores.dropped[e] || matched[s] || matched[d] {
                continue;
            }
            if best.is_none_or(|b| scores.normalized[e] > scores.normalized[b]) {
                best = Some(e);
            }
        }
        let Some(e) = best else { break };
        let (s, d) = graph.edges()[e];
        matched[s] = true;
        matched[d] = true;
        out.push(e);
    }
    out
}

fn with_normalized(graph: &Graph<f64>, normalized: Vec<f64>) -> EdgeScores<f64> {
    EdgeScores { raw: vec![0.0; graph.num_edges()], dropped: vec![false; normalized.len()], normalized }
}

#[test]
fn raw_score_examples() {
    let g = Graph::build(2, &[(0, 1)], feats(&[1.0, 2.0]), None).unwrap();
    let p = PoolParams::new(1, None, vec![1.0, 1.0], 0.0).unwrap();
    assert_eq!(raw_scores(&g, &p).unwrap(), vec![3.0]);

    let p = PoolParams::new(1, None, vec![0.0, 0.0], 0.7).unwrap();
    let g3 = sym(3, &[(0, 1), (1, 2)], feats(&[5.0, -1.0, 2.0]));
    assert!(raw_scores(&g3, &p).unwrap().iter().all(|&r| r == 0.7));

    let ge = Graph::build(2, &[(0, 1)], feats(&[1.0, 2.0]), Some(feats(&[4.0]))).unwrap();
    let pe = PoolParams::new(1, Some(1), vec![1.0, 1.0, 1.0], 0.0).unwrap();
    assert_eq!(raw_scores(&ge, &pe).unwrap(), vec![7.0]);
}

#[test]
fn raw_score_width_checks() {
    let g = Graph::build(2, &[(0, 1)], feats(&[1.0, 2.0]), None).unwrap();
    assert!(PoolParams::<f64>::new(1, None, vec![1.0], 0.0).is_err());
    let p2 = PoolParams::<f64>::zeros(2, None);
    assert!(matches!(raw_scores(&g, &p2), Err(Error::DimensionMismatch(_))));
    let pe = PoolParams::<f64>::zeros(1, Some(1));
    assert!(raw_scores(&g, &pe).is_err());
}

#[test]
fn normalization_examples() {
    // canonical order (0,2) (1,0) (2,0): node 2 receives one edge, node 0 two
    let g = Graph::build(3, &[(1, 0), (2, 0), (0, 2)], feats(&[0.0; 3]), None).unwrap();
    assert_eq!(g.edges(), &[(0, 2), (1, 0), (2, 0)]);
    let s = normalize_scores(&g, &[-4.0, 0.3, 0.3], &[false; 3]);
    assert_eq!(s[0], 1.5);
    assert!((s[1] - 1.0).abs() < 1e-15 && (s[2] - 1.0).abs() < 1e-15);

    let s = normalize_scores(&g, &[0.0, 1.0, 2.0], &[false; 3]);
    let first = 0.5 + 1.0 / (1.0 + 1f64.exp());
    assert!((s[1] - first).abs() < 1e-12);
    assert!((s[1] - 0.7689).abs() < 1e-4 && (s[2] - 1.2311).abs() < 1e-4);

    let s = normalize_scores(&g, &[0.0, 1.0, 2.0], &[false, false, true]);
    assert_eq!(s[2], 0.0);
    assert_eq!(s[1], 1.5);
}

#[test]
fn normalization_is_stable_for_large_raws() {
    let g = Graph::build(3, &[(1, 0), (2, 0)], feats(&[0.0; 3]), None).unwrap();
    let s = normalize_scores(&g, &[1000.0, 999.0], &[false; 2]);
    assert!(s.iter().all(|v| v.is_finite()));
    assert!((s[0] + s[1] - 2.0).abs() < 1e-12);
}

#[test]
fn dropout_mask() {
    assert!(apply_score_dropout(100, 0.0, 1).unwrap().iter().all(|d| !d));
    let m = apply_score_dropout(10_000, 0.2, 42).unwrap();
    let frac = m.iter().filter(|&&d| d).count() as f64 / 10_000.0;
    assert!((0.18..=0.22).contains(&frac), "{frac}");
    assert_eq!(m, apply_score_dropout(10_000, 0.2, 42).unwrap());
    assert!(matches!(apply_score_dropout(1, 1.0, 0), Err(Error::InvalidProbability(_))));
    assert!(apply_score_dropout(1, -0.1, 0).is_err());
}

#[test]
fn path_trace_skips_middle_edge() {
    // A-B-C-D; ids: AB=0 BA=1 BC=2 CB=3 CD=4 DC=5
    let g = sym(4, &[(0, 1), (1, 2), (2, 3)], feats(&[1.0, 2.0, 3.0, 4.0]));
    let scores = with_normalized(&g, vec![1.3, 1.3, 1.2, 1.2, 1.4, 1.4]);
    let m = select_contractions(&g, &scores);
    assert_eq!(m, vec![4, 0]);
    assert_eq!(m, naive_select(&g, &scores));

    let (pooled, info) = contract(&g, &m, &scores, Combiner::Sum).unwrap();
    assert_eq!(pooled.num_nodes(), 2);
    assert_eq!(pooled.edges(), &[(0, 1), (1, 0)]);
    assert_eq!(info.matching, vec![(2, 3), (0, 1)]);
    assert_eq!(info.cluster_of, vec![1, 1, 0, 0]);
    assert!((pooled.node_features()[(0, 0)] - 1.4 * 7.0).abs() < 1e-12);
    assert!((pooled.node_features()[(1, 0)] - 1.3 * 3.0).abs() < 1e-12);
}

#[test]
fn single_edge_and_triangle() {
    let g = sym(2, &[(0, 1)], feats(&[1.0, 2.0]));
    let scores = with_normalized(&g, vec![1.5, 1.5]);
    assert_eq!(select_contractions(&g, &scores), vec![0]);

    let t = sym(3, &[(0, 1), (1, 2), (0, 2)], feats(&[0.0; 3]));
    // edges: (0,1) (0,2) (1,0) (1,2) (2,0) (2,1)
    let scores = with_normalized(&t, vec![1.2, 0.9, 1.2, 1.1, 0.9, 1.1]);
    let m = select_contractions(&t, &scores);
    assert_eq!(m, vec![0]);
    assert_eq!(m, naive_select(&t, &scores));
}

#[test]
fn contract_examples() {
    let g = Graph::build(2, &[(0, 1)], feats(&[1.0, 2.0]), None).unwrap();
    let scores = EdgeScores::compute(&g, vec![0.0], vec![false]);
    let (pooled, info) = contract(&g, &[0], &scores, Combiner::Sum).unwrap();
    assert_eq!(pooled.node_features().as_slice(), &[4.5]);
    assert_eq!(info.node_score, vec![1.5, 1.5]);

    let g = sym(3, &[(0, 1), (1, 2)], feats(&[1.0, 2.0, 3.0]));
    let scores = EdgeScores::compute(&g, vec![0.0; 4], vec![false; 4]);
    let (pooled, info) = contract(&g, &[], &scores, Combiner::Sum).unwrap();
    assert_eq!(pooled, g);
    assert_eq!(info.node_score, vec![1.0; 3]);
    assert_eq!(info.cluster_of, vec![0, 1, 2]);
}

#[test]
fn contract_rejects_shared_endpoint() {
    let g = sym(3, &[(0, 1), (1, 2)], feats(&[1.0, 2.0, 3.0]));
    let scores = EdgeScores::compute(&g, vec![0.0; 4], vec![false; 4]);
    // (0,1) and (1,2) share node 1
    assert!(matches!(
        contract(&g, &[0, 2], &scores, Combiner::Sum),
        Err(Error::InvalidMatching(1))
    ));
}

#[test]
fn contract_sums_collapsing_edge_features() {
    // square 0-1-2-3-0; contracting (0,1) and (2,3) leaves two parallel links
    let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
    let ef = Matrix::from_vec(4, 1, vec![1.0, 10.0, 100.0, 1000.0]).unwrap();
    let g = Graph::build(4, &edges, feats(&[1.0; 4]), Some(ef)).unwrap().symmetrize();
    let e01 = g.topology().edge_index(0, 1).unwrap();
    let e23 = g.topology().edge_index(2, 3).unwrap();
    let scores = EdgeScores::compute(&g, vec![0.0; 8], vec![false; 8]);
    let (pooled, _) = contract(&g, &[e01, e23], &scores, Combiner::Sum).unwrap();
    assert_eq!(pooled.edges(), &[(0, 1), (1, 0)]);
    // (1,2) and (0,3) both map to 0 -> 1
    assert_eq!(pooled.edge_features().unwrap().as_slice(), &[1010.0, 1010.0]);
}

#[test]
fn weighted_combiner() {
    let ef = Matrix::from_vec(2, 1, vec![4.0, 8.0]).unwrap();
    let g = Graph::build(2, &[(0, 1), (1, 0)], feats(&[1.0, 2.0]), Some(ef)).unwrap();
    let scores = with_normalized(&g, vec![1.5, 1.5]);
    let c = Combiner::Weighted { src: 1.0, dst: 2.0, edge: 0.5, reverse_edge: 0.25 };
    let (pooled, _) = contract(&g, &[0], &scores, c).unwrap();
    // 1.5 * (1 + 4 + 2 + 2)
    assert!((pooled.node_features()[(0, 0)] - 13.5).abs() < 1e-12);
}

#[test]
fn forward_examples() {
    let star = sym(4, &[(0, 1), (0, 2), (0, 3)], feats(&[1.0, 2.0, 3.0, 4.0]));
    let mut rng = crate::rng::rng_from(3);
    for _ in 0..10 {
        let p = PoolParams::random(1, None, &mut rng);
        let out = edgepool_forward(&star, &p, &ForwardOptions::default()).unwrap();
        assert_eq!(out.info.matching.len(), 1);
        assert_eq!(out.pooled.num_nodes(), 3);
    }

    let lonely = Graph::build(3, &[], feats(&[1.0, 2.0, 3.0]), None).unwrap();
    let out = edgepool_forward(&lonely, &PoolParams::zeros(1, None), &ForwardOptions::default())
        .unwrap();
    assert!(out.info.matching.is_empty());
    assert_eq!(out.pooled, lonely);
}

/// Maximum matching size by exhaustive search (tiny graphs only).
fn brute_max_matching(n: usize, edges: &[(usize, usize)]) -> usize {
    fn go(i: usize, edges: &[(usize, usize)], used: &mut Vec<bool>) -> usize {
        if i == edges.len() {
            return 0;
        }
        let skip = go(i + 1, edges, used);
        let (a, b) = edges[i];
        if used[a] || used[b] {
            return skip;
        }
        used[a] = true;
        used[b] = true;
        let take = 1 + go(i + 1, edges, used);
        used[a] = false;
        used[b] = false;
        skip.max(take)
    }
    go(0, edges, &mut vec![false; n])
}

#[test]
fn uniform_cycle_halves_exactly() {
    let n = 100;
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let g = sym(n, &edges, Matrix::zeros(n, 1));
    let out = edgepool_forward(&g, &PoolParams::zeros(1, None), &ForwardOptions::default()).unwrap();
    assert_eq!(out.info.matching.len(), 50);
    assert_eq!(out.pooled.num_nodes(), 50);
    assert_eq!(out.info.matched_edges, naive_select(&g, &out.scores));
    // a perfect matching is the best possible on an even cycle; check on a small one
    let small: Vec<_> = (0..10).map(|i| (i, (i + 1) % 10)).collect();
    assert_eq!(brute_max_matching(10, &small), 5);
    let gs = sym(10, &small, Matrix::zeros(10, 1));
    let out = edgepool_forward(&gs, &PoolParams::zeros(1, None), &ForwardOptions::default()).unwrap();
    assert_eq!(out.info.matching.len(), 5);
}

#[test]
fn training_dropout_excludes_edges_from_selection() {
    let n = 30;
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let g = sym(n, &edges, Matrix::from_fn(n, 1, |i, _| i as f64 * 0.1));
    let opts = ForwardOptions { training: true, dropout_p: 0.5, seed: 9, ..Default::default() };
    let out = edgepool_forward(&g, &PoolParams::zeros(1, None), &opts).unwrap();
    assert!(out.scores.dropped.iter().any(|&d| d));
    for &e in &out.info.matched_edges {
        assert!(!out.scores.dropped[e]);
    }
    assert_eq!(out.info.matched_edges, naive_select(&g, &out.scores));
    let eval = edgepool_forward(&g, &PoolParams::zeros(1, None), &ForwardOptions {
        training: false,
        ..opts
    })
    .unwrap();
    assert!(eval.scores.dropped.iter().all(|&d| !d));
}

#[test]
fn backward_zero_upstream() {
    let g = sym(4, &[(0, 1), (1, 2), (2, 3)], feats(&[1.0, -2.0, 0.5, 3.0]));
    let p = PoolParams::new(1, None, vec![0.3, -0.7], 0.1).unwrap();
    let out = edgepool_forward(&g, &p, &ForwardOptions::default()).unwrap();
    let up = Matrix::zeros(out.pooled.num_nodes(), 1);
    let grads = edgepool_backward(&g, &p, &out.info, &out.scores, &up, None).unwrap();
    assert!(grads.node_features.as_slice().iter().all(|&v| v == 0.0));
    assert!(grads.weight.iter().all(|&v| v == 0.0));
    assert_eq!(grads.bias, 0.0);
}

#[test]
fn backward_singleton_softmax_has_no_score_gradient() {
    let g = Graph::build(2, &[(0, 1)], feats(&[1.0, 2.0]), None).unwrap();
    let p = PoolParams::new(1, None, vec![0.4, 0.9], -0.2).unwrap();
    let out = edgepool_forward(&g, &p, &ForwardOptions::default()).unwrap();
    let up = Matrix::from_vec(1, 1, vec![2.0]).unwrap();
    let grads = edgepool_backward(&g, &p, &out.info, &out.scores, &up, None).unwrap();
    assert_eq!(grads.weight, vec![0.0, 0.0]);
    assert_eq!(grads.bias, 0.0);
    // only the gating path: 1.5 * upstream for both endpoints
    assert_eq!(grads.node_features.as_slice(), &[3.0, 3.0]);
}

#[test]
fn backward_rejects_foreign_artifacts() {
    let g = sym(3, &[(0, 1), (1, 2)], feats(&[1.0, 2.0, 3.0]));
    let p = PoolParams::zeros(1, None);
    let out = edgepool_forward(&g, &p, &ForwardOptions::default()).unwrap();
    let wrong = Matrix::zeros(out.pooled.num_nodes() + 1, 1);
    assert!(edgepool_backward(&g, &p, &out.info, &out.scores, &wrong, None).is_err());
    let other = sym(4, &[(0, 1)], feats(&[0.0; 4]));
    let up = Matrix::zeros(out.pooled.num_nodes(), 1);
    assert!(edgepool_backward(&other, &p, &out.info, &out.scores, &up, None).is_err());
}
