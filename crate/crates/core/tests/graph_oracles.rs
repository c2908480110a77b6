mod support;

use echonet::corpus::Corpus;
use echonet::graph::{
    build_network, centrality, centrality_with, connected_components, engagement_counts, network_stats,
    CentralityOptions, ComponentMode, EndpointScope, EngagementGraph, Measure, NetworkConfig, Semantics,
    PAGERANK_DAMPING,
};
use echonet::Error;
use support::*;

fn edges(list: &[(&str, &str)]) -> EngagementGraph {
    EngagementGraph::from_edges(
        Semantics::Mention,
        3,
        Vec::<String>::new(),
        list.iter().map(|(a, b)| (a.to_string(), b.to_string(), 3)),
    )
    .unwrap()
}

fn assert_close(got: &[f64], want: &[f64], tol: f64, what: &str) {
    assert_eq!(got.len(), want.len());
    for (i, (a, b)) in got.iter().zip(want).enumerate() {
        assert!((a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0), "{what}[{i}]: {a} vs {b}");
    }
}

#[test]
fn path_graph_by_hand() {
    let g = edges(&[("a", "b"), ("b", "c")]);
    assert_eq!(centrality(&g, Measure::Betweenness).unwrap().values(), vec![0.0, 1.0, 0.0]);
    assert_eq!(centrality(&g, Measure::Closeness).unwrap().values(), vec![1.5, 1.0, 0.0]);
    assert_eq!(centrality(&g, Measure::TotalDeg).unwrap().values(), vec![1.0, 2.0, 1.0]);
    // A path has no cycle, so the in-edge eigenvector is undefined.
    assert!(matches!(centrality(&g, Measure::Eigenvector), Err(Error::Convergence { .. })));
}

#[test]
fn directed_cycle_is_uniform() {
    let g = edges(&[("a", "b"), ("b", "c"), ("c", "a")]);
    let third = 1.0 / 3.0;
    assert_close(&centrality(&g, Measure::PageRank).unwrap().values(), &[third; 3], 1e-12, "pagerank");
    let e = 1.0 / 3f64.sqrt();
    assert_close(&centrality(&g, Measure::Eigenvector).unwrap().values(), &[e; 3], 1e-9, "eigenvector");
    assert_eq!(centrality(&g, Measure::Betweenness).unwrap().values(), vec![1.0; 3]);
    let s = network_stats(&g).unwrap();
    assert_eq!((s.n_triangles, s.diameter, s.n_strong_cc), (1, 1, 1));
}

#[test]
fn unweighted_measures_match_oracles() {
    for seed in 0..25 {
        let g = random_graph(40, 0.08, 500 + seed);
        let a = adjacency(&g);
        assert_close(&centrality(&g, Measure::Betweenness).unwrap().values(), &betweenness_oracle(&a), 1e-9, "betweenness");
        assert_close(&centrality(&g, Measure::Closeness).unwrap().values(), &closeness_oracle(&a), 1e-9, "closeness");
        assert_close(
            &centrality(&g, Measure::PageRank).unwrap().values(),
            &pagerank_oracle(&a, PAGERANK_DAMPING),
            1e-9,
            "pagerank",
        );
        let eig = centrality(&g, Measure::Eigenvector).map(|r| r.values()).map_err(|e| e.to_string());
        if let EigenCheck::Mismatch(m) = check_eigenvector(&a, eig, 1e-9) {
            panic!("seed {seed}: {m}");
        }
    }
}

#[test]
fn weighted_measures_use_edge_counts() {
    let opts = CentralityOptions { weighted: true };
    for seed in 0..10 {
        let g = random_graph(30, 0.1, 900 + seed);
        let w = weights(&g);
        let out: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
        let inn: Vec<f64> = (0..w.len()).map(|j| w.iter().map(|r| r[j]).sum()).collect();
        assert_eq!(centrality_with(&g, Measure::OutDeg, opts).unwrap().values(), out);
        assert_eq!(centrality_with(&g, Measure::InDeg, opts).unwrap().values(), inn);
        assert_close(
            &centrality_with(&g, Measure::PageRank, opts).unwrap().values(),
            &weighted_pagerank_oracle(&w, PAGERANK_DAMPING),
            1e-9,
            "weighted pagerank",
        );
        // Path-based measures ignore weights.
        assert_eq!(
            centrality_with(&g, Measure::Betweenness, opts).unwrap(),
            centrality(&g, Measure::Betweenness).unwrap()
        );
    }
}

#[test]
fn component_partitions_match_reachability() {
    for seed in 0..20 {
        let g = random_graph(50, 0.03, 40 + seed);
        let a = adjacency(&g);
        for (mode, strong) in [(ComponentMode::Strong, true), (ComponentMode::Weak, false)] {
            let got = connected_components(&g, mode);
            let want: Vec<Vec<String>> = components_oracle(&a, strong)
                .into_iter()
                .map(|c| c.into_iter().map(|i| g.node_id(i).to_owned()).collect())
                .collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn delta_threshold_is_inclusive() {
    let mut tweets = Vec::new();
    for (target, n) in [("b", 2), ("c", 3), ("d", 4)] {
        for k in 0..n {
            let mut t = tweet(&format!("{target}{k}"), "a", "hi");
            t.mentions = vec![target.into()];
            tweets.push(t);
        }
    }
    for u in ["b", "c", "d"] {
        tweets.push(tweet(&format!("own-{u}"), u, "hi"));
    }
    let corpus = Corpus::new(tweets, vec![]).unwrap();
    let counts = engagement_counts(&corpus, Semantics::Mention);
    assert_eq!(counts[&("a".to_string(), "c".to_string())], 3);
    let g = build_network(&corpus, &NetworkConfig::new(Semantics::Mention)).unwrap();
    assert_eq!(g.weight("a", "b"), None);
    assert_eq!(g.weight("a", "c"), Some(3));
    assert_eq!(g.weight("a", "d"), Some(4));
}

#[test]
fn endpoint_scope_controls_outside_accounts() {
    let mut tweets = Vec::new();
    for k in 0..3 {
        let mut t = tweet(&format!("t{k}"), "a", "hi");
        t.mentions = vec!["outsider".into()];
        tweets.push(t);
    }
    let corpus = Corpus::new(tweets, vec![]).unwrap();
    let mut cfg = NetworkConfig::new(Semantics::Mention);
    assert_eq!(build_network(&corpus, &cfg).unwrap().edge_count(), 0);
    cfg.endpoints = EndpointScope::Any;
    assert_eq!(build_network(&corpus, &cfg).unwrap().weight("a", "outsider"), Some(3));
}
