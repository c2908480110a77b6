//! The seven per-node centrality measures.
//!
//! Betweenness and closeness always use hop distances on the directed graph.
//! With [`CentralityOptions::weighted`], degrees become strengths and the
//! eigenvector and PageRank iterations use edge weights.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EngagementGraph;
use crate::error::{Error, Result};

pub const TOLERANCE: f64 = 1e-10;
pub const EIGENVECTOR_MAX_ITER: usize = 100_000;
pub const PAGERANK_DAMPING: f64 = 0.85;
const PAGERANK_MAX_ITER: usize = 100_000;
const BETWEENNESS_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    InDeg,
    OutDeg,
    TotalDeg,
    Betweenness,
    Eigenvector,
    Closeness,
    PageRank,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::InDeg,
        Measure::OutDeg,
        Measure::TotalDeg,
        Measure::Betweenness,
        Measure::Eigenvector,
        Measure::Closeness,
        Measure::PageRank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::InDeg => "in_degree",
            Measure::OutDeg => "out_degree",
            Measure::TotalDeg => "total_degree",
            Measure::Betweenness => "betweenness",
            Measure::Eigenvector => "eigenvector",
            Measure::Closeness => "closeness",
            Measure::PageRank => "pagerank",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown centrality measure {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentralityOptions {
    pub weighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityResult {
    pub measure: Measure,
    pub scores: BTreeMap<String, f64>,
}

impl CentralityResult {
    fn from_vec(g: &EngagementGraph, measure: Measure, values: Vec<f64>) -> Self {
        let scores = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (g.node_id(i).to_owned(), v))
            .collect();
        Self { measure, scores }
    }

    /// Scores ordered by node index (sorted id order).
    pub fn values(&self) -> Vec<f64> {
        self.scores.values().copied().collect()
    }
}

pub fn centrality(g: &EngagementGraph, measure: Measure) -> Result<CentralityResult> {
    centrality_with(g, measure, CentralityOptions::default())
}

pub fn centrality_with(
    g: &EngagementGraph,
    measure: Measure,
    opts: CentralityOptions,
) -> Result<CentralityResult> {
    Ok(CentralityResult::from_vec(g, measure, raw(g, measure, opts)?))
}

/// Every measure, in [`Measure::ALL`] order; failures are reported per measure.
pub fn all_centralities(
    g: &EngagementGraph,
    opts: CentralityOptions,
) -> Vec<(Measure, Result<CentralityResult>)> {
    Measure::ALL
        .par_iter()
        .map(|&m| (m, centrality_with(g, m, opts)))
        .collect()
}

pub(crate) fn raw(g: &EngagementGraph, measure: Measure, opts: CentralityOptions) -> Result<Vec<f64>> {
    let w = |x: u32| if opts.weighted { f64::from(x) } else { 1.0 };
    let n = g.node_count();
    let in_deg = || (0..n).map(|i| g.in_edges(i).iter().map(|&(_, x)| w(x)).sum()).collect();
    let out_deg = || (0..n).map(|i| g.out_edges(i).iter().map(|&(_, x)| w(x)).sum()).collect();
    Ok(match measure {
        Measure::InDeg => in_deg(),
        Measure::OutDeg => out_deg(),
        Measure::TotalDeg => {
            let (a, b): (Vec<f64>, Vec<f64>) = (in_deg(), out_deg());
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        }
        Measure::Betweenness => betweenness(g),
        Measure::Closeness => harmonic_closeness(g),
        Measure::Eigenvector => eigenvector(g, opts.weighted)?,
        Measure::PageRank => pagerank(g, opts.weighted)?,
    })
}

fn bfs_distances(g: &EngagementGraph, source: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
    dist.iter_mut().for_each(|d| *d = usize::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in g.out_edges(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
}

/// Brandes accumulation over unweighted directed shortest paths, unnormalized.
fn betweenness(g: &EngagementGraph) -> Vec<f64> {
    let n = g.node_count();
    let sources: Vec<usize> = (0..n).collect();
    // Fixed chunking plus in-order summation keeps the result independent of
    // the thread schedule.
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BETWEENNESS_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut sigma = vec![0.0f64; n];
            let mut dist = vec![usize::MAX; n];
            let mut delta = vec![0.0f64; n];
            let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut order = Vec::with_capacity(n);
            let mut queue = VecDeque::new();
            for &s in chunk {
                for i in 0..n {
                    sigma[i] = 0.0;
                    dist[i] = usize::MAX;
                    delta[i] = 0.0;
                    preds[i].clear();
                }
                order.clear();
                sigma[s] = 1.0;
                dist[s] = 0;
                queue.push_back(s);
                while let Some(v) = queue.pop_front() {
                    order.push(v);
                    for &(w, _) in g.out_edges(v) {
                        if dist[w] == usize::MAX {
                            dist[w] = dist[v] + 1;
                            queue.push_back(w);
                        }
                        if dist[w] == dist[v] + 1 {
                            sigma[w] += sigma[v];
                            preds[w].push(v);
                        }
                    }
                }
                while let Some(w) = order.pop() {
                    for &v in &preds[w] {
                        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                    }
                    if w != s {
                        acc[w] += delta[w];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Sum of reciprocal out-distances to every reachable node.
fn harmonic_closeness(g: &EngagementGraph) -> Vec<f64> {
    let n = g.node_count();
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![usize::MAX; n], VecDeque::new()),
            |(dist, queue), s| {
                bfs_distances(g, s, dist, queue);
                dist.iter()
                    .enumerate()
                    .filter(|&(t, &d)| t != s && d != usize::MAX)
                    .map(|(_, &d)| 1.0 / d as f64)
                    .sum()
            },
        )
        .collect()
}

/// Power iteration for the principal eigenvector of the in-edge adjacency
/// (`x_v ∝ Σ_{u→v} x_u`), shifted by the identity so periodic graphs converge.
///
/// Stops once the estimated distance to the fixed point, from the observed
/// contraction rate, falls below [`TOLERANCE`]. L2-normalized.
fn eigenvector(g: &EngagementGraph, weighted: bool) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let w = |x: u32| if weighted { f64::from(x) } else { 1.0 };
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    let mut prev_change = f64::INFINITY;
    for _ in 0..EIGENVECTOR_MAX_ITER {
        for v in 0..n {
            next[v] = x[v] + g.in_edges(v).iter().map(|&(u, k)| w(k) * x[u]).sum::<f64>();
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        let change = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        let rate = if prev_change.is_finite() && prev_change > 0.0 {
            change / prev_change
        } else {
            1.0
        };
        let bound = if rate < 1.0 {
            change * rate / (1.0 - rate)
        } else {
            f64::INFINITY
        };
        if change == 0.0 || (change < TOLERANCE && bound < TOLERANCE) {
            return Ok(x);
        }
        prev_change = change;
    }
    Err(Error::Convergence {
        method: "eigenvector power iteration",
        iterations: EIGENVECTOR_MAX_ITER,
    })
}

/// PageRank with uniform teleport; dangling mass is spread uniformly.
///
/// Stops when the L1 step, scaled by the contraction bound `d / (1 - d)`,
/// drops below [`TOLERANCE`].
fn pagerank(g: &EngagementGraph, weighted: bool) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let d = PAGERANK_DAMPING;
    let w = |x: u32| if weighted { f64::from(x) } else { 1.0 };
    let out_weight: Vec<f64> = (0..n)
        .map(|i| g.out_edges(i).iter().map(|&(_, k)| w(k)).sum())
        .collect();
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&i| out_weight[i] == 0.0).map(|i| x[i]).sum();
        let base = (1.0 - d) * uniform + d * dangling * uniform;
        for v in 0..n {
            next[v] = base
                + d * g
                    .in_edges(v)
                    .iter()
                    .map(|&(u, k)| x[u] * w(k) / out_weight[u])
                    .sum::<f64>();
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change * d / (1.0 - d) < TOLERANCE {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        method: "pagerank",
        iterations: PAGERANK_MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_graphs::graph;
    use super::*;

    fn score(r: &CentralityResult, id: &str) -> f64 {
        r.scores[id]
    }

    #[test]
    fn directed_star_degrees() {
        let g = graph(&[("h", "1"), ("h", "2"), ("h", "3"), ("h", "4"), ("h", "5")]);
        let out = centrality(&g, Measure::OutDeg).unwrap();
        let inn = centrality(&g, Measure::InDeg).unwrap();
        assert_eq!(score(&out, "h"), 5.0);
        for leaf in ["1", "2", "3", "4", "5"] {
            assert_eq!(score(&inn, leaf), 1.0);
            assert_eq!(score(&out, leaf), 0.0);
        }
        let tot = centrality(&g, Measure::TotalDeg).unwrap();
        assert_eq!(score(&tot, "h"), 5.0);
    }

    #[test]
    fn weighted_degrees_are_strengths() {
        let g = EngagementGraph::from_edges(
            super::super::Semantics::Mention,
            3,
            Vec::<String>::new(),
            vec![("a".into(), "b".into(), 4), ("a".into(), "c".into(), 7)],
        )
        .unwrap();
        let r = centrality_with(&g, Measure::OutDeg, CentralityOptions { weighted: true }).unwrap();
        assert_eq!(score(&r, "a"), 11.0);
    }

    #[test]
    fn path_betweenness() {
        let g = graph(&[("a", "b"), ("b", "a"), ("b", "c"), ("c", "b")]);
        let r = centrality(&g, Measure::Betweenness).unwrap();
        assert_eq!(score(&r, "b"), 2.0);
        assert_eq!(score(&r, "a"), 0.0);
    }

    #[test]
    fn diamond_betweenness_splits_paths() {
        // s->a->t and s->b->t: a and b each carry half of the one s->t pair.
        let g = graph(&[("s", "a"), ("s", "b"), ("a", "t"), ("b", "t")]);
        let r = centrality(&g, Measure::Betweenness).unwrap();
        assert_eq!(score(&r, "a"), 0.5);
        assert_eq!(score(&r, "b"), 0.5);
    }

    #[test]
    fn harmonic_closeness_on_chain() {
        let g = graph(&[("a", "b"), ("b", "c")]);
        let r = centrality(&g, Measure::Closeness).unwrap();
        assert!((score(&r, "a") - 1.5).abs() < 1e-15);
        assert_eq!(score(&r, "b"), 1.0);
        assert_eq!(score(&r, "c"), 0.0);
    }

    #[test]
    fn pagerank_two_cycle() {
        let g = graph(&[("a", "b"), ("b", "a")]);
        let r = centrality(&g, Measure::PageRank).unwrap();
        assert!((score(&r, "a") - 0.5).abs() < 1e-12);
        assert!((score(&r, "b") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pagerank_with_dangling_sums_to_one() {
        let g = graph(&[("a", "b"), ("b", "c"), ("a", "c"), ("d", "a")]);
        let r = centrality(&g, Measure::PageRank).unwrap();
        let sum: f64 = r.scores.values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(score(&r, "c") > score(&r, "d"));
    }

    #[test]
    fn eigenvector_of_symmetric_star() {
        let mut edges = Vec::new();
        for leaf in ["1", "2", "3", "4"] {
            edges.push(("h", leaf));
            edges.push((leaf, "h"));
        }
        let g = graph(&edges);
        let r = centrality(&g, Measure::Eigenvector).unwrap();
        // principal eigenvector of K_{1,4}: hub 1/sqrt(2), leaves 1/(2 sqrt(2))
        assert!((score(&r, "h") - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((score(&r, "1") - 0.5 / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn eigenvector_on_dag_fails_to_converge() {
        let g = graph(&[("a", "b"), ("b", "c")]);
        match centrality(&g, Measure::Eigenvector) {
            Err(Error::Convergence { iterations, .. }) => assert_eq!(iterations, EIGENVECTOR_MAX_ITER),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.as_str().parse::<Measure>().unwrap(), m);
        }
        assert!("katz".parse::<Measure>().is_err());
    }
}
