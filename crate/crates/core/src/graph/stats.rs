use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::components::{component_indices, ComponentMode};
use super::EngagementGraph;
use crate::error::{Error, Result};

/// Summary statistics of the non-singleton part of a network.
///
/// JSON keys follow the usual network-statistics table headings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    #[serde(rename = "#Nodes")]
    pub n_nodes: usize,
    #[serde(rename = "#Edges")]
    pub n_edges: usize,
    #[serde(rename = "Density")]
    pub density: f64,
    #[serde(rename = "Diameter")]
    pub diameter: usize,
    #[serde(rename = "#Triangles")]
    pub n_triangles: usize,
    #[serde(rename = "Max #triangles")]
    pub max_triangles_node: usize,
    #[serde(rename = "#Strong CC")]
    pub n_strong_cc: usize,
    #[serde(rename = "#Weak CC")]
    pub n_weak_cc: usize,
    #[serde(rename = "#Singletons")]
    pub n_singletons: usize,
}

/// Density of a loop-free directed graph: `m / (n (n - 1))`.
pub fn directed_density(n_nodes: usize, n_edges: usize) -> f64 {
    if n_nodes < 2 {
        return 0.0;
    }
    n_edges as f64 / (n_nodes as f64 * (n_nodes as f64 - 1.0))
}

/// Triangles through each node of the undirected simplification.
pub fn triangles_per_node(g: &EngagementGraph) -> Vec<usize> {
    let adj = g.undirected_adjacency();
    let mut per_node = vec![0usize; g.node_count()];
    for u in 0..adj.len() {
        for &v in adj[u].iter().filter(|&&v| v > u) {
            // common neighbours w > v, by merging two sorted lists
            let (a, b) = (&adj[u], &adj[v]);
            let (mut i, mut j) = (a.partition_point(|&x| x <= v), b.partition_point(|&x| x <= v));
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        per_node[u] += 1;
                        per_node[v] += 1;
                        per_node[a[i]] += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    per_node
}

/// Longest finite shortest path on the undirected view.
fn undirected_diameter(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            best = best.max(dist[v]);
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    best
}

/// Statistics over the non-singleton nodes of `g`. Fails on a graph without edges.
pub fn network_stats(g: &EngagementGraph) -> Result<NetworkStats> {
    if g.edge_count() == 0 {
        return Err(Error::Data("network statistics need at least one edge".into()));
    }
    let n_singletons = g.singleton_count();
    let core = if n_singletons > 0 {
        g.without_singletons()
    } else {
        g.clone()
    };
    let tri = triangles_per_node(&core);
    let n_nodes = core.node_count();
    Ok(NetworkStats {
        n_nodes,
        n_edges: core.edge_count(),
        density: directed_density(n_nodes, core.edge_count()),
        diameter: undirected_diameter(&core.undirected_adjacency()),
        n_triangles: tri.iter().sum::<usize>() / 3,
        max_triangles_node: tri.iter().copied().max().unwrap_or(0),
        n_strong_cc: component_indices(&core, ComponentMode::Strong).len(),
        n_weak_cc: component_indices(&core, ComponentMode::Weak).len(),
        n_singletons,
    })
}
