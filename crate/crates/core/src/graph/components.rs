use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::EngagementGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentMode {
    Strong,
    Weak,
}

/// Node-index components, each sorted, ordered by smallest member.
pub(crate) fn component_indices(g: &EngagementGraph, mode: ComponentMode) -> Vec<Vec<usize>> {
    let mut comps = match mode {
        ComponentMode::Strong => tarjan(g),
        ComponentMode::Weak => weak(g),
    };
    for c in comps.iter_mut() {
        c.sort_unstable();
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Connected components as id lists, ordered by smallest member id.
pub fn connected_components(g: &EngagementGraph, mode: ComponentMode) -> Vec<Vec<String>> {
    // Node indices follow sorted id order, so index order is id order.
    component_indices(g, mode)
        .into_iter()
        .map(|c| c.into_iter().map(|i| g.node_id(i).to_owned()).collect())
        .collect()
}

fn weak(g: &EngagementGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &(w, _) in g.out_edges(v).iter().chain(g.in_edges(v)) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Iterative Tarjan.
fn tarjan(g: &EngagementGraph) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = g.node_count();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0usize;
    // (node, position in its out-edge list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&(v, pos)) = call.last() {
            let edges = g.out_edges(v);
            if pos < edges.len() {
                let w = edges[pos].0;
                if let Some(top) = call.last_mut() {
                    top.1 += 1;
                }
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Induced subgraph on the largest weakly connected component.
///
/// Ties go to the component holding the smallest node id. Returns an empty
/// graph when `g` has no nodes.
pub fn largest_connected_component(g: &EngagementGraph) -> EngagementGraph {
    let comps = component_indices(g, ComponentMode::Weak);
    let mut best: Option<&Vec<usize>> = None;
    for c in &comps {
        if best.is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    let keep: BTreeSet<&str> = best
        .map(|c| c.iter().map(|&i| g.node_id(i)).collect())
        .unwrap_or_default();
    g.induced_subgraph(&keep)
}
