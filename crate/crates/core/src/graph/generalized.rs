//! Generalized centrality: how many (semantics, measure) top-k lists a user enters.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::centrality::{raw, CentralityOptions, Measure};
use super::{EngagementGraph, Semantics};
use crate::error::{Error, Result};

/// A (semantics, measure) pair that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub semantics: Semantics,
    pub measure: Measure,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCentrality {
    pub top_k: usize,
    /// `(user, score)` sorted by descending score, then user id.
    pub scores: Vec<(String, usize)>,
    /// The pairs in which each ranked user appears.
    pub membership: BTreeMap<String, Vec<(Semantics, Measure)>>,
    pub skipped: Vec<SkippedPair>,
}

impl GeneralizedCentrality {
    pub fn score(&self, user: &str) -> usize {
        self.membership.get(user).map_or(0, Vec::len)
    }
}

/// Indices of the top-k positive scores, with every tie of the k-th score included.
pub(crate) fn top_k_with_ties(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
    if order.is_empty() || k == 0 {
        return Vec::new();
    }
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    if order.len() <= k {
        return order;
    }
    let cutoff = values[order[k - 1]];
    let tie = |v: f64| (v - cutoff).abs() <= 1e-12 * cutoff.abs().max(1.0);
    order
        .into_iter()
        .enumerate()
        .take_while(|&(rank, i)| rank < k || tie(values[i]))
        .map(|(_, i)| i)
        .collect()
}

/// Count top-k appearances over up to three graphs (one per semantics) and
/// the seven measures. Users with zero score on a measure never qualify.
///
/// Measures that fail (eigenvector non-convergence) contribute nothing and
/// are listed in `skipped`.
pub fn generalized_centrality(
    graphs: &[&EngagementGraph],
    k: usize,
    opts: CentralityOptions,
) -> Result<GeneralizedCentrality> {
    if k == 0 {
        return Err(Error::Config("top-k must be positive".into()));
    }
    let mut seen = BTreeSet::new();
    for g in graphs {
        if !seen.insert(g.semantics()) {
            return Err(Error::Config(format!(
                "semantics {} given more than once",
                g.semantics()
            )));
        }
    }

    let mut membership: BTreeMap<String, Vec<(Semantics, Measure)>> = BTreeMap::new();
    let mut skipped = Vec::new();
    for g in graphs {
        for measure in Measure::ALL {
            match raw(g, measure, opts) {
                Ok(values) => {
                    for i in top_k_with_ties(&values, k) {
                        membership
                            .entry(g.node_id(i).to_owned())
                            .or_default()
                            .push((g.semantics(), measure));
                    }
                }
                Err(e) => skipped.push(SkippedPair {
                    semantics: g.semantics(),
                    measure,
                    reason: e.to_string(),
                }),
            }
        }
    }
    let mut scores: Vec<(String, usize)> =
        membership.iter().map(|(u, p)| (u.clone(), p.len())).collect();
    scores.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(GeneralizedCentrality {
        top_k: k,
        scores,
        membership,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(semantics: Semantics) -> EngagementGraph {
        let mut edges = Vec::new();
        for leaf in ["a", "b", "c", "d", "e"] {
            edges.push(("hub".to_owned(), leaf.to_owned(), 3));
            edges.push((leaf.to_owned(), "hub".to_owned(), 3));
        }
        EngagementGraph::from_edges(semantics, 3, Vec::<String>::new(), edges).unwrap()
    }

    #[test]
    fn ties_are_included() {
        assert_eq!(top_k_with_ties(&[3.0, 1.0, 3.0, 2.0], 1), vec![0, 2]);
        assert_eq!(top_k_with_ties(&[3.0, 2.0, 2.0, 1.0], 2), vec![0, 1, 2]);
        assert_eq!(top_k_with_ties(&[0.0, 0.0], 1), Vec::<usize>::new());
        assert_eq!(top_k_with_ties(&[1.0], 5), vec![0]);
    }

    #[test]
    fn star_hub_takes_every_pair() {
        let graphs: Vec<_> = Semantics::ALL.iter().map(|&s| star(s)).collect();
        let refs: Vec<_> = graphs.iter().collect();
        let gc = generalized_centrality(&refs, 1, CentralityOptions::default()).unwrap();
        assert_eq!(gc.scores[0], ("hub".to_owned(), 21));
        assert_eq!(gc.score("hub"), 21);
        assert!(gc.skipped.is_empty());
    }

    #[test]
    fn empty_semantics_contributes_nothing() {
        let m = star(Semantics::Mention);
        let r = star(Semantics::Reply);
        let rt = EngagementGraph::empty(Semantics::Retweet);
        let gc = generalized_centrality(&[&m, &r, &rt], 1, CentralityOptions::default()).unwrap();
        assert_eq!(gc.score("hub"), 14);
        assert!(gc.scores.iter().all(|(_, s)| *s <= 14));
    }

    #[test]
    fn config_errors() {
        let m = star(Semantics::Mention);
        assert!(generalized_centrality(&[&m], 0, CentralityOptions::default())
            .unwrap_err()
            .is_config());
        assert!(generalized_centrality(&[&m, &m], 1, CentralityOptions::default())
            .unwrap_err()
            .is_config());
    }
}
