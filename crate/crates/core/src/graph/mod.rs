//! Weighted directed engagement networks between users.
//!
//! One graph per engagement semantics (mention, reply, retweet). An edge
//! `u -> v` carries the number of times `u` engaged `v` and is kept only when
//! that count reaches the threshold `delta` (inclusive).

pub(crate) mod centrality;
mod components;
mod export;
mod generalized;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Tweet};
use crate::error::{Error, Result};

pub use centrality::{
    all_centralities, centrality, centrality_with, CentralityOptions, CentralityResult, Measure,
    EIGENVECTOR_MAX_ITER, PAGERANK_DAMPING, TOLERANCE,
};
pub use components::{connected_components, largest_connected_component, ComponentMode};
pub use export::{to_dot, to_graphml, NodeAttributes};
pub use generalized::{generalized_centrality, GeneralizedCentrality, SkippedPair};
pub use stats::{directed_density, network_stats, triangles_per_node, NetworkStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Mention,
    Reply,
    Retweet,
}

impl Semantics {
    pub const ALL: [Semantics; 3] = [Semantics::Mention, Semantics::Reply, Semantics::Retweet];

    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Mention => "mention",
            Semantics::Reply => "reply",
            Semantics::Retweet => "retweet",
        }
    }

    /// Users engaged by `tweet` under this semantics (self-engagement included).
    fn targets<'a>(self, tweet: &'a Tweet) -> Box<dyn Iterator<Item = &'a str> + 'a> {
        match self {
            Semantics::Mention => Box::new(tweet.mentions.iter().map(String::as_str)),
            Semantics::Reply => Box::new(tweet.in_reply_to_user.as_deref().into_iter()),
            Semantics::Retweet => Box::new(tweet.retweet_of_user.as_deref().into_iter()),
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Semantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mention" | "mentions" => Ok(Semantics::Mention),
            "reply" | "replies" => Ok(Semantics::Reply),
            "retweet" | "retweets" => Ok(Semantics::Retweet),
            other => Err(Error::Config(format!("unknown engagement semantics {other:?}"))),
        }
    }
}

/// Which engaged users may become edge endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointScope {
    /// Only users known to the corpus (authors or account records).
    #[default]
    CorpusUsers,
    /// Any engaged id, including accounts outside the corpus.
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub semantics: Semantics,
    pub delta: u32,
    pub include_singletons: bool,
    #[serde(default)]
    pub endpoints: EndpointScope,
}

impl NetworkConfig {
    pub fn new(semantics: Semantics) -> Self {
        Self {
            semantics,
            delta: 3,
            include_singletons: false,
            endpoints: EndpointScope::CorpusUsers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta == 0 {
            return Err(Error::Config("delta must be at least 1".into()));
        }
        Ok(())
    }
}

/// Immutable weighted digraph over user ids. Node indices follow sorted id order.
#[derive(Debug, Clone, PartialEq)]
pub struct EngagementGraph {
    semantics: Semantics,
    delta: u32,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    out_adj: Vec<Vec<(usize, u32)>>,
    in_adj: Vec<Vec<(usize, u32)>>,
    n_edges: usize,
}

impl EngagementGraph {
    /// Build from explicit nodes and weighted edges.
    ///
    /// Edge endpoints are added as nodes; self-loops are dropped; edges below
    /// `delta` are rejected.
    pub fn from_edges<N, E, S>(semantics: Semantics, delta: u32, nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = S>,
        S: Into<String>,
        E: IntoIterator<Item = (String, String, u32)>,
    {
        let mut node_set: BTreeSet<String> = nodes.into_iter().map(Into::into).collect();
        let mut edge_map: BTreeMap<(String, String), u32> = BTreeMap::new();
        for (src, dst, w) in edges {
            if src == dst {
                continue;
            }
            if w < delta.max(1) {
                return Err(Error::Data(format!(
                    "edge {src}->{dst} has weight {w} below delta {delta}"
                )));
            }
            node_set.insert(src.clone());
            node_set.insert(dst.clone());
            if edge_map.insert((src.clone(), dst.clone()), w).is_some() {
                return Err(Error::Data(format!("duplicate edge {src}->{dst}")));
            }
        }
        let nodes: Vec<String> = node_set.into_iter().collect();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut out_adj = vec![Vec::new(); nodes.len()];
        let mut in_adj = vec![Vec::new(); nodes.len()];
        for ((src, dst), w) in &edge_map {
            let (s, d) = (index[src], index[dst]);
            out_adj[s].push((d, *w));
            in_adj[d].push((s, *w));
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            semantics,
            delta,
            nodes,
            index,
            out_adj,
            in_adj,
            n_edges: edge_map.len(),
        })
    }

    pub fn empty(semantics: Semantics) -> Self {
        Self::from_edges(semantics, 1, Vec::<String>::new(), Vec::new()).expect("empty graph")
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.n_edges
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Out-neighbours of node `idx` with edge weights, ascending by index.
    pub fn out_edges(&self, idx: usize) -> &[(usize, u32)] {
        &self.out_adj[idx]
    }

    /// In-neighbours of node `idx` with edge weights, ascending by index.
    pub fn in_edges(&self, idx: usize) -> &[(usize, u32)] {
        &self.in_adj[idx]
    }

    pub fn weight(&self, src: &str, dst: &str) -> Option<u32> {
        let (s, d) = (self.index_of(src)?, self.index_of(dst)?);
        self.out_adj[s]
            .binary_search_by_key(&d, |&(t, _)| t)
            .ok()
            .map(|pos| self.out_adj[s][pos].1)
    }

    /// All edges as `(src, dst, weight)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u32)> + '_ {
        self.out_adj.iter().enumerate().flat_map(move |(s, list)| {
            list.iter()
                .map(move |&(d, w)| (self.nodes[s].as_str(), self.nodes[d].as_str(), w))
        })
    }

    pub fn is_singleton(&self, idx: usize) -> bool {
        self.out_adj[idx].is_empty() && self.in_adj[idx].is_empty()
    }

    pub fn singleton_count(&self) -> usize {
        (0..self.node_count()).filter(|&i| self.is_singleton(i)).count()
    }

    /// Undirected simplification: sorted neighbour lists, either direction counts.
    pub(crate) fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.node_count())
            .map(|i| {
                let mut nb: Vec<usize> = self.out_adj[i]
                    .iter()
                    .chain(&self.in_adj[i])
                    .map(|&(j, _)| j)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect()
    }

    /// Subgraph on `users` (ids not in the graph are ignored).
    pub fn induced_subgraph<S: AsRef<str> + Ord>(&self, users: &BTreeSet<S>) -> EngagementGraph {
        let keep: BTreeSet<&str> = users
            .iter()
            .map(AsRef::as_ref)
            .filter(|u| self.contains(u))
            .collect();
        let edges: Vec<(String, String, u32)> = self
            .edges()
            .filter(|(s, d, _)| keep.contains(s) && keep.contains(d))
            .map(|(s, d, w)| (s.to_owned(), d.to_owned(), w))
            .collect();
        EngagementGraph::from_edges(self.semantics, self.delta, keep, edges)
            .expect("subgraph of a valid graph is valid")
    }

    /// Subgraph on the nodes that have at least one edge.
    pub fn without_singletons(&self) -> EngagementGraph {
        let keep: BTreeSet<&str> = (0..self.node_count())
            .filter(|&i| !self.is_singleton(i))
            .map(|i| self.nodes[i].as_str())
            .collect();
        self.induced_subgraph(&keep)
    }
}

/// Raw engagement counts `(src, dst) -> n` before thresholding.
pub fn engagement_counts(corpus: &Corpus, semantics: Semantics) -> BTreeMap<(String, String), u32> {
    let mut counts: BTreeMap<(String, String), u32> = BTreeMap::new();
    for t in corpus.tweets() {
        for target in semantics.targets(t) {
            if target == t.author_id {
                continue;
            }
            *counts
                .entry((t.author_id.clone(), target.to_owned()))
                .or_default() += 1;
        }
    }
    counts
}

/// Build the engagement network of a corpus.
pub fn build_network(corpus: &Corpus, cfg: &NetworkConfig) -> Result<EngagementGraph> {
    cfg.validate()?;
    let edges: Vec<(String, String, u32)> = engagement_counts(corpus, cfg.semantics)
        .into_iter()
        .filter(|(_, w)| *w >= cfg.delta)
        .filter(|((_, dst), _)| {
            cfg.endpoints == EndpointScope::Any || corpus.is_known_user(dst)
        })
        .map(|((s, d), w)| (s, d, w))
        .collect();
    let nodes: Vec<&str> = if cfg.include_singletons {
        corpus.user_ids().into_iter().collect()
    } else {
        Vec::new()
    };
    EngagementGraph::from_edges(cfg.semantics, cfg.delta, nodes, edges)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;

    fn mention(id: usize, author: &str, targets: &[&str]) -> Tweet {
        Tweet {
            tweet_id: id.to_string(),
            author_id: author.into(),
            text: "x".into(),
            created_at: "2016-05-01T00:00:00Z".parse().unwrap(),
            mentions: targets.iter().map(|s| s.to_string()).collect(),
            hashtags: vec![],
            urls: 0,
            in_reply_to_user: None,
            retweet_of_user: None,
            language: "en".into(),
        }
    }

    fn corpus(edges: &[(&str, &[&str], usize)]) -> Corpus {
        let mut tweets = Vec::new();
        for &(author, targets, times) in edges {
            for _ in 0..times {
                tweets.push(mention(tweets.len(), author, targets));
            }
        }
        Corpus::new(tweets, vec![]).unwrap()
    }

    #[test]
    fn threshold_is_inclusive() {
        let c = corpus(&[("u", &["v"], 3), ("v", &[], 1)]);
        let g = build_network(&c, &NetworkConfig::new(Semantics::Mention)).unwrap();
        assert_eq!(g.weight("u", "v"), Some(3));

        let c = corpus(&[("u", &["v"], 2), ("v", &[], 1)]);
        let g = build_network(&c, &NetworkConfig::new(Semantics::Mention)).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn five_user_fixture() {
        // a->b x4, a->c x1, b->a x3, c->d x5, d->d x9 (self), e->a x3 (a mentioned with b)
        let c = corpus(&[
            ("a", &["b"], 3),
            ("a", &["b", "c"], 1),
            ("b", &["a"], 3),
            ("c", &["d"], 5),
            ("d", &["d"], 9),
            ("e", &["a", "zz"], 3),
        ]);
        let g = build_network(&c, &NetworkConfig::new(Semantics::Mention)).unwrap();
        let edges: Vec<_> = g.edges().map(|(s, d, w)| (s.to_owned(), d.to_owned(), w)).collect();
        let expect = [("a", "b", 4), ("b", "a", 3), ("c", "d", 5), ("e", "a", 3)];
        assert_eq!(
            edges,
            expect
                .iter()
                .map(|&(s, d, w)| (s.to_owned(), d.to_owned(), w))
                .collect::<Vec<_>>()
        );

        let any = NetworkConfig {
            endpoints: EndpointScope::Any,
            include_singletons: true,
            ..NetworkConfig::new(Semantics::Mention)
        };
        let g = build_network(&c, &any).unwrap();
        assert_eq!(g.weight("e", "zz"), Some(3));
        assert_eq!(g.node_count(), 6);
    }

    #[test]
    fn singletons_are_optional() {
        let c = corpus(&[("a", &["b"], 3), ("b", &[], 1), ("lonely", &[], 4)]);
        let cfg = NetworkConfig {
            include_singletons: true,
            ..NetworkConfig::new(Semantics::Mention)
        };
        let g = build_network(&c, &cfg).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.singleton_count(), 1);
        assert_eq!(g.without_singletons().node_count(), 2);
    }

    #[test]
    fn reply_and_retweet_semantics() {
        let mut tweets = Vec::new();
        for i in 0..3 {
            let mut t = mention(i, "a", &[]);
            t.in_reply_to_user = Some("b".into());
            tweets.push(t);
            let mut t = mention(10 + i, "b", &[]);
            t.retweet_of_user = Some("a".into());
            tweets.push(t);
        }
        let c = Corpus::new(tweets, vec![]).unwrap();
        let r = build_network(&c, &NetworkConfig::new(Semantics::Reply)).unwrap();
        let rt = build_network(&c, &NetworkConfig::new(Semantics::Retweet)).unwrap();
        assert_eq!(r.weight("a", "b"), Some(3));
        assert_eq!(r.weight("b", "a"), None);
        assert_eq!(rt.weight("b", "a"), Some(3));
        assert_eq!(rt.semantics(), Semantics::Retweet);
    }

    #[test]
    fn bad_config() {
        assert!("follows".parse::<Semantics>().unwrap_err().is_config());
        let cfg = NetworkConfig {
            delta: 0,
            ..NetworkConfig::new(Semantics::Mention)
        };
        assert!(build_network(&Corpus::default(), &cfg).unwrap_err().is_config());
    }

    #[test]
    fn induced_subgraphs() {
        let g = test_graphs::graph(&[("a", "b"), ("b", "c"), ("c", "a"), ("c", "d")]);
        let none: BTreeSet<String> = BTreeSet::new();
        let empty = g.induced_subgraph(&none);
        assert_eq!((empty.node_count(), empty.edge_count()), (0, 0));
        let all: BTreeSet<String> = g.nodes().iter().cloned().collect();
        assert_eq!(g.induced_subgraph(&all), g);
        let hm: BTreeSet<&str> = ["a", "c", "d"].into_iter().collect();
        let sub = g.induced_subgraph(&hm);
        let edges: Vec<_> = sub.edges().map(|(s, d, _)| format!("{s}{d}")).collect();
        assert_eq!(edges, ["ca", "cd"]);
    }
}
