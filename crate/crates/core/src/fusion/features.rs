use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scorer::PostScorer;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::graph::centrality::{raw, CentralityOptions, Measure};
use crate::graph::{triangles_per_node, EngagementGraph};

pub const NETWORK_FEATURES: [&str; 8] = [
    "in_degree",
    "out_degree",
    "weighted_in_degree",
    "weighted_out_degree",
    "betweenness",
    "closeness",
    "pagerank",
    "triangles",
];
pub const N_NETWORK: usize = NETWORK_FEATURES.len();

/// Which streams feed the user classifier, and their block sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamConfig {
    /// The user's own tweets.
    pub include_u: bool,
    /// Tweets of the users `u` follows (mentions at least `delta` times).
    pub include_uf: bool,
    /// Tweets of the users following `u`.
    pub include_fu: bool,
    /// Network features of `u`.
    pub include_n: bool,
    pub t_max: usize,
    pub f_max: usize,
    pub delta: u32,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self::new(true, true, false, true)
    }
}

impl StreamConfig {
    pub fn new(u: bool, uf: bool, fu: bool, n: bool) -> Self {
        Self {
            include_u: u,
            include_uf: uf,
            include_fu: fu,
            include_n: n,
            t_max: 256,
            f_max: 64,
            delta: 3,
        }
    }

    /// The six ablation rows, in reporting order.
    pub fn ablation_rows() -> Vec<StreamConfig> {
        ["U", "U+FU", "U+UF", "U+N", "U+UF+N", "U+UF+FU+N"]
            .iter()
            .map(|s| s.parse().expect("valid stream name"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.include_u || self.include_uf || self.include_fu || self.include_n) {
            return Err(Error::Config("stream config must include at least one stream".into()));
        }
        if self.t_max == 0 || self.f_max == 0 {
            return Err(Error::Config("t_max and f_max must be at least 1".into()));
        }
        if self.delta == 0 {
            return Err(Error::Config("delta must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_sizes(mut self, t_max: usize, f_max: usize) -> Self {
        self.t_max = t_max;
        self.f_max = f_max;
        self
    }

    pub fn layout(&self) -> FeatureLayout {
        let mut at = 0;
        let mut block = |on: bool, len: usize| {
            let r = if on { at..at + len } else { at..at };
            at = r.end;
            r
        };
        let own = block(self.include_u, self.t_max);
        let followees = block(self.include_uf, self.f_max);
        let followers = block(self.include_fu, self.f_max);
        let network = block(self.include_n, N_NETWORK);
        FeatureLayout {
            own,
            followees,
            followers,
            network,
            len: at,
        }
    }

    pub fn feature_len(&self) -> usize {
        self.layout().len
    }
}

impl fmt::Display for StreamConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [
            (self.include_u, "U"),
            (self.include_uf, "UF"),
            (self.include_fu, "FU"),
            (self.include_n, "N"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, s)| *s)
        .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for StreamConfig {
    type Err = Error;

    /// Parse names like `U+UF+N`; block sizes take their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = StreamConfig::new(false, false, false, false);
        for part in s.split('+').map(str::trim) {
            let flag = match part.to_ascii_uppercase().as_str() {
                "U" => &mut cfg.include_u,
                "UF" => &mut cfg.include_uf,
                "FU" => &mut cfg.include_fu,
                "N" => &mut cfg.include_n,
                _ => return Err(Error::Config(format!("unknown stream {part:?} in {s:?}"))),
            };
            if *flag {
                return Err(Error::Config(format!("stream {part:?} repeated in {s:?}")));
            }
            *flag = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Offsets of each block inside a feature vector; absent blocks are empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub own: std::ops::Range<usize>,
    pub followees: std::ops::Range<usize>,
    pub followers: std::ops::Range<usize>,
    pub network: std::ops::Range<usize>,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionFeatures {
    pub user_id: String,
    pub values: Vec<f64>,
    /// False for padded or missing entries, which always hold 0.
    pub mask: Vec<bool>,
}

/// Followees and followers of `u`; empty sets when `u` is not in the graph.
pub fn neighbor_streams(g: &EngagementGraph, u: &str) -> (BTreeSet<String>, BTreeSet<String>) {
    let Some(i) = g.index_of(u) else {
        return Default::default();
    };
    let ids = |edges: &[(usize, u32)]| edges.iter().map(|&(j, _)| g.node_id(j).to_owned()).collect();
    (ids(g.out_edges(i)), ids(g.in_edges(i)))
}

/// Raw (unscaled) network features of every node of one graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkFeatureTable {
    rows: BTreeMap<String, [f64; N_NETWORK]>,
}

impl NetworkFeatureTable {
    pub fn compute(g: &EngagementGraph) -> Result<Self> {
        let opts = CentralityOptions::default();
        let between = raw(g, Measure::Betweenness, opts)?;
        let close = raw(g, Measure::Closeness, opts)?;
        let pr = raw(g, Measure::PageRank, opts)?;
        let tri = triangles_per_node(g);
        let rows = (0..g.node_count())
            .map(|i| {
                let (out, inn) = (g.out_edges(i), g.in_edges(i));
                let wsum = |e: &[(usize, u32)]| e.iter().map(|&(_, w)| w as f64).sum::<f64>();
                let row = [
                    inn.len() as f64,
                    out.len() as f64,
                    wsum(inn),
                    wsum(out),
                    between[i],
                    close[i],
                    pr[i],
                    tri[i] as f64,
                ];
                (g.node_id(i).to_owned(), row)
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn get(&self, user: &str) -> Option<&[f64; N_NETWORK]> {
        self.rows.get(user)
    }
}

/// Raw network features of `u`, or zeros and `false` when `u` is absent.
pub fn network_features(table: &NetworkFeatureTable, u: &str) -> ([f64; N_NETWORK], bool) {
    match table.get(u) {
        Some(row) => (*row, true),
        None => ([0.0; N_NETWORK], false),
    }
}

/// Per-feature z-scaling fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScaler {
    pub mean: [f64; N_NETWORK],
    pub std: [f64; N_NETWORK],
}

impl NetworkScaler {
    /// Fit on the network blocks of the rows whose network block is present.
    pub fn fit(rows: &[&FusionFeatures], layout: &FeatureLayout) -> Self {
        let mut mean = [0.0; N_NETWORK];
        let mut std = [1.0; N_NETWORK];
        let present: Vec<&[f64]> = rows
            .iter()
            .filter(|f| layout.network.clone().all(|j| f.mask[j]))
            .map(|f| &f.values[layout.network.clone()])
            .collect();
        if layout.network.is_empty() || present.is_empty() {
            return Self { mean, std };
        }
        let n = present.len() as f64;
        for j in 0..N_NETWORK {
            let m = present.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = present.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, std }
    }

    /// Scale in place; masked-out entries stay 0.
    pub fn transform(&self, f: &mut FusionFeatures, layout: &FeatureLayout) {
        for (j, idx) in layout.network.clone().enumerate() {
            if f.mask[idx] {
                f.values[idx] = (f.values[idx] - self.mean[j]) / self.std[j];
            }
        }
    }
}

/// Post scores keyed by tweet id.
pub type PostScores = HashMap<String, f64>;

/// Score every tweet of the corpus in a single batch.
pub fn score_corpus(scorer: &dyn PostScorer, corpus: &Corpus) -> Result<PostScores> {
    let texts: Vec<&str> = corpus.tweets().iter().map(|t| t.text.as_str()).collect();
    let scores = scorer.score_posts(&texts)?;
    if scores.len() != texts.len() {
        return Err(Error::scorer(
            format!("expected {} scores, got {}", texts.len(), scores.len()),
            None,
        ));
    }
    Ok(corpus
        .tweets()
        .iter()
        .zip(scores)
        .map(|(t, s)| (t.tweet_id.clone(), s))
        .collect())
}

fn user_scores(corpus: &Corpus, scores: &PostScores, u: &str) -> Result<Vec<f64>> {
    corpus
        .timeline(u)
        .into_iter()
        .map(|t| {
            scores
                .get(&t.tweet_id)
                .copied()
                .ok_or_else(|| Error::Data(format!("tweet {} has no score", t.tweet_id)))
        })
        .collect()
}

/// Values sorted descending then written into `block`, zero-padded.
fn fill_block(values: &mut [f64], mask: &mut [bool], mut items: Vec<f64>) {
    items.sort_by(|a, b| b.total_cmp(a));
    for (k, v) in items.into_iter().take(values.len()).enumerate() {
        values[k] = v;
        mask[k] = true;
    }
}

fn neighbor_means(
    corpus: &Corpus,
    scores: &PostScores,
    neighbors: &BTreeSet<String>,
) -> Result<Vec<f64>> {
    let mut means = Vec::with_capacity(neighbors.len());
    for v in neighbors {
        let s = user_scores(corpus, scores, v)?;
        // A neighbour without tweets has nothing to contribute.
        if !s.is_empty() {
            means.push(s.iter().sum::<f64>() / s.len() as f64);
        }
    }
    Ok(means)
}

/// Fixed-length feature vector of `u` under `cfg`. The network block holds
/// raw values; scale it with a [`NetworkScaler`] fitted on training users.
pub fn assemble_features(
    u: &str,
    corpus: &Corpus,
    g: &EngagementGraph,
    scores: &PostScores,
    table: &NetworkFeatureTable,
    cfg: &StreamConfig,
) -> Result<FusionFeatures> {
    cfg.validate()?;
    if g.delta() != cfg.delta {
        return Err(Error::Config(format!(
            "graph built with delta {} but stream config uses {}",
            g.delta(),
            cfg.delta
        )));
    }
    let layout = cfg.layout();
    let mut values = vec![0.0; layout.len];
    let mut mask = vec![false; layout.len];
    if cfg.include_u {
        let r = layout.own.clone();
        fill_block(&mut values[r.clone()], &mut mask[r], user_scores(corpus, scores, u)?);
    }
    if cfg.include_uf || cfg.include_fu {
        let (followees, followers) = neighbor_streams(g, u);
        if cfg.include_uf {
            let r = layout.followees.clone();
            fill_block(&mut values[r.clone()], &mut mask[r], neighbor_means(corpus, scores, &followees)?);
        }
        if cfg.include_fu {
            let r = layout.followers.clone();
            fill_block(&mut values[r.clone()], &mut mask[r], neighbor_means(corpus, scores, &followers)?);
        }
    }
    if cfg.include_n {
        let (row, present) = network_features(table, u);
        let r = layout.network.clone();
        if present {
            values[r.clone()].copy_from_slice(&row);
            mask[r].iter_mut().for_each(|m| *m = true);
        }
    }
    Ok(FusionFeatures {
        user_id: u.to_owned(),
        values,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;
    use crate::graph::Semantics;

    fn tweet(id: &str, author: &str, ts: &str) -> Tweet {
        Tweet {
            tweet_id: id.into(),
            author_id: author.into(),
            text: format!("text {id}"),
            created_at: ts.parse().unwrap(),
            mentions: vec![],
            hashtags: vec![],
            urls: 0,
            in_reply_to_user: None,
            retweet_of_user: None,
            language: "en".into(),
        }
    }

    fn fixture() -> (Corpus, EngagementGraph, PostScores) {
        let corpus = Corpus::new(
            vec![
                tweet("u1", "u", "2016-01-01T00:00:00Z"),
                tweet("u2", "u", "2016-01-02T00:00:00Z"),
                tweet("f1", "f", "2016-01-01T00:00:00Z"),
                tweet("f2", "f", "2016-01-02T00:00:00Z"),
                tweet("v1", "v", "2016-01-01T00:00:00Z"),
            ],
            vec![],
        )
        .unwrap();
        let g = EngagementGraph::from_edges(
            Semantics::Mention,
            3,
            ["u", "f", "v"],
            [("u".to_owned(), "f".to_owned(), 3), ("v".to_owned(), "u".to_owned(), 4)],
        )
        .unwrap();
        let scores = [("u1", 0.1), ("u2", 0.9), ("f1", 0.2), ("f2", 0.4), ("v1", 0.7)]
            .into_iter()
            .map(|(k, v)| (k.to_owned(), v))
            .collect();
        (corpus, g, scores)
    }

    #[test]
    fn stream_names_round_trip() {
        let rows = StreamConfig::ablation_rows();
        let names: Vec<String> = rows.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["U", "U+FU", "U+UF", "U+N", "U+UF+N", "U+UF+FU+N"]);
        assert!("U+X".parse::<StreamConfig>().unwrap_err().is_config());
        assert!("U+U".parse::<StreamConfig>().is_err());
    }

    #[test]
    fn lengths_follow_block_sizes() {
        let cfg: StreamConfig = "U+UF+N".parse().unwrap();
        assert_eq!(cfg.with_sizes(4, 2).feature_len(), 14);
        assert_eq!(StreamConfig::new(true, true, true, true).feature_len(), 256 + 64 + 64 + 8);
    }

    #[test]
    fn own_block_is_sorted_and_padded() {
        let (corpus, g, scores) = fixture();
        let table = NetworkFeatureTable::compute(&g).unwrap();
        let cfg = StreamConfig::new(true, false, false, false).with_sizes(4, 2);
        let f = assemble_features("u", &corpus, &g, &scores, &table, &cfg).unwrap();
        assert_eq!(f.values, vec![0.9, 0.1, 0.0, 0.0]);
        assert_eq!(f.mask, vec![true, true, false, false]);
    }

    #[test]
    fn neighbour_blocks_average_per_user() {
        let (corpus, g, scores) = fixture();
        let table = NetworkFeatureTable::compute(&g).unwrap();
        let cfg = StreamConfig::new(false, true, true, false).with_sizes(4, 2);
        let f = assemble_features("u", &corpus, &g, &scores, &table, &cfg).unwrap();
        assert!((f.values[0] - 0.3).abs() < 1e-12);
        assert_eq!(f.values[1], 0.0);
        assert_eq!(f.values[2], 0.7);
        assert_eq!(f.mask, vec![true, false, true, false]);
    }

    #[test]
    fn streams_and_network_of_star() {
        let leaves = ["a", "b", "c", "d", "e"];
        let g = EngagementGraph::from_edges(
            Semantics::Mention,
            3,
            std::iter::once("hub").chain(leaves),
            leaves.iter().map(|l| ("hub".to_owned(), l.to_string(), 3)),
        )
        .unwrap();
        let (followees, followers) = neighbor_streams(&g, "hub");
        assert_eq!(followees.len(), 5);
        assert!(followers.is_empty());
        assert_eq!(neighbor_streams(&g, "a").1, BTreeSet::from(["hub".to_owned()]));
        assert_eq!(neighbor_streams(&g, "zz"), Default::default());
        let table = NetworkFeatureTable::compute(&g).unwrap();
        let (row, present) = network_features(&table, "hub");
        assert!(present);
        assert_eq!(&row[..4], &[0.0, 5.0, 0.0, 15.0]);
        assert_eq!(network_features(&table, "zz"), ([0.0; N_NETWORK], false));
    }

    #[test]
    fn scaler_ignores_absent_users() {
        let cfg = StreamConfig::new(false, false, false, true);
        let layout = cfg.layout();
        let mk = |v: f64, present: bool| FusionFeatures {
            user_id: String::new(),
            values: vec![if present { v } else { 0.0 }; N_NETWORK],
            mask: vec![present; N_NETWORK],
        };
        let rows = [mk(1.0, true), mk(3.0, true), mk(0.0, false)];
        let scaler = NetworkScaler::fit(&rows.iter().collect::<Vec<_>>(), &layout);
        assert_eq!(scaler.mean[0], 2.0);
        assert_eq!(scaler.std[0], 1.0);
        let mut absent = rows[2].clone();
        scaler.transform(&mut absent, &layout);
        assert!(absent.values.iter().all(|&v| v == 0.0));
        let mut first = rows[0].clone();
        scaler.transform(&mut first, &layout);
        assert_eq!(first.values[0], -1.0);
    }

    #[test]
    fn delta_mismatch_is_config_error() {
        let (corpus, g, scores) = fixture();
        let table = NetworkFeatureTable::compute(&g).unwrap();
        let cfg = StreamConfig {
            delta: 4,
            ..StreamConfig::default()
        };
        assert!(assemble_features("u", &corpus, &g, &scores, &table, &cfg)
            .unwrap_err()
            .is_config());
    }
}
