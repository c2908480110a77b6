//! Synthetic corpora with a planted hate-monger community.
//!
//! HM users mention a handful of other HM users `mentions_per_target` times
//! each, so the community is dense in the thresholded mention graph. Other
//! users mention a few random accounts. A marker token appears in a fixed
//! share of HM tweets and a much smaller share of everyone else's, which is
//! the only textual signal. Every user posts at least three echo tweets so the
//! corpus survives the echo-user filter.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, Labeling, Tweet, UserRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub hm_fraction: f64,
    /// Share of non-HM users labelled R; the rest are N.
    pub r_fraction: f64,
    pub tweets_per_user: usize,
    pub marker: String,
    pub marker_rate_hm: f64,
    pub marker_rate_other: f64,
    /// Distinct HM accounts each HM user mentions.
    pub hm_targets: usize,
    /// Distinct random accounts each other user mentions.
    pub other_targets: usize,
    pub mentions_per_target: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 500,
            hm_fraction: 0.2,
            r_fraction: 0.1,
            tweets_per_user: 6,
            marker: "hatemarker".into(),
            marker_rate_hm: 0.3,
            marker_rate_other: 0.03,
            hm_targets: 4,
            other_targets: 2,
            mentions_per_target: 3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |r: f64| (0.0..=1.0).contains(&r);
        if !(rate(self.hm_fraction) && rate(self.r_fraction) && rate(self.marker_rate_hm) && rate(self.marker_rate_other)) {
            return Err(Error::Config("fractions and rates must lie in [0, 1]".into()));
        }
        if self.n_users < 2 || self.tweets_per_user < 3 {
            return Err(Error::Config("need at least 2 users and 3 tweets per user".into()));
        }
        if self.marker.trim().is_empty() {
            return Err(Error::Config("marker token must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub labels: Labeling,
}

const FILLER: &[&str] = &[
    "news", "today", "people", "think", "world", "time", "vote", "media", "great", "never", "watch", "really",
    "country", "money", "truth", "story", "week", "again", "read", "right", "left", "power", "city", "school",
    "game", "night", "morning", "work", "love", "family", "friends", "twitter", "video", "photo", "open", "market",
    "bank", "election", "debate", "speech", "party", "history", "book", "movie", "music", "team", "win", "lose",
    "state", "law", "court", "police", "health", "food", "coffee", "weather", "summer", "support", "change", "plan",
];
const ECHO_TERMS: &[&str] = &["them", "media", "bankers", "you", "globalists", "hugs", "friends", "elites"];
const HASHTAGS: &[&str] = &["maga", "trump", "news", "politics", "election2016", "brexit", "love"];

fn sentence(rng: &mut ChaCha8Rng, words: usize) -> Vec<String> {
    (0..words)
        .map(|_| FILLER.choose(rng).expect("non-empty").to_string())
        .collect()
}

/// Generate a planted corpus. Identical configs give identical corpora.
pub fn planted_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.n_users.to_string().len();
    let ids: Vec<String> = (0..cfg.n_users).map(|i| format!("u{i:0width$}")).collect();
    let n_hm = ((cfg.n_users as f64 * cfg.hm_fraction).round() as usize).min(cfg.n_users);
    let mut order: Vec<usize> = (0..cfg.n_users).collect();
    order.shuffle(&mut rng);
    let mut labels = Labeling::new();
    let n_r = ((cfg.n_users - n_hm) as f64 * cfg.r_fraction).round() as usize;
    for (rank, &i) in order.iter().enumerate() {
        let label = if rank < n_hm {
            Label::HM
        } else if rank < n_hm + n_r {
            Label::R
        } else {
            Label::N
        };
        labels.insert(ids[i].clone(), label);
    }
    let hm: Vec<&String> = ids.iter().filter(|u| labels[*u] == Label::HM).collect();

    let start: DateTime<Utc> = "2016-05-01T00:00:00Z".parse().expect("valid timestamp");
    let span_secs = 60 * 24 * 3600;
    let mut users = Vec::with_capacity(cfg.n_users);
    let mut tweets = Vec::new();
    for (i, u) in ids.iter().enumerate() {
        let is_hm = labels[u] == Label::HM;
        users.push(UserRecord {
            user_id: u.clone(),
            handle: format!("user_{i}"),
            created_at: start - Duration::days(rng.random_range(30..3000)),
            friends_count: rng.random_range(0..2000),
            followers_count: rng.random_range(0..3000),
            label: Some(labels[u]),
            suspended: Some(is_hm && rng.random_bool(0.3)),
        });

        let pool: Vec<&String> = if is_hm { hm.clone() } else { ids.iter().collect() };
        let wanted = if is_hm { cfg.hm_targets } else { cfg.other_targets };
        let candidates: Vec<&String> = pool.into_iter().filter(|v| *v != u).collect();
        let targets: Vec<&String> = candidates.choose_multiple(&mut rng, wanted).copied().collect();
        let mut mentions: Vec<Vec<String>> = vec![Vec::new(); cfg.tweets_per_user];
        for t in &targets {
            // Spread one target's mentions over distinct tweets where possible.
            let mut slots: Vec<usize> = (0..cfg.tweets_per_user).collect();
            slots.shuffle(&mut rng);
            for k in 0..cfg.mentions_per_target {
                let slot = if k < slots.len() { slots[k] } else { rng.random_range(0..cfg.tweets_per_user) };
                if mentions[slot].contains(t) {
                    // Per-tweet mentions are deduplicated; find a free tweet.
                    match (0..cfg.tweets_per_user).find(|&s| !mentions[s].contains(t)) {
                        Some(s) => mentions[s].push((*t).clone()),
                        None => continue,
                    }
                } else {
                    mentions[slot].push((*t).clone());
                }
            }
        }

        let rate = if is_hm { cfg.marker_rate_hm } else { cfg.marker_rate_other };
        for (k, mentioned) in mentions.into_iter().enumerate() {
            let len = rng.random_range(6..12);
            let mut words = sentence(&mut rng, len);
            if k < 3 {
                let pos = rng.random_range(0..=words.len());
                let term = ECHO_TERMS.choose(&mut rng).expect("non-empty");
                words.insert(pos, format!("((({term})))"));
            }
            if rng.random_bool(rate) {
                let pos = rng.random_range(0..=words.len());
                words.insert(pos, cfg.marker.clone());
            }
            let hashtags: Vec<String> = if rng.random_bool(0.2) {
                vec![HASHTAGS.choose(&mut rng).expect("non-empty").to_string()]
            } else {
                Vec::new()
            };
            for h in &hashtags {
                words.push(format!("#{h}"));
            }
            let urls = u32::from(rng.random_bool(0.4));
            let reply = rng.random_bool(0.25).then(|| ids.choose(&mut rng).expect("non-empty").clone());
            tweets.push(Tweet {
                tweet_id: format!("{u}-{k}"),
                author_id: u.clone(),
                text: words.join(" "),
                created_at: start + Duration::seconds(rng.random_range(0..span_secs)),
                mentions: mentioned,
                hashtags,
                urls,
                in_reply_to_user: reply.filter(|r| r != u),
                retweet_of_user: None,
                language: "en".into(),
            });
        }
    }
    let corpus = Corpus::new(tweets, users)?.with_labels(&labels);
    Ok(SynthCorpus { corpus, labels })
}

/// Ids of the HM users of a planted corpus.
pub fn hm_users(labels: &Labeling) -> BTreeSet<String> {
    labels
        .iter()
        .filter(|(_, l)| l.is_hate())
        .map(|(u, _)| u.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_network, NetworkConfig, Semantics};

    #[test]
    fn shape_and_determinism() {
        let cfg = SynthConfig {
            n_users: 100,
            ..SynthConfig::default()
        };
        let a = planted_corpus(&cfg).unwrap();
        let b = planted_corpus(&cfg).unwrap();
        assert_eq!(a.corpus.tweets(), b.corpus.tweets());
        assert_eq!(a.labels.len(), 100);
        assert_eq!(hm_users(&a.labels).len(), 20);
        assert_eq!(a.corpus.len(), 100 * cfg.tweets_per_user);
    }

    #[test]
    fn hm_community_is_dense() {
        let s = planted_corpus(&SynthConfig::default()).unwrap();
        let g = build_network(&s.corpus, &NetworkConfig::new(Semantics::Mention)).unwrap();
        let hm = hm_users(&s.labels);
        for u in &hm {
            let i = g.index_of(u).unwrap();
            let hm_out = g.out_edges(i).iter().filter(|&&(j, _)| hm.contains(g.node_id(j))).count();
            assert_eq!(hm_out, 4, "{u}");
        }
    }
}
