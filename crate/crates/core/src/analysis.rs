//! Class-level account statistics, term and hashtag usage contrasts between
//! groups, and engagement with a supplied list of troll accounts.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{account_stats, Corpus, Label, Labeling, Tweet};
use crate::error::{Error, Result};
use crate::repr::tokenize;

/// A named set of users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub members: BTreeSet<String>,
}

impl Group {
    pub fn new<I, S>(name: &str, members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            name: name.to_owned(),
            members: members.into_iter().map(Into::into).collect(),
        }
    }
}

/// HM, R, N and R+N groups of a labeling.
pub fn label_groups(labels: &Labeling) -> Vec<Group> {
    let with = |keep: &[Label]| {
        labels
            .iter()
            .filter(|(_, l)| keep.contains(l))
            .map(|(u, _)| u.clone())
            .collect::<BTreeSet<_>>()
    };
    vec![
        Group::new("HM", with(&[Label::HM])),
        Group::new("R", with(&[Label::R])),
        Group::new("N", with(&[Label::N])),
        Group::new("R+N", with(&[Label::R, Label::N])),
    ]
}

/// HM and R+N groups from binary predictions.
pub fn predicted_groups(predicted_hm: &BTreeMap<String, bool>) -> Vec<Group> {
    let (hm, rest): (Vec<_>, Vec<_>) = predicted_hm.iter().partition(|(_, &hm)| hm);
    vec![
        Group::new("HM", hm.into_iter().map(|(u, _)| u.clone())),
        Group::new("R+N", rest.into_iter().map(|(u, _)| u.clone())),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

/// One column of the account statistics table. Percentages are on a 0-100
/// scale. Days active, tweets per day, friends and followers average over
/// members with account metadata only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    #[serde(rename = "Label")]
    pub group: String,
    #[serde(rename = "Total #Users")]
    pub n_users: usize,
    #[serde(rename = "Total #Tweets")]
    pub n_tweets: usize,
    #[serde(rename = "#Users with metadata")]
    pub n_with_metadata: usize,
    #[serde(rename = "Avg. #Days Active")]
    pub days_active: MeanStd,
    #[serde(rename = "Avg. Tweets/day")]
    pub tweets_per_day: MeanStd,
    #[serde(rename = "Avg. #Friends")]
    pub friends: MeanStd,
    #[serde(rename = "Avg. #Followers")]
    pub followers: MeanStd,
    #[serde(rename = "Avg. %Replies")]
    pub pct_replies: MeanStd,
    #[serde(rename = "Avg. %Retweets")]
    pub pct_retweets: MeanStd,
    #[serde(rename = "Avg. %URL")]
    pub pct_url: MeanStd,
    #[serde(rename = "Avg. %Hashtags")]
    pub pct_hashtags: MeanStd,
    /// Set when the group has no members.
    pub empty: bool,
}

/// Latest tweet timestamp, used as the reference instant for account age.
pub fn corpus_end(corpus: &Corpus) -> Option<DateTime<Utc>> {
    corpus.tweets().iter().map(|t| t.created_at).max()
}

pub fn group_stats(corpus: &Corpus, groups: &[Group], as_of: DateTime<Utc>) -> Vec<GroupStats> {
    groups
        .iter()
        .map(|g| {
            let mut n_tweets = 0;
            let (mut days, mut tpd, mut friends, mut followers) = (vec![], vec![], vec![], vec![]);
            let (mut rep, mut rt, mut url, mut tag) = (vec![], vec![], vec![], vec![]);
            for u in &g.members {
                let timeline = corpus.timeline(u);
                n_tweets += timeline.len();
                let n = timeline.len().max(1) as f64;
                let pct = |pred: fn(&Tweet) -> bool| 100.0 * timeline.iter().filter(|t| pred(t)).count() as f64 / n;
                rep.push(pct(Tweet::is_reply));
                rt.push(pct(Tweet::is_retweet));
                url.push(pct(|t| t.urls > 0));
                tag.push(pct(|t| !t.hashtags.is_empty()));
                if let Some(rec) = corpus.user(u) {
                    let s = account_stats(rec, timeline.iter().copied(), as_of);
                    days.push(s.days_active);
                    tpd.push(s.tweets_per_day);
                    friends.push(rec.friends_count as f64);
                    followers.push(rec.followers_count as f64);
                }
            }
            GroupStats {
                group: g.name.clone(),
                n_users: g.members.len(),
                n_tweets,
                n_with_metadata: days.len(),
                days_active: MeanStd::of(&days),
                tweets_per_day: MeanStd::of(&tpd),
                friends: MeanStd::of(&friends),
                followers: MeanStd::of(&followers),
                pct_replies: MeanStd::of(&rep),
                pct_retweets: MeanStd::of(&rt),
                pct_url: MeanStd::of(&url),
                pct_hashtags: MeanStd::of(&tag),
                empty: g.members.is_empty(),
            }
        })
        .collect()
}

fn serialize_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OddsReport {
    pub term: String,
    pub tweets_a: usize,
    pub total_a: usize,
    pub tweets_b: usize,
    pub total_b: usize,
    #[serde(serialize_with = "serialize_real")]
    pub rate_a: f64,
    #[serde(serialize_with = "serialize_real")]
    pub rate_b: f64,
    /// `rate_a / rate_b`. With zero smoothing this may be infinite or NaN.
    #[serde(serialize_with = "serialize_real")]
    pub ratio: f64,
}

pub const DEFAULT_SMOOTHING: f64 = 0.5;

fn normalize_query(term: &str) -> String {
    term.trim().trim_start_matches('#').to_lowercase()
}

fn tweet_has_term(t: &Tweet, term: &str) -> bool {
    t.hashtags.iter().any(|h| h == term) || tokenize(&t.text).iter().any(|w| w == term)
}

fn check_disjoint(a: &Group, b: &Group) -> Result<()> {
    match a.members.intersection(&b.members).next() {
        Some(u) => Err(Error::Data(format!(
            "groups {} and {} share user {u}",
            a.name, b.name
        ))),
        None => Ok(()),
    }
}

/// Relative rate of tweets containing `term` in group A versus group B.
/// Matching is whole-token and case-insensitive; a leading '#' is ignored.
pub fn term_odds(corpus: &Corpus, a: &Group, b: &Group, term: &str, smoothing: f64) -> Result<OddsReport> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::Config("smoothing must be a finite non-negative number".into()));
    }
    check_disjoint(a, b)?;
    let term = normalize_query(term);
    let count = |g: &Group| {
        let mut hits = 0;
        let mut total = 0;
        for u in &g.members {
            for t in corpus.timeline(u) {
                total += 1;
                hits += usize::from(tweet_has_term(t, &term));
            }
        }
        (hits, total)
    };
    let (ha, ta) = count(a);
    let (hb, tb) = count(b);
    let rate = |h: usize, t: usize| (h as f64 + smoothing) / (t as f64 + 2.0 * smoothing);
    let (rate_a, rate_b) = (rate(ha, ta), rate(hb, tb));
    Ok(OddsReport {
        term,
        tweets_a: ha,
        total_a: ta,
        tweets_b: hb,
        total_b: tb,
        rate_a,
        rate_b,
        ratio: rate_a / rate_b,
    })
}

/// Most frequent hashtags in the group's tweets, ties broken alphabetically.
pub fn top_hashtags(corpus: &Corpus, group: &Group, n: usize) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for u in &group.members {
        for t in corpus.timeline(u) {
            for h in &t.hashtags {
                *counts.entry(h).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(h, c)| (h.to_owned(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked
}

/// Engagement of one group with the listed accounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IraEngagement {
    #[serde(rename = "Label")]
    pub group: String,
    #[serde(rename = "#Users")]
    pub n_users: usize,
    #[serde(rename = "#Tweets")]
    pub n_tweets: usize,
    #[serde(rename = "#Users mentioning IRA")]
    pub users_mentioning: usize,
    #[serde(rename = "#User retweeting IRA")]
    pub users_retweeting: usize,
    #[serde(rename = "#Unique IRA mentioned")]
    pub unique_ira_mentioned: usize,
    #[serde(rename = "#Unique IRA retweeted")]
    pub unique_ira_retweeted: usize,
    #[serde(rename = "#Total IRA mentions")]
    pub total_mentions: usize,
    #[serde(rename = "#Total IRA retweets")]
    pub total_retweets: usize,
    /// Share of members who mentioned or retweeted any listed account.
    pub engaging_user_rate: f64,
    /// Mentions plus retweets of listed accounts per member tweet.
    pub engagements_per_tweet: f64,
}

/// Lowercased handles with any leading '@' removed; empty lines are skipped.
pub fn normalize_handles<I, S>(handles: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    handles
        .into_iter()
        .map(|h| h.as_ref().trim().trim_start_matches('@').to_lowercase())
        .filter(|h| !h.is_empty())
        .collect()
}

/// The listed handle a referenced user id stands for, if any. The id is
/// matched through the user table's handle, then directly.
fn listed_handle<'a>(corpus: &Corpus, handles: &'a BTreeSet<String>, id: &str) -> Option<&'a String> {
    corpus
        .user(id)
        .and_then(|u| handles.get(&u.handle.trim_start_matches('@').to_lowercase()))
        .or_else(|| handles.get(&id.trim_start_matches('@').to_lowercase()))
}

pub fn ira_engagement(corpus: &Corpus, groups: &[Group], ira_handles: &BTreeSet<String>) -> Result<Vec<IraEngagement>> {
    let handles = normalize_handles(ira_handles);
    if handles.is_empty() {
        return Err(Error::Config("the troll handle list is empty".into()));
    }
    Ok(groups
        .iter()
        .map(|g| {
            let mut row = IraEngagement {
                group: g.name.clone(),
                n_users: g.members.len(),
                n_tweets: 0,
                users_mentioning: 0,
                users_retweeting: 0,
                unique_ira_mentioned: 0,
                unique_ira_retweeted: 0,
                total_mentions: 0,
                total_retweets: 0,
                engaging_user_rate: 0.0,
                engagements_per_tweet: 0.0,
            };
            let mut mentioned = BTreeSet::new();
            let mut retweeted = BTreeSet::new();
            let mut engaging = 0;
            for u in &g.members {
                let (mut m, mut r) = (0, 0);
                for t in corpus.timeline(u) {
                    row.n_tweets += 1;
                    for id in &t.mentions {
                        if let Some(h) = listed_handle(corpus, &handles, id) {
                            m += 1;
                            mentioned.insert(h);
                        }
                    }
                    if let Some(h) = t.retweet_of_user.as_deref().and_then(|id| listed_handle(corpus, &handles, id)) {
                        r += 1;
                        retweeted.insert(h);
                    }
                }
                row.total_mentions += m;
                row.total_retweets += r;
                row.users_mentioning += usize::from(m > 0);
                row.users_retweeting += usize::from(r > 0);
                engaging += usize::from(m + r > 0);
            }
            row.unique_ira_mentioned = mentioned.len();
            row.unique_ira_retweeted = retweeted.len();
            if row.n_users > 0 {
                row.engaging_user_rate = engaging as f64 / row.n_users as f64;
            }
            if row.n_tweets > 0 {
                row.engagements_per_tweet = (row.total_mentions + row.total_retweets) as f64 / row.n_tweets as f64;
            }
            row
        })
        .collect())
}
