//! Tweet corpora: loading, validation, echo extraction and per-account statistics.
//!
//! Input is a normalized JSONL format (one tweet per line):
//!
//! | key          | type               | maps to                 |
//! |--------------|--------------------|-------------------------|
//! | `id`         | string (required)  | [`Tweet::tweet_id`]     |
//! | `author`     | string (required)  | [`Tweet::author_id`]    |
//! | `text`       | string (required)  | [`Tweet::text`]         |
//! | `ts`         | RFC 3339 (required)| [`Tweet::created_at`]   |
//! | `mentions`   | array of ids       | deduplicated            |
//! | `hashtags`   | array of strings   | lowercased, `#` removed |
//! | `urls`       | integer            | URL count               |
//! | `reply_to`   | id or null         | `in_reply_to_user`      |
//! | `retweet_of` | id or null         | `retweet_of_user`       |
//! | `lang`       | 2-letter code      | defaults to `und`       |

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer;

/// Gold annotation of a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Hate monger.
    HM,
    /// Responder discussing the symbol.
    R,
    /// Neutral, non-hate use.
    N,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::HM => "HM",
            Label::R => "R",
            Label::N => "N",
        }
    }

    pub fn is_hate(self) -> bool {
        self == Label::HM
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "HM" => Ok(Label::HM),
            "R" => Ok(Label::R),
            "N" => Ok(Label::N),
            other => Err(Error::Data(format!("unknown label {other:?}"))),
        }
    }
}

/// Gold labels keyed by user id.
pub type Labeling = BTreeMap<String, Label>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub tweet_id: String,
    pub author_id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub mentions: Vec<String>,
    pub hashtags: Vec<String>,
    pub urls: u32,
    pub in_reply_to_user: Option<String>,
    pub retweet_of_user: Option<String>,
    pub language: String,
}

impl Tweet {
    pub fn is_reply(&self) -> bool {
        self.in_reply_to_user.is_some()
    }

    pub fn is_retweet(&self) -> bool {
        self.retweet_of_user.is_some()
    }

    /// Serialize back to the JSONL record form.
    pub fn to_record(&self) -> TweetRecord {
        TweetRecord {
            id: Some(self.tweet_id.clone()),
            author: Some(self.author_id.clone()),
            text: Some(self.text.clone()),
            ts: Some(self.created_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            mentions: self.mentions.clone(),
            hashtags: self.hashtags.clone(),
            urls: self.urls,
            reply_to: self.in_reply_to_user.clone(),
            retweet_of: self.retweet_of_user.clone(),
            lang: Some(self.language.clone()),
        }
    }
}

/// Wire form of one `tweets.jsonl` line.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: Option<String>,
    pub author: Option<String>,
    pub text: Option<String>,
    pub ts: Option<String>,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub urls: u32,
    #[serde(default)]
    pub reply_to: Option<String>,
    #[serde(default)]
    pub retweet_of: Option<String>,
    #[serde(default)]
    pub lang: Option<String>,
}

fn dedup_in_order(items: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    items
        .into_iter()
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .collect()
}

fn parse_timestamp(raw: &str, line: usize, field: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::Schema {
            line,
            message: format!("{field}: invalid RFC 3339 timestamp {raw:?}: {e}"),
        })
}

fn classify_json_error(e: serde_json::Error, line: usize) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => Error::Schema {
            line,
            message: e.to_string(),
        },
        _ => Error::Parse {
            line,
            message: e.to_string(),
        },
    }
}

/// Parse one JSONL line. `line_no` is 1-based and only used for error reporting.
pub fn parse_tweet_record(line: &[u8], line_no: usize) -> Result<Tweet> {
    let rec: TweetRecord =
        serde_json::from_slice(line).map_err(|e| classify_json_error(e, line_no))?;
    let missing = |field: &str| Error::Schema {
        line: line_no,
        message: format!("missing required field `{field}`"),
    };
    let tweet_id = rec.id.filter(|s| !s.is_empty()).ok_or_else(|| missing("id"))?;
    let author_id = rec
        .author
        .filter(|s| !s.is_empty())
        .ok_or_else(|| missing("author"))?;
    let text = rec.text.ok_or_else(|| missing("text"))?;
    let ts = rec.ts.ok_or_else(|| missing("ts"))?;
    let created_at = parse_timestamp(&ts, line_no, "ts")?;
    let hashtags = dedup_in_order(
        rec.hashtags
            .into_iter()
            .map(|h| h.trim_start_matches('#').to_lowercase()),
    );
    Ok(Tweet {
        tweet_id,
        author_id,
        text,
        created_at,
        mentions: dedup_in_order(rec.mentions),
        hashtags,
        urls: rec.urls,
        in_reply_to_user: rec.reply_to.filter(|s| !s.is_empty()),
        retweet_of_user: rec.retweet_of.filter(|s| !s.is_empty()),
        language: rec
            .lang
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "und".to_owned()),
    })
}

/// A record that failed to load, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordError {
    pub line: usize,
    pub code: String,
    pub message: String,
}

impl RecordError {
    fn from_error(line: usize, err: &Error) -> Self {
        RecordError {
            line,
            code: err.code().to_owned(),
            message: err.to_string(),
        }
    }
}

/// Outcome of a streaming load: the good records plus per-line failures.
#[derive(Debug)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub errors: Vec<RecordError>,
    pub lines: usize,
}

impl<T> Default for Loaded<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            errors: Vec::new(),
            lines: 0,
        }
    }
}

/// Stream tweets from JSONL. Bad lines and duplicate ids are reported, not fatal.
pub fn load_tweets<R: BufRead>(reader: R) -> Result<Loaded<Tweet>> {
    let mut out = Loaded::default();
    let mut ids = HashSet::new();
    for (idx, line) in reader.split(b'\n').enumerate() {
        let line_no = idx + 1;
        let line = line?;
        out.lines = line_no;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match parse_tweet_record(&line, line_no) {
            Ok(t) if !ids.insert(t.tweet_id.clone()) => out.errors.push(RecordError {
                line: line_no,
                code: "schema".into(),
                message: format!("duplicate tweet id {:?}", t.tweet_id),
            }),
            Ok(t) => out.records.push(t),
            Err(e) => out.errors.push(RecordError::from_error(line_no, &e)),
        }
    }
    Ok(out)
}

pub fn load_tweets_path(path: &Path) -> Result<Loaded<Tweet>> {
    load_tweets(BufReader::new(File::open(path)?))
}

pub fn write_tweets<W: Write>(mut w: W, tweets: &[Tweet]) -> Result<()> {
    for t in tweets {
        serde_json::to_writer(&mut w, &t.to_record())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub handle: String,
    pub created_at: DateTime<Utc>,
    pub friends_count: u64,
    pub followers_count: u64,
    /// Present only for gold-standard users.
    pub label: Option<Label>,
    /// Account status if known (not part of the minimal schema).
    pub suspended: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct UserLine {
    pub id: Option<String>,
    pub handle: Option<String>,
    pub created_at: Option<String>,
    #[serde(default)]
    pub friends: u64,
    #[serde(default)]
    pub followers: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suspended: Option<bool>,
}

impl UserRecord {
    pub fn to_line(&self) -> UserLine {
        UserLine {
            id: Some(self.user_id.clone()),
            handle: Some(self.handle.clone()),
            created_at: Some(self.created_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            friends: self.friends_count,
            followers: self.followers_count,
            suspended: self.suspended,
        }
    }
}

pub fn parse_user_record(line: &[u8], line_no: usize) -> Result<UserRecord> {
    let rec: UserLine = serde_json::from_slice(line).map_err(|e| classify_json_error(e, line_no))?;
    let missing = |field: &str| Error::Schema {
        line: line_no,
        message: format!("missing required field `{field}`"),
    };
    let user_id = rec.id.filter(|s| !s.is_empty()).ok_or_else(|| missing("id"))?;
    let created_at = rec.created_at.ok_or_else(|| missing("created_at"))?;
    Ok(UserRecord {
        handle: rec.handle.unwrap_or_else(|| user_id.clone()),
        user_id,
        created_at: parse_timestamp(&created_at, line_no, "created_at")?,
        friends_count: rec.friends,
        followers_count: rec.followers,
        label: None,
        suspended: rec.suspended,
    })
}

pub fn load_users<R: BufRead>(reader: R) -> Result<Loaded<UserRecord>> {
    let mut out = Loaded::default();
    let mut ids = HashSet::new();
    for (idx, line) in reader.split(b'\n').enumerate() {
        let line_no = idx + 1;
        let line = line?;
        out.lines = line_no;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match parse_user_record(&line, line_no) {
            Ok(u) if !ids.insert(u.user_id.clone()) => out.errors.push(RecordError {
                line: line_no,
                code: "schema".into(),
                message: format!("duplicate user id {:?}", u.user_id),
            }),
            Ok(u) => out.records.push(u),
            Err(e) => out.errors.push(RecordError::from_error(line_no, &e)),
        }
    }
    Ok(out)
}

pub fn load_users_path(path: &Path) -> Result<Loaded<UserRecord>> {
    load_users(BufReader::new(File::open(path)?))
}

pub fn write_users<W: Write>(mut w: W, users: &[UserRecord]) -> Result<()> {
    for u in users {
        serde_json::to_writer(&mut w, &u.to_line())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    user_id: String,
    label: String,
}

/// Read `labels.csv` (`user_id,label`). Any bad row fails the whole file.
pub fn load_labels<R: Read>(reader: R) -> Result<Labeling> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("labels: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["user_id", "label"] {
        return Err(Error::Schema {
            line: 1,
            message: format!("labels header must be `user_id,label`, got {headers:?}"),
        });
    }
    let mut out = Labeling::new();
    for (idx, row) in rdr.deserialize::<LabelRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| Error::Schema {
            line,
            message: e.to_string(),
        })?;
        let label = row.label.parse::<Label>().map_err(|e| Error::Schema {
            line,
            message: e.to_string(),
        })?;
        if out.insert(row.user_id.clone(), label).is_some() {
            return Err(Error::Schema {
                line,
                message: format!("duplicate user id {:?}", row.user_id),
            });
        }
    }
    Ok(out)
}

pub fn load_labels_path(path: &Path) -> Result<Labeling> {
    load_labels(File::open(path)?)
}

pub fn write_labels<W: Write>(w: W, labels: &Labeling) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["user_id", "label"])
        .map_err(|e| Error::Data(e.to_string()))?;
    for (user, label) in labels {
        wtr.write_record([user.as_str(), label.as_str()])
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Immutable collection of tweets with optional account metadata.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    users: BTreeMap<String, UserRecord>,
    by_author: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    /// Build a corpus. Fails on duplicate tweet ids.
    pub fn new(tweets: Vec<Tweet>, users: Vec<UserRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(tweets.len());
        for t in &tweets {
            if !seen.insert(t.tweet_id.as_str()) {
                return Err(Error::Data(format!("duplicate tweet id {:?}", t.tweet_id)));
            }
        }
        let users = users.into_iter().map(|u| (u.user_id.clone(), u)).collect();
        Ok(Self::assemble(tweets, users))
    }

    fn assemble(tweets: Vec<Tweet>, users: BTreeMap<String, UserRecord>) -> Self {
        let mut by_author: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in tweets.iter().enumerate() {
            by_author.entry(t.author_id.clone()).or_default().push(i);
        }
        for idx in by_author.values_mut() {
            idx.sort_by(|&a, &b| {
                let (ta, tb) = (&tweets[a], &tweets[b]);
                ta.created_at
                    .cmp(&tb.created_at)
                    .then_with(|| ta.tweet_id.cmp(&tb.tweet_id))
            });
        }
        Corpus {
            tweets,
            users,
            by_author,
        }
    }

    /// Attach gold labels to the matching user records.
    pub fn with_labels(mut self, labels: &Labeling) -> Self {
        for (id, user) in self.users.iter_mut() {
            user.label = labels.get(id).copied();
        }
        self
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn user(&self, id: &str) -> Option<&UserRecord> {
        self.users.get(id)
    }

    pub fn user_records(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.values()
    }

    /// Ids of tweet authors, sorted.
    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.by_author.keys().map(String::as_str)
    }

    /// Authors plus users known only from account metadata, sorted.
    pub fn user_ids(&self) -> BTreeSet<&str> {
        self.by_author
            .keys()
            .chain(self.users.keys())
            .map(String::as_str)
            .collect()
    }

    pub fn is_known_user(&self, id: &str) -> bool {
        self.by_author.contains_key(id) || self.users.contains_key(id)
    }

    /// Tweets written by `user`, oldest first.
    pub fn timeline(&self, user: &str) -> Vec<&Tweet> {
        self.by_author
            .get(user)
            .map(|idx| idx.iter().map(|&i| &self.tweets[i]).collect())
            .unwrap_or_default()
    }

    pub fn tweet_count(&self, user: &str) -> usize {
        self.by_author.get(user).map_or(0, Vec::len)
    }

    fn filtered(&self, keep: impl Fn(&Tweet) -> bool) -> Corpus {
        let tweets = self.tweets.iter().filter(|t| keep(t)).cloned().collect();
        Self::assemble(tweets, self.users.clone())
    }

    /// Only the tweets carrying an echo (any variant).
    pub fn extract_echo_tweets(&self) -> Corpus {
        self.filtered(|t| lexer::has_echo(&t.text))
    }

    /// Only tweets authored by users in `keep`; account records are restricted too.
    pub fn restrict_to_users(&self, keep: &BTreeSet<String>) -> Corpus {
        let tweets = self
            .tweets
            .iter()
            .filter(|t| keep.contains(&t.author_id))
            .cloned()
            .collect();
        let users = self
            .users
            .iter()
            .filter(|(id, _)| keep.contains(*id))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Self::assemble(tweets, users)
    }

    /// Keep at most the `max` most recent tweets per user.
    pub fn truncate_timelines(&self, max: usize) -> Corpus {
        let mut keep = HashSet::new();
        for idx in self.by_author.values() {
            let skip = idx.len().saturating_sub(max);
            keep.extend(idx[skip..].iter().copied());
        }
        let tweets = self
            .tweets
            .iter()
            .enumerate()
            .filter(|(i, _)| keep.contains(i))
            .map(|(_, t)| t.clone())
            .collect();
        Self::assemble(tweets, self.users.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFilterConfig {
    pub min_echo_uses: usize,
    pub language: String,
    /// Keep only the most recent tweets of each user when building timelines.
    pub max_timeline: Option<usize>,
}

impl Default for CorpusFilterConfig {
    fn default() -> Self {
        Self {
            min_echo_uses: 3,
            language: "en".into(),
            max_timeline: None,
        }
    }
}

impl CorpusFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_echo_uses == 0 {
            return Err(Error::Config("min_echo_uses must be at least 1".into()));
        }
        Ok(())
    }
}

/// Users with at least `min_echo_uses` echo tweets in the configured language.
///
/// Expects the output of [`Corpus::extract_echo_tweets`].
pub fn filter_echo_users(echo: &Corpus, cfg: &CorpusFilterConfig) -> BTreeSet<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in echo.tweets() {
        if t.language == cfg.language {
            *counts.entry(&t.author_id).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n >= cfg.min_echo_uses.max(1))
        .map(|(u, _)| u.to_owned())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AccountStats {
    pub days_active: f64,
    pub tweets_per_day: f64,
    pub pct_replies: f64,
    pub pct_retweets: f64,
    pub pct_url: f64,
    pub pct_hashtags: f64,
}

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Activity statistics of one account as of a fixed instant.
pub fn account_stats<'a, I>(user: &UserRecord, timeline: I, as_of: DateTime<Utc>) -> AccountStats
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let days_active =
        ((as_of - user.created_at).num_milliseconds() as f64 / 1000.0 / SECONDS_PER_DAY).max(0.0);
    let (mut n, mut replies, mut retweets, mut urls, mut tags) = (0usize, 0, 0, 0, 0);
    for t in timeline {
        n += 1;
        replies += usize::from(t.is_reply());
        retweets += usize::from(t.is_retweet());
        urls += usize::from(t.urls > 0);
        tags += usize::from(!t.hashtags.is_empty());
    }
    if n == 0 {
        return AccountStats {
            days_active,
            ..AccountStats::default()
        };
    }
    let frac = |k: usize| k as f64 / n as f64;
    AccountStats {
        days_active,
        tweets_per_day: n as f64 / days_active.max(1.0),
        pct_replies: frac(replies),
        pct_retweets: frac(retweets),
        pct_url: frac(urls),
        pct_hashtags: frac(tags),
    }
}
