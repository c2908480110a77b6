//! User-level text representations: averaged word embeddings, a single salient
//! topic, and the full topic distribution.

mod embedding;
mod lda;
mod tokenize;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

pub use embedding::EmbeddingTable;
pub use lda::{fit_topic_model, InferenceConfig, LdaConfig, TopicModel};
pub use tokenize::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReprKind {
    #[serde(rename = "EMBD")]
    Embd,
    #[serde(rename = "TM_S")]
    TmS,
    #[serde(rename = "TM_F")]
    TmF,
}

impl ReprKind {
    pub const ALL: [ReprKind; 3] = [ReprKind::Embd, ReprKind::TmS, ReprKind::TmF];

    pub fn as_str(self) -> &'static str {
        match self {
            ReprKind::Embd => "EMBD",
            ReprKind::TmS => "TM_S",
            ReprKind::TmF => "TM_F",
        }
    }
}

/// Why a representation fell back to a default value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprNote {
    EmptyDocument,
    AllOutOfVocabulary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserVector {
    pub user_id: String,
    pub kind: ReprKind,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<ReprNote>,
}

/// All of a user's tweets, oldest first, as one token stream.
pub fn user_document(corpus: &Corpus, user_id: &str) -> Vec<String> {
    corpus
        .timeline(user_id)
        .into_iter()
        .flat_map(|t| tokenize(&t.text))
        .collect()
}

/// Mean vector of the in-vocabulary tokens; zero vector if there are none.
pub fn embed_user(user_id: &str, doc: &[String], table: &EmbeddingTable) -> UserVector {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for v in doc.iter().filter_map(|w| table.get(w)) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    let note = match (doc.is_empty(), n) {
        (true, _) => Some(ReprNote::EmptyDocument),
        (false, 0) => Some(ReprNote::AllOutOfVocabulary),
        _ => None,
    };
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    UserVector {
        user_id: user_id.to_owned(),
        kind: ReprKind::Embd,
        values: sum,
        note,
    }
}

/// Full topic distribution; uniform when nothing in `doc` is in the vocabulary.
pub fn infer_topics(
    user_id: &str,
    doc: &[String],
    model: &TopicModel,
    cfg: InferenceConfig,
) -> UserVector {
    let (values, note) = match model.infer(doc, cfg) {
        Some(theta) => (theta, None),
        None => (
            vec![1.0 / model.k as f64; model.k],
            Some(if doc.is_empty() {
                ReprNote::EmptyDocument
            } else {
                ReprNote::AllOutOfVocabulary
            }),
        ),
    };
    UserVector {
        user_id: user_id.to_owned(),
        kind: ReprKind::TmF,
        values,
        note,
    }
}

/// One-hot at the most probable topic; ties go to the lowest index.
pub fn salient_topic(tm_f: &UserVector) -> UserVector {
    let mut best = 0;
    for (i, &v) in tm_f.values.iter().enumerate() {
        if v > tm_f.values[best] {
            best = i;
        }
    }
    let mut values = vec![0.0; tm_f.values.len()];
    if !values.is_empty() {
        values[best] = 1.0;
    }
    UserVector {
        user_id: tm_f.user_id.clone(),
        kind: ReprKind::TmS,
        values,
        note: tm_f.note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;

    fn tok(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        t.insert("a", vec![0.0, 0.0]).unwrap();
        t.insert("b", vec![2.0, 4.0]).unwrap();
        t.insert("c", vec![1.0, 2.0]).unwrap();
        t
    }

    #[test]
    fn document_is_chronological() {
        let mk = |id: &str, text: &str, ts: &str| Tweet {
            tweet_id: id.into(),
            author_id: "u".into(),
            text: text.into(),
            created_at: ts.parse().unwrap(),
            mentions: vec![],
            hashtags: vec![],
            urls: 0,
            in_reply_to_user: None,
            retweet_of_user: None,
            language: "en".into(),
        };
        let corpus = Corpus::new(
            vec![
                mk("2", "c", "2016-05-02T00:00:00Z"),
                mk("1", "A b", "2016-05-01T00:00:00Z"),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(user_document(&corpus, "u"), ["a", "b", "c"]);
        assert!(user_document(&corpus, "nobody").is_empty());
    }

    #[test]
    fn embedding_means() {
        let t = table();
        assert_eq!(embed_user("u", &tok(&["c"]), &t).values, vec![1.0, 2.0]);
        assert_eq!(embed_user("u", &tok(&["a", "b"]), &t).values, vec![1.0, 2.0]);
        let v = embed_user("u", &tok(&["a", "zzz", "b"]), &t);
        assert_eq!(v.values, vec![1.0, 2.0]);
        assert_eq!(v.note, None);
    }

    #[test]
    fn embedding_fallbacks_are_flagged() {
        let t = table();
        let v = embed_user("u", &tok(&["zzz"]), &t);
        assert_eq!(v.values, vec![0.0, 0.0]);
        assert_eq!(v.note, Some(ReprNote::AllOutOfVocabulary));
        assert_eq!(embed_user("u", &[], &t).note, Some(ReprNote::EmptyDocument));
    }

    fn tm_f(values: Vec<f64>) -> UserVector {
        UserVector {
            user_id: "u".into(),
            kind: ReprKind::TmF,
            values,
            note: None,
        }
    }

    #[test]
    fn salient_topic_argmax_and_ties() {
        assert_eq!(salient_topic(&tm_f(vec![0.7, 0.3])).values, vec![1.0, 0.0]);
        assert_eq!(salient_topic(&tm_f(vec![0.5, 0.5])).values, vec![1.0, 0.0]);
        assert_eq!(salient_topic(&tm_f(vec![0.2, 0.3, 0.5])).values, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_document_gets_uniform_topics() {
        let docs: Vec<Vec<String>> = (0..4).map(|i| tok(&[["x", "y"][i % 2], "z"])).collect();
        let model = fit_topic_model(
            &docs,
            &LdaConfig {
                k: 2,
                min_df: 1,
                iterations: 10,
                ..LdaConfig::default()
            },
        )
        .unwrap();
        let v = infer_topics("u", &[], &model, InferenceConfig::default());
        assert_eq!(v.values, vec![0.5, 0.5]);
        assert_eq!(v.note, Some(ReprNote::EmptyDocument));
        let v = infer_topics("u", &tok(&["x"]), &model, InferenceConfig::default());
        assert!((v.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v.note.is_none());
    }
}
