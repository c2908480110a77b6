use serde::{Deserialize, Serialize};

use super::hashing::{hashed_char_ngrams, SparseVector, HASH_DIM};
use super::logistic::{self, LogisticModel, LogisticParams, SparseRows};
use crate::error::{Error, Result};

/// A post with its inherited binary label (1 = authored by an HM user).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPost {
    pub tweet_id: String,
    pub text: String,
    pub label: u8,
}

/// Native post scorer: logistic regression over hashed character n-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceScorer {
    model: LogisticModel,
}

/// On-disk form; only non-zero weights are stored.
#[derive(Serialize, Deserialize)]
struct StoredScorer {
    dim: usize,
    bias: f64,
    weights: Vec<(u32, f64)>,
}

impl ReferenceScorer {
    /// Zero weights and zero bias: every post scores 0.5.
    pub fn untrained() -> Self {
        Self {
            model: LogisticModel::zeros(HASH_DIM),
        }
    }

    pub fn train(posts: &[LabeledPost], params: &LogisticParams) -> Result<Self> {
        if let Some(bad) = posts.iter().find(|p| p.label > 1) {
            return Err(Error::Data(format!(
                "post {} has label {}; expected 0 or 1",
                bad.tweet_id, bad.label
            )));
        }
        let rows: Vec<SparseVector> = posts.iter().map(|p| hashed_char_ngrams(&p.text)).collect();
        let y: Vec<f64> = posts.iter().map(|p| p.label as f64).collect();
        let model = logistic::fit(
            &SparseRows {
                rows: &rows,
                dim: HASH_DIM,
            },
            &y,
            params,
        )
        .map_err(|e| match e {
            Error::Data(m) => Error::Data(format!("scorer training failed: {m}")),
            other => other,
        })?;
        Ok(Self { model })
    }

    pub fn score(&self, text: &str) -> f64 {
        self.model.predict_sparse(&hashed_char_ngrams(text))
    }

    pub fn score_all<S: AsRef<str>>(&self, texts: &[S]) -> Vec<f64> {
        texts.iter().map(|t| self.score(t.as_ref())).collect()
    }

    pub fn model(&self) -> &LogisticModel {
        &self.model
    }

    pub fn to_json(&self) -> Result<String> {
        let stored = StoredScorer {
            dim: self.model.weights.len(),
            bias: self.model.bias,
            weights: self
                .model
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, &w)| (i as u32, w))
                .collect(),
        };
        Ok(serde_json::to_string(&stored)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let stored: StoredScorer = serde_json::from_str(s)?;
        if stored.dim != HASH_DIM {
            return Err(Error::Data(format!(
                "scorer model has dimension {}, expected {HASH_DIM}",
                stored.dim
            )));
        }
        let mut model = LogisticModel::zeros(HASH_DIM);
        model.bias = stored.bias;
        for (i, w) in stored.weights {
            let slot = model
                .weights
                .get_mut(i as usize)
                .ok_or_else(|| Error::Data(format!("weight index {i} out of range")))?;
            *slot = w;
        }
        Ok(Self { model })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: usize, text: &str, label: u8) -> LabeledPost {
        LabeledPost {
            tweet_id: id.to_string(),
            text: text.into(),
            label,
        }
    }

    #[test]
    fn untrained_scores_half() {
        assert_eq!(ReferenceScorer::untrained().score(""), 0.5);
        assert_eq!(ReferenceScorer::untrained().score("anything"), 0.5);
    }

    #[test]
    fn separable_toy_set() {
        let posts: Vec<LabeledPost> = (0..20)
            .map(|i| if i % 2 == 0 { post(i, "kike", 1) } else { post(i, "hello", 0) })
            .collect();
        let s = ReferenceScorer::train(&posts, &LogisticParams::default()).unwrap();
        for p in &posts {
            assert_eq!(s.score(&p.text) > 0.5, p.label == 1);
        }
    }

    #[test]
    fn single_class_fails() {
        let posts = vec![post(0, "a", 1), post(1, "b", 1)];
        assert!(ReferenceScorer::train(&posts, &LogisticParams::default()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let posts = vec![post(0, "alpha beta", 1), post(1, "gamma delta", 0)];
        let s = ReferenceScorer::train(&posts, &LogisticParams::default()).unwrap();
        let back = ReferenceScorer::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.score("alpha"), s.score("alpha"));
    }
}
