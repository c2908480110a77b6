use serde::{Deserialize, Serialize};

use super::external::ExternalScorer;
use super::logistic::LogisticParams;
use super::protocol::PROTOCOL;
use super::reference::{LabeledPost, ReferenceScorer};
use crate::error::Result;

/// Anything that maps post texts to probabilities, aligned with the input.
pub trait PostScorer: Sync {
    fn score_posts(&self, texts: &[&str]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    InProcessReference,
    ExternalProcess,
}

/// A ready post scorer behind either transport.
#[derive(Debug, Clone)]
pub enum ScorerHandle {
    InProcess(ReferenceScorer),
    External(ExternalScorer),
}

impl ScorerHandle {
    pub fn transport(&self) -> Transport {
        match self {
            ScorerHandle::InProcess(_) => Transport::InProcessReference,
            ScorerHandle::External(_) => Transport::ExternalProcess,
        }
    }

    pub fn protocol(&self) -> &'static str {
        PROTOCOL
    }
}

impl PostScorer for ScorerHandle {
    fn score_posts(&self, texts: &[&str]) -> Result<Vec<f64>> {
        match self {
            ScorerHandle::InProcess(s) => Ok(s.score_all(texts)),
            ScorerHandle::External(s) => s.score_posts(texts),
        }
    }
}

/// Produces a scorer fitted on the given posts.
pub trait ScorerTrainer: Sync {
    fn train(&self, posts: &[LabeledPost]) -> Result<ScorerHandle>;
}

/// Trains the native reference scorer in process. Gradient descent starts
/// from zero weights, so training is deterministic without a seed.
#[derive(Debug, Clone, Default)]
pub struct ReferenceTrainer {
    pub params: LogisticParams,
}

impl ScorerTrainer for ReferenceTrainer {
    fn train(&self, posts: &[LabeledPost]) -> Result<ScorerHandle> {
        ReferenceScorer::train(posts, &self.params).map(ScorerHandle::InProcess)
    }
}

/// Hands the training posts to an external scorer, which fits on them at the
/// start of every session.
#[derive(Debug, Clone)]
pub struct ExternalTrainer {
    pub scorer: ExternalScorer,
}

impl ScorerTrainer for ExternalTrainer {
    fn train(&self, posts: &[LabeledPost]) -> Result<ScorerHandle> {
        Ok(ScorerHandle::External(
            self.scorer.clone().with_training(posts.to_vec()),
        ))
    }
}

pub fn reference_scorer_train(posts: &[LabeledPost], params: &LogisticParams) -> Result<ScorerHandle> {
    ReferenceTrainer { params: *params }.train(posts)
}
