//! Multi-modal user classification: per-post scores from a pluggable scorer,
//! aggregated over the user's own tweets and ego network, joined with network
//! features and fed to a user-level classifier.

pub mod classifier;
pub mod evaluate;
pub mod external;
pub mod features;
pub mod hashing;
pub mod logistic;
pub mod protocol;
pub mod reference;
pub mod scorer;

pub use classifier::{train_user_classifier, ClassifierConfig, ClassifierKind, GbtParams, UserClassifier};
pub use evaluate::{evaluate, EvalConfig, EvalReport, Evaluation, FittedPipeline, FoldMetrics, LeakageAudit, UserPrediction};
pub use external::ExternalScorer;
pub use features::{
    assemble_features, neighbor_streams, network_features, score_corpus, FusionFeatures, NetworkFeatureTable,
    NetworkScaler, PostScores, StreamConfig,
};
pub use logistic::{LogisticModel, LogisticParams};
pub use reference::{LabeledPost, ReferenceScorer};
pub use scorer::{reference_scorer_train, ExternalTrainer, PostScorer, ReferenceTrainer, ScorerHandle, ScorerTrainer, Transport};
