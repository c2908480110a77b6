//! Stratified user-level cross-validation of stream configurations, with a
//! per-fold audit that no test-fold tweet reached scorer training.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{train_user_classifier, ClassifierConfig, UserClassifier};
use super::features::{
    assemble_features, score_corpus, FusionFeatures, NetworkFeatureTable, NetworkScaler, PostScores,
    StreamConfig,
};
use super::reference::LabeledPost;
use super::scorer::{ScorerHandle, ScorerTrainer};
use crate::corpus::{Corpus, Labeling};
use crate::error::{Error, Result};
use crate::graph::{build_network, EngagementGraph, NetworkConfig, Semantics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    /// Engagement type defining followers and followees.
    pub stream_semantics: Semantics,
    pub classifier: ClassifierConfig,
    /// Probability above which a user is predicted HM.
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            stream_semantics: Semantics::Mention,
            classifier: ClassifierConfig::default(),
            threshold: 0.5,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub n_test: usize,
    pub n_test_hm: usize,
}

/// HM-class precision, recall and F1 plus ROC AUC, averaged over folds.
/// F1 is the harmonic mean of the averaged precision and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub folds: Vec<FoldMetrics>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub fold: usize,
    pub train_users: usize,
    pub test_users: usize,
    pub scorer_training_tweets: usize,
    pub test_tweets: usize,
    /// Test-fold tweet ids found among the scorer's training posts.
    pub leaked_tweets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub reports: Vec<EvalReport>,
    pub audit: Vec<LeakageAudit>,
}

impl Evaluation {
    pub fn leak_free(&self) -> bool {
        self.audit.iter().all(|a| a.leaked_tweets.is_empty())
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Precision and recall of the positive class at `threshold`; an empty
/// denominator yields 0.
pub fn precision_recall(truth: &[bool], scores: &[f64], threshold: f64) -> (f64, f64) {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &s) in truth.iter().zip(scores) {
        match (s > threshold, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    let ratio = |a: usize, b: usize| if a + b > 0 { a as f64 / (a + b) as f64 } else { 0.0 };
    (ratio(tp, fp), ratio(tp, fn_))
}

/// ROC AUC as the Mann-Whitney statistic with tied scores counted half.
pub fn roc_auc(truth: &[bool], scores: &[f64]) -> Result<f64> {
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of average ranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| truth[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Fold index per user, stratified by class; each class is shuffled with
/// `seed` then dealt round-robin.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    let mut offset = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[i] = (k + offset) % folds;
        }
        // Continue dealing where the previous class stopped to balance fold sizes.
        offset = (offset + labels.iter().filter(|&&l| l == class).count()) % folds;
    }
    out
}

/// Training posts for the scorer: every tweet of `users`, labelled by author.
pub fn scorer_training_posts(corpus: &Corpus, gold: &Labeling, users: &[&str]) -> Vec<LabeledPost> {
    users
        .iter()
        .flat_map(|u| {
            let label = u8::from(gold[*u].is_hate());
            corpus.timeline(u).into_iter().map(move |t| LabeledPost {
                tweet_id: t.tweet_id.clone(),
                text: t.text.clone(),
                label,
            })
        })
        .collect()
}

fn stream_graphs(
    corpus: &Corpus,
    configs: &[StreamConfig],
    semantics: Semantics,
) -> Result<BTreeMap<u32, (EngagementGraph, NetworkFeatureTable)>> {
    let deltas: BTreeSet<u32> = configs.iter().map(|c| c.delta).collect();
    deltas
        .into_iter()
        .map(|delta| {
            let g = build_network(
                corpus,
                &NetworkConfig {
                    delta,
                    ..NetworkConfig::new(semantics)
                },
            )?;
            let table = NetworkFeatureTable::compute(&g)?;
            Ok((delta, (g, table)))
        })
        .collect()
}

/// Features for `users`, with the network block scaled by statistics of
/// the first `n_train` of them.
fn scaled_features(
    users: &[&str],
    n_train: usize,
    corpus: &Corpus,
    graph: &(EngagementGraph, NetworkFeatureTable),
    scores: &PostScores,
    cfg: &StreamConfig,
) -> Result<Vec<FusionFeatures>> {
    let mut feats = users
        .par_iter()
        .map(|u| assemble_features(u, corpus, &graph.0, scores, &graph.1, cfg))
        .collect::<Result<Vec<_>>>()?;
    let layout = cfg.layout();
    let scaler = NetworkScaler::fit(&feats[..n_train].iter().collect::<Vec<_>>(), &layout);
    for f in &mut feats {
        scaler.transform(f, &layout);
    }
    Ok(feats)
}

struct FoldOutcome {
    audit: LeakageAudit,
    metrics: Vec<FoldMetrics>,
}

fn check_gold(corpus: &Corpus, gold: &Labeling) -> Result<()> {
    if let Some(u) = gold.keys().find(|u| corpus.tweet_count(u) == 0) {
        return Err(Error::Data(format!("gold user {u} has no tweets in the corpus")));
    }
    Ok(())
}

/// Cross-validate every stream configuration on the gold users.
pub fn evaluate(
    corpus: &Corpus,
    gold: &Labeling,
    configs: &[StreamConfig],
    trainer: &dyn ScorerTrainer,
    cfg: &EvalConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    if configs.is_empty() {
        return Err(Error::Config("no stream configurations to evaluate".into()));
    }
    for c in configs {
        c.validate()?;
    }
    check_gold(corpus, gold)?;
    let users: Vec<&str> = gold.keys().map(String::as_str).collect();
    let labels: Vec<bool> = gold.values().map(|l| l.is_hate()).collect();
    let fold_of = stratified_folds(&labels, cfg.folds, cfg.seed);
    for f in 0..cfg.folds {
        let classes: HashSet<bool> = (0..users.len()).filter(|&i| fold_of[i] == f).map(|i| labels[i]).collect();
        if classes.len() < 2 {
            return Err(Error::Data(format!("fold {f} has a single class")));
        }
    }
    let graphs = stream_graphs(corpus, configs, cfg.stream_semantics)?;

    let outcomes = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| -> Result<FoldOutcome> {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..users.len()).partition(|&i| fold_of[i] == fold);
            let train_users: Vec<&str> = train.iter().map(|&i| users[i]).collect();
            let posts = scorer_training_posts(corpus, gold, &train_users);
            let trained: HashSet<&str> = posts.iter().map(|p| p.tweet_id.as_str()).collect();
            let test_tweets: Vec<String> = test
                .iter()
                .flat_map(|&i| corpus.timeline(users[i]))
                .map(|t| t.tweet_id.clone())
                .collect();
            let leaked: Vec<String> = test_tweets
                .iter()
                .filter(|id| trained.contains(id.as_str()))
                .cloned()
                .collect();
            let audit = LeakageAudit {
                fold,
                train_users: train.len(),
                test_users: test.len(),
                scorer_training_tweets: posts.len(),
                test_tweets: test_tweets.len(),
                leaked_tweets: leaked,
            };

            let scorer = trainer.train(&posts)?;
            let scores = score_corpus(&scorer, corpus)?;
            let ordered: Vec<&str> = train.iter().chain(&test).map(|&i| users[i]).collect();
            let y_train: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
            let y_test: Vec<bool> = test.iter().map(|&i| labels[i]).collect();

            let mut metrics = Vec::with_capacity(configs.len());
            for sc in configs {
                let feats = scaled_features(&ordered, train.len(), corpus, &graphs[&sc.delta], &scores, sc)?;
                let (tr, te) = feats.split_at(train.len());
                let x_train: Vec<Vec<f64>> = tr.iter().map(|f| f.values.clone()).collect();
                let model = train_user_classifier(&x_train, &y_train, &cfg.classifier)?;
                let probs: Vec<f64> = te.iter().map(|f| model.predict_proba(&f.values)).collect();
                let (precision, recall) = precision_recall(&y_test, &probs, cfg.threshold);
                metrics.push(FoldMetrics {
                    fold,
                    precision,
                    recall,
                    f1: f1_score(precision, recall),
                    auc: roc_auc(&y_test, &probs)?,
                    n_test: y_test.len(),
                    n_test_hm: y_test.iter().filter(|&&y| y).count(),
                });
            }
            Ok(FoldOutcome { audit, metrics })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = cfg.folds as f64;
    let reports = configs
        .iter()
        .enumerate()
        .map(|(c, sc)| {
            let folds: Vec<FoldMetrics> = outcomes.iter().map(|o| o.metrics[c].clone()).collect();
            let precision = folds.iter().map(|m| m.precision).sum::<f64>() / n;
            let recall = folds.iter().map(|m| m.recall).sum::<f64>() / n;
            EvalReport {
                config: sc.to_string(),
                precision,
                recall,
                f1: f1_score(precision, recall),
                auc: folds.iter().map(|m| m.auc).sum::<f64>() / n,
                folds,
            }
        })
        .collect();
    Ok(Evaluation {
        reports,
        audit: outcomes.into_iter().map(|o| o.audit).collect(),
    })
}

/// A scorer and user classifier fitted on all gold users.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub stream: StreamConfig,
    pub semantics: Semantics,
    pub scorer: ScorerHandle,
    pub classifier: UserClassifier,
    pub scaler: NetworkScaler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPrediction {
    pub user_id: String,
    pub probability: f64,
    pub hm: bool,
}

impl FittedPipeline {
    pub fn fit(
        corpus: &Corpus,
        gold: &Labeling,
        stream: &StreamConfig,
        trainer: &dyn ScorerTrainer,
        cfg: &EvalConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        stream.validate()?;
        check_gold(corpus, gold)?;
        let users: Vec<&str> = gold.keys().map(String::as_str).collect();
        let labels: Vec<bool> = gold.values().map(|l| l.is_hate()).collect();
        let scorer = trainer.train(&scorer_training_posts(corpus, gold, &users))?;
        let scores = score_corpus(&scorer, corpus)?;
        let graphs = stream_graphs(corpus, std::slice::from_ref(stream), cfg.stream_semantics)?;
        let graph = &graphs[&stream.delta];
        let feats = users
            .iter()
            .map(|u| assemble_features(u, corpus, &graph.0, &scores, &graph.1, stream))
            .collect::<Result<Vec<_>>>()?;
        let layout = stream.layout();
        let scaler = NetworkScaler::fit(&feats.iter().collect::<Vec<_>>(), &layout);
        let x: Vec<Vec<f64>> = feats
            .into_iter()
            .map(|mut f| {
                scaler.transform(&mut f, &layout);
                f.values
            })
            .collect();
        let classifier = train_user_classifier(&x, &labels, &cfg.classifier)?;
        Ok(Self {
            stream: *stream,
            semantics: cfg.stream_semantics,
            scorer,
            classifier,
            scaler,
        })
    }

    /// Predict every author of the corpus.
    pub fn predict(&self, corpus: &Corpus, threshold: f64) -> Result<Vec<UserPrediction>> {
        let scores = score_corpus(&self.scorer, corpus)?;
        let graphs = stream_graphs(corpus, std::slice::from_ref(&self.stream), self.semantics)?;
        let graph = &graphs[&self.stream.delta];
        let layout = self.stream.layout();
        let authors: BTreeSet<&str> = corpus.authors().collect();
        authors
            .into_par_iter()
            .map(|u| {
                let mut f = assemble_features(u, corpus, &graph.0, &scores, &graph.1, &self.stream)?;
                self.scaler.transform(&mut f, &layout);
                let p = self.classifier.predict_proba(&f.values);
                Ok(UserPrediction {
                    user_id: u.to_owned(),
                    probability: p,
                    hm: p > threshold,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[false, true], &[0.1, 0.9]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[false, true], &[0.9, 0.1]).unwrap(), 0.0);
        assert_eq!(roc_auc(&[false, true, true], &[0.5, 0.5, 0.5]).unwrap(), 0.5);
        // pos {0.8, 0.4}, neg {0.6, 0.2}: 3 of 4 pairs ordered
        let auc = roc_auc(&[true, false, true, false], &[0.8, 0.6, 0.4, 0.2]).unwrap();
        assert_eq!(auc, 0.75);
        assert!(roc_auc(&[true], &[0.5]).is_err());
    }

    #[test]
    fn precision_recall_examples() {
        let truth = [true, true, false, false];
        let (p, r) = precision_recall(&truth, &[0.9, 0.2, 0.7, 0.1], 0.5);
        assert_eq!((p, r), (0.5, 0.5));
        assert_eq!(precision_recall(&truth, &[0.0; 4], 0.5), (0.0, 0.0));
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        assert!((f1_score(0.923, 0.707) - 2.0 * 0.923 * 0.707 / 1.63).abs() < 1e-12);
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let labels: Vec<bool> = (0..53).map(|i| i % 5 == 0).collect();
        let folds = stratified_folds(&labels, 5, 7);
        for f in 0..5 {
            let members: Vec<usize> = (0..53).filter(|&i| folds[i] == f).collect();
            let pos = members.iter().filter(|&&i| labels[i]).count();
            assert!((10..=11).contains(&members.len()));
            assert!((2..=3).contains(&pos));
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 7));
    }
}
