//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Words must occur in at least this many documents.
    pub min_df: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            k: 30,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            min_df: 5,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("number of topics must be positive".into()));
        }
        if self.alpha() <= 0.0 || self.beta <= 0.0 {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

/// Gibbs settings for inferring the topic mixture of a new document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub burn_in: usize,
    pub samples: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            burn_in: 50,
            samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub vocab: Vec<String>,
    /// `k x |vocab|` topic-word distributions.
    pub phi: Vec<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub min_df: usize,
    /// Complete-data log likelihood `log p(w | z)` after each sweep.
    pub log_likelihood: Vec<f64>,
    /// Final topic of every retained token, per training document.
    #[serde(skip)]
    pub assignments: Vec<Vec<usize>>,
    #[serde(skip)]
    word_index: HashMap<String, usize>,
}

impl TopicModel {
    pub fn word_id(&self, word: &str) -> Option<usize> {
        if self.word_index.is_empty() && !self.vocab.is_empty() {
            return self.vocab.iter().position(|w| w == word);
        }
        self.word_index.get(word).copied()
    }

    /// Rebuild lookup tables after deserialization.
    pub fn reindex(&mut self) {
        self.word_index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut m: TopicModel = serde_json::from_str(s)?;
        m.reindex();
        Ok(m)
    }

    /// Topic mixture of a new document, averaged over post-burn-in sweeps with
    /// `phi` held fixed. `None` if no token is in the vocabulary.
    pub fn infer(&self, doc: &[String], cfg: InferenceConfig) -> Option<Vec<f64>> {
        let words: Vec<usize> = doc.iter().filter_map(|w| self.word_id(w)).collect();
        if words.is_empty() {
            return None;
        }
        let k = self.k;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        let mut n_dk = vec![0usize; k];
        for &t in &z {
            n_dk[t] += 1;
        }
        let mut p = vec![0.0; k];
        let mut theta = vec![0.0; k];
        let denom = words.len() as f64 + k as f64 * self.alpha;
        for sweep in 0..cfg.burn_in + cfg.samples.max(1) {
            for (i, &w) in words.iter().enumerate() {
                n_dk[z[i]] -= 1;
                for t in 0..k {
                    p[t] = self.phi[t][w] * (n_dk[t] as f64 + self.alpha);
                }
                z[i] = sample(&p, &mut rng);
                n_dk[z[i]] += 1;
            }
            if sweep >= cfg.burn_in {
                for t in 0..k {
                    theta[t] += (n_dk[t] as f64 + self.alpha) / denom;
                }
            }
        }
        let total: f64 = theta.iter().sum();
        Some(theta.into_iter().map(|v| v / total).collect())
    }
}

fn sample<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn build_vocab(docs: &[Vec<String>], min_df: usize) -> Vec<String> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let uniq: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for w in uniq {
            *df.entry(w).or_default() += 1;
        }
    }
    df.into_iter()
        .filter(|&(_, n)| n >= min_df.max(1))
        .map(|(w, _)| w.to_owned())
        .collect()
}

fn log_likelihood(n_kw: &[Vec<usize>], n_k: &[usize], beta: f64) -> f64 {
    let v = n_kw.first().map_or(0, Vec::len) as f64;
    let lg_beta = ln_gamma(beta);
    let lg_vbeta = ln_gamma(v * beta);
    n_kw.iter()
        .zip(n_k)
        .map(|(row, &nk)| {
            lg_vbeta - ln_gamma(nk as f64 + v * beta)
                + row
                    .iter()
                    .filter(|&&c| c > 0)
                    .map(|&c| ln_gamma(c as f64 + beta) - lg_beta)
                    .sum::<f64>()
        })
        .sum()
}

/// Fit LDA to tokenized documents. Deterministic for a given seed.
pub fn fit_topic_model(docs: &[Vec<String>], cfg: &LdaConfig) -> Result<TopicModel> {
    cfg.validate()?;
    let vocab = build_vocab(docs, cfg.min_df);
    if vocab.is_empty() {
        return Err(Error::Data(format!(
            "empty vocabulary after document-frequency pruning (min_df = {})",
            cfg.min_df
        )));
    }
    let word_index: HashMap<String, usize> =
        vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|w| word_index.get(w).copied()).collect())
        .collect();
    let non_empty = ids.iter().filter(|d| !d.is_empty()).count();
    if non_empty < cfg.k {
        return Err(Error::Data(format!(
            "{non_empty} non-empty documents cannot support {} topics",
            cfg.k
        )));
    }

    let (k, v) = (cfg.k, vocab.len());
    let (alpha, beta) = (cfg.alpha(), cfg.beta);
    let vbeta = v as f64 * beta;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut n_dk = vec![vec![0usize; k]; ids.len()];
    let mut n_kw = vec![vec![0usize; v]; k];
    let mut n_k = vec![0usize; k];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(ids.len());
    for (d, doc) in ids.iter().enumerate() {
        let zd: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &t) in doc.iter().zip(&zd) {
            n_dk[d][t] += 1;
            n_kw[t][w] += 1;
            n_k[t] += 1;
        }
        z.push(zd);
    }

    let mut p = vec![0.0; k];
    let mut trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        for (d, doc) in ids.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;
                for t in 0..k {
                    p[t] = (n_dk[d][t] as f64 + alpha) * (n_kw[t][w] as f64 + beta)
                        / (n_k[t] as f64 + vbeta);
                }
                let new = sample(&p, &mut rng);
                z[d][i] = new;
                n_dk[d][new] += 1;
                n_kw[new][w] += 1;
                n_k[new] += 1;
            }
        }
        trace.push(log_likelihood(&n_kw, &n_k, beta));
    }

    let phi = n_kw
        .iter()
        .zip(&n_k)
        .map(|(row, &nk)| {
            row.iter()
                .map(|&c| (c as f64 + beta) / (nk as f64 + vbeta))
                .collect()
        })
        .collect();
    Ok(TopicModel {
        k,
        vocab,
        phi,
        alpha,
        beta,
        seed: cfg.seed,
        iterations: cfg.iterations,
        min_df: cfg.min_df,
        log_likelihood: trace,
        assignments: z,
        word_index,
    })
}
