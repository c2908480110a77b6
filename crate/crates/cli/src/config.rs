//! Run configuration, layered as defaults < config file < `ECHONET_*`
//! environment variables < command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use echonet::clustering::ClusterConfig;
use echonet::corpus::CorpusFilterConfig;
use echonet::fusion::{
    ClassifierConfig, ClassifierKind, EvalConfig, ExternalScorer, ExternalTrainer, LogisticParams, ReferenceTrainer,
    ScorerTrainer, StreamConfig,
};
use echonet::graph::{CentralityOptions, EndpointScope, NetworkConfig, Semantics};
use echonet::repr::{InferenceConfig, LdaConfig};
use echonet::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ENV_PREFIX: &str = "ECHONET_";
/// Environment variables with the prefix that are not configuration keys.
const ENV_RESERVED: &[&str] = &["ECHONET_CONFIG", "ECHONET_LOG"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for topic models, k-means restarts, folds and synthesis.
    pub seed: u64,
    pub paths: Paths,
    pub corpus: CorpusSection,
    pub network: NetworkSection,
    pub topics: TopicSection,
    pub cluster: ClusterSection,
    pub fusion: FusionSection,
    pub scorer: ScorerSection,
    pub leaders: LeadersSection,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub tweets: Option<PathBuf>,
    pub users: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// One troll-account handle per line.
    pub ira_handles: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            tweets: None,
            users: None,
            labels: None,
            embeddings: None,
            ira_handles: None,
            out_dir: PathBuf::from("echonet-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub min_echo_uses: usize,
    pub language: String,
    pub max_timeline: Option<usize>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let d = CorpusFilterConfig::default();
        Self {
            min_echo_uses: d.min_echo_uses,
            language: d.language,
            max_timeline: d.max_timeline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub delta: u32,
    pub include_singletons: bool,
    pub endpoints: EndpointScope,
    pub weighted: bool,
    /// Semantics analysed by `network`, `stats` and `centrality`.
    pub semantics: Vec<Semantics>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            delta: 3,
            include_singletons: false,
            endpoints: EndpointScope::CorpusUsers,
            weighted: false,
            semantics: Semantics::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicSection {
    pub k: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub min_df: usize,
    pub burn_in: usize,
    pub samples: usize,
}

impl Default for TopicSection {
    fn default() -> Self {
        let lda = LdaConfig::default();
        let inf = InferenceConfig::default();
        Self {
            k: lda.k,
            alpha: lda.alpha,
            beta: lda.beta,
            iterations: lda.iterations,
            min_df: lda.min_df,
            burn_in: inf.burn_in,
            samples: inf.samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub standardize: bool,
}

impl Default for ClusterSection {
    fn default() -> Self {
        let d = ClusterConfig::default();
        Self {
            n_init: d.n_init,
            max_iter: d.max_iter,
            tol: d.tol,
            standardize: d.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSection {
    /// Stream set used by `train`.
    pub stream: String,
    /// Stream sets compared by `ablate`.
    pub ablation: Vec<String>,
    pub t_max: usize,
    pub f_max: usize,
    pub folds: usize,
    pub classifier: ClassifierKind,
    pub threshold: f64,
    /// Engagement type that defines followees and followers.
    pub stream_semantics: Semantics,
}

impl Default for FusionSection {
    fn default() -> Self {
        let s = StreamConfig::default();
        Self {
            stream: s.to_string(),
            ablation: StreamConfig::ablation_rows().iter().map(ToString::to_string).collect(),
            t_max: s.t_max,
            f_max: s.f_max,
            folds: 5,
            classifier: ClassifierKind::LogReg,
            threshold: 0.5,
            stream_semantics: Semantics::Mention,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    /// The in-process hashed n-gram scorer.
    Reference,
    /// An external program speaking `plm/1` on standard input and output.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerSection {
    pub kind: ScorerKind,
    pub program: Option<PathBuf>,
    pub args: Vec<String>,
    pub timeout_secs: f64,
    pub l2: f64,
    pub max_epochs: usize,
}

impl Default for ScorerSection {
    fn default() -> Self {
        let p = LogisticParams::default();
        Self {
            kind: ScorerKind::Reference,
            program: None,
            args: Vec::new(),
            timeout_secs: 120.0,
            l2: p.l2,
            max_epochs: p.max_epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeadersSection {
    pub k: usize,
}

impl Default for LeadersSection {
    fn default() -> Self {
        Self { k: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub users: usize,
    pub hm_fraction: f64,
    pub marker_rate_hm: f64,
    pub marker_rate_other: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = echonet::synth::SynthConfig::default();
        Self {
            users: d.n_users,
            hm_fraction: d.hm_fraction,
            marker_rate_hm: d.marker_rate_hm,
            marker_rate_other: d.marker_rate_other,
        }
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    // Anything that parses as a TOML value keeps its type; the rest is a string.
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

/// Fold `ECHONET_SECTION_KEY=value` variables into `table`. Section names
/// contain no underscore, so the first one separates section from key.
pub fn apply_env<I>(table: &mut toml::Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let sections: BTreeMap<&str, ()> = [
        "paths", "corpus", "network", "topics", "cluster", "fusion", "scorer", "leaders", "synth",
    ]
    .into_iter()
    .map(|s| (s, ()))
    .collect();
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX) && !ENV_RESERVED.contains(&k.as_str()))
        .collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = name[ENV_PREFIX.len()..].to_ascii_lowercase();
        let value = parse_scalar(&raw);
        if rest == "seed" {
            table.insert(rest, value);
            continue;
        }
        let (section, key) = rest
            .split_once('_')
            .filter(|(s, k)| sections.contains_key(s) && !k.is_empty())
            .ok_or_else(|| Error::Config(format!("environment variable {name} names no configuration key")))?;
        let entry = table
            .entry(section.to_owned())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match entry {
            toml::Value::Table(t) => {
                t.insert(key.to_owned(), value);
            }
            _ => return Err(Error::Config(format!("config key {section} must be a table"))),
        }
    }
    Ok(())
}

/// Defaults, then the config file, then the environment. Flags are applied by the caller.
pub fn load<I>(file: Option<&Path>, env: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    apply_env(&mut table, env)?;
    RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form. The output directory is left out:
    /// it does not affect results and replays may redirect it.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths.out_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn validate(&self) -> Result<()> {
        self.network_config(Semantics::Mention).validate()?;
        self.filter_config().validate()?;
        if self.network.semantics.is_empty() {
            return Err(Error::Config("network.semantics must not be empty".into()));
        }
        if self.leaders.k == 0 {
            return Err(Error::Config("leaders.k must be positive".into()));
        }
        if self.topics.k < 2 {
            return Err(Error::Config("topics.k must be at least 2".into()));
        }
        if !(self.scorer.timeout_secs > 0.0 && self.scorer.timeout_secs.is_finite()) {
            return Err(Error::Config("scorer.timeout_secs must be positive".into()));
        }
        if self.scorer.kind == ScorerKind::External && self.scorer.program.is_none() {
            return Err(Error::Config("scorer.program is required for an external scorer".into()));
        }
        self.stream(&self.fusion.stream)?;
        for s in &self.fusion.ablation {
            self.stream(s)?;
        }
        self.eval_config().validate()
    }

    pub fn filter_config(&self) -> CorpusFilterConfig {
        CorpusFilterConfig {
            min_echo_uses: self.corpus.min_echo_uses,
            language: self.corpus.language.clone(),
            max_timeline: self.corpus.max_timeline,
        }
    }

    pub fn network_config(&self, semantics: Semantics) -> NetworkConfig {
        NetworkConfig {
            semantics,
            delta: self.network.delta,
            include_singletons: self.network.include_singletons,
            endpoints: self.network.endpoints,
        }
    }

    pub fn centrality_options(&self) -> CentralityOptions {
        CentralityOptions {
            weighted: self.network.weighted,
        }
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            k: self.topics.k,
            alpha: self.topics.alpha,
            beta: self.topics.beta,
            iterations: self.topics.iterations,
            min_df: self.topics.min_df,
            seed: self.seed,
        }
    }

    pub fn inference_config(&self) -> InferenceConfig {
        InferenceConfig {
            burn_in: self.topics.burn_in,
            samples: self.topics.samples,
        }
    }

    pub fn cluster_config(&self, k: usize) -> ClusterConfig {
        ClusterConfig {
            k,
            n_init: self.cluster.n_init,
            max_iter: self.cluster.max_iter,
            tol: self.cluster.tol,
            seed: self.seed,
            standardize: self.cluster.standardize,
        }
    }

    /// Parse a stream-set name and apply the configured sizes and delta.
    pub fn stream(&self, name: &str) -> Result<StreamConfig> {
        let mut s: StreamConfig = name.parse()?;
        s = s.with_sizes(self.fusion.t_max, self.fusion.f_max);
        s.delta = self.network.delta;
        s.validate()?;
        Ok(s)
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            folds: self.fusion.folds,
            seed: self.seed,
            stream_semantics: self.fusion.stream_semantics,
            classifier: ClassifierConfig {
                kind: self.fusion.classifier,
                ..ClassifierConfig::default()
            },
            threshold: self.fusion.threshold,
        }
    }

    pub fn trainer(&self) -> Box<dyn ScorerTrainer> {
        match self.scorer.kind {
            ScorerKind::Reference => Box::new(ReferenceTrainer {
                params: LogisticParams {
                    l2: self.scorer.l2,
                    max_epochs: self.scorer.max_epochs,
                    ..LogisticParams::default()
                },
            }),
            ScorerKind::External => Box::new(ExternalTrainer {
                scorer: ExternalScorer::new(
                    self.scorer.program.clone().unwrap_or_default(),
                    self.scorer.args.clone(),
                )
                .with_timeout(std::time::Duration::from_secs_f64(self.scorer.timeout_secs)),
            }),
        }
    }

    /// Seeds actually consumed by a run, for the manifest.
    pub fn seeds(&self) -> BTreeMap<&'static str, u64> {
        [("lda", self.seed), ("kmeans", self.seed), ("folds", self.seed), ("synth", self.seed)]
            .into_iter()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let d = RunConfig::default();
        let text = toml::to_string(&d).unwrap();
        assert_eq!(load_str(&text, &[]).unwrap(), d);
    }

    fn load_str(text: &str, vars: &[(&str, &str)]) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, text).unwrap();
        load(Some(&path), env(vars))
    }

    #[test]
    fn environment_overrides_file() {
        let c = load_str("[network]\ndelta = 4\n", &[("ECHONET_NETWORK_DELTA", "5")]).unwrap();
        assert_eq!(c.network.delta, 5);
        let c = load_str("[network]\ndelta = 4\n", &[]).unwrap();
        assert_eq!(c.network.delta, 4);
    }

    #[test]
    fn env_values_keep_their_types() {
        let c = load(
            None,
            env(&[
                ("ECHONET_SEED", "9"),
                ("ECHONET_NETWORK_WEIGHTED", "true"),
                ("ECHONET_NETWORK_INCLUDE_SINGLETONS", "true"),
                ("ECHONET_PATHS_TWEETS", "/data/tweets.jsonl"),
                ("ECHONET_FUSION_ABLATION", "[\"U\", \"U+N\"]"),
                ("ECHONET_LOG", "debug"),
                ("OTHER", "x"),
            ]),
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert!(c.network.weighted && c.network.include_singletons);
        assert_eq!(c.paths.tweets.as_deref(), Some(Path::new("/data/tweets.jsonl")));
        assert_eq!(c.fusion.ablation, vec!["U", "U+N"]);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(load_str("[network]\ndelat = 4\n", &[]).unwrap_err().is_config());
        assert!(load(None, env(&[("ECHONET_NETWORK_DELAT", "4")])).unwrap_err().is_config());
        assert!(load(None, env(&[("ECHONET_BOGUS", "4")])).unwrap_err().is_config());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.network.delta = 4;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn stream_names_pick_up_sizes() {
        let mut c = RunConfig::default();
        c.fusion.t_max = 10;
        c.network.delta = 2;
        let s = c.stream("U+UF").unwrap();
        assert_eq!((s.t_max, s.delta, s.include_uf, s.include_n), (10, 2, true, false));
        assert!(c.stream("U+XX").unwrap_err().is_config());
    }
}
