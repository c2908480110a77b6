//! `echonet`: command-line pipeline over an echo corpus.
//!
//! Every subcommand prints its JSON report on standard output, writes it and
//! any artifacts to the output directory, and records a manifest. Errors go
//! to standard error as one JSON object with a `code` field. Exit status is 0
//! on success, 1 for data errors and 2 for configuration errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use echonet::graph::{Measure, Semantics};
use echonet::repr::ReprKind;
use echonet::Error;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "echonet", version, about = "Echo-meme corpus analysis pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true, env = "ECHONET_CONFIG")]
    pub config: Option<PathBuf>,
    /// Tweets in JSONL.
    #[arg(long, global = true)]
    pub tweets: Option<PathBuf>,
    /// Account records in JSONL.
    #[arg(long, global = true)]
    pub users: Option<PathBuf>,
    /// Gold labels (`user_id,label`).
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Word vectors in text format.
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Troll-account handles, one per line.
    #[arg(long, global = true)]
    pub ira_handles: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Minimum engagement count for an edge.
    #[arg(long, global = true)]
    pub delta: Option<u32>,
    /// Use edge counts as weights in degree, eigenvector and PageRank.
    #[arg(long, global = true)]
    pub weighted: bool,
    /// More log output on standard error (repeatable).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Mention,
    Reply,
    Retweet,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Mention => Semantics::Mention,
            SemanticsArg::Reply => Semantics::Reply,
            SemanticsArg::Retweet => Semantics::Retweet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    InDegree,
    OutDegree,
    TotalDegree,
    Betweenness,
    Eigenvector,
    Closeness,
    Pagerank,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::InDegree => Measure::InDeg,
            MeasureArg::OutDegree => Measure::OutDeg,
            MeasureArg::TotalDegree => Measure::TotalDeg,
            MeasureArg::Betweenness => Measure::Betweenness,
            MeasureArg::Eigenvector => Measure::Eigenvector,
            MeasureArg::Closeness => Measure::Closeness,
            MeasureArg::Pagerank => Measure::PageRank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprArg {
    Embd,
    TmS,
    TmF,
}

impl From<ReprArg> for ReprKind {
    fn from(r: ReprArg) -> Self {
        match r {
            ReprArg::Embd => ReprKind::Embd,
            ReprArg::TmS => ReprKind::TmS,
            ReprArg::TmF => ReprKind::TmF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Logreg,
    Gbt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Graphml,
    Dot,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load raw tweets, keep echo users and write the filtered corpus.
    Ingest {
        #[arg(long)]
        min_echo_uses: Option<usize>,
        #[arg(long)]
        language: Option<String>,
        /// Keep only each user's most recent tweets.
        #[arg(long)]
        max_timeline: Option<usize>,
    },
    /// List every echo occurrence.
    Lex,
    /// Build engagement networks and write their edge lists.
    Network {
        #[arg(long, value_enum)]
        semantics: Vec<SemanticsArg>,
    },
    /// Structural statistics of the engagement networks.
    Stats {
        #[arg(long, value_enum)]
        semantics: Vec<SemanticsArg>,
    },
    /// Per-user centrality scores.
    Centrality {
        #[arg(long, value_enum)]
        semantics: Vec<SemanticsArg>,
        #[arg(long, value_enum)]
        measure: Vec<MeasureArg>,
        /// Report only the highest-scoring users.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Rank users by generalized centrality over all semantics and measures.
    Leaders {
        #[arg(long)]
        k: Option<usize>,
        /// Add a predicted-class column from a `train` predictions file.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Compute user representations.
    Represent {
        #[arg(long, value_enum)]
        repr: Vec<ReprArg>,
        /// Number of topics.
        #[arg(long)]
        topics: Option<usize>,
    },
    /// k-means on user representations, scored by Rand Index against gold labels.
    Cluster {
        #[arg(long, value_enum)]
        repr: Vec<ReprArg>,
        #[arg(long)]
        topics: Option<usize>,
        /// Z-score each dimension before clustering.
        #[arg(long)]
        standardize: bool,
    },
    /// Fit the fusion classifier on all gold users and predict every author.
    Train {
        /// Stream set such as `U+UF+N`.
        #[arg(long)]
        streams: Option<String>,
        #[arg(long, value_enum)]
        classifier: Option<ClassifierArg>,
    },
    /// Cross-validated comparison of stream sets.
    Ablate {
        /// Stream sets to compare (repeatable); defaults to the six standard rows.
        #[arg(long)]
        streams: Vec<String>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, value_enum)]
        classifier: Option<ClassifierArg>,
    },
    /// Group statistics, term odds, hashtags and troll-account engagement.
    Analyze {
        /// Terms whose relative frequency HM vs R+N is reported (repeatable).
        #[arg(long)]
        term: Vec<String>,
        #[arg(long, default_value_t = 10)]
        top_hashtags: usize,
        /// Use predicted groups from a `train` predictions file instead of gold labels.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Write a network as GraphML or DOT with label and centrality attributes.
    Export {
        #[arg(long, value_enum, default_value = "mention")]
        semantics: SemanticsArg,
        #[arg(long, value_enum, default_value = "graphml")]
        format: GraphFormat,
        /// Restrict to the largest weakly connected component.
        #[arg(long)]
        lcc: bool,
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with a planted hate-monger community.
    Synth {
        #[arg(long = "n-users")]
        n_users: Option<usize>,
    },
    /// Repeat the run recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Lex => "lex",
            Command::Network { .. } => "network",
            Command::Stats { .. } => "stats",
            Command::Centrality { .. } => "centrality",
            Command::Leaders { .. } => "leaders",
            Command::Represent { .. } => "represent",
            Command::Cluster { .. } => "cluster",
            Command::Train { .. } => "train",
            Command::Ablate { .. } => "ablate",
            Command::Analyze { .. } => "analyze",
            Command::Export { .. } => "export",
            Command::Synth { .. } => "synth",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Apply global flags on top of the file and environment layers.
fn apply_global_flags(cfg: &mut RunConfig, g: &GlobalArgs) {
    let paths = &mut cfg.paths;
    for (slot, flag) in [
        (&mut paths.tweets, &g.tweets),
        (&mut paths.users, &g.users),
        (&mut paths.labels, &g.labels),
        (&mut paths.embeddings, &g.embeddings),
        (&mut paths.ira_handles, &g.ira_handles),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    if let Some(out) = &g.out {
        paths.out_dir.clone_from(out);
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(delta) = g.delta {
        cfg.network.delta = delta;
    }
    if g.weighted {
        cfg.network.weighted = true;
    }
}

/// Apply subcommand flags that shadow configuration keys.
fn apply_command_flags(cfg: &mut RunConfig, command: &Command) {
    let semantics = |s: &[SemanticsArg]| s.iter().map(|&x| x.into()).collect::<Vec<Semantics>>();
    let classifier = |c: ClassifierArg| match c {
        ClassifierArg::Logreg => echonet::fusion::ClassifierKind::LogReg,
        ClassifierArg::Gbt => echonet::fusion::ClassifierKind::Gbt,
    };
    match command {
        Command::Ingest {
            min_echo_uses,
            language,
            max_timeline,
        } => {
            if let Some(m) = min_echo_uses {
                cfg.corpus.min_echo_uses = *m;
            }
            if let Some(l) = language {
                cfg.corpus.language.clone_from(l);
            }
            if max_timeline.is_some() {
                cfg.corpus.max_timeline = *max_timeline;
            }
        }
        Command::Network { semantics: s } | Command::Stats { semantics: s } | Command::Centrality { semantics: s, .. }
            if !s.is_empty() =>
        {
            cfg.network.semantics = semantics(s);
        }
        Command::Leaders { k: Some(k), .. } => cfg.leaders.k = *k,
        Command::Represent { topics: Some(t), .. } => cfg.topics.k = *t,
        Command::Cluster { topics, standardize, .. } => {
            if let Some(t) = topics {
                cfg.topics.k = *t;
            }
            if *standardize {
                cfg.cluster.standardize = true;
            }
        }
        Command::Train { streams, classifier: c } => {
            if let Some(s) = streams {
                cfg.fusion.stream.clone_from(s);
            }
            if let Some(c) = c {
                cfg.fusion.classifier = classifier(*c);
            }
        }
        Command::Ablate {
            streams,
            folds,
            classifier: c,
        } => {
            if !streams.is_empty() {
                cfg.fusion.ablation.clone_from(streams);
            }
            if let Some(f) = folds {
                cfg.fusion.folds = *f;
            }
            if let Some(c) = c {
                cfg.fusion.classifier = classifier(*c);
            }
        }
        Command::Synth { n_users: Some(n) } => cfg.synth.users = *n,
        _ => {}
    }
}

fn resolve(cli: &Cli) -> echonet::Result<RunConfig> {
    let mut cfg = config::load(cli.global.config.as_deref(), std::env::vars())?;
    apply_global_flags(&mut cfg, &cli.global);
    apply_command_flags(&mut cfg, &cli.command);
    cfg.validate()?;
    Ok(cfg)
}

fn report_error(err: &Error) -> ExitCode {
    let body = serde_json::json!({
        "level": "error",
        "code": err.code(),
        "message": err.to_string(),
    });
    eprintln!("{body}");
    if err.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli, argv: Vec<String>) -> echonet::Result<()> {
    if let Command::Replay { manifest } = &cli.command {
        let recorded = output::Manifest::read(manifest)?;
        recorded.verify_inputs()?;
        let mut args = vec!["echonet".to_owned()];
        args.extend(recorded.argv.iter().cloned());
        let original = Cli::try_parse_from(&args).map_err(|e| Error::Config(format!("manifest argv: {e}")))?;
        let mut cfg = recorded.config.clone();
        // Only the output directory may be redirected on replay.
        if let Some(out) = &cli.global.out {
            cfg.paths.out_dir.clone_from(out);
        }
        cfg.validate()?;
        return commands::execute(&original.command, &cfg, recorded.argv);
    }
    let cfg = resolve(&cli)?;
    commands::execute(&cli.command, &cfg, argv)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return report_error(&Error::Config(e.kind().to_string() + ": " + e.to_string().lines().next().unwrap_or("")));
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ECHONET_LOG", level))
        .format_timestamp(None)
        .init();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}
