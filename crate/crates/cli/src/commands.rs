//! Subcommand implementations. Each one loads its inputs, writes artifacts
//! through [`OutputDir`], prints its report and records a manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use echonet::analysis::{
    corpus_end, group_stats, ira_engagement, label_groups, predicted_groups, term_odds, top_hashtags, Group,
    DEFAULT_SMOOTHING,
};
use echonet::clustering::{cluster_users, collapse_gold, rand_index_on_gold, GoldScheme};
use echonet::corpus::{
    filter_echo_users, load_labels_path, load_tweets_path, load_users_path, write_labels, write_tweets, write_users,
    Corpus, Labeling, Loaded, RecordError,
};
use echonet::fusion::{evaluate, FittedPipeline, ScorerHandle, UserPrediction};
use echonet::graph::{
    build_network, centrality_with, generalized_centrality, largest_connected_component, network_stats, to_dot,
    to_graphml, EngagementGraph, Measure, NodeAttributes, Semantics,
};
use echonet::lexer::{normalize_term, scan_echoes};
use echonet::repr::{
    embed_user, fit_topic_model, infer_topics, salient_topic, user_document, EmbeddingTable, ReprKind, TopicModel,
    UserVector,
};
use echonet::synth::{planted_corpus, SynthConfig};
use echonet::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{FileDigest, Manifest, OutputDir};
use crate::{Command, GraphFormat};

/// Load errors echoed in a report; the full list goes to a side file.
const MAX_REPORTED_ERRORS: usize = 20;

struct Context<'a> {
    cfg: &'a RunConfig,
    out: OutputDir,
    inputs: Vec<FileDigest>,
}

impl<'a> Context<'a> {
    /// A configured input path that must exist.
    fn input(&mut self, path: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
        let path = path.ok_or_else(|| Error::Config(format!("{what} file required (--{what})")))?;
        if !path.is_file() {
            return Err(Error::Config(format!("{what} file {} does not exist", path.display())));
        }
        if !self.inputs.iter().any(|d| &d.path == path) {
            self.inputs.push(FileDigest::of(path)?);
        }
        Ok(path.clone())
    }

    fn optional_input(&mut self, path: Option<&PathBuf>, what: &str) -> Result<Option<PathBuf>> {
        path.map(|p| self.input(Some(p), what)).transpose()
    }

    fn labels(&mut self) -> Result<Labeling> {
        let path = self.input(self.cfg.paths.labels.as_ref(), "labels")?;
        load_labels_path(&path)
    }

    fn optional_labels(&mut self) -> Result<Option<Labeling>> {
        match self.optional_input(self.cfg.paths.labels.as_ref(), "labels")? {
            Some(p) => load_labels_path(&p).map(Some),
            None => Ok(None),
        }
    }

    /// Tweets plus optional account records and labels, with per-line load errors.
    fn corpus_with_errors(&mut self) -> Result<(Corpus, LoadSummary)> {
        let tweets_path = self.input(self.cfg.paths.tweets.as_ref(), "tweets")?;
        let users_path = self.optional_input(self.cfg.paths.users.as_ref(), "users")?;
        let tweets = load_tweets_path(&tweets_path)?;
        let users = match &users_path {
            Some(p) => load_users_path(p)?,
            None => Loaded::default(),
        };
        let summary = LoadSummary {
            tweet_lines: tweets.lines,
            tweets_loaded: tweets.records.len(),
            tweet_errors: tweets.errors,
            user_lines: users.lines,
            users_loaded: users.records.len(),
            user_errors: users.errors,
        };
        for e in summary.tweet_errors.iter().chain(&summary.user_errors).take(MAX_REPORTED_ERRORS) {
            log::warn!("skipped line {}: {}", e.line, e.message);
        }
        if tweets.records.is_empty() {
            return Err(Error::Data(format!("no valid tweets in {}", tweets_path.display())));
        }
        let mut corpus = Corpus::new(tweets.records, users.records)?;
        if let Some(labels) = self.optional_labels()? {
            corpus = corpus.with_labels(&labels);
        }
        log::info!("loaded {} tweets", corpus.len());
        Ok((corpus, summary))
    }

    fn corpus(&mut self) -> Result<Corpus> {
        self.corpus_with_errors().map(|(c, _)| c)
    }

    fn predictions(&mut self, path: &Path) -> Result<BTreeMap<String, bool>> {
        let path = self.input(Some(&path.to_owned()), "predictions")?;
        let text = std::fs::read_to_string(&path)?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<UserPrediction>(l)
                    .map(|p| (p.user_id, p.hm))
                    .map_err(|e| Error::Parse {
                        line: i + 1,
                        message: format!("{}: {e}", path.display()),
                    })
            })
            .collect()
    }

    fn graph(&self, corpus: &Corpus, semantics: Semantics) -> Result<EngagementGraph> {
        build_network(corpus, &self.cfg.network_config(semantics))
    }

    /// Write the report and the manifest, then print the report.
    fn finish<T: Serialize>(mut self, command: &str, argv: Vec<String>, report: &T) -> Result<()> {
        self.out.write_json(&format!("{command}.json"), report)?;
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Manifest {
            command: command.to_owned(),
            argv,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config_hash: self.cfg.hash(),
            config: self.cfg.clone(),
            seeds: self.cfg.seeds().into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
            inputs: self.inputs,
            outputs: Vec::new(),
            created_unix,
        };
        let path = self.out.finish(manifest)?;
        log::info!("manifest written to {}", path.display());
        let mut text = serde_json::to_vec_pretty(report)?;
        text.push(b'\n');
        match std::io::stdout().lock().write_all(&text) {
            // A closed pipe (`| head`) is not a failure; the report is on disk.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            other => other.map_err(Error::from),
        }
    }
}

#[derive(Debug, Serialize)]
struct LoadSummary {
    tweet_lines: usize,
    tweets_loaded: usize,
    tweet_errors: Vec<RecordError>,
    user_lines: usize,
    users_loaded: usize,
    user_errors: Vec<RecordError>,
}

pub fn execute(command: &Command, cfg: &RunConfig, argv: Vec<String>) -> Result<()> {
    let mut ctx = Context {
        cfg,
        out: OutputDir::create(&cfg.paths.out_dir)?,
        inputs: Vec::new(),
    };
    let name = command.name();
    let report = match command {
        Command::Ingest { .. } => ingest(&mut ctx)?,
        Command::Lex => lex(&mut ctx)?,
        Command::Network { .. } => network(&mut ctx)?,
        Command::Stats { .. } => stats(&mut ctx)?,
        Command::Centrality { measure, top, .. } => centrality(&mut ctx, measure, *top)?,
        Command::Leaders { predictions, .. } => leaders(&mut ctx, predictions.as_deref())?,
        Command::Represent { repr, .. } => represent(&mut ctx, repr)?,
        Command::Cluster { repr, .. } => cluster(&mut ctx, repr)?,
        Command::Train { .. } => train(&mut ctx)?,
        Command::Ablate { .. } => ablate(&mut ctx)?,
        Command::Analyze {
            term,
            top_hashtags,
            predictions,
        } => analyze(&mut ctx, term, *top_hashtags, predictions.as_deref())?,
        Command::Export {
            semantics,
            format,
            lcc,
            predictions,
        } => export(&mut ctx, (*semantics).into(), *format, *lcc, predictions.as_deref())?,
        Command::Synth { .. } => synth(&mut ctx)?,
        Command::Replay { .. } => return Err(Error::Config("a manifest cannot replay a replay".into())),
    };
    ctx.finish(name, argv, &report)
}

fn jsonl_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn ingest(ctx: &mut Context) -> Result<Value> {
    let (corpus, summary) = ctx.corpus_with_errors()?;
    let filter = ctx.cfg.filter_config();
    let echo = corpus.extract_echo_tweets();
    let keep = filter_echo_users(&echo, &filter);
    let mut kept = corpus.restrict_to_users(&keep);
    if let Some(max) = filter.max_timeline {
        kept = kept.truncate_timelines(max);
    }
    let tweets = jsonl_bytes(|b| write_tweets(b, kept.tweets()))?;
    ctx.out.write_bytes("tweets.jsonl", &tweets)?;
    let users: Vec<_> = kept.user_records().cloned().collect();
    ctx.out.write_bytes("users.jsonl", &jsonl_bytes(|b| write_users(b, &users))?)?;
    let mut labeled = 0;
    if let Some(labels) = ctx.optional_labels()? {
        let labels: Labeling = labels.into_iter().filter(|(u, _)| keep.contains(u)).collect();
        labeled = labels.len();
        ctx.out.write_bytes("labels.csv", &jsonl_bytes(|b| write_labels(b, &labels))?)?;
    }
    let errors: Vec<&RecordError> = summary.tweet_errors.iter().chain(&summary.user_errors).collect();
    ctx.out.write_jsonl("ingest_errors.jsonl", &errors)?;
    Ok(json!({
        "tweet_lines": summary.tweet_lines,
        "tweets_loaded": summary.tweets_loaded,
        "tweet_errors": summary.tweet_errors.len(),
        "user_lines": summary.user_lines,
        "users_loaded": summary.users_loaded,
        "user_errors": summary.user_errors.len(),
        "first_errors": errors.iter().take(MAX_REPORTED_ERRORS).collect::<Vec<_>>(),
        "echo_tweets": echo.len(),
        "echo_users": keep.len(),
        "kept_tweets": kept.len(),
        "kept_user_records": users.len(),
        "labeled_users": labeled,
        "min_echo_uses": filter.min_echo_uses,
        "language": filter.language,
    }))
}

fn lex(ctx: &mut Context) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let mut rows = Vec::new();
    let mut by_variant: BTreeMap<String, usize> = BTreeMap::new();
    let mut terms: BTreeMap<String, usize> = BTreeMap::new();
    let mut with_echo = 0;
    for t in corpus.tweets() {
        let spans = scan_echoes(&t.text);
        with_echo += usize::from(!spans.is_empty());
        for s in spans {
            let term = normalize_term(&s);
            let variant = serde_json::to_value(s.variant)?;
            *by_variant.entry(variant.as_str().unwrap_or_default().to_owned()).or_default() += 1;
            *terms.entry(term.clone()).or_default() += 1;
            rows.push(json!({
                "tweet_id": t.tweet_id,
                "author_id": t.author_id,
                "start": s.start,
                "end": s.end,
                "variant": variant,
                "open_len": s.open_len,
                "close_len": s.close_len,
                "inner": s.inner,
                "term": term,
            }));
        }
    }
    ctx.out.write_jsonl("lex_spans.jsonl", &rows)?;
    let mut top: Vec<(String, usize)> = terms.into_iter().collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    top.truncate(20);
    Ok(json!({
        "tweets": corpus.len(),
        "tweets_with_echo": with_echo,
        "spans": rows.len(),
        "by_variant": by_variant,
        "top_terms": top,
    }))
}

fn network(ctx: &mut Context) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let mut rows = Vec::new();
    for &sem in &ctx.cfg.network.semantics {
        let g = ctx.graph(&corpus, sem)?;
        let mut csv = String::from("source,target,count\n");
        for (s, t, w) in g.edges() {
            csv.push_str(&format!("{},{},{w}\n", csv_field(s), csv_field(t)));
        }
        let file = format!("network_{sem}.csv");
        ctx.out.write_bytes(&file, csv.as_bytes())?;
        rows.push(json!({
            "semantics": sem,
            "delta": g.delta(),
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "singletons": g.singleton_count(),
            "file": file,
        }));
    }
    Ok(Value::Array(rows))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn stats(ctx: &mut Context) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let mut rows = Vec::new();
    for &sem in &ctx.cfg.network.semantics {
        let g = ctx.graph(&corpus, sem)?;
        let mut row = json!({"semantics": sem, "delta": g.delta()});
        if g.edge_count() == 0 {
            row["stats"] = Value::Null;
            row["error"] = json!("no edges at this threshold");
        } else {
            row["stats"] = json!(network_stats(&g)?);
        }
        rows.push(row);
    }
    Ok(Value::Array(rows))
}

fn centrality(ctx: &mut Context, measures: &[crate::MeasureArg], top: Option<usize>) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let measures: Vec<Measure> = if measures.is_empty() {
        Measure::ALL.to_vec()
    } else {
        measures.iter().map(|&m| m.into()).collect()
    };
    let opts = ctx.cfg.centrality_options();
    let mut rows = Vec::new();
    for &sem in &ctx.cfg.network.semantics {
        let g = ctx.graph(&corpus, sem)?;
        for &m in &measures {
            let mut row = json!({"semantics": sem, "measure": m.as_str(), "weighted": opts.weighted});
            match centrality_with(&g, m, opts) {
                Ok(r) => {
                    let mut scores: Vec<(String, f64)> = r.scores.into_iter().collect();
                    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                    if let Some(n) = top {
                        scores.truncate(n);
                    }
                    row["scores"] = json!(scores
                        .into_iter()
                        .map(|(u, s)| json!({"user_id": u, "score": s}))
                        .collect::<Vec<_>>());
                }
                // A measure that has no answer on this graph is reported, not fatal.
                Err(e @ Error::Convergence { .. }) => {
                    log::warn!("{sem}/{m}: {e}");
                    row["error"] = json!(e.to_string());
                }
                Err(e) => return Err(e),
            }
            rows.push(row);
        }
    }
    Ok(Value::Array(rows))
}

fn generalized_for(ctx: &Context, corpus: &Corpus, k: usize) -> Result<echonet::graph::GeneralizedCentrality> {
    let graphs = ctx
        .cfg
        .network
        .semantics
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|&s| ctx.graph(corpus, s))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&EngagementGraph> = graphs.iter().collect();
    generalized_centrality(&refs, k, ctx.cfg.centrality_options())
}

fn predicted_name(hm: bool) -> &'static str {
    if hm {
        "HM"
    } else {
        "R+N"
    }
}

fn leaders(ctx: &mut Context, predictions: Option<&Path>) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let predicted = predictions.map(|p| ctx.predictions(p)).transpose()?;
    let gc = generalized_for(ctx, &corpus, ctx.cfg.leaders.k)?;
    let mut rows = Vec::new();
    let mut rank = 0;
    let mut previous = None;
    for (i, (user, score)) in gc.scores.iter().enumerate() {
        // Competition ranking: tied users share the rank of the first of them.
        if previous != Some(*score) {
            rank = i + 1;
            previous = Some(*score);
        }
        let record = corpus.user(user);
        let pairs: Vec<String> = gc
            .membership
            .get(user)
            .map(|v| v.iter().map(|(s, m)| format!("{s}/{m}")).collect())
            .unwrap_or_default();
        rows.push(json!({
            "rank": rank,
            "user_id": user,
            "handle": record.map(|r| r.handle.as_str()),
            "score": score,
            "pairs": pairs,
            "suspended": record.and_then(|r| r.suspended),
            "predicted": predicted.as_ref().and_then(|p| p.get(user)).map(|&hm| predicted_name(hm)),
            "label": record.and_then(|r| r.label).map(|l| l.as_str()),
        }));
    }
    Ok(json!({
        "top_k": gc.top_k,
        "semantics": ctx.cfg.network.semantics,
        "weighted": ctx.cfg.network.weighted,
        "leaders": rows,
        "skipped": gc.skipped,
    }))
}

type Representations = BTreeMap<ReprKind, Vec<UserVector>>;

/// Representations of `users`; the topic model is fitted on every author's document.
fn representations(
    ctx: &mut Context,
    corpus: &Corpus,
    users: &[&str],
    kinds: &[ReprKind],
) -> Result<(Representations, Option<TopicModel>)> {
    let mut out = BTreeMap::new();
    let docs: BTreeMap<&str, Vec<String>> = corpus.authors().map(|u| (u, user_document(corpus, u))).collect();
    let empty = Vec::new();
    let doc = |u: &str| docs.get(u).unwrap_or(&empty);
    if kinds.contains(&ReprKind::Embd) {
        let path = ctx.input(ctx.cfg.paths.embeddings.as_ref(), "embeddings")?;
        let table = EmbeddingTable::read_path(&path)?;
        out.insert(ReprKind::Embd, users.iter().map(|u| embed_user(u, doc(u), &table)).collect());
    }
    let mut model = None;
    if kinds.iter().any(|k| matches!(k, ReprKind::TmS | ReprKind::TmF)) {
        let all: Vec<Vec<String>> = docs.values().cloned().collect();
        let tm = fit_topic_model(&all, &ctx.cfg.lda_config())?;
        let inf = ctx.cfg.inference_config();
        let full: Vec<UserVector> = users.iter().map(|u| infer_topics(u, doc(u), &tm, inf)).collect();
        if kinds.contains(&ReprKind::TmS) {
            out.insert(ReprKind::TmS, full.iter().map(salient_topic).collect());
        }
        if kinds.contains(&ReprKind::TmF) {
            out.insert(ReprKind::TmF, full);
        }
        model = Some(tm);
    }
    Ok((out, model))
}

/// Requested kinds, or all of them with EMBD only when embeddings are configured.
fn repr_kinds(ctx: &Context, requested: &[crate::ReprArg]) -> Vec<ReprKind> {
    if requested.is_empty() {
        ReprKind::ALL
            .into_iter()
            .filter(|&k| k != ReprKind::Embd || ctx.cfg.paths.embeddings.is_some())
            .collect()
    } else {
        requested.iter().map(|&r| r.into()).collect::<BTreeSet<_>>().into_iter().collect()
    }
}

fn represent(ctx: &mut Context, requested: &[crate::ReprArg]) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let kinds = repr_kinds(ctx, requested);
    let users: Vec<&str> = corpus.authors().collect::<BTreeSet<_>>().into_iter().collect();
    let (reprs, model) = representations(ctx, &corpus, &users, &kinds)?;
    let mut rows = Vec::new();
    for (kind, vectors) in &reprs {
        let file = format!("represent_{}.jsonl", kind.as_str());
        ctx.out.write_jsonl(&file, vectors)?;
        rows.push(json!({
            "kind": kind,
            "users": vectors.len(),
            "dim": vectors.first().map_or(0, |v| v.values.len()),
            "fallbacks": vectors.iter().filter(|v| v.note.is_some()).count(),
            "file": file,
        }));
    }
    let mut report = json!({"representations": rows});
    if let Some(tm) = model {
        ctx.out.write_bytes("topic_model.json", tm.to_json()?.as_bytes())?;
        report["topics"] = json!({
            "k": tm.k,
            "vocabulary": tm.vocab.len(),
            "final_log_likelihood": tm.log_likelihood.last(),
        });
    }
    Ok(report)
}

fn cluster(ctx: &mut Context, requested: &[crate::ReprArg]) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let gold = ctx.labels()?;
    let kinds = repr_kinds(ctx, requested);
    let authors: BTreeSet<&str> = corpus.authors().collect();
    let users: Vec<&str> = gold.keys().map(String::as_str).filter(|u| authors.contains(u)).collect();
    if users.len() < 3 {
        return Err(Error::Data(format!("{} labeled users have tweets; need at least 3", users.len())));
    }
    let gold2 = collapse_gold(&gold, GoldScheme::TwoClass);
    let gold3 = collapse_gold(&gold, GoldScheme::ThreeClass);
    let (reprs, _) = representations(ctx, &corpus, &users, &kinds)?;
    let mut rows = Vec::new();
    for (kind, vectors) in &reprs {
        let two = cluster_users(vectors, &ctx.cfg.cluster_config(2))?;
        let three = cluster_users(vectors, &ctx.cfg.cluster_config(3))?;
        let clusters: BTreeMap<String, [usize; 2]> = users
            .iter()
            .map(|&u| (u.to_owned(), [two.clusters[u], three.clusters[u]]))
            .collect();
        ctx.out.write_json(&format!("clusters_{}.json", kind.as_str()), &clusters)?;
        rows.push(json!({
            "MODEL": kind,
            "RI²": rand_index_on_gold(&two, &gold2)?,
            "RI³": rand_index_on_gold(&three, &gold3)?,
            "inertia_2": two.inertia,
            "inertia_3": three.inertia,
        }));
    }
    Ok(json!({"users": users.len(), "standardize": ctx.cfg.cluster.standardize, "rows": rows}))
}

fn train(ctx: &mut Context) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let gold = ctx.labels()?;
    let stream = ctx.cfg.stream(&ctx.cfg.fusion.stream)?;
    let trainer = ctx.cfg.trainer();
    let eval = ctx.cfg.eval_config();
    let pipeline = FittedPipeline::fit(&corpus, &gold, &stream, trainer.as_ref(), &eval)?;
    let predictions = pipeline.predict(&corpus, eval.threshold)?;
    ctx.out.write_jsonl("predictions.jsonl", &predictions)?;
    let scorer = match &pipeline.scorer {
        ScorerHandle::InProcess(s) => serde_json::from_str::<Value>(&s.to_json()?)?,
        ScorerHandle::External(_) => json!({"program": ctx.cfg.scorer.program, "args": ctx.cfg.scorer.args}),
    };
    ctx.out.write_json(
        "model.json",
        &json!({
            "stream": pipeline.stream,
            "semantics": pipeline.semantics,
            "transport": pipeline.scorer.transport(),
            "protocol": pipeline.scorer.protocol(),
            "scorer": scorer,
            "classifier": pipeline.classifier,
            "scaler": pipeline.scaler,
        }),
    )?;
    let gold_hits = predictions
        .iter()
        .filter_map(|p| gold.get(&p.user_id).map(|l| l.is_hate() == p.hm))
        .collect::<Vec<bool>>();
    Ok(json!({
        "stream": stream.to_string(),
        "classifier": eval.classifier.kind,
        "transport": pipeline.scorer.transport(),
        "users_predicted": predictions.len(),
        "predicted_hm": predictions.iter().filter(|p| p.hm).count(),
        "gold_users": gold.len(),
        "in_sample_accuracy": gold_hits.iter().filter(|&&h| h).count() as f64 / gold_hits.len().max(1) as f64,
        "threshold": eval.threshold,
    }))
}

fn ablate(ctx: &mut Context) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let gold = ctx.labels()?;
    let rows = ctx
        .cfg
        .fusion
        .ablation
        .iter()
        .map(|s| ctx.cfg.stream(s))
        .collect::<Result<Vec<_>>>()?;
    let trainer = ctx.cfg.trainer();
    let ev = evaluate(&corpus, &gold, &rows, trainer.as_ref(), &ctx.cfg.eval_config())?;
    ctx.out.write_json("ablate_folds.json", &ev.reports)?;
    let table: Vec<Value> = ev
        .reports
        .iter()
        .map(|r| {
            json!({
                "Configuration": r.config,
                "Precision": r.precision,
                "Recall": r.recall,
                "F1": r.f1,
                "AUC": r.auc,
            })
        })
        .collect();
    Ok(json!({
        "folds": ctx.cfg.fusion.folds,
        "classifier": ctx.cfg.fusion.classifier,
        "rows": table,
        "leak_free": ev.leak_free(),
        "audit": ev.audit,
    }))
}

fn find<'g>(groups: &'g [Group], name: &str) -> Result<&'g Group> {
    groups
        .iter()
        .find(|g| g.name == name)
        .ok_or_else(|| Error::Data(format!("no {name} group")))
}

fn analyze(ctx: &mut Context, terms: &[String], n_hashtags: usize, predictions: Option<&Path>) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let (source, groups) = match predictions {
        Some(p) => ("predicted", predicted_groups(&ctx.predictions(p)?)),
        None => ("gold", label_groups(&ctx.labels()?)),
    };
    let as_of = corpus_end(&corpus).ok_or_else(|| Error::Data("corpus has no tweets".into()))?;
    let stats = group_stats(&corpus, &groups, as_of);
    let (hm, rest) = (find(&groups, "HM")?, find(&groups, "R+N")?);
    let odds = terms
        .iter()
        .map(|t| term_odds(&corpus, hm, rest, t, DEFAULT_SMOOTHING))
        .collect::<Result<Vec<_>>>()?;
    let hashtags: BTreeMap<&str, Vec<(String, usize)>> = groups
        .iter()
        .map(|g| (g.name.as_str(), top_hashtags(&corpus, g, n_hashtags)))
        .collect();
    let mut report = json!({
        "groups_from": source,
        "as_of": as_of.to_rfc3339(),
        "group_stats": stats,
        "term_odds": odds,
        "top_hashtags": hashtags,
    });
    if let Some(path) = ctx.optional_input(ctx.cfg.paths.ira_handles.as_ref(), "ira-handles")? {
        let text = std::fs::read_to_string(&path)?;
        let handles: BTreeSet<String> = text.lines().map(str::to_owned).collect();
        report["ira"] = json!(ira_engagement(&corpus, &groups, &handles)?);
    }
    Ok(report)
}

fn export(
    ctx: &mut Context,
    sem: Semantics,
    format: GraphFormat,
    lcc: bool,
    predictions: Option<&Path>,
) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let mut g = ctx.graph(&corpus, sem)?;
    if lcc {
        g = largest_connected_component(&g);
    }
    let predicted = predictions.map(|p| ctx.predictions(p)).transpose()?;
    let gc = generalized_for(ctx, &corpus, ctx.cfg.leaders.k)?;
    let attrs: BTreeMap<String, NodeAttributes> = g
        .nodes()
        .iter()
        .map(|u| {
            let a = NodeAttributes {
                label: corpus.user(u).and_then(|r| r.label).map(|l| l.as_str().to_owned()),
                predicted: predicted
                    .as_ref()
                    .and_then(|p| p.get(u))
                    .map(|&hm| predicted_name(hm).to_owned()),
                generalized: Some(gc.score(u)),
            };
            (u.clone(), a)
        })
        .collect();
    let (file, body) = match format {
        GraphFormat::Graphml => (format!("network_{sem}.graphml"), to_graphml(&g, &attrs)),
        GraphFormat::Dot => (format!("network_{sem}.dot"), to_dot(&g, &attrs)),
    };
    ctx.out.write_bytes(&file, body.as_bytes())?;
    Ok(json!({
        "semantics": sem,
        "largest_component_only": lcc,
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "file": file,
    }))
}

fn synth(ctx: &mut Context) -> Result<Value> {
    let s = &ctx.cfg.synth;
    let cfg = SynthConfig {
        n_users: s.users,
        hm_fraction: s.hm_fraction,
        marker_rate_hm: s.marker_rate_hm,
        marker_rate_other: s.marker_rate_other,
        seed: ctx.cfg.seed,
        ..SynthConfig::default()
    };
    let data = planted_corpus(&cfg)?;
    ctx.out.write_bytes("tweets.jsonl", &jsonl_bytes(|b| write_tweets(b, data.corpus.tweets()))?)?;
    let users: Vec<_> = data.corpus.user_records().cloned().collect();
    ctx.out.write_bytes("users.jsonl", &jsonl_bytes(|b| write_users(b, &users))?)?;
    ctx.out.write_bytes("labels.csv", &jsonl_bytes(|b| write_labels(b, &data.labels))?)?;
    Ok(json!({
        "users": users.len(),
        "tweets": data.corpus.len(),
        "hm_users": data.labels.values().filter(|l| l.is_hate()).count(),
        "labeled_users": data.labels.len(),
        "seed": cfg.seed,
        "marker": cfg.marker,
    }))
}
