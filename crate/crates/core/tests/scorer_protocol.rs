//! The `plm/1` transport against the bundled reference scorer binary.

use std::time::{Duration, Instant};

use echonet::fusion::evaluate::scorer_training_posts;
use echonet::fusion::{
    assemble_features, score_corpus, ExternalScorer, ExternalTrainer, LabeledPost, LogisticParams,
    NetworkFeatureTable, ReferenceScorer, ScorerTrainer, StreamConfig, Transport,
};
use echonet::graph::{build_network, NetworkConfig, Semantics};
use echonet::synth::{planted_corpus, SynthConfig};
use echonet::Error;

const BIN: &str = env!("CARGO_BIN_EXE_echonet-ref-scorer");

fn scorer(args: &[&str]) -> ExternalScorer {
    ExternalScorer::new(BIN, args.iter().map(|s| s.to_string()).collect()).with_timeout(Duration::from_secs(30))
}

fn training_posts() -> Vec<LabeledPost> {
    let s = planted_corpus(&SynthConfig { n_users: 80, seed: 3, ..SynthConfig::default() }).unwrap();
    let users: Vec<&str> = s.labels.keys().map(String::as_str).collect();
    scorer_training_posts(&s.corpus, &s.labels, &users)
}

const TEXTS: [&str; 4] = [
    "the hatemarker is here",
    "coffee in the morning",
    "(((them))) again hatemarker",
    "",
];

#[test]
fn protocol_scores_match_in_process_training() {
    let posts = training_posts();
    let local = ReferenceScorer::train(&posts, &LogisticParams::default()).unwrap();
    let remote = scorer(&[]).with_training(posts).score_posts(&TEXTS).unwrap();
    for (text, got) in TEXTS.iter().zip(&remote) {
        let want = local.score(text);
        assert!((got - want).abs() < 1e-12, "{text:?}: {got} vs {want}");
    }
    assert!(remote[0] > 0.5, "marker post should lean positive: {}", remote[0]);
}

#[test]
fn saved_model_is_served() {
    let posts = training_posts();
    let local = ReferenceScorer::train(&posts, &LogisticParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    std::fs::write(&path, local.to_json().unwrap()).unwrap();
    let got = scorer(&["--model", path.to_str().unwrap()]).score_posts(&TEXTS).unwrap();
    assert_eq!(got, local.score_all(&TEXTS));
}

#[test]
fn shuffled_responses_are_realigned() {
    let posts = training_posts();
    let texts: Vec<String> = (0..50).map(|i| format!("post number {i} {}", "hatemarker ".repeat(i % 3))).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let plain = scorer(&[]).with_training(posts.clone()).score_posts(&refs).unwrap();
    let shuffled = scorer(&["--shuffle", "17"]).with_training(posts).score_posts(&refs).unwrap();
    assert_eq!(plain, shuffled);
}

#[test]
fn features_do_not_depend_on_response_order() {
    let s = planted_corpus(&SynthConfig { n_users: 60, seed: 8, ..SynthConfig::default() }).unwrap();
    let users: Vec<&str> = s.labels.keys().map(String::as_str).collect();
    let posts = scorer_training_posts(&s.corpus, &s.labels, &users);
    let ordered = ExternalTrainer { scorer: scorer(&[]) }.train(&posts).unwrap();
    let shuffled = ExternalTrainer { scorer: scorer(&["--shuffle", "99"]) }.train(&posts).unwrap();
    assert_eq!(ordered.transport(), Transport::ExternalProcess);
    let g = build_network(&s.corpus, &NetworkConfig::new(Semantics::Mention)).unwrap();
    let table = NetworkFeatureTable::compute(&g).unwrap();
    let cfg = StreamConfig::new(true, true, true, true).with_sizes(8, 8);
    let a = score_corpus(&ordered, &s.corpus).unwrap();
    let b = score_corpus(&shuffled, &s.corpus).unwrap();
    for u in &users {
        assert_eq!(
            assemble_features(u, &s.corpus, &g, &a, &table, &cfg).unwrap(),
            assemble_features(u, &s.corpus, &g, &b, &table, &cfg).unwrap()
        );
    }
}

#[test]
fn empty_batch_does_not_spawn() {
    let missing = ExternalScorer::new("/nonexistent/scorer", vec![]);
    assert_eq!(missing.score_posts(&[]).unwrap(), Vec::<f64>::new());
    assert!(matches!(missing.score_posts(&["x"]), Err(Error::Scorer { .. })));
}

#[test]
fn untrained_scorer_reports_an_error() {
    match scorer(&[]).score_posts(&TEXTS) {
        Err(Error::Scorer { message, offending_line }) => {
            assert!(message.contains("not trained"), "{message}");
            assert!(offending_line.unwrap().contains("\"id\":0"));
        }
        other => panic!("expected a scorer error, got {other:?}"),
    }
}

fn expect_fault(fault: &str, needle: &str, line_fragment: Option<&str>) {
    let result = scorer(&["--fault", fault]).with_training(training_posts()).score_posts(&TEXTS);
    match result {
        Err(Error::Scorer { message, offending_line }) => {
            assert!(message.contains(needle), "{fault}: {message}");
            match line_fragment {
                Some(frag) => assert!(offending_line.as_deref().unwrap_or("").contains(frag), "{fault}: {offending_line:?}"),
                None => assert!(offending_line.is_none(), "{fault}: {offending_line:?}"),
            }
        }
        other => panic!("{fault}: expected a scorer error, got {other:?}"),
    }
}

#[test]
fn duplicate_response_is_rejected() {
    expect_fault("duplicate", "duplicate response id 0", Some("\"id\":0"));
}

#[test]
fn out_of_range_score_is_rejected() {
    expect_fault("out-of-range", "outside [0, 1]", Some("1.5"));
}

#[test]
fn garbage_line_is_rejected() {
    expect_fault("garbage", "", Some("this is not json"));
}

#[test]
fn missing_response_is_rejected() {
    expect_fault("missing", "1 unanswered", None);
}

#[test]
fn crashing_scorer_is_reported() {
    let result = scorer(&["--fault", "crash"]).with_training(training_posts()).score_posts(&TEXTS);
    assert!(matches!(result, Err(Error::Scorer { .. })), "{result:?}");
}

#[test]
fn silent_scorer_times_out() {
    let start = Instant::now();
    let result = scorer(&["--fault", "silent"]).with_timeout(Duration::from_millis(500)).score_posts(&TEXTS);
    match result {
        Err(Error::Timeout { pending, .. }) => assert_eq!(pending, TEXTS.len()),
        other => panic!("expected a timeout, got {other:?}"),
    }
    assert!(start.elapsed() < Duration::from_secs(10));
}
