//! The native reference scorer served over the `plm/1` protocol on standard
//! input and output.
//!
//! Usage: echonet-ref-scorer [--model PATH] [--shuffle SEED] [--fault KIND]
//!
//! `--shuffle` holds responses until eof and emits them in a seeded random
//! order. `--fault` injects a protocol violation for transport testing:
//! duplicate, out-of-range, garbage, missing, silent, crash.

use std::io::{self, BufRead, BufWriter, Write};
use std::process::ExitCode;

use echonet::fusion::protocol::{self, ClientMessage, Handshake, Response};
use echonet::fusion::{LabeledPost, LogisticParams, ReferenceScorer};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Clone, Copy, PartialEq)]
enum Fault {
    Duplicate,
    OutOfRange,
    Garbage,
    Missing,
    Silent,
    Crash,
}

struct Options {
    model: Option<String>,
    shuffle: Option<u64>,
    fault: Option<Fault>,
}

fn parse_args() -> Result<Options, String> {
    let mut opts = Options {
        model: None,
        shuffle: None,
        fault: None,
    };
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or_else(|| format!("{flag} needs a value"));
        match flag.as_str() {
            "--model" => opts.model = Some(value()?),
            "--shuffle" => opts.shuffle = Some(value()?.parse().map_err(|e| format!("--shuffle: {e}"))?),
            "--fault" => {
                opts.fault = Some(match value()?.as_str() {
                    "duplicate" => Fault::Duplicate,
                    "out-of-range" => Fault::OutOfRange,
                    "garbage" => Fault::Garbage,
                    "missing" => Fault::Missing,
                    "silent" => Fault::Silent,
                    "crash" => Fault::Crash,
                    other => return Err(format!("unknown fault {other:?}")),
                })
            }
            other => return Err(format!("unknown argument {other:?}")),
        }
    }
    Ok(opts)
}

fn emit(out: &mut impl Write, value: impl serde::Serialize) -> io::Result<()> {
    serde_json::to_writer(&mut *out, &value)?;
    out.write_all(b"\n")?;
    out.flush()
}

fn run(opts: Options) -> io::Result<ExitCode> {
    let mut scorer = match &opts.model {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(ReferenceScorer::from_json(&text).map_err(|e| io::Error::other(e.to_string()))?)
        }
        None => None,
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    emit(&mut out, Handshake::scorer())?;
    if opts.fault == Some(Fault::Silent) {
        // Swallow everything and never answer.
        for _ in io::stdin().lock().lines() {}
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }

    let mut training: Vec<LabeledPost> = Vec::new();
    let mut held: Vec<Response> = Vec::new();
    let mut answered = 0usize;
    for line in io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match protocol::parse_client(&line) {
            Err(reason) => emit(&mut out, json!({"id": null, "error": reason}))?,
            Ok(ClientMessage::Eof) => break,
            Ok(ClientMessage::Train) => {
                match ReferenceScorer::train(&training, &LogisticParams::default()) {
                    Ok(s) => scorer = Some(s),
                    Err(e) => emit(&mut out, json!({"id": null, "error": e.to_string()}))?,
                }
                training.clear();
            }
            Ok(ClientMessage::Request(req)) => {
                if let Some(label) = req.label {
                    training.push(LabeledPost {
                        tweet_id: req.id.to_string(),
                        text: req.text,
                        label,
                    });
                    continue;
                }
                let Some(s) = &scorer else {
                    emit(&mut out, json!({"id": req.id, "error": "scorer is not trained"}))?;
                    continue;
                };
                let mut resp = Response {
                    id: req.id,
                    score: s.score(&req.text),
                };
                answered += 1;
                match opts.fault {
                    Some(Fault::Crash) if answered == 2 => return Ok(ExitCode::from(3)),
                    Some(Fault::Missing) if answered == 1 => continue,
                    Some(Fault::OutOfRange) => resp.score = 1.5,
                    Some(Fault::Garbage) if answered == 1 => {
                        writeln!(out, "this is not json")?;
                        out.flush()?;
                        continue;
                    }
                    Some(Fault::Duplicate) if answered == 1 => held.push(resp.clone()),
                    _ => {}
                }
                if opts.shuffle.is_some() {
                    held.push(resp);
                } else {
                    emit(&mut out, resp)?;
                }
            }
        }
    }
    if let Some(seed) = opts.shuffle {
        held.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    for r in held {
        emit(&mut out, r)?;
    }
    writeln!(out, "{}", protocol::eof_line())?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let opts = match parse_args() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("echonet-ref-scorer: {e}");
            return ExitCode::from(2);
        }
    };
    match run(opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("echonet-ref-scorer: {e}");
            ExitCode::FAILURE
        }
    }
}
