//! Child-process transport for the `plm/1` scorer protocol.
//!
//! Each scoring call is one session: spawn, read the handshake, stream any
//! training lines plus `train`, stream requests and `eof`, then collect
//! responses until the scorer's `eof`. Requests are numbered by input
//! position so responses can arrive in any order.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::protocol::{self, Request, ServerMessage};
use super::reference::LabeledPost;
use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Tail of the scorer's standard error kept for diagnostics.
const STDERR_TAIL: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScorer {
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    /// Per-batch deadline.
    #[serde(with = "secs", default = "default_timeout")]
    pub timeout: Duration,
    /// Sent before every batch, followed by `{"train":true}`.
    #[serde(skip)]
    pub training: Vec<LabeledPost>,
}

fn default_timeout() -> Duration {
    DEFAULT_TIMEOUT
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

struct Session {
    child: Child,
    lines: mpsc::Receiver<io::Result<String>>,
    stderr: Option<thread::JoinHandle<String>>,
    writer: Option<thread::JoinHandle<io::Result<()>>>,
    deadline: Instant,
    started: Instant,
}

impl Session {
    fn stderr_tail(&mut self) -> String {
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.stderr
            .take()
            .and_then(|h| h.join().ok())
            .unwrap_or_default()
    }

    fn fail(&mut self, message: String, line: Option<&str>) -> Error {
        let tail = self.stderr_tail();
        let message = if tail.trim().is_empty() {
            message
        } else {
            format!("{message}; scorer stderr: {}", tail.trim())
        };
        Error::scorer(message, line)
    }

    fn next_line(&mut self, pending: usize) -> Result<String> {
        let wait = self.deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(self.fail(format!("reading scorer output: {e}"), None)),
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                let _ = self.child.wait();
                Err(Error::Timeout {
                    seconds: self.started.elapsed().as_secs_f64(),
                    pending,
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(self.fail("scorer closed its output before eof".into(), None))
            }
        }
    }

    /// Wait for a clean exit after eof; kill the child at the deadline.
    fn finish(mut self) -> Result<()> {
        loop {
            if let Some(status) = self.child.try_wait()? {
                if let Some(w) = self.writer.take() {
                    let _ = w.join();
                }
                if !status.success() {
                    return Err(self.fail(format!("scorer exited with {status}"), None));
                }
                return Ok(());
            }
            if Instant::now() >= self.deadline {
                let _ = self.child.kill();
                let _ = self.child.wait();
                return Err(Error::Timeout {
                    seconds: self.started.elapsed().as_secs_f64(),
                    pending: 0,
                });
            }
            thread::sleep(Duration::from_millis(5));
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

impl ExternalScorer {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            timeout: DEFAULT_TIMEOUT,
            training: Vec::new(),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_training(mut self, posts: Vec<LabeledPost>) -> Self {
        self.training = posts;
        self
    }

    fn outgoing(&self, texts: &[&str]) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(self.training.len() + texts.len() + 2);
        if !self.training.is_empty() {
            for (i, p) in self.training.iter().enumerate() {
                out.push(serde_json::to_string(&Request {
                    id: i as u64,
                    text: p.text.clone(),
                    label: Some(p.label),
                })?);
            }
            out.push(protocol::train_line());
        }
        for (i, t) in texts.iter().enumerate() {
            out.push(serde_json::to_string(&Request {
                id: i as u64,
                text: (*t).to_owned(),
                label: None,
            })?);
        }
        out.push(protocol::eof_line());
        Ok(out)
    }

    fn spawn(&self, outgoing: Vec<String>) -> Result<Session> {
        let started = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| {
                Error::scorer(format!("cannot start {}: {e}", self.program.display()), None)
            })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take().expect("piped stdin");
        let stderr = child.stderr.take().expect("piped stderr");

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = BufReader::new(stderr).read_to_end(&mut buf);
            let start = buf.len().saturating_sub(STDERR_TAIL);
            String::from_utf8_lossy(&buf[start..]).into_owned()
        });
        // A separate writer keeps a slow reader on the other side from
        // deadlocking us against a full pipe.
        let writer = thread::spawn(move || -> io::Result<()> {
            let mut w = io::BufWriter::new(stdin);
            for line in outgoing {
                w.write_all(line.as_bytes())?;
                w.write_all(b"\n")?;
            }
            w.flush()
        });
        Ok(Session {
            child,
            lines: rx,
            stderr: Some(stderr),
            writer: Some(writer),
            deadline: started + self.timeout,
            started,
        })
    }

    /// Score `texts` in one session; results are aligned with the input.
    pub fn score_posts(&self, texts: &[&str]) -> Result<Vec<f64>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let mut session = self.spawn(self.outgoing(texts)?)?;
        let hello = session.next_line(texts.len())?;
        if let Err(reason) = protocol::parse_handshake(hello.trim()) {
            return Err(session.fail(reason, Some(&hello)));
        }
        let mut scores: Vec<Option<f64>> = vec![None; texts.len()];
        let mut answered = 0usize;
        loop {
            let line = session.next_line(texts.len() - answered)?;
            if line.trim().is_empty() {
                continue;
            }
            match protocol::parse_server(line.trim()) {
                Ok(ServerMessage::Score(r)) => {
                    let slot = match scores.get_mut(r.id as usize) {
                        Some(slot) => slot,
                        None => {
                            return Err(session.fail(format!("unknown response id {}", r.id), Some(&line)))
                        }
                    };
                    if slot.is_some() {
                        return Err(session.fail(format!("duplicate response id {}", r.id), Some(&line)));
                    }
                    if !(0.0..=1.0).contains(&r.score) {
                        return Err(session.fail(format!("score {} outside [0, 1]", r.score), Some(&line)));
                    }
                    *slot = Some(r.score);
                    answered += 1;
                }
                Ok(ServerMessage::Error { message, .. }) => {
                    return Err(session.fail(format!("scorer reported: {message}"), Some(&line)));
                }
                Ok(ServerMessage::Eof) => break,
                Err(reason) => return Err(session.fail(reason, Some(&line))),
            }
        }
        if answered < texts.len() {
            return Err(session.fail(
                format!("eof with {} unanswered requests", texts.len() - answered),
                None,
            ));
        }
        session.finish()?;
        Ok(scores.into_iter().map(|s| s.expect("all answered")).collect())
    }
}
