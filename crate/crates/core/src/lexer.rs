//! Lexer for the triple-parenthesis echo meme.
//!
//! An echo is a run of at least three `(`, a stretch of text without any
//! parenthesis, and a run of at least three `)`. The reversed orthography
//! (`)))term(((`) is recognised as well and must sit on a single line.
//! Runs are always maximal, so `((((x)))))` yields open/close lengths 4/5.

use serde::{Deserialize, Serialize};

/// Minimum number of parentheses on each side of an echo.
pub const MIN_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EchoVariant {
    /// Exactly three parentheses on both sides.
    Standard,
    /// Expressive lengthening: more than three on at least one side.
    Lengthened,
    /// `)))term(((`.
    Reversed,
}

/// One echo occurrence. Offsets are byte offsets into the scanned text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EchoSpan {
    pub start: usize,
    pub end: usize,
    /// Length of the leading run (`(` for standard echoes, `)` for reversed).
    pub open_len: usize,
    /// Length of the trailing run.
    pub close_len: usize,
    /// Enclosed text with surrounding whitespace trimmed.
    pub inner: String,
    pub variant: EchoVariant,
}

impl EchoSpan {
    /// The untrimmed text between the two parenthesis runs.
    pub fn raw_inner<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start + self.open_len..self.end - self.close_len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Open,
    Close,
    Text,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    kind: Piece,
    start: usize,
    end: usize,
}

fn runs(text: &str) -> Vec<Run> {
    let bytes = text.as_bytes();
    let mut out: Vec<Run> = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        let kind = match b {
            b'(' => Piece::Open,
            b')' => Piece::Close,
            _ => Piece::Text,
        };
        match out.last_mut() {
            Some(last) if last.kind == kind => last.end = i + 1,
            _ => out.push(Run {
                kind,
                start: i,
                end: i + 1,
            }),
        }
    }
    out
}

/// Find every echo in `text`, leftmost first, without overlaps.
pub fn scan_echoes(text: &str) -> Vec<EchoSpan> {
    let runs = runs(text);
    let mut spans = Vec::new();
    let mut i = 0;
    while i + 2 < runs.len() {
        let (lead, body, tail) = (runs[i], runs[i + 1], runs[i + 2]);
        let lead_len = lead.end - lead.start;
        let tail_len = tail.end - tail.start;
        let variant = match (lead.kind, tail.kind) {
            (Piece::Open, Piece::Close) => Some(if lead_len == MIN_RUN && tail_len == MIN_RUN {
                EchoVariant::Standard
            } else {
                EchoVariant::Lengthened
            }),
            (Piece::Close, Piece::Open) => Some(EchoVariant::Reversed),
            _ => None,
        };
        let matched = variant.and_then(|variant| {
            if body.kind != Piece::Text || lead_len < MIN_RUN || tail_len < MIN_RUN {
                return None;
            }
            let raw = &text[body.start..body.end];
            let inner = raw.trim();
            if inner.is_empty() || (variant == EchoVariant::Reversed && raw.contains('\n')) {
                return None;
            }
            Some(EchoSpan {
                start: lead.start,
                end: tail.end,
                open_len: lead_len,
                close_len: tail_len,
                inner: inner.to_owned(),
                variant,
            })
        });
        match matched {
            Some(span) => {
                spans.push(span);
                i += 3;
            }
            None => i += 1,
        }
    }
    spans
}

/// True if the text carries at least one echo of any variant.
pub fn has_echo(text: &str) -> bool {
    !scan_echoes(text).is_empty()
}

/// Canonical form of the echoed term, used for frequency counts.
pub fn normalize_term(span: &EchoSpan) -> String {
    let collapsed = span
        .inner
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    collapsed
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_owned()
}
