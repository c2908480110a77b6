//! Engagement networks, echo-meme lexing and multi-modal user classification
//! for corpora built around the triple-parenthesis meme.

pub mod analysis;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod fusion;
pub mod graph;
pub mod lexer;
pub mod repr;
pub mod synth;

pub use error::{Error, Result};
