use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Pretrained word vectors in the plain text format: `word v1 v2 ... vD` per
/// line, optionally preceded by a `count dim` header line.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub const DEFAULT_DIM: usize = 300;

    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(Error::Data(format!(
                "vector for {word:?} has length {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("vector for {word:?} has non-finite entries")));
        }
        self.vectors.insert(word, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if line_no == 1 && rest.len() == 1 && word.parse::<usize>().is_ok() {
                if let Ok(dim) = rest[0].parse::<usize>() {
                    table = Some(EmbeddingTable::new(dim));
                    continue;
                }
            }
            let vector = rest
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Schema {
                    line: line_no,
                    message: format!("bad vector entry: {e}"),
                })?;
            let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
            t.insert(word, vector).map_err(|e| Error::Schema {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        table.ok_or_else(|| Error::Data("embedding file is empty".into()))
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}
