//! Plain-text word embeddings: an optional `count dim` header line, then
//! one word followed by `dim` numbers per line.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use log::warn;
use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Pretrained word vectors with a fixed dimensionality.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
    /// Lines dropped as malformed, of the wrong length or duplicated.
    pub skipped: usize,
}

impl EmbeddingTable {
    /// Build a table from words and a matching row matrix.
    pub fn new(words: Vec<String>, vectors: Array2<f64>) -> Result<Self> {
        if words.len() != vectors.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} words but {} vectors",
                words.len(),
                vectors.nrows()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch(
                "embedding table contains non-finite values".to_owned(),
            ));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DimensionMismatch(format!("duplicate word '{}'", w)));
            }
        }
        Ok(EmbeddingTable {
            words,
            index,
            vectors,
            skipped: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.index.get(word).map(|&i| self.vectors.row(i))
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let count = parts.next()?.parse().ok()?;
    let dim = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some((count, dim))
}

/// Parse embedding text.
pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().peekable();
    let mut dim = lines.peek().and_then(|l| parse_header(l)).map(|(_, d)| d);
    if dim.is_some() {
        lines.next();
    }

    let mut words = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut skipped = 0;
    let mut first_bad_dim = None;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line has a first field");
        let row: Option<Vec<f64>> = parts.map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        let Some(row) = row else {
            skipped += 1;
            continue;
        };
        let expected = *dim.get_or_insert(row.len());
        if row.len() != expected || expected == 0 {
            first_bad_dim.get_or_insert(row.len());
            skipped += 1;
            continue;
        }
        if !seen.insert(word.to_owned()) {
            skipped += 1;
            continue;
        }
        words.push(word.to_owned());
        values.extend(row);
    }

    if words.is_empty() {
        return match (dim, first_bad_dim) {
            (Some(expected), Some(found)) => Err(Error::InconsistentDim { expected, found }),
            _ => Err(Error::EmptyTable),
        };
    }
    if skipped > 0 {
        warn!("skipped {} malformed embedding lines", skipped);
    }
    let dim = dim.expect("dimension is known once a row is accepted");
    let vectors = Array2::from_shape_vec((words.len(), dim), values).expect("rows have uniform length");
    let mut table = EmbeddingTable::new(words, vectors)?;
    table.skipped = skipped;
    Ok(table)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text)
}
