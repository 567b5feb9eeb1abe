//! Precomputed contextual token vectors keyed by sentence id.
//!
//! The container is a text index followed by a binary payload:
//!
//! ```text
//! SGCTX 1
//! dim <d>
//! count <k>
//! <sent_id>\t<rows>        (k lines)
//! <k blocks of rows * d little-endian f32 values, in index order>
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

const MAGIC: &str = "SGCTX 1";

/// Per-sentence matrices of shape tokens × dim.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContextualStore {
    dim: usize,
    order: Vec<String>,
    vectors: HashMap<String, Array2<f64>>,
}

impl ContextualStore {
    pub fn new(dim: usize) -> Self {
        ContextualStore {
            dim,
            order: Vec::new(),
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn insert(&mut self, sent_id: impl Into<String>, matrix: Array2<f64>) -> Result<()> {
        let sent_id = sent_id.into();
        if matrix.ncols() != self.dim {
            return Err(Error::InconsistentDim {
                expected: self.dim,
                found: matrix.ncols(),
            });
        }
        if sent_id.is_empty() || sent_id.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidSentence {
                sent_id,
                reason: "sent_id cannot be stored in a contextual index".to_owned(),
            });
        }
        if self.vectors.insert(sent_id.clone(), matrix).is_none() {
            self.order.push(sent_id);
        }
        Ok(())
    }

    /// Vectors of a sentence, checked against its token count.
    pub fn lookup(&self, sent_id: &str, tokens: usize) -> Result<&Array2<f64>> {
        let matrix = self
            .vectors
            .get(sent_id)
            .ok_or_else(|| Error::MissingContext(sent_id.to_owned()))?;
        if matrix.nrows() != tokens {
            return Err(Error::DimensionMismatch(format!(
                "contextual vectors for '{}' have {} rows, sentence has {} tokens",
                sent_id,
                matrix.nrows(),
                tokens
            )));
        }
        Ok(matrix)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{}\ndim {}\ncount {}\n", MAGIC, self.dim, self.order.len()).into_bytes();
        for id in &self.order {
            out.extend(format!("{}\t{}\n", id, self.vectors[id].nrows()).into_bytes());
        }
        for id in &self.order {
            for &v in self.vectors[id].iter() {
                out.extend((v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut pos = 0;
        let mut line_no = 0;
        let mut next_line = || -> Result<(usize, String)> {
            let rest = &bytes[pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::parse(path, line_no + 1, "truncated index"))?;
            let line = std::str::from_utf8(&rest[..end])
                .map_err(|_| Error::parse(path, line_no + 1, "index is not UTF-8"))?
                .to_owned();
            pos += end + 1;
            line_no += 1;
            Ok((line_no, line))
        };

        let (n, magic) = next_line()?;
        if magic != MAGIC {
            return Err(Error::parse(path, n, "not a contextual vector store"));
        }
        let mut header_value = |key: &str| -> Result<usize> {
            let (n, line) = next_line()?;
            line.strip_prefix(key)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::parse(path, n, format!("expected '{} <number>'", key)))
        };
        let dim = header_value("dim")?;
        let count = header_value("count")?;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next_line()?;
            let (id, rows) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, n, "expected '<sent_id>\\t<rows>'"))?;
            let rows: usize = rows
                .parse()
                .map_err(|_| Error::parse(path, n, format!("invalid row count '{}'", rows)))?;
            entries.push((id.to_owned(), rows));
        }

        let payload = &bytes[pos..];
        let expected: usize = entries.iter().map(|e| e.1 * dim * 4).sum();
        if payload.len() != expected {
            return Err(Error::parse(
                path,
                line_no,
                format!("payload has {} bytes, index describes {}", payload.len(), expected),
            ));
        }
        let mut store = ContextualStore::new(dim);
        let mut values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
        for (id, rows) in entries {
            let data: Vec<f64> = values.by_ref().take(rows * dim).collect();
            let matrix = Array2::from_shape_vec((rows, dim), data).expect("payload length checked");
            if store.vectors.contains_key(&id) {
                return Err(Error::parse(path, 0, format!("duplicate sent_id '{}'", id)));
            }
            store.insert(id, matrix)?;
        }
        Ok(store)
    }
}

pub fn load_contextual_vectors(path: impl AsRef<Path>) -> Result<ContextualStore> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ContextualStore::from_bytes(&bytes, path)
}

pub fn write_contextual_vectors(store: &ContextualStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, store.to_bytes()).map_err(|e| Error::io(path, e))
}
