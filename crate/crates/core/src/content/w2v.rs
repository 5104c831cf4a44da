use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::l2_normalized;
use super::tfidf::TfidfModel;
use crate::error::{Error, Result};

/// Pretrained word vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WordEmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordEmbeddingTable {
    pub fn new(dim: usize) -> Self {
        WordEmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vec: Vec<f64>) -> Result<()> {
        if vec.len() != self.dim {
            return Err(Error::Data(format!(
                "word vector has dimension {}, table expects {}",
                vec.len(),
                self.dim
            )));
        }
        self.vectors.insert(token.into(), vec);
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

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Fraction of corpus tokens that have a vector.
    pub fn coverage<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> f64 {
        let (mut hit, mut total) = (0usize, 0usize);
        for t in corpus.iter().flatten() {
            total += 1;
            if self.vectors.contains_key(t.as_ref()) {
                hit += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }

    /// Reads the word2vec text format: a `count dim` header, then one
    /// `token v1 … v_dim` line per word. Tokens are lowercased to match the
    /// tokenizer.
    pub fn load_text(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data(format!("{}: empty word-vector file", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let mut h = header.split_whitespace();
        let (Some(Ok(count)), Some(Ok(dim))) = (h.next().map(str::parse::<usize>), h.next().map(str::parse::<usize>)) else {
            return Err(Error::Data(format!("{}: bad header `{header}`", path.display())));
        };
        let mut table = WordEmbeddingTable::new(dim);
        for (no, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let vec: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let vec = vec.map_err(|_| Error::Data(format!("{}: line {}: bad float", path.display(), no + 2)))?;
            if vec.len() != dim {
                return Err(Error::Data(format!(
                    "{}: line {}: {} values, header says {dim}",
                    path.display(),
                    no + 2,
                    vec.len()
                )));
            }
            table.vectors.entry(token.to_lowercase()).or_insert(vec);
        }
        if table.len() != count {
            log::warn!("{}: header announces {count} words, read {}", path.display(), table.len());
        }
        Ok(table)
    }
}

/// TF-IDF weighted average of the word vectors of a document, normalized.
/// Returns `None` (textless) when no token is covered by both the table and
/// the TF-IDF vocabulary, or when the weighted mean vanishes.
pub fn w2v_tfidf_encode<S: AsRef<str>>(table: &WordEmbeddingTable, tfidf: &TfidfModel, tokens: &[S]) -> Option<Vec<f64>> {
    let weights = tfidf.transform(tokens);
    let mut acc = vec![0.0; table.dim()];
    let mut total = 0.0;
    for (i, w) in weights.iter() {
        if let Some(v) = table.get(tfidf.term(i)) {
            total += w;
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        }
    }
    if total <= 0.0 {
        return None;
    }
    acc.iter_mut().for_each(|a| *a /= total);
    l2_normalized(acc)
}
