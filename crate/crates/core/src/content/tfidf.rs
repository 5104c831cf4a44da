use std::collections::{BTreeMap, HashMap};

use super::sparse::{CsrMatrix, SparseVec};
use crate::error::{Error, Result};

/// Vocabulary and smoothed inverse document frequencies.
///
/// `weight(t, d) = tf(t, d) · idf(t)` with raw term counts and
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TfidfModel {
    vocabulary: HashMap<String, usize>,
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    df_threshold: usize,
}

pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl TfidfModel {
    /// Terms occurring in fewer than `df_threshold` documents are dropped.
    /// Vocabulary indices follow lexicographic term order.
    pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>], df_threshold: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Data("cannot fit TF-IDF on an empty corpus".into()));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.iter().map(AsRef::as_ref).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let n_docs = corpus.len();
        let kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, d)| d >= df_threshold).collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary(df_threshold));
        }
        let terms: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
        let idf = kept.iter().map(|&(_, d)| smoothed_idf(n_docs, d)).collect();
        let vocabulary = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(TfidfModel {
            vocabulary,
            terms,
            idf,
            n_docs,
            df_threshold,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df_threshold(&self) -> usize {
        self.df_threshold
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// TF-IDF vector of a token sequence; tokens outside the vocabulary are
    /// ignored.
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens {
            if let Some(&i) = self.vocabulary.get(t.as_ref()) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        SparseVec {
            indices: counts.keys().copied().collect(),
            values: counts.iter().map(|(&i, &tf)| tf * self.idf[i]).collect(),
        }
    }

    pub fn transform_corpus<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> CsrMatrix {
        let rows: Vec<SparseVec> = corpus.iter().map(|d| self.transform(d)).collect();
        CsrMatrix::from_rows(&rows, self.vocab_size())
    }
}
