//! Paragraph vectors trained with the distributed bag-of-words objective
//! (PV-DBOW) and negative sampling.
//!
//! For every document `d` and every token `t` it contains, SGD ascends
//! `log σ(v_d·u_t) + Σ_n log σ(−v_d·u_n)` with negatives `n` drawn from the
//! unigram distribution raised to 0.75. Inference freezes the output
//! vectors `u` and fits a fresh document vector.

use std::collections::BTreeMap;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::l2_normalized;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Doc2vecConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub alpha: f64,
    pub min_alpha: f64,
    pub min_count: usize,
    pub infer_epochs: usize,
    pub seed: u64,
}

impl Default for Doc2vecConfig {
    fn default() -> Self {
        Doc2vecConfig {
            dim: 250,
            epochs: 20,
            negatives: 5,
            alpha: 0.025,
            min_alpha: 0.0001,
            min_count: 1,
            infer_epochs: 50,
            seed: 1,
        }
    }
}

const NOISE_POWER: f64 = 0.75;

#[derive(Clone, Debug)]
pub struct Doc2vecModel {
    pub config: Doc2vecConfig,
    vocab: HashMap<String, usize>,
    /// |V| × dim, row-major.
    output: Vec<f64>,
    /// n_docs × dim, row-major.
    doc_vectors: Vec<f64>,
    /// Cumulative noise distribution over the vocabulary.
    noise_cdf: Vec<f64>,
    /// Mean loss per (document, token) pair for each epoch.
    pub epoch_losses: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sample_noise(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let r: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= r).min(cdf.len() - 1)
}

/// Scores a positive token and sampled negatives against `doc`, pushing
/// `(word, lr · (label − σ))` for each onto `grads`. Returns the pair loss.
#[allow(clippy::too_many_arguments)]
fn pair_gradients(
    doc: &[f64],
    output: &[f64],
    target: usize,
    negatives: usize,
    cdf: &[f64],
    lr: f64,
    rng: &mut impl Rng,
    grads: &mut Vec<(usize, f64)>,
) -> f64 {
    let dim = doc.len();
    grads.clear();
    let mut loss = 0.0;
    for k in 0..=negatives {
        let (word, label) = if k == 0 {
            (target, 1.0)
        } else {
            let n = sample_noise(cdf, rng);
            if n == target {
                continue;
            }
            (n, 0.0)
        };
        let f = sigmoid(dot(doc, &output[word * dim..(word + 1) * dim]));
        loss -= if label > 0.0 { f.max(1e-300).ln() } else { (1.0 - f).max(1e-300).ln() };
        grads.push((word, lr * (label - f)));
    }
    loss
}

fn doc_delta(output: &[f64], grads: &[(usize, f64)], dim: usize) -> Vec<f64> {
    let mut delta = vec![0.0; dim];
    for &(w, g) in grads {
        for (d, u) in delta.iter_mut().zip(&output[w * dim..(w + 1) * dim]) {
            *d += g * u;
        }
    }
    delta
}

fn init_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| (rng.random::<f64>() - 0.5) / dim as f64).collect()
}

impl Doc2vecModel {
    pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>], config: Doc2vecConfig) -> Result<Self> {
        if corpus.len() < 2 {
            return Err(Error::Data("doc2vec needs at least two documents".into()));
        }
        if config.dim == 0 || config.epochs == 0 {
            return Err(Error::Config("doc2vec dim and epochs must be >= 1".into()));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in corpus.iter().flatten() {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
        let kept: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= config.min_count).collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary(config.min_count));
        }
        let vocab: HashMap<String, usize> = kept.iter().enumerate().map(|(i, (t, _))| (t.to_string(), i)).collect();
        let mut noise_cdf = Vec::with_capacity(kept.len());
        let mut acc = 0.0;
        for &(_, c) in &kept {
            acc += (c as f64).powf(NOISE_POWER);
            noise_cdf.push(acc);
        }

        let docs: Vec<Vec<usize>> = corpus
            .iter()
            .map(|d| d.iter().filter_map(|t| vocab.get(t.as_ref()).copied()).collect())
            .collect();
        let dim = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut doc_vectors = Vec::with_capacity(docs.len() * dim);
        for _ in 0..docs.len() {
            doc_vectors.extend(init_vector(dim, &mut rng));
        }
        let mut output = vec![0.0; kept.len() * dim];

        let per_epoch: usize = docs.iter().map(Vec::len).sum();
        let total_steps = (per_epoch * config.epochs).max(1) as f64;
        let mut step = 0usize;
        let mut order: Vec<usize> = (0..docs.len()).collect();
        let mut epoch_losses = Vec::with_capacity(config.epochs);
        let mut grads = Vec::with_capacity(config.negatives + 1);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut loss = 0.0;
            for &d in &order {
                let doc = &mut doc_vectors[d * dim..(d + 1) * dim];
                for &t in &docs[d] {
                    let lr = config.alpha - (config.alpha - config.min_alpha) * (step as f64 / total_steps);
                    loss += pair_gradients(doc, &output, t, config.negatives, &noise_cdf, lr, &mut rng, &mut grads);
                    let delta = doc_delta(&output, &grads, dim);
                    for &(w, g) in &grads {
                        for (u, x) in output[w * dim..(w + 1) * dim].iter_mut().zip(doc.iter()) {
                            *u += g * x;
                        }
                    }
                    doc.iter_mut().zip(delta).for_each(|(x, d)| *x += d);
                    step += 1;
                }
            }
            epoch_losses.push(loss / per_epoch.max(1) as f64);
        }

        Ok(Doc2vecModel {
            config,
            vocab,
            output,
            doc_vectors,
            noise_cdf,
            epoch_losses,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn n_docs(&self) -> usize {
        self.doc_vectors.len() / self.config.dim
    }

    /// Trained vector of training document `d`, not normalized.
    pub fn doc_vector(&self, d: usize) -> &[f64] {
        &self.doc_vectors[d * self.config.dim..(d + 1) * self.config.dim]
    }

    /// Unit-norm embedding of training document `d`.
    pub fn embedding(&self, d: usize) -> Option<Vec<f64>> {
        l2_normalized(self.doc_vector(d).to_vec())
    }

    /// Fits a fresh document vector for `tokens` with the output vectors
    /// frozen. Returns `None` when no token is in the vocabulary.
    pub fn infer<S: AsRef<str>>(&self, tokens: &[S], epochs: usize, seed: u64) -> Option<Vec<f64>> {
        let ids: Vec<usize> = tokens.iter().filter_map(|t| self.vocab.get(t.as_ref()).copied()).collect();
        if ids.is_empty() {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.dim();
        let mut doc = init_vector(dim, &mut rng);
        let mut grads = Vec::with_capacity(self.config.negatives + 1);
        let total = (ids.len() * epochs).max(1) as f64;
        let mut step = 0usize;
        let alpha = self.config.alpha;
        for _ in 0..epochs {
            for &t in &ids {
                let lr = alpha - (alpha - self.config.min_alpha) * (step as f64 / total);
                pair_gradients(&doc, &self.output, t, self.config.negatives, &self.noise_cdf, lr, &mut rng, &mut grads);
                let delta = doc_delta(&self.output, &grads, dim);
                doc.iter_mut().zip(delta).for_each(|(x, d)| *x += d);
                step += 1;
            }
        }
        l2_normalized(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
    }

    fn two_disjoint_docs() -> Vec<Vec<String>> {
        let a: Vec<String> = (0..30).map(|i| format!("alpha{}", i % 10)).collect();
        let b: Vec<String> = (0..30).map(|i| format!("beta{}", i % 10)).collect();
        vec![a, b]
    }

    fn small_config() -> Doc2vecConfig {
        Doc2vecConfig {
            dim: 8,
            epochs: 50,
            seed: 3,
            ..Doc2vecConfig::default()
        }
    }

    #[test]
    fn seeded_runs_identical() {
        let corpus = two_disjoint_docs();
        let a = Doc2vecModel::fit(&corpus, small_config()).unwrap();
        let b = Doc2vecModel::fit(&corpus, small_config()).unwrap();
        assert_eq!(a.doc_vectors, b.doc_vectors);
        assert_eq!(a.output, b.output);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn disjoint_docs_separate_and_reinference_agrees() {
        let corpus = two_disjoint_docs();
        let m = Doc2vecModel::fit(&corpus, small_config()).unwrap();
        let v1 = m.embedding(0).unwrap();
        let v2 = m.embedding(1).unwrap();
        let again = m.infer(&corpus[0], 50, 9).unwrap();
        assert!(cos(&v1, &v2) < cos(&v1, &again), "{} vs {}", cos(&v1, &v2), cos(&v1, &again));
    }

    #[test]
    fn loss_decreases() {
        let corpus = two_disjoint_docs();
        let m = Doc2vecModel::fit(&corpus, small_config()).unwrap();
        let first = m.epoch_losses[0];
        let last = *m.epoch_losses.last().unwrap();
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn needs_two_documents() {
        let corpus = vec![vec!["x".to_string()]];
        assert!(Doc2vecModel::fit(&corpus, small_config()).is_err());
    }

    #[test]
    fn unknown_tokens_infer_nothing() {
        let m = Doc2vecModel::fit(&two_disjoint_docs(), small_config()).unwrap();
        assert_eq!(m.infer(&["nothing"], 5, 1), None);
    }

    #[test]
    fn noise_sampling_follows_weights() {
        let cdf = vec![1.0, 1.0, 4.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hist = [0usize; 3];
        for _ in 0..40_000 {
            hist[sample_noise(&cdf, &mut rng)] += 1;
        }
        assert_eq!(hist[1], 0);
        let frac = hist[0] as f64 / 40_000.0;
        assert!((frac - 0.25).abs() < 0.01, "{frac}");
    }
}
