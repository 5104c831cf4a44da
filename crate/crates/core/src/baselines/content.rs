use std::sync::Arc;

use super::{HourContext, Query, Recommender};
use crate::codec::{fnv1a, Reader, Writer};
use crate::content::EmbeddingStore;
use crate::error::{Error, Result};
use crate::ingest::{ArticleIdx, Session};

/// Content-based: cosine between the embedding of the last clicked article
/// and each candidate's. Textless candidates score −∞; a textless last
/// article gives every candidate 0.
#[derive(Clone, Debug)]
pub struct ContentBased {
    store: Arc<EmbeddingStore>,
}

impl ContentBased {
    pub fn new(store: Arc<EmbeddingStore>) -> Self {
        ContentBased { store }
    }

    fn store_digest(&self) -> u64 {
        let mut w = Writer::default();
        w.len(self.store.dim());
        for i in 0..self.store.len_slots() {
            match self.store.get(ArticleIdx(i as u32)) {
                Some(v) => w.f64s(v),
                None => w.u8(0),
            }
        }
        fnv1a(&w.into_bytes())
    }
}

impl Recommender for ContentBased {
    fn name(&self) -> &str {
        "CB"
    }

    fn observe(&mut self, _session: &Session, _ctx: &HourContext<'_>) {}

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        let Some(last) = self.store.get(query.last()) else {
            return vec![0.0; candidates.len()];
        };
        candidates
            .iter()
            .map(|&c| match self.store.get(c) {
                Some(v) => crate::content::cosine(last, v),
                None => f64::NEG_INFINITY,
            })
            .collect()
    }

    /// The embedding store is immutable; the snapshot pins its digest.
    fn snapshot(&self) -> Vec<u8> {
        let mut w = Writer::new("cb", 1);
        w.u64(self.store_digest());
        w.into_bytes()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let (mut r, _) = Reader::new(bytes, "cb")?;
        let digest = r.u64()?;
        r.finish()?;
        if digest != self.store_digest() {
            return Err(Error::Snapshot("CB snapshot was taken over different embeddings".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::test_support::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn store(vectors: Vec<Option<Vec<f64>>>) -> Arc<EmbeddingStore> {
        let dim = vectors.iter().flatten().next().map_or(0, Vec::len);
        Arc::new(EmbeddingStore::from_vectors(dim, vectors).unwrap())
    }

    #[test]
    fn identical_first_orthogonal_zero_textless_last() {
        let cb = ContentBased::new(store(vec![
            Some(vec![1.0, 0.0]),
            Some(vec![1.0, 0.0]),
            Some(vec![0.0, 1.0]),
            None,
        ]));
        let s = cb.score(&query(&[0]), &ids(&[3, 2, 1]));
        assert_eq!(s, vec![f64::NEG_INFINITY, 0.0, 1.0]);
        assert_eq!(cb.score(&query(&[3]), &ids(&[0, 1])), vec![0.0, 0.0]);
    }

    #[test]
    fn ranking_equals_dot_product_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vecs: Vec<Option<Vec<f64>>> = (0..11)
            .map(|_| crate::content::l2_normalized((0..6).map(|_| rng.random::<f64>() - 0.5).collect()))
            .collect();
        let cb = ContentBased::new(store(vecs.clone()));
        let cands = ids(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let scored = crate::baselines::ScoredCandidates::new(cands.clone(), cb.score(&query(&[0]), &cands));
        let q = vecs[0].as_ref().unwrap();
        let mut expect: Vec<(f64, u32)> = cands
            .iter()
            .map(|c| (vecs[c.index()].as_ref().unwrap().iter().zip(q).map(|(a, b)| a * b).sum(), c.0))
            .collect();
        expect.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let expect: Vec<ArticleIdx> = expect.into_iter().map(|(_, c)| ArticleIdx(c)).collect();
        assert_eq!(scored.ranking(|_| 0), expect);
    }

    #[test]
    fn snapshot_pins_store() {
        let cb = ContentBased::new(store(vec![Some(vec![1.0])]));
        let mut other = ContentBased::new(store(vec![Some(vec![-1.0])]));
        assert!(other.restore(&cb.snapshot()).is_err());
        let mut same = cb.clone();
        same.restore(&cb.snapshot()).unwrap();
    }
}
