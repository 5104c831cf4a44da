use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HourContext, Query, Recommender};
use crate::codec::{Reader, Writer};
use crate::error::Result;
use crate::ingest::{ArticleIdx, Session};

/// Independent uniform scores, reproducible per (seed, session, prefix).
#[derive(Clone, Debug)]
pub struct RandomScorer {
    seed: u64,
}

impl RandomScorer {
    pub fn new(seed: u64) -> Self {
        RandomScorer { seed }
    }
}

fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Recommender for RandomScorer {
    fn name(&self) -> &str {
        "Random"
    }

    fn observe(&mut self, _session: &Session, _ctx: &HourContext<'_>) {}

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        let key = mix(self.seed ^ mix(query.session_id ^ mix(query.clicks.len() as u64)));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        candidates.iter().map(|_| rng.random::<f64>()).collect()
    }

    fn snapshot(&self) -> Vec<u8> {
        let mut w = Writer::new("random", 1);
        w.u64(self.seed);
        w.into_bytes()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let (mut r, _) = Reader::new(bytes, "random")?;
        self.seed = r.u64()?;
        r.finish()
    }
}

/// Scores the true next click +∞ and everything else 0.
#[derive(Clone, Debug, Default)]
pub struct Oracle;

impl Recommender for Oracle {
    fn name(&self) -> &str {
        "Oracle"
    }

    fn observe(&mut self, _session: &Session, _ctx: &HourContext<'_>) {}

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        candidates
            .iter()
            .map(|&c| if Some(c) == query.next { f64::INFINITY } else { 0.0 })
            .collect()
    }

    fn snapshot(&self) -> Vec<u8> {
        Writer::new("oracle", 1).into_bytes()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        Reader::new(bytes, "oracle")?.0.finish()
    }
}
