use crate::codec::{Reader, Writer};
use crate::error::Result;
use crate::ingest::ArticleIdx;

/// Click counts behind the Laplace-smoothed popularity estimate
/// `p̂(i) = (cᵢ + 1) / (C + |seen|)`, where `C` is the total click count and
/// `|seen|` the number of distinct articles clicked so far.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PopularityEstimator {
    counts: Vec<u64>,
    total: u64,
    seen: u64,
}

impl PopularityEstimator {
    pub fn observe(&mut self, article: ArticleIdx) {
        let i = article.index();
        if self.counts.len() <= i {
            self.counts.resize(i + 1, 0);
        }
        if self.counts[i] == 0 {
            self.seen += 1;
        }
        self.counts[i] += 1;
        self.total += 1;
    }

    pub fn count(&self, article: ArticleIdx) -> u64 {
        self.counts.get(article.index()).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Estimated click probability; 1 before any click was observed.
    pub fn probability(&self, article: ArticleIdx) -> f64 {
        let denom = self.total + self.seen;
        if denom == 0 {
            return 1.0;
        }
        ((self.count(article) + 1) as f64 / denom as f64).min(1.0)
    }

    /// Self-information `−log₂ p̂` in bits.
    pub fn self_information(&self, article: ArticleIdx) -> f64 {
        -self.probability(article).log2()
    }

    pub fn write(&self, w: &mut Writer) {
        w.len(self.counts.len());
        self.counts.iter().for_each(|&c| w.u64(c));
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.u64()? as usize;
        let mut p = PopularityEstimator::default();
        p.counts = (0..n).map(|_| r.u64()).collect::<Result<_>>()?;
        p.total = p.counts.iter().sum();
        p.seen = p.counts.iter().filter(|&&c| c > 0).count() as u64;
        Ok(p)
    }
}
