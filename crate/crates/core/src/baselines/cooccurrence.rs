use std::collections::{BTreeMap, HashMap};

use super::{HourContext, Query, Recommender};
use crate::codec::{Reader, Writer};
use crate::error::Result;
use crate::ingest::{ArticleIdx, Session};

/// Symmetric counts of how many sessions contained both items of a pair,
/// with the squared norm of every item's co-occurrence vector kept up to
/// date. The diagonal is never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairCounts {
    adj: Vec<HashMap<u32, u32>>,
    norm_sq: Vec<u64>,
}

fn distinct(items: impl IntoIterator<Item = ArticleIdx>) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for a in items {
        if !out.contains(&a.0) {
            out.push(a.0);
        }
    }
    out
}

impl PairCounts {
    fn grow(&mut self, item: u32) {
        let need = item as usize + 1;
        if self.adj.len() < need {
            self.adj.resize_with(need, HashMap::new);
            self.norm_sq.resize(need, 0);
        }
    }

    fn bump(&mut self, a: u32, b: u32, by: u32) {
        let c = self.adj[a as usize].entry(b).or_insert(0);
        let old = *c as u64;
        *c += by;
        let new = *c as u64;
        self.norm_sq[a as usize] += new * new - old * old;
    }

    /// Adds one to the count of every unordered pair of distinct items.
    pub fn observe(&mut self, items: impl IntoIterator<Item = ArticleIdx>) {
        let items = distinct(items);
        if let Some(&max) = items.iter().max() {
            self.grow(max);
        }
        for (i, &a) in items.iter().enumerate() {
            for &b in &items[i + 1..] {
                self.bump(a, b, 1);
                self.bump(b, a, 1);
            }
        }
    }

    /// Rebuilds the counts from scratch by tallying all pairs first.
    pub fn from_sessions<'a>(sessions: impl IntoIterator<Item = &'a Session>) -> Self {
        let mut tally: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for s in sessions {
            let items = distinct(s.articles());
            for (i, &a) in items.iter().enumerate() {
                for &b in &items[i + 1..] {
                    *tally.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
        }
        let mut pc = PairCounts::default();
        for (&(a, b), &c) in &tally {
            pc.grow(a.max(b));
            pc.bump(a, b, c);
            pc.bump(b, a, c);
        }
        pc
    }

    pub fn count(&self, a: ArticleIdx, b: ArticleIdx) -> u32 {
        self.adj
            .get(a.index())
            .and_then(|m| m.get(&b.0))
            .copied()
            .unwrap_or(0)
    }

    /// Co-occurrence vector of `a` as sorted `(item, count)` pairs.
    pub fn vector(&self, a: ArticleIdx) -> Vec<(u32, u32)> {
        let mut v: Vec<(u32, u32)> = self
            .adj
            .get(a.index())
            .map(|m| m.iter().map(|(&k, &c)| (k, c)).collect())
            .unwrap_or_default();
        v.sort_unstable();
        v
    }

    pub fn norm(&self, a: ArticleIdx) -> f64 {
        (self.norm_sq.get(a.index()).copied().unwrap_or(0) as f64).sqrt()
    }

    /// Cosine of the co-occurrence vectors of `a` and `b`; 0 when either
    /// vector is zero. Dot products are exact integer sums.
    pub fn cosine(&self, a: ArticleIdx, b: ArticleIdx) -> f64 {
        let (Some(va), Some(vb)) = (self.adj.get(a.index()), self.adj.get(b.index())) else {
            return 0.0;
        };
        if va.is_empty() || vb.is_empty() {
            return 0.0;
        }
        let (small, large) = if va.len() <= vb.len() { (va, vb) } else { (vb, va) };
        let dot: u64 = small
            .iter()
            .filter_map(|(k, &x)| large.get(k).map(|&y| x as u64 * y as u64))
            .sum();
        dot as f64 / (self.norm(a) * self.norm(b))
    }

    pub fn n_items(&self) -> usize {
        self.adj.len()
    }

    fn write(&self, w: &mut Writer) {
        let rows: Vec<usize> = (0..self.adj.len()).filter(|&i| !self.adj[i].is_empty()).collect();
        w.len(self.adj.len());
        w.len(rows.len());
        for i in rows {
            w.u32(i as u32);
            let v = self.vector(ArticleIdx(i as u32));
            w.len(v.len());
            for (k, c) in v {
                w.u32(k);
                w.u32(c);
            }
        }
    }

    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.u64()? as usize;
        let mut pc = PairCounts {
            adj: vec![HashMap::new(); n],
            norm_sq: vec![0; n],
        };
        for _ in 0..r.len()? {
            let i = r.u32()? as usize;
            if i >= n {
                return Err(crate::Error::Snapshot(format!("item {i} out of range")));
            }
            for _ in 0..r.len()? {
                let (k, c) = (r.u32()?, r.u32()?);
                pc.adj[i].insert(k, c);
                pc.norm_sq[i] += c as u64 * c as u64;
            }
        }
        Ok(pc)
    }
}

const SNAPSHOT_VERSION: u32 = 1;

/// Scores a candidate by how many sessions contained it together with the
/// last clicked article.
#[derive(Clone, Debug, Default)]
pub struct CoOccurrence {
    pub counts: PairCounts,
}

impl Recommender for CoOccurrence {
    fn name(&self) -> &str {
        "CO"
    }

    fn observe(&mut self, session: &Session, _ctx: &HourContext<'_>) {
        self.counts.observe(session.articles());
    }

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        let last = query.last();
        candidates.iter().map(|&c| self.counts.count(last, c) as f64).collect()
    }

    fn snapshot(&self) -> Vec<u8> {
        let mut w = Writer::new("co", SNAPSHOT_VERSION);
        self.counts.write(&mut w);
        w.into_bytes()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let (mut r, _) = Reader::new(bytes, "co")?;
        self.counts = PairCounts::read(&mut r)?;
        r.finish()
    }
}

/// Scores a candidate by the cosine between its co-occurrence vector and
/// that of the last clicked article.
#[derive(Clone, Debug, Default)]
pub struct ItemKnn {
    pub counts: PairCounts,
}

impl Recommender for ItemKnn {
    fn name(&self) -> &str {
        "Item-kNN"
    }

    fn observe(&mut self, session: &Session, _ctx: &HourContext<'_>) {
        self.counts.observe(session.articles());
    }

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        let last = query.last();
        candidates.iter().map(|&c| self.counts.cosine(last, c)).collect()
    }

    fn snapshot(&self) -> Vec<u8> {
        let mut w = Writer::new("itemknn", SNAPSHOT_VERSION);
        self.counts.write(&mut w);
        w.into_bytes()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let (mut r, _) = Reader::new(bytes, "itemknn")?;
        self.counts = PairCounts::read(&mut r)?;
        r.finish()
    }
}
