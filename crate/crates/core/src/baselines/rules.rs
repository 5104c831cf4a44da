use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{HourContext, Query, Recommender};
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::ingest::{ArticleIdx, Session};

/// Weight of a rule `x → y` as a function of the distance `q − p` between
/// the positions of `x` and `y` in a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrDecay {
    /// `1 / (q − p)`
    Inverse,
    /// `max(0, 1 − (q − p − 1) / 10)`
    Linear,
}

impl SrDecay {
    pub fn weight(self, distance: usize) -> f64 {
        debug_assert!(distance >= 1);
        match self {
            SrDecay::Inverse => 1.0 / distance as f64,
            SrDecay::Linear => (1.0 - (distance as f64 - 1.0) / 10.0).max(0.0),
        }
    }
}

impl fmt::Display for SrDecay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SrDecay::Inverse => "inverse",
            SrDecay::Linear => "linear",
        })
    }
}

impl FromStr for SrDecay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse" => Ok(SrDecay::Inverse),
            "linear" => Ok(SrDecay::Linear),
            _ => Err(Error::Config(format!("unknown SR decay `{s}` (valid: inverse, linear)"))),
        }
    }
}

/// Sequential rules: every ordered pair `(x at p, y at q > p)` of a session
/// adds `decay(q − p)` to the rule `x → y`; a candidate scores the weight of
/// the rule from the last clicked article to it.
#[derive(Clone, Debug)]
pub struct SequentialRules {
    decay: SrDecay,
    rules: Vec<HashMap<u32, f64>>,
}

impl Default for SequentialRules {
    fn default() -> Self {
        SequentialRules::new(SrDecay::Inverse)
    }
}

impl SequentialRules {
    pub fn new(decay: SrDecay) -> Self {
        SequentialRules { decay, rules: Vec::new() }
    }

    pub fn decay(&self) -> SrDecay {
        self.decay
    }

    pub fn add_session(&mut self, items: &[ArticleIdx]) {
        if let Some(max) = items.iter().map(|a| a.index()).max() {
            if self.rules.len() <= max {
                self.rules.resize_with(max + 1, HashMap::new);
            }
        }
        for (p, x) in items.iter().enumerate() {
            for (q, y) in items.iter().enumerate().skip(p + 1) {
                if x == y {
                    continue;
                }
                *self.rules[x.index()].entry(y.0).or_insert(0.0) += self.decay.weight(q - p);
            }
        }
    }

    pub fn weight(&self, from: ArticleIdx, to: ArticleIdx) -> f64 {
        self.rules
            .get(from.index())
            .and_then(|m| m.get(&to.0))
            .copied()
            .unwrap_or(0.0)
    }

    /// Outgoing rules of `from`, sorted by target.
    pub fn rules_from(&self, from: ArticleIdx) -> Vec<(u32, f64)> {
        let mut v: Vec<(u32, f64)> = self
            .rules
            .get(from.index())
            .map(|m| m.iter().map(|(&k, &w)| (k, w)).collect())
            .unwrap_or_default();
        v.sort_unstable_by_key(|&(k, _)| k);
        v
    }
}

const SNAPSHOT_VERSION: u32 = 1;

impl Recommender for SequentialRules {
    fn name(&self) -> &str {
        "SR"
    }

    fn observe(&mut self, session: &Session, _ctx: &HourContext<'_>) {
        let items: Vec<ArticleIdx> = session.articles().collect();
        self.add_session(&items);
    }

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        let last = query.last();
        candidates.iter().map(|&c| self.weight(last, c)).collect()
    }

    fn snapshot(&self) -> Vec<u8> {
        let mut w = Writer::new("sr", SNAPSHOT_VERSION);
        w.str(&self.decay.to_string());
        w.len(self.rules.len());
        let rows: Vec<usize> = (0..self.rules.len()).filter(|&i| !self.rules[i].is_empty()).collect();
        w.len(rows.len());
        for i in rows {
            w.u32(i as u32);
            let v = self.rules_from(ArticleIdx(i as u32));
            w.len(v.len());
            for (k, x) in v {
                w.u32(k);
                w.f64(x);
            }
        }
        w.into_bytes()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let (mut r, _) = Reader::new(bytes, "sr")?;
        let decay = r.str()?.parse()?;
        let n = r.u64()? as usize;
        let mut rules = vec![HashMap::new(); n];
        for _ in 0..r.len()? {
            let i = r.u32()? as usize;
            if i >= n {
                return Err(Error::Snapshot(format!("item {i} out of range")));
            }
            for _ in 0..r.len()? {
                let k = r.u32()?;
                rules[i].insert(k, r.f64()?);
            }
        }
        r.finish()?;
        *self = SequentialRules { decay, rules };
        Ok(())
    }
}
