//! The shared recommender interface and the non-neural recommenders: item
//! co-occurrence (CO), sequential rules (SR), item-kNN, recent popularity
//! (RP), content-based (CB), plus uniform-random and oracle scorers used to
//! calibrate the evaluation.

mod content;
mod cooccurrence;
mod popularity;
mod rules;
mod trivial;

use std::cmp::Ordering;

pub use content::ContentBased;
pub use cooccurrence::{CoOccurrence, ItemKnn, PairCounts};
pub use popularity::{RecentPopularity, RP_WINDOW_SECS};
pub use rules::{SequentialRules, SrDecay};
pub use trivial::{Oracle, RandomScorer};

use crate::codec::fnv1a;
use crate::error::Result;
use crate::ingest::{ArticleIdx, ClickEvent, Session, Timestamp};

/// A next-click prediction request: the clicks of a session revealed so far.
#[derive(Clone, Copy, Debug)]
pub struct Query<'a> {
    pub session_id: u64,
    /// Non-empty prefix of the session.
    pub clicks: &'a [ClickEvent],
    /// The true next click. Only the oracle scorer reads it.
    pub next: Option<ArticleIdx>,
}

impl<'a> Query<'a> {
    pub fn new(session_id: u64, clicks: &'a [ClickEvent]) -> Self {
        assert!(!clicks.is_empty(), "query needs at least one click");
        Query {
            session_id,
            clicks,
            next: None,
        }
    }

    pub fn last(&self) -> ArticleIdx {
        self.clicks[self.clicks.len() - 1].article
    }

    pub fn now(&self) -> Timestamp {
        self.clicks[self.clicks.len() - 1].ts
    }
}

/// What a recommender may know about the hour it is being trained on.
#[derive(Clone, Copy, Debug)]
pub struct HourContext<'a> {
    pub hour_start: Timestamp,
    /// Articles clicked by anyone in the hour before `hour_start`, ascending.
    pub recent: &'a [ArticleIdx],
}

/// A recommender that learns from a stream of sessions and scores candidate
/// articles for a session prefix. Higher scores rank first.
pub trait Recommender: Send + Sync {
    fn name(&self) -> &str;

    /// Moves the recommender's clock to the start of an hour. Called before
    /// the hour is evaluated or trained on.
    fn advance_clock(&mut self, _now: Timestamp) {}

    /// Learns from one session. Sessions arrive ordered by start time.
    fn observe(&mut self, session: &Session, ctx: &HourContext<'_>);

    /// Called once all sessions of a training hour were observed.
    fn end_hour(&mut self, _ctx: &HourContext<'_>) {}

    /// One score per candidate, in candidate order. Must not change state.
    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64>;

    /// Serialized state, suitable for [`Recommender::restore`].
    fn snapshot(&self) -> Vec<u8>;

    fn restore(&mut self, bytes: &[u8]) -> Result<()>;

    fn state_digest(&self) -> u64 {
        fnv1a(&self.snapshot())
    }
}

/// Runs a recommender under another report label.
pub struct Labeled {
    label: String,
    inner: Box<dyn Recommender>,
}

impl Labeled {
    pub fn new(label: impl Into<String>, inner: Box<dyn Recommender>) -> Self {
        Labeled {
            label: label.into(),
            inner,
        }
    }
}

impl Recommender for Labeled {
    fn name(&self) -> &str {
        &self.label
    }

    fn advance_clock(&mut self, now: Timestamp) {
        self.inner.advance_clock(now)
    }

    fn observe(&mut self, session: &Session, ctx: &HourContext<'_>) {
        self.inner.observe(session, ctx)
    }

    fn end_hour(&mut self, ctx: &HourContext<'_>) {
        self.inner.end_hour(ctx)
    }

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        self.inner.score(query, candidates)
    }

    fn snapshot(&self) -> Vec<u8> {
        self.inner.snapshot()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        self.inner.restore(bytes)
    }

    fn state_digest(&self) -> u64 {
        self.inner.state_digest()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidates {
    pub candidates: Vec<ArticleIdx>,
    pub scores: Vec<f64>,
}

impl ScoredCandidates {
    pub fn new(candidates: Vec<ArticleIdx>, scores: Vec<f64>) -> Self {
        assert_eq!(candidates.len(), scores.len(), "one score per candidate");
        ScoredCandidates { candidates, scores }
    }

    /// Candidates best first; see [`rank_candidates`].
    pub fn ranking(&self, popularity: impl Fn(ArticleIdx) -> u64) -> Vec<ArticleIdx> {
        rank_candidates(&self.candidates, &self.scores, popularity)
            .into_iter()
            .map(|i| self.candidates[i])
            .collect()
    }

    /// 1-based rank of `item`.
    pub fn rank_of(&self, item: ArticleIdx, popularity: impl Fn(ArticleIdx) -> u64) -> Option<usize> {
        self.ranking(popularity).iter().position(|&c| c == item).map(|p| p + 1)
    }
}

fn sanitize(s: f64) -> f64 {
    if s.is_nan() {
        f64::NEG_INFINITY
    } else {
        s
    }
}

/// Orders candidate positions by score (descending), then by recent
/// popularity (descending), then by article id (ascending). NaN scores rank
/// as −∞.
pub fn rank_candidates(candidates: &[ArticleIdx], scores: &[f64], popularity: impl Fn(ArticleIdx) -> u64) -> Vec<usize> {
    assert_eq!(candidates.len(), scores.len(), "one score per candidate");
    let pop: Vec<u64> = candidates.iter().map(|&c| popularity(c)).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        sanitize(scores[b])
            .partial_cmp(&sanitize(scores[a]))
            .unwrap_or(Ordering::Equal)
            .then_with(|| pop[b].cmp(&pop[a]))
            .then_with(|| candidates[a].cmp(&candidates[b]))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::test_support::ids;
    use super::*;

    #[test]
    fn tie_break_popularity_then_id() {
        let c = ids(&[5, 3, 9, 1]);
        let s = vec![1.0, 2.0, 1.0, 1.0];
        let pop = |a: ArticleIdx| if a.0 == 9 { 7 } else { 0 };
        let sc = ScoredCandidates::new(c, s);
        assert_eq!(sc.ranking(pop), ids(&[3, 9, 1, 5]));
        assert_eq!(sc.rank_of(ArticleIdx(5), pop), Some(4));
    }

    #[test]
    fn nan_and_neg_infinity_rank_last() {
        let c = ids(&[0, 1, 2]);
        let order = rank_candidates(&c, &[f64::NAN, -5.0, f64::NEG_INFINITY], |_| 0);
        assert_eq!(order, vec![1, 0, 2]);
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use proptest::prelude::*;

    use super::{HourContext, Query};
    use crate::ingest::{ArticleIdx, ClickEvent, Session};

    pub fn ids(v: &[u32]) -> Vec<ArticleIdx> {
        v.iter().map(|&i| ArticleIdx(i)).collect()
    }

    pub fn clicks(items: &[u32]) -> Vec<ClickEvent> {
        items
            .iter()
            .enumerate()
            .map(|(k, &a)| ClickEvent {
                user_id: "u".into(),
                article: ArticleIdx(a),
                ts: 60 * k as i64,
                device: String::new(),
                os: String::new(),
                referrer: String::new(),
                city: None,
                region: None,
                country: None,
            })
            .collect()
    }

    pub fn sess(items: &[u32]) -> Session {
        Session {
            id: 0,
            user_id: "u".into(),
            start_ts: 0,
            clicks: clicks(items),
        }
    }

    pub fn ctx() -> HourContext<'static> {
        HourContext {
            hour_start: 0,
            recent: &[],
        }
    }

    /// A query over a leaked prefix; test-only convenience.
    pub fn query(items: &[u32]) -> Query<'static> {
        Query::new(items.len() as u64, Box::leak(clicks(items).into_boxed_slice()))
    }

    /// Streams of preprocessed-looking sessions (2–8 distinct items).
    pub fn session_stream(n_items: u32, max_sessions: usize) -> impl Strategy<Value = Vec<Session>> {
        proptest::collection::vec(
            proptest::collection::btree_set(0..n_items, 2..8)
                .prop_map(|s| s.into_iter().collect::<Vec<u32>>())
                .prop_shuffle(),
            0..max_sessions,
        )
        .prop_map(|v| v.iter().map(|items| sess(items)).collect())
    }
}
