use std::collections::{BTreeMap, HashMap};

use super::{HourContext, Query, Recommender};
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::ingest::{ArticleIdx, Session, Timestamp};

pub const RP_WINDOW_SECS: Timestamp = 3600;

/// Recent popularity: a candidate scores the number of clicks it received
/// in the trailing window ending at the recommender's clock, i.e. clicks
/// with `0 <= now − ts < window`.
///
/// Clicks later than the clock are held back until the clock reaches them.
/// During evaluation the clock stays at the start of the hour, so the
/// window is exactly the preceding hour.
#[derive(Clone, Debug)]
pub struct RecentPopularity {
    window: Timestamp,
    now: Timestamp,
    seq: u64,
    counted: BTreeMap<(Timestamp, u64), u32>,
    pending: BTreeMap<(Timestamp, u64), u32>,
    counts: HashMap<u32, u32>,
}

impl Default for RecentPopularity {
    fn default() -> Self {
        RecentPopularity::new(RP_WINDOW_SECS)
    }
}

impl RecentPopularity {
    pub fn new(window: Timestamp) -> Self {
        RecentPopularity {
            window,
            now: Timestamp::MIN,
            seq: 0,
            counted: BTreeMap::new(),
            pending: BTreeMap::new(),
            counts: HashMap::new(),
        }
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    fn expired(&self, ts: Timestamp) -> bool {
        self.now != Timestamp::MIN && self.now - ts >= self.window
    }

    pub fn observe_click(&mut self, article: ArticleIdx, ts: Timestamp) {
        if self.expired(ts) {
            return;
        }
        let key = (ts, self.seq);
        self.seq += 1;
        if ts <= self.now {
            self.counted.insert(key, article.0);
            *self.counts.entry(article.0).or_default() += 1;
        } else {
            self.pending.insert(key, article.0);
        }
    }

    /// Moves the clock forward; earlier times are ignored.
    pub fn advance(&mut self, now: Timestamp) {
        if now <= self.now {
            return;
        }
        self.now = now;
        let later = self.pending.split_off(&(now + 1, 0));
        for (key, a) in std::mem::replace(&mut self.pending, later) {
            self.counted.insert(key, a);
            *self.counts.entry(a).or_default() += 1;
        }
        let keep = self.counted.split_off(&(now - self.window + 1, 0));
        for (_, a) in std::mem::replace(&mut self.counted, keep) {
            let c = self.counts.get_mut(&a).expect("counted click has a count");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&a);
            }
        }
    }

    pub fn count(&self, article: ArticleIdx) -> u32 {
        self.counts.get(&article.0).copied().unwrap_or(0)
    }

    /// Number of clicks inside the window.
    pub fn total(&self) -> usize {
        self.counted.len()
    }

    /// Window counts for `candidates` at time `now >= self.now()`, without
    /// moving the clock.
    pub fn score_at(&self, candidates: &[ArticleIdx], now: Timestamp) -> Vec<f64> {
        let mut counts: HashMap<u32, u32> = HashMap::new();
        let lo = (now - self.window + 1, 0);
        let hi = (now + 1, 0);
        for (_, &a) in self.counted.range(lo..hi).chain(self.pending.range(lo..hi)) {
            *counts.entry(a).or_default() += 1;
        }
        candidates
            .iter()
            .map(|c| counts.get(&c.0).copied().unwrap_or(0) as f64)
            .collect()
    }
}

const SNAPSHOT_VERSION: u32 = 1;

fn write_events(w: &mut Writer, events: &BTreeMap<(Timestamp, u64), u32>) {
    w.len(events.len());
    for (&(ts, seq), &a) in events {
        w.i64(ts);
        w.u64(seq);
        w.u32(a);
    }
}

fn read_events(r: &mut Reader<'_>) -> Result<BTreeMap<(Timestamp, u64), u32>> {
    let n = r.len()?;
    let mut out = BTreeMap::new();
    for _ in 0..n {
        let key = (r.i64()?, r.u64()?);
        out.insert(key, r.u32()?);
    }
    Ok(out)
}

impl Recommender for RecentPopularity {
    fn name(&self) -> &str {
        "RP"
    }

    fn advance_clock(&mut self, now: Timestamp) {
        self.advance(now);
    }

    fn observe(&mut self, session: &Session, _ctx: &HourContext<'_>) {
        for c in &session.clicks {
            self.observe_click(c.article, c.ts);
        }
    }

    fn score(&self, _query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        candidates.iter().map(|&c| self.count(c) as f64).collect()
    }

    fn snapshot(&self) -> Vec<u8> {
        let mut w = Writer::new("rp", SNAPSHOT_VERSION);
        w.i64(self.window);
        w.i64(self.now);
        w.u64(self.seq);
        write_events(&mut w, &self.counted);
        write_events(&mut w, &self.pending);
        w.into_bytes()
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let (mut r, _) = Reader::new(bytes, "rp")?;
        let window = r.i64()?;
        if window <= 0 {
            return Err(Error::Snapshot(format!("bad RP window {window}")));
        }
        let now = r.i64()?;
        let seq = r.u64()?;
        let counted = read_events(&mut r)?;
        let pending = read_events(&mut r)?;
        r.finish()?;
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for &a in counted.values() {
            *counts.entry(a).or_default() += 1;
        }
        *self = RecentPopularity {
            window,
            now,
            seq,
            counted,
            pending,
            counts,
        };
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::test_support::*;
    use proptest::prelude::*;

    #[test]
    fn ranks_by_window_count() {
        let mut rp = RecentPopularity::default();
        for i in 0..5 {
            rp.observe_click(ArticleIdx(1), 100 + i);
        }
        for i in 0..3 {
            rp.observe_click(ArticleIdx(2), 200 + i);
        }
        rp.advance(1000);
        assert_eq!(rp.score(&query(&[0]), &ids(&[2, 1])), vec![3.0, 5.0]);
    }

    #[test]
    fn click_aged_61_minutes_drops_out() {
        let mut rp = RecentPopularity::default();
        rp.observe_click(ArticleIdx(1), 0);
        rp.advance(59 * 60);
        assert_eq!(rp.count(ArticleIdx(1)), 1);
        rp.advance(61 * 60);
        assert_eq!(rp.count(ArticleIdx(1)), 0);
        assert_eq!(rp.total(), 0);
    }

    #[test]
    fn future_clicks_wait_for_clock() {
        let mut rp = RecentPopularity::default();
        rp.advance(1000);
        rp.observe_click(ArticleIdx(3), 1500);
        assert_eq!(rp.count(ArticleIdx(3)), 0);
        assert_eq!(rp.score_at(&ids(&[3]), 1500), vec![1.0]);
        rp.advance(1500);
        assert_eq!(rp.count(ArticleIdx(3)), 1);
    }

    fn brute(events: &[(u32, Timestamp)], now: Timestamp, item: u32) -> u32 {
        events
            .iter()
            .filter(|&&(a, ts)| a == item && now - ts >= 0 && now - ts < RP_WINDOW_SECS)
            .count() as u32
    }

    proptest! {
        #[test]
        fn window_matches_rescan(
            batches in proptest::collection::vec(
                (0i64..1800, proptest::collection::vec((0u32..8, -3000i64..3000), 0..20)), 1..30)
        ) {
            let mut rp = RecentPopularity::default();
            let mut all: Vec<(u32, Timestamp)> = Vec::new();
            let mut now = 0;
            for (step, clicks) in batches {
                for (a, offset) in clicks {
                    rp.observe_click(ArticleIdx(a), now + offset);
                    all.push((a, now + offset));
                }
                now += step;
                rp.advance(now);
                let mut total = 0;
                for item in 0..8 {
                    let b = brute(&all, now, item);
                    prop_assert_eq!(rp.count(ArticleIdx(item)), b);
                    total += rp.count(ArticleIdx(item));
                }
                prop_assert_eq!(total as usize, rp.total());
            }
        }

        #[test]
        fn in_order_stream_matches_rescan_exactly(
            gaps in proptest::collection::vec((0u32..6, 0i64..900), 1..200)
        ) {
            let mut rp = RecentPopularity::default();
            let mut batch = RecentPopularity::default();
            let mut all = Vec::new();
            let mut ts = 0;
            for (a, gap) in gaps {
                ts += gap;
                rp.advance(ts);
                rp.observe_click(ArticleIdx(a), ts);
                all.push((a, ts));
                batch.observe_click(ArticleIdx(a), ts);
            }
            batch.advance(ts);
            for item in 0..6 {
                let b = brute(&all, ts, item);
                prop_assert_eq!(rp.count(ArticleIdx(item)), b);
                prop_assert_eq!(batch.count(ArticleIdx(item)), b);
            }
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rp = RecentPopularity::default();
        rp.observe_click(ArticleIdx(1), 10);
        rp.advance(5);
        rp.observe_click(ArticleIdx(2), 20);
        let mut other = RecentPopularity::default();
        other.restore(&rp.snapshot()).unwrap();
        assert_eq!(other.snapshot(), rp.snapshot());
        assert_eq!(other.count(ArticleIdx(1)), rp.count(ArticleIdx(1)));
    }
}
