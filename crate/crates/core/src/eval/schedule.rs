use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::ingest::{ArticleIdx, Session, Timestamp};

pub const HOUR_SECS: Timestamp = 3600;

/// Which hours are evaluated: after `warmup` pure training hours, hour `h`
/// is evaluated iff `(h − warmup) mod every == 0`. Every hour is trained on,
/// evaluation hours only after their evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub hours: i64,
    pub warmup: i64,
    pub every: i64,
}

/// Hours to train on, then the hour to evaluate (none for the tail).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleStep {
    pub train: Range<i64>,
    pub eval: Option<i64>,
}

impl Schedule {
    pub fn new(hours: i64, warmup: i64, every: i64) -> Result<Self> {
        if warmup < 0 || every < 1 {
            return Err(Error::Config(format!(
                "warmup_hours must be >= 0 and eval_every >= 1 (got {warmup}, {every})"
            )));
        }
        let need = warmup + every + 1;
        if hours < need {
            return Err(Error::StreamTooShort { have: hours, need });
        }
        Ok(Schedule { hours, warmup, every })
    }

    pub fn is_eval(&self, h: i64) -> bool {
        h >= self.warmup && h < self.hours && (h - self.warmup) % self.every == 0
    }

    pub fn eval_hours(&self) -> Vec<i64> {
        (self.warmup..self.hours).step_by(self.every as usize).collect()
    }

    pub fn steps(&self) -> Vec<ScheduleStep> {
        let mut steps = Vec::new();
        let mut from = 0;
        for h in self.eval_hours() {
            steps.push(ScheduleStep {
                train: from..h,
                eval: Some(h),
            });
            from = h;
        }
        if from < self.hours {
            steps.push(ScheduleStep {
                train: from..self.hours,
                eval: None,
            });
        }
        steps
    }
}

/// Sessions starting within one hour, plus every article clicked during it.
#[derive(Clone, Debug, Default)]
pub struct HourBucket {
    pub hour: i64,
    pub start: Timestamp,
    /// Indices into the session list, by start time.
    pub sessions: Vec<usize>,
    /// Articles with a click timestamped in the hour, ascending.
    pub clicked: Vec<ArticleIdx>,
    /// Click counts of `clicked`, aligned.
    pub click_counts: Vec<u64>,
}

impl HourBucket {
    pub fn count(&self, a: ArticleIdx) -> u64 {
        self.clicked.binary_search(&a).map_or(0, |i| self.click_counts[i])
    }
}

/// Start of the clock hour containing `ts`.
pub fn hour_floor(ts: Timestamp) -> Timestamp {
    ts.div_euclid(HOUR_SECS) * HOUR_SECS
}

/// Groups time-ordered sessions into clock hours, starting at the hour of
/// the first session. Hour `h` covers `[origin + h·3600, origin + (h+1)·3600)`.
pub fn bucket_hours(sessions: &[Session]) -> Vec<HourBucket> {
    let Some(first) = sessions.iter().map(|s| s.start_ts).min() else {
        return Vec::new();
    };
    let origin = hour_floor(first);
    let last = sessions.iter().map(|s| s.start_ts).max().unwrap();
    let n = ((last - origin) / HOUR_SECS + 1) as usize;
    let mut buckets: Vec<HourBucket> = (0..n)
        .map(|h| HourBucket {
            hour: h as i64,
            start: origin + h as i64 * HOUR_SECS,
            ..HourBucket::default()
        })
        .collect();
    let mut counts: Vec<BTreeMap<ArticleIdx, u64>> = vec![BTreeMap::new(); n];
    let mut order: Vec<usize> = (0..sessions.len()).collect();
    order.sort_by_key(|&i| (sessions[i].start_ts, sessions[i].id));
    for i in order {
        let s = &sessions[i];
        buckets[((s.start_ts - origin) / HOUR_SECS) as usize].sessions.push(i);
        for c in &s.clicks {
            let h = ((c.ts - origin) / HOUR_SECS) as usize;
            if h < n {
                *counts[h].entry(c.article).or_default() += 1;
            }
        }
    }
    for (b, m) in buckets.iter_mut().zip(counts) {
        (b.clicked, b.click_counts) = m.into_iter().unzip();
    }
    buckets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::test_support::clicks;

    #[test]
    fn sixteen_days() {
        let s = Schedule::new(384, 48, 5).unwrap();
        let hours = s.eval_hours();
        let mut expect = Vec::new();
        let mut h = 48;
        while h < 384 {
            expect.push(h);
            h += 5;
        }
        assert_eq!(hours, expect);
        assert_eq!(hours.len(), 68);
        assert_eq!(*hours.last().unwrap(), 383);
        assert!((0..48).all(|h| !s.is_eval(h)));
        let residues: std::collections::BTreeSet<i64> = hours.iter().map(|h| h % 24).collect();
        assert_eq!(residues.len(), 24);
    }

    #[test]
    fn steps_cover_every_hour_once() {
        let s = Schedule::new(70, 48, 5).unwrap();
        let steps = s.steps();
        assert_eq!(steps[0].train, 0..48);
        assert_eq!(steps[1].train, 48..53);
        let trained: Vec<i64> = steps.iter().flat_map(|st| st.train.clone()).collect();
        assert_eq!(trained, (0..70).collect::<Vec<_>>());
        assert_eq!(steps.last().unwrap().eval, None);
    }

    #[test]
    fn too_short_names_length() {
        match Schedule::new(50, 48, 5) {
            Err(Error::StreamTooShort { have: 50, need: 54 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn buckets_by_start_and_click_hour() {
        let mut a = Session {
            id: 1,
            user_id: "u".into(),
            start_ts: 7200 + 3500,
            clicks: clicks(&[4, 2]),
        };
        a.clicks[0].ts = 7200 + 3500;
        a.clicks[1].ts = 7200 + 3700;
        let mut b = a.clone();
        b.id = 2;
        b.start_ts = 7200 + 10;
        b.clicks[0].ts = 7210;
        b.clicks[1].ts = 7300;
        let buckets = bucket_hours(&[a, b]);
        assert_eq!(buckets.len(), 1);
        assert_eq!(buckets[0].start, 7200);
        assert_eq!(buckets[0].sessions, vec![1, 0]);
        assert_eq!(buckets[0].clicked, vec![ArticleIdx(2), ArticleIdx(4)]);
        assert_eq!(buckets[0].count(ArticleIdx(4)), 2);
        assert_eq!(buckets[0].count(ArticleIdx(2)), 1);
    }
}
