use std::collections::{HashMap, HashSet};

use super::types::{ClickEvent, Session, Timestamp};

/// Inactivity gap that closes a session.
pub const SESSION_GAP_SECS: Timestamp = 30 * 60;
/// Sessions longer than this are truncated.
pub const MAX_SESSION_CLICKS: usize = 20;
pub const MIN_SESSION_CLICKS: usize = 2;

/// Splits a click stream into per-user sessions.
///
/// A click opens a new session when it comes `gap` seconds or more after the
/// previous click of the same user. Sessions are returned ordered by the
/// timestamp of their first click (user id breaks ties) and numbered in that
/// order.
pub fn sessionize(events: impl IntoIterator<Item = ClickEvent>, gap: Timestamp) -> Vec<Session> {
    let mut by_user: HashMap<String, Vec<ClickEvent>> = HashMap::new();
    for e in events {
        by_user.entry(e.user_id.clone()).or_default().push(e);
    }

    let mut sessions = Vec::new();
    for (user, mut clicks) in by_user {
        clicks.sort_by_key(|c| c.ts);
        let mut current: Vec<ClickEvent> = Vec::new();
        for c in clicks {
            if let Some(last) = current.last() {
                if c.ts - last.ts >= gap {
                    sessions.push(make_session(&user, std::mem::take(&mut current)));
                }
            }
            current.push(c);
        }
        if !current.is_empty() {
            sessions.push(make_session(&user, current));
        }
    }

    sessions.sort_by(|a, b| a.start_ts.cmp(&b.start_ts).then_with(|| a.user_id.cmp(&b.user_id)));
    for (i, s) in sessions.iter_mut().enumerate() {
        s.id = i as u64;
    }
    sessions
}

fn make_session(user: &str, clicks: Vec<ClickEvent>) -> Session {
    Session {
        id: 0,
        user_id: user.to_string(),
        start_ts: clicks[0].ts,
        clicks,
    }
}

/// Applies the per-session cleanup rules, in order:
///
/// 1. repeated clicks on an article are removed, keeping the first; a click
///    sharing its timestamp with the previously kept click is removed too,
///    so the remaining clicks are strictly ordered;
/// 2. if removals opened a gap of `gap` seconds or more, the session ends
///    before that gap;
/// 3. the session is truncated to [`MAX_SESSION_CLICKS`];
/// 4. sessions with fewer than [`MIN_SESSION_CLICKS`] are discarded.
pub fn preprocess_session(raw: Session, gap: Timestamp) -> Option<Session> {
    let mut seen = HashSet::new();
    let mut kept: Vec<ClickEvent> = Vec::with_capacity(raw.clicks.len().min(MAX_SESSION_CLICKS));
    for c in raw.clicks {
        if seen.contains(&c.article) {
            continue;
        }
        if let Some(prev) = kept.last() {
            if c.ts <= prev.ts {
                continue;
            }
            if c.ts - prev.ts >= gap {
                break;
            }
        }
        seen.insert(c.article);
        kept.push(c);
        if kept.len() == MAX_SESSION_CLICKS {
            break;
        }
    }
    if kept.len() < MIN_SESSION_CLICKS {
        return None;
    }
    Some(Session {
        id: raw.id,
        user_id: raw.user_id,
        start_ts: kept[0].ts,
        clicks: kept,
    })
}

/// Sessionizes, preprocesses and renumbers a click stream.
pub fn build_sessions(events: impl IntoIterator<Item = ClickEvent>, gap: Timestamp) -> Vec<Session> {
    let mut out: Vec<Session> = sessionize(events, gap)
        .into_iter()
        .filter_map(|s| preprocess_session(s, gap))
        .collect();
    for (i, s) in out.iter_mut().enumerate() {
        s.id = i as u64;
    }
    out
}

/// Checks the invariants every preprocessed session must satisfy.
pub fn check_session(s: &Session, gap: Timestamp) -> Result<(), String> {
    if s.clicks.len() < MIN_SESSION_CLICKS || s.clicks.len() > MAX_SESSION_CLICKS {
        return Err(format!("session {} has {} clicks", s.id, s.clicks.len()));
    }
    if s.start_ts != s.clicks[0].ts {
        return Err(format!("session {} start_ts mismatch", s.id));
    }
    let mut seen = HashSet::new();
    for (i, c) in s.clicks.iter().enumerate() {
        if c.user_id != s.user_id {
            return Err(format!("session {} mixes users", s.id));
        }
        if !seen.insert(c.article) {
            return Err(format!("session {} repeats article {:?}", s.id, c.article));
        }
        if i > 0 {
            let d = c.ts - s.clicks[i - 1].ts;
            if d <= 0 {
                return Err(format!("session {} not strictly ordered at {i}", s.id));
            }
            if d >= gap {
                return Err(format!("session {} has a {d}s gap at {i}", s.id));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::types::ArticleIdx;
    use proptest::prelude::*;

    fn click(user: &str, article: u32, ts: Timestamp) -> ClickEvent {
        ClickEvent {
            user_id: user.into(),
            article: ArticleIdx(article),
            ts,
            device: String::new(),
            os: String::new(),
            referrer: String::new(),
            city: None,
            region: None,
            country: None,
        }
    }

    fn raw(clicks: Vec<ClickEvent>) -> Session {
        Session {
            id: 0,
            user_id: clicks[0].user_id.clone(),
            start_ts: clicks[0].ts,
            clicks,
        }
    }

    fn split_points(sessions: &[Session]) -> Vec<Vec<(String, Timestamp)>> {
        sessions
            .iter()
            .map(|s| s.clicks.iter().map(|c| (c.user_id.clone(), c.ts)).collect())
            .collect()
    }

    #[test]
    fn forty_minute_gap_splits() {
        let s = sessionize(
            vec![click("u", 1, 0), click("u", 2, 600), click("u", 3, 3000)],
            SESSION_GAP_SECS,
        );
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].clicks.len(), 2);
        assert_eq!(s[1].start_ts, 3000);
    }

    #[test]
    fn twenty_nine_minutes_stays_together() {
        let s = sessionize(vec![click("u", 1, 0), click("u", 2, 29 * 60)], SESSION_GAP_SECS);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn exactly_thirty_minutes_splits() {
        let s = sessionize(vec![click("u", 1, 0), click("u", 2, 30 * 60)], SESSION_GAP_SECS);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn sessions_sorted_by_first_click() {
        let s = sessionize(
            vec![click("b", 1, 100), click("a", 1, 500), click("b", 2, 5000), click("a", 2, 50)],
            SESSION_GAP_SECS,
        );
        let starts: Vec<_> = s.iter().map(|s| (s.user_id.as_str(), s.start_ts)).collect();
        assert_eq!(starts, [("a", 50), ("b", 100), ("b", 5000)]);
        assert!(s.iter().enumerate().all(|(i, s)| s.id == i as u64));
    }

    #[test]
    fn dedup_keeps_first() {
        let s = preprocess_session(
            raw(vec![click("u", 1, 0), click("u", 1, 10), click("u", 2, 20)]),
            SESSION_GAP_SECS,
        )
        .unwrap();
        assert_eq!(s.articles().collect::<Vec<_>>(), [ArticleIdx(1), ArticleIdx(2)]);
        assert_eq!(s.clicks[1].ts, 20);
    }

    #[test]
    fn truncates_to_twenty() {
        let clicks = (0..25).map(|i| click("u", i, i as i64 * 10)).collect();
        let s = preprocess_session(raw(clicks), SESSION_GAP_SECS).unwrap();
        assert_eq!(s.clicks.len(), 20);
        assert_eq!(s.clicks[19].article, ArticleIdx(19));
    }

    #[test]
    fn single_article_session_discarded() {
        assert!(preprocess_session(raw(vec![click("u", 1, 0), click("u", 1, 5)]), SESSION_GAP_SECS).is_none());
    }

    #[test]
    fn repeated_click_counts_before_truncation() {
        // 22 clicks, 3 of them repeats: 19 distinct survive.
        let mut clicks: Vec<_> = (0..19).map(|i| click("u", i, i as i64 * 10)).collect();
        for (k, a) in [0u32, 5, 7].iter().enumerate() {
            clicks.push(click("u", *a, 1000 + k as i64));
        }
        let s = preprocess_session(raw(clicks), SESSION_GAP_SECS).unwrap();
        assert_eq!(s.clicks.len(), 19);
    }

    #[test]
    fn gap_opened_by_dedup_ends_session() {
        let s = preprocess_session(
            raw(vec![click("u", 1, 0), click("u", 2, 1200), click("u", 1, 2400), click("u", 3, 3600)]),
            SESSION_GAP_SECS,
        )
        .unwrap();
        assert_eq!(s.clicks.len(), 2);
        assert_eq!(check_session(&s, SESSION_GAP_SECS), Ok(()));
    }

    #[test]
    fn equal_timestamps_are_not_kept_twice() {
        let s = preprocess_session(
            raw(vec![click("u", 1, 0), click("u", 2, 0), click("u", 3, 5)]),
            SESSION_GAP_SECS,
        )
        .unwrap();
        assert_eq!(s.articles().collect::<Vec<_>>(), [ArticleIdx(1), ArticleIdx(3)]);
    }

    /// Brute-force oracle: walk every user's clicks in time order and cut
    /// whenever the gap reaches the threshold.
    fn scan_oracle(events: &[ClickEvent], gap: Timestamp) -> Vec<Vec<(String, Timestamp)>> {
        let mut users: Vec<String> = events.iter().map(|e| e.user_id.clone()).collect();
        users.sort();
        users.dedup();
        let mut out = Vec::new();
        for u in users {
            let mut ts: Vec<Timestamp> = events.iter().filter(|e| e.user_id == u).map(|e| e.ts).collect();
            ts.sort();
            let mut cur = vec![(u.clone(), ts[0])];
            for w in ts.windows(2) {
                if w[1] - w[0] >= gap {
                    out.push(std::mem::take(&mut cur));
                }
                cur.push((u.clone(), w[1]));
            }
            out.push(cur);
        }
        out.sort_by(|a, b| a[0].1.cmp(&b[0].1).then_with(|| a[0].0.cmp(&b[0].0)));
        out
    }

    #[test]
    fn thousand_random_events_match_scan_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut t = vec![0i64; 7];
        let mut events = Vec::new();
        for _ in 0..1000 {
            let u = rng.random_range(0..7);
            t[u] += rng.random_range(1..4000);
            events.push(click(&format!("user{u}"), rng.random_range(0..50), t[u]));
        }
        let got = split_points(&sessionize(events.clone(), SESSION_GAP_SECS));
        assert_eq!(got, scan_oracle(&events, SESSION_GAP_SECS));
    }

    fn arb_events() -> impl Strategy<Value = Vec<ClickEvent>> {
        prop::collection::vec((0u8..5, 0u32..30, 0i64..40_000), 1..300).prop_map(|v| {
            v.into_iter()
                .map(|(u, a, ts)| click(&format!("u{u}"), a, ts))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn emitted_sessions_satisfy_invariants(events in arb_events()) {
            for s in build_sessions(events, SESSION_GAP_SECS) {
                prop_assert_eq!(check_session(&s, SESSION_GAP_SECS), Ok(()));
            }
        }

        #[test]
        fn resessionizing_is_identity(events in arb_events()) {
            let first = sessionize(events, SESSION_GAP_SECS);
            let again = sessionize(first.iter().flat_map(|s| s.clicks.clone()), SESSION_GAP_SECS);
            prop_assert_eq!(split_points(&first), split_points(&again));

            let kept = build_sessions(first.iter().flat_map(|s| s.clicks.clone()), SESSION_GAP_SECS);
            let kept_again = sessionize(kept.iter().flat_map(|s| s.clicks.clone()), SESSION_GAP_SECS);
            prop_assert_eq!(split_points(&kept), split_points(&kept_again));
        }
    }
}
