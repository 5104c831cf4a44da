//! Seeded generator for desk-scale test corpora.
//!
//! Articles belong to latent topics with disjoint topic vocabularies mixed
//! into a shared common vocabulary. Categories are coarser than topics (a
//! category groups several topics), so article text carries information the
//! category label does not. Articles stay "live" for two days after
//! publication, with attention decaying exponentially with age.
//!
//! Sessions mix four behaviours when choosing the next click: following a
//! "related coverage" link from the current article to an older article of
//! the same story, moving on to earlier coverage of the current topic,
//! drifting to one of the user's preferred topics, or picking anything
//! popular. The first two make reading order informative: readers move from
//! fresh articles towards background, rarely the other way.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;

use super::adapters::{ARTICLES_FILE, EVENTS_FILE};
use super::canonical::{write_articles, write_events, RawClick};
use super::session::SESSION_GAP_SECS;
use super::types::{Article, Timestamp};
use crate::error::{Error, Result};

/// 2017-10-01T00:00:00Z; the simulated stream starts at this midnight.
pub const SYNTHETIC_EPOCH: Timestamp = 1_506_816_000;

const HOUR: Timestamp = 3600;
const DAY: Timestamp = 24 * HOUR;
const LIFETIME: Timestamp = 2 * DAY;
const DECAY_HOURS: f64 = 8.0;
const COMMON_WORDS: usize = 150;
const TOPIC_WORDS: usize = 60;
const DEVICES: &[&str] = &["mobile", "desktop", "tablet"];
const OSES: &[&str] = &["android", "ios", "windows", "macos", "linux"];
const REFERRERS: &[&str] = &["direct", "search", "social", "internal", "newsletter"];
const DIURNAL: [f64; 24] = [
    0.3, 0.2, 0.15, 0.1, 0.1, 0.2, 0.5, 0.9, 1.2, 1.3, 1.2, 1.1, 1.2, 1.1, 1.0, 1.0, 1.0, 1.1, 1.2, 1.3,
    1.3, 1.1, 0.8, 0.5,
];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n_topics: usize,
    pub n_articles: usize,
    pub n_users: usize,
    pub days: usize,
    pub seed: u64,
    /// Defaults to three sessions per user.
    pub n_sessions: Option<usize>,
    pub topics_per_category: usize,
    pub p_follow_link: f64,
    pub p_same_topic: f64,
    pub p_user_topic: f64,
    /// Share of body words drawn from the article's topic vocabulary.
    pub topic_word_share: f64,
}

impl SyntheticConfig {
    pub fn new(n_topics: usize, n_articles: usize, n_users: usize, days: usize, seed: u64) -> Self {
        SyntheticConfig {
            n_topics,
            n_articles,
            n_users,
            days,
            seed,
            n_sessions: None,
            topics_per_category: 4,
            p_follow_link: 0.25,
            p_same_topic: 0.35,
            p_user_topic: 0.25,
            topic_word_share: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_topics == 0 || self.n_articles == 0 || self.n_users == 0 || self.days == 0 {
            return Err(Error::Config("synthetic corpus counts must all be >= 1".into()));
        }
        if self.topics_per_category == 0 {
            return Err(Error::Config("topics_per_category must be >= 1".into()));
        }
        let p = [self.p_follow_link, self.p_same_topic, self.p_user_topic, self.topic_word_share];
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) || self.p_follow_link + self.p_same_topic + self.p_user_topic > 1.0 {
            return Err(Error::Config("synthetic behaviour probabilities must lie in [0,1] and sum to <= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub articles: Vec<Article>,
    /// Latent topic of `articles[i]`.
    pub topics: Vec<usize>,
    /// Clicks in non-decreasing timestamp order.
    pub clicks: Vec<RawClick>,
}

impl SyntheticCorpus {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        write_articles(&out_dir.join(ARTICLES_FILE), &self.articles)?;
        write_events(&out_dir.join(EVENTS_FILE), &self.clicks)
    }
}

struct Vocab {
    common: Vec<String>,
    topic: Vec<Vec<String>>,
    common_dist: WeightedIndex<f64>,
    topic_dist: WeightedIndex<f64>,
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((0..n).map(|i| 1.0 / (i as f64 + 1.0).powf(0.8))).expect("non-empty")
}

impl Vocab {
    fn new(n_topics: usize) -> Self {
        Vocab {
            common: (0..COMMON_WORDS).map(|i| format!("c{i}")).collect(),
            topic: (0..n_topics)
                .map(|t| (0..TOPIC_WORDS).map(|i| format!("t{t}w{i}")).collect())
                .collect(),
            common_dist: zipf(COMMON_WORDS),
            topic_dist: zipf(TOPIC_WORDS),
        }
    }

    fn word(&self, topic: usize, topic_share: f64, rng: &mut impl Rng) -> &str {
        if rng.random_bool(topic_share) {
            &self.topic[topic][self.topic_dist.sample(rng)]
        } else {
            &self.common[self.common_dist.sample(rng)]
        }
    }

    fn sentence(&self, topic: usize, share: f64, rng: &mut impl Rng) -> String {
        let n = rng.random_range(6..=12);
        let comma = (n > 8 && rng.random_bool(0.3)).then(|| rng.random_range(3..n - 2));
        let mut s = String::new();
        for i in 0..n {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(self.word(topic, share, rng));
            if comma == Some(i) {
                s.push(',');
            }
        }
        capitalize(&s) + "."
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

struct User {
    id: String,
    topics: WeightedIndex<f64>,
    device: &'static str,
    os: &'static str,
    city: String,
    region: String,
}

fn make_user(i: usize, n_topics: usize, rng: &mut impl Rng) -> User {
    let primary = rng.random_range(0..n_topics);
    let secondary = rng.random_range(0..n_topics);
    let mut w = vec![0.15 / n_topics as f64; n_topics];
    w[primary] += 0.6;
    w[secondary] += 0.25;
    let region = rng.random_range(0..8);
    User {
        id: format!("u{i:06}"),
        topics: WeightedIndex::new(w).expect("positive weights"),
        device: DEVICES[rng.random_range(0..DEVICES.len())],
        os: OSES[rng.random_range(0..OSES.len())],
        city: format!("city{}", region * 4 + rng.random_range(0..4)),
        region: format!("region{region}"),
    }
}

struct ArticleState {
    published: Vec<Timestamp>,
    quality: Vec<f64>,
    topic: Vec<usize>,
    links: Vec<Vec<usize>>,
    /// Article indices per topic, ordered by publish time.
    by_topic: Vec<Vec<usize>>,
    /// All article indices ordered by publish time.
    by_time: Vec<usize>,
}

impl ArticleState {
    fn weight(&self, a: usize, t: Timestamp) -> f64 {
        let age = t - self.published[a];
        if !(0..LIFETIME).contains(&age) {
            return 0.0;
        }
        self.quality[a] * (-(age as f64) / 3600.0 / DECAY_HOURS).exp()
    }

    fn live<'a>(&'a self, list: &'a [usize], t: Timestamp) -> &'a [usize] {
        let lo = list.partition_point(|&a| self.published[a] <= t - LIFETIME);
        let hi = list.partition_point(|&a| self.published[a] <= t);
        &list[lo..hi]
    }

    fn pick(&self, list: &[usize], t: Timestamp, exclude: &[usize], rng: &mut impl Rng) -> Option<usize> {
        let live = self.live(list, t);
        let weights: Vec<f64> = live
            .iter()
            .map(|&a| if exclude.contains(&a) { 0.0 } else { self.weight(a, t) })
            .collect();
        let dist = WeightedIndex::new(&weights).ok()?;
        Some(live[dist.sample(rng)])
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = Vocab::new(cfg.n_topics);
    let start = SYNTHETIC_EPOCH;
    let end = start + cfg.days as Timestamp * DAY;
    let quality = LogNormal::new(0.0, 0.8).expect("valid lognormal");

    // Articles, in publish order so ids sort chronologically.
    let mut published: Vec<Timestamp> = (0..cfg.n_articles)
        .map(|_| rng.random_range(start - DAY..end))
        .collect();
    published.sort_unstable();
    let topic: Vec<usize> = (0..cfg.n_articles).map(|_| rng.random_range(0..cfg.n_topics)).collect();
    let quality: Vec<f64> = (0..cfg.n_articles).map(|_| quality.sample(&mut rng)).collect();

    let mut by_topic = vec![Vec::new(); cfg.n_topics];
    for (a, &t) in topic.iter().enumerate() {
        by_topic[t].push(a);
    }
    let mut links = vec![Vec::new(); cfg.n_articles];
    for list in &by_topic {
        for (pos, &a) in list.iter().enumerate() {
            let earlier = &list[pos.saturating_sub(6)..pos];
            for &b in earlier.iter().rev() {
                if published[a] - published[b] < LIFETIME && links[a].len() < 3 && rng.random_bool(0.6) {
                    links[a].push(b);
                }
            }
        }
    }

    let mut articles = Vec::with_capacity(cfg.n_articles);
    for a in 0..cfg.n_articles {
        let t = topic[a];
        let title_len = rng.random_range(4..=8);
        let title = capitalize(
            &(0..title_len)
                .map(|_| vocab.word(t, cfg.topic_word_share.max(0.7), &mut rng).to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        let sentences = rng.random_range(6..=16);
        let body = (0..sentences)
            .map(|_| vocab.sentence(t, cfg.topic_word_share, &mut rng))
            .collect::<Vec<_>>()
            .join(" ");
        articles.push(Article {
            id: format!("a{a:06}"),
            published_at: published[a],
            category_id: (t / cfg.topics_per_category) as i64,
            author_id: None,
            title,
            body,
        });
    }

    let state = ArticleState {
        by_time: (0..cfg.n_articles).collect(),
        published,
        quality,
        topic: topic.clone(),
        links,
        by_topic,
    };

    let users: Vec<User> = (0..cfg.n_users).map(|i| make_user(i, cfg.n_topics, &mut rng)).collect();
    let n_sessions = cfg.n_sessions.unwrap_or(cfg.n_users * 3);
    let diurnal = WeightedIndex::new(DIURNAL).expect("positive weights");
    let mut starts: Vec<(Timestamp, usize)> = (0..n_sessions)
        .map(|_| {
            let day = rng.random_range(0..cfg.days as Timestamp);
            let hour = diurnal.sample(&mut rng) as Timestamp;
            let t = start + day * DAY + hour * HOUR + rng.random_range(0..HOUR);
            (t, rng.random_range(0..cfg.n_users))
        })
        .collect();
    starts.sort_unstable();

    let mut user_free_at = vec![Timestamp::MIN; cfg.n_users];
    let mut clicks = Vec::new();
    for (t0, u) in starts {
        let t0 = t0.max(user_free_at[u].saturating_add(SESSION_GAP_SECS + 60));
        if t0 >= end {
            continue;
        }
        let user = &users[u];
        let referrer = REFERRERS[rng.random_range(0..REFERRERS.len())];
        let mut len = 2;
        while len < 25 && rng.random_bool(0.45) {
            len += 1;
        }
        let mut t = t0;
        let mut viewed: Vec<usize> = Vec::with_capacity(len);
        for k in 0..len {
            let next = if k == 0 {
                let topic = user.topics.sample(&mut rng);
                state
                    .pick(&state.by_topic[topic], t, &[], &mut rng)
                    .or_else(|| state.pick(&state.by_time, t, &[], &mut rng))
            } else {
                let cur = *viewed.last().expect("non-empty");
                let r: f64 = rng.random();
                let linked: Vec<usize> = state.links[cur]
                    .iter()
                    .copied()
                    .filter(|&b| state.weight(b, t) > 0.0 && !viewed.contains(&b))
                    .collect();
                if r < cfg.p_follow_link && !linked.is_empty() {
                    Some(linked[rng.random_range(0..linked.len())])
                } else if r < cfg.p_follow_link + cfg.p_same_topic {
                    // Earlier coverage if any is still live, else anything on the topic.
                    let list = &state.by_topic[state.topic[cur]];
                    let older = list.partition_point(|&a| state.published[a] < state.published[cur]);
                    state
                        .pick(&list[..older], t, &viewed, &mut rng)
                        .or_else(|| state.pick(list, t, &viewed, &mut rng))
                } else if r < cfg.p_follow_link + cfg.p_same_topic + cfg.p_user_topic {
                    let topic = user.topics.sample(&mut rng);
                    state.pick(&state.by_topic[topic], t, &viewed, &mut rng)
                } else {
                    state.pick(&state.by_time, t, &viewed, &mut rng)
                }
                .or_else(|| state.pick(&state.by_time, t, &viewed, &mut rng))
            };
            let Some(a) = next else { break };
            // Occasional re-read of the previous article, removed by preprocessing.
            if k > 0 && rng.random_bool(0.05) {
                let prev = *viewed.last().expect("non-empty");
                clicks.push(click(user, referrer, &articles[prev].id, t));
                t += rng.random_range(5..60);
            }
            clicks.push(click(user, referrer, &articles[a].id, t));
            viewed.push(a);
            t += rng.random_range(20..600);
        }
        user_free_at[u] = t;
    }
    clicks.sort_by_key(|c| c.ts);

    Ok(SyntheticCorpus {
        articles,
        topics: topic,
        clicks,
    })
}

fn click(user: &User, referrer: &str, article_id: &str, ts: Timestamp) -> RawClick {
    RawClick {
        user_id: user.id.clone(),
        article_id: article_id.to_string(),
        ts,
        device: user.device.to_string(),
        os: user.os.to_string(),
        referrer: referrer.to_string(),
        city: Some(user.city.clone()),
        region: Some(user.region.clone()),
        country: Some("br".to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::session::{build_sessions, check_session};
    use crate::ingest::types::Catalog;

    #[test]
    fn same_seed_same_bytes() {
        let cfg = SyntheticConfig::new(4, 60, 40, 2, 7);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_synthetic(&cfg).unwrap().write(a.path()).unwrap();
        generate_synthetic(&cfg).unwrap().write(b.path()).unwrap();
        for f in [EVENTS_FILE, ARTICLES_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
        let c = generate_synthetic(&SyntheticConfig::new(4, 60, 40, 2, 8)).unwrap();
        assert_ne!(c.clicks, generate_synthetic(&cfg).unwrap().clicks);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(generate_synthetic(&SyntheticConfig::new(0, 10, 10, 1, 1)).is_err());
        assert!(generate_synthetic(&SyntheticConfig::new(1, 10, 10, 0, 1)).is_err());
    }

    #[test]
    fn sixteen_days_thousand_users_sessions_are_valid() {
        let corpus = generate_synthetic(&SyntheticConfig::new(10, 400, 1000, 16, 3)).unwrap();
        let (catalog, dup) = Catalog::new(corpus.articles.clone());
        assert_eq!(dup, 0);
        let events: Vec<_> = corpus.clicks.into_iter().map(|c| c.resolve(&catalog).unwrap()).collect();
        let sessions = build_sessions(events, SESSION_GAP_SECS);
        assert!(sessions.len() > 2000, "{}", sessions.len());
        for s in &sessions {
            check_session(s, SESSION_GAP_SECS).unwrap();
        }
        let avg = sessions.iter().map(|s| s.len()).sum::<usize>() as f64 / sessions.len() as f64;
        assert!((2.3..3.6).contains(&avg), "avg session length {avg}");
    }

    #[test]
    fn clicks_only_hit_published_articles() {
        let corpus = generate_synthetic(&SyntheticConfig::new(5, 200, 200, 3, 5)).unwrap();
        let published: std::collections::HashMap<_, _> =
            corpus.articles.iter().map(|a| (a.id.clone(), a.published_at)).collect();
        for c in &corpus.clicks {
            assert!(published[&c.article_id] <= c.ts);
        }
    }
}
