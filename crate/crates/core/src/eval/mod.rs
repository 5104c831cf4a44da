//! Hour-by-hour replay of a session stream: recommenders train on every
//! hour, and on evaluation hours are first frozen and asked to rank each
//! true next click among 50 sampled recently-clicked articles.

mod metrics;
mod popularity;
mod report;
mod sampling;
mod schedule;
mod ttest;

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use metrics::{coverage_at_n, esi_r_at_n, hr_at_n, mrr_at_n, rank_of, ESI_DISCOUNT};
pub use popularity::PopularityEstimator;
pub use report::{
    session_means, HourRow, MetricValues, MetricsReport, RecommenderSummary, SampleResult, SampleValues,
    Significance, SAMPLE_METRICS,
};
pub use sampling::{sample_candidates, CandidateSample};
pub use schedule::{bucket_hours, hour_floor, HourBucket, Schedule, ScheduleStep, HOUR_SECS};
pub use ttest::{paired_ttest, PairedTTest, SIGNIFICANCE_LEVEL};

use crate::baselines::{rank_candidates, HourContext, Query, Recommender};
use crate::error::{Error, Result};
use crate::ingest::{ArticleIdx, Dataset};
use crate::keyvalue::KeyValues;

pub const DEFAULT_WARMUP_HOURS: i64 = 48;
pub const DEFAULT_EVAL_EVERY: i64 = 5;
pub const DEFAULT_EVAL_NEGATIVES: usize = 50;
pub const DEFAULT_LIST_LEN: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub warmup_hours: i64,
    pub eval_every: i64,
    pub n_eval_neg: usize,
    pub list_len: usize,
    /// Seeds negative sampling.
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            warmup_hours: DEFAULT_WARMUP_HOURS,
            eval_every: DEFAULT_EVAL_EVERY,
            n_eval_neg: DEFAULT_EVAL_NEGATIVES,
            list_len: DEFAULT_LIST_LEN,
            seed: 1,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_hours < 0 || self.eval_every < 1 {
            return Err(Error::Config("eval.warmup_hours must be >= 0 and eval.every >= 1".into()));
        }
        if self.n_eval_neg == 0 || self.list_len == 0 {
            return Err(Error::Config("eval.n_neg and eval.list_len must be >= 1".into()));
        }
        Ok(())
    }

    pub fn manifest(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("eval.warmup_hours", self.warmup_hours.to_string());
        kv.insert("eval.every", self.eval_every.to_string());
        kv.insert("eval.n_neg", self.n_eval_neg.to_string());
        kv.insert("eval.list_len", self.list_len.to_string());
        kv.insert("eval.seed", self.seed.to_string());
        kv
    }
}

type SampleValuesRow = Vec<SampleValues>;

fn check_frozen(recs: &[Box<dyn Recommender>], before: &[u64], hour: i64) -> Result<()> {
    for (r, &d) in recs.iter().zip(before) {
        if r.state_digest() != d {
            return Err(Error::Contract(format!(
                "recommender `{}` changed state while evaluating hour {hour}",
                r.name()
            )));
        }
    }
    Ok(())
}

/// Replays `dataset` through `recommenders` following `protocol`.
///
/// Candidate sampling is sequential; scoring within an evaluation hour runs
/// in parallel against the frozen recommenders and is merged back in
/// sampling order, so results do not depend on the thread count.
pub fn run(dataset: &Dataset, recommenders: &mut [Box<dyn Recommender>], protocol: &ProtocolConfig) -> Result<MetricsReport> {
    protocol.validate()?;
    let names: Vec<String> = recommenders.iter().map(|r| r.name().to_string()).collect();
    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(Error::Config(format!("recommender label `{}` used twice", dup.1)));
    }
    let buckets = bucket_hours(&dataset.sessions);
    let schedule = Schedule::new(buckets.len() as i64, protocol.warmup_hours, protocol.eval_every)?;
    let n = protocol.list_len;
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let mut estimator = PopularityEstimator::default();
    let mut samples: Vec<SampleResult> = Vec::new();
    let mut rows: Vec<HourRow> = Vec::new();
    let no_clicks = HourBucket::default();

    for (h, bucket) in buckets.iter().enumerate() {
        let prev = if h == 0 { &no_clicks } else { &buckets[h - 1] };
        let ctx = HourContext {
            hour_start: bucket.start,
            recent: &prev.clicked,
        };
        for r in recommenders.iter_mut() {
            r.advance_clock(bucket.start);
        }

        if schedule.is_eval(h as i64) {
            let before: Vec<u64> = recommenders.iter().map(|r| r.state_digest()).collect();
            let mut tasks = Vec::new();
            let mut skipped = 0;
            let mut small = 0;
            for &si in &bucket.sessions {
                let session = &dataset.sessions[si];
                let viewed: Vec<ArticleIdx> = session.articles().collect();
                for p in 1..session.len() {
                    let positive = session.clicks[p].article;
                    let Some(sample) = sample_candidates(positive, &viewed, &prev.clicked, protocol.n_eval_neg, &mut rng)
                    else {
                        skipped += 1;
                        continue;
                    };
                    if sample.is_small(protocol.n_eval_neg) {
                        small += 1;
                    }
                    tasks.push((si, p, sample));
                }
            }
            let frozen: &[Box<dyn Recommender>] = recommenders;
            let scored: Vec<Result<(SampleValuesRow, Vec<Vec<ArticleIdx>>)>> = tasks
                .par_iter()
                .map(|(si, p, sample)| {
                    let session = &dataset.sessions[*si];
                    let positive = session.clicks[*p].article;
                    let mut candidates = Vec::with_capacity(sample.negatives.len() + 1);
                    candidates.push(positive);
                    candidates.extend_from_slice(&sample.negatives);
                    let query = Query {
                        session_id: session.id,
                        clicks: &session.clicks[..*p],
                        next: Some(positive),
                    };
                    let mut values = Vec::with_capacity(frozen.len());
                    let mut tops = Vec::with_capacity(frozen.len());
                    for r in frozen {
                        let scores = r.score(&query, &candidates);
                        if scores.len() != candidates.len() {
                            return Err(Error::Contract(format!(
                                "recommender `{}` returned {} scores for {} candidates",
                                r.name(),
                                scores.len(),
                                candidates.len()
                            )));
                        }
                        let ranking: Vec<ArticleIdx> = rank_candidates(&candidates, &scores, |a| prev.count(a))
                            .into_iter()
                            .map(|i| candidates[i])
                            .collect();
                        values.push([
                            hr_at_n(&ranking, positive, n)?,
                            mrr_at_n(&ranking, positive, n)?,
                            esi_r_at_n(&ranking, &estimator, n),
                        ]);
                        tops.push(ranking[..n.min(ranking.len())].to_vec());
                    }
                    Ok((values, tops))
                })
                .collect();
            let mut top_lists: Vec<Vec<Vec<ArticleIdx>>> = vec![Vec::new(); names.len()];
            for ((si, p, sample), result) in tasks.iter().zip(scored) {
                let (values, tops) = result?;
                for (lists, top) in top_lists.iter_mut().zip(tops) {
                    lists.push(top);
                }
                samples.push(SampleResult {
                    hour: h as i64,
                    session_id: dataset.sessions[*si].id,
                    prefix_len: *p,
                    pool_size: sample.pool_size,
                    values,
                });
            }
            check_frozen(recommenders, &before, h as i64)?;
            let recommendable: BTreeSet<ArticleIdx> = prev.clicked.iter().copied().collect();
            rows.push(HourRow {
                hour: h as i64,
                hour_start: bucket.start,
                samples: 0,
                skipped_empty_pool: skipped,
                small_pool: small,
                recommendable: recommendable.len(),
                values: top_lists
                    .iter()
                    .map(|lists| MetricValues {
                        hr: 0.0,
                        mrr: 0.0,
                        cov: coverage_at_n(lists, &recommendable, n),
                        esi_r: 0.0,
                    })
                    .collect(),
            });
            log::info!(
                "hour {h}: {} samples, {skipped} skipped",
                samples.iter().rev().take_while(|s| s.hour == h as i64).count()
            );
        }

        for &si in &bucket.sessions {
            let session = &dataset.sessions[si];
            for r in recommenders.iter_mut() {
                r.observe(session, &ctx);
            }
            for a in session.articles() {
                estimator.observe(a);
            }
        }
        for r in recommenders.iter_mut() {
            r.end_hour(&ctx);
        }
    }

    let mut manifest: BTreeMap<String, String> =
        protocol.manifest().iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    manifest.insert("eval.stream_hours".into(), schedule.hours.to_string());
    MetricsReport::build(names, n, rows, &samples, manifest)
}
