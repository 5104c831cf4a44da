use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use newsrec::baselines::{CoOccurrence, HourContext, SequentialRules, SrDecay};
use newsrec::content::{encode_corpus, EncoderConfig};
use newsrec::eval::{self, bucket_hours};
use newsrec::ingest::{generate_synthetic, SyntheticConfig};
use newsrec::nar::{NarConfig, NarRecommender};
use newsrec::{ArticleIdx, Dataset, EncoderKind, ProtocolConfig, Query, Recommender};

fn corpus() -> Dataset {
    let cfg = SyntheticConfig {
        n_sessions: Some(6000),
        ..SyntheticConfig::new(8, 500, 2000, 4, 1)
    };
    Dataset::from_synthetic(&generate_synthetic(&cfg).unwrap())
}

fn bench_encoders(c: &mut Criterion) {
    let data = corpus();
    let mut g = c.benchmark_group("encode");
    g.sample_size(10);
    g.bench_function("lsa_64", |b| {
        let cfg = EncoderConfig {
            dim: 64,
            ..EncoderConfig::new(EncoderKind::Lsa)
        };
        b.iter(|| encode_corpus(&cfg, black_box(&data.catalog)).unwrap())
    });
    g.finish();
}

fn bench_baselines(c: &mut Criterion) {
    let data = corpus();
    let buckets = bucket_hours(&data.sessions);
    let mut sr = SequentialRules::new(SrDecay::Inverse);
    let mut co = CoOccurrence::default();
    for (h, bucket) in buckets.iter().enumerate() {
        let recent = if h == 0 { &[][..] } else { &buckets[h - 1].clicked[..] };
        let ctx = HourContext {
            hour_start: bucket.start,
            recent,
        };
        for &si in &bucket.sessions {
            sr.observe(&data.sessions[si], &ctx);
            co.observe(&data.sessions[si], &ctx);
        }
    }
    let candidates: Vec<ArticleIdx> = (0..51).map(ArticleIdx).collect();
    let session = &data.sessions[data.sessions.len() / 2];
    let query = Query {
        session_id: session.id,
        clicks: &session.clicks[..1],
        next: None,
    };
    c.bench_function("score/sr_51", |b| b.iter(|| sr.score(black_box(&query), &candidates)));
    c.bench_function("score/co_51", |b| b.iter(|| co.score(black_box(&query), &candidates)));
}

fn bench_nar(c: &mut Criterion) {
    let data = corpus();
    let ace = Arc::new(encode_corpus(
        &EncoderConfig {
            dim: 32,
            ..EncoderConfig::new(EncoderKind::Lsa)
        },
        &data.catalog,
    )
    .unwrap());
    let buckets = bucket_hours(&data.sessions);
    let busiest = (1..buckets.len()).max_by_key(|&h| buckets[h].sessions.len()).unwrap();
    let ctx = HourContext {
        hour_start: buckets[busiest].start,
        recent: &buckets[busiest - 1].clicked,
    };
    let mut config = NarConfig::default();
    config.features.d_ace = 32;
    let mut g = c.benchmark_group("nar");
    g.sample_size(10);
    g.bench_function("train_hour", |b| {
        b.iter_batched(
            || NarRecommender::new(config.clone(), &data.catalog, Some(Arc::clone(&ace))).unwrap(),
            |mut nar| {
                for &si in &buckets[busiest].sessions {
                    nar.observe(&data.sessions[si], &ctx);
                }
                nar.end_hour(&ctx);
                nar
            },
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn bench_protocol(c: &mut Criterion) {
    let data = corpus();
    let protocol = ProtocolConfig {
        warmup_hours: 24,
        ..ProtocolConfig::default()
    };
    let mut g = c.benchmark_group("eval");
    g.sample_size(10);
    g.bench_function("run_sr_co", |b| {
        b.iter(|| {
            let mut recs: Vec<Box<dyn Recommender>> = vec![
                Box::new(SequentialRules::new(SrDecay::Inverse)),
                Box::new(CoOccurrence::default()),
            ];
            eval::run(black_box(&data), &mut recs, &protocol).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, bench_encoders, bench_baselines, bench_nar, bench_protocol);
criterion_main!(benches);
