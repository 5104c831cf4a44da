use super::*;
use crate::ingest::{Article, ClickEvent};

fn catalog(n: usize) -> Catalog {
    let articles = (0..n)
        .map(|i| Article {
            id: format!("a{i:03}"),
            published_at: i as i64 * 600,
            category_id: (i % 3) as i64,
            author_id: Some((i % 2) as i64),
            title: String::new(),
            body: String::new(),
        })
        .collect();
    Catalog::new(articles).0
}

fn store(n: usize, dim: usize) -> Arc<EmbeddingStore> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let vectors = (0..n)
        .map(|i| {
            (i % 5 != 4).then(|| {
                crate::content::l2_normalized((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
            })
        })
        .collect();
    Arc::new(EmbeddingStore::from_vectors(dim, vectors).unwrap())
}

fn small_config(use_ace: bool) -> NarConfig {
    NarConfig {
        features: FeatureSpec {
            use_ace,
            d_ace: 3,
            use_author: true,
            category: TableSpec { buckets: 4, dim: 2 },
            author: TableSpec { buckets: 3, dim: 1 },
            context: TableSpec { buckets: 3, dim: 1 },
            dow_dim: 1,
        },
        hidden: 4,
        head_hidden: 5,
        batch_size: 2,
        n_train_neg: 3,
        lr: 0.01,
        ..NarConfig::default()
    }
}

fn model(use_ace: bool) -> NarRecommender {
    let cat = catalog(20);
    let ace = use_ace.then(|| store(20, 3));
    NarRecommender::new(small_config(use_ace), &cat, ace).unwrap()
}

fn session(id: u64, items: &[u32], t0: i64) -> Session {
    let clicks = items
        .iter()
        .enumerate()
        .map(|(k, &a)| ClickEvent {
            user_id: format!("u{id}"),
            article: ArticleIdx(a),
            ts: t0 + 120 * k as i64,
            device: ["mobile", "desktop"][k % 2].into(),
            os: "android".into(),
            referrer: "search".into(),
            city: Some("x".into()),
            region: None,
            country: None,
        })
        .collect();
    Session {
        id,
        user_id: format!("u{id}"),
        start_ts: t0,
        clicks,
    }
}

const POOL: [ArticleIdx; 8] = [
    ArticleIdx(1),
    ArticleIdx(3),
    ArticleIdx(5),
    ArticleIdx(7),
    ArticleIdx(9),
    ArticleIdx(11),
    ArticleIdx(13),
    ArticleIdx(17),
];

fn ctx() -> HourContext<'static> {
    HourContext {
        hour_start: 36_000,
        recent: &POOL,
    }
}

fn train(m: &mut NarRecommender, n: usize) {
    for i in 0..n {
        let s = session(i as u64, &[(i % 7) as u32, (i % 7 + 2) as u32, 4 + (i % 3) as u32], 36_000 + i as i64 * 60);
        m.observe(&s, &ctx());
    }
    m.end_hour(&ctx());
}

#[test]
fn full_model_gradient_including_embeddings() {
    let mut base = model(true);
    train(&mut base, 6);
    let s = session(99, &[0, 2, 4], 40_000);
    let mut a = base_clone(&base);
    a.grad.iter_mut().for_each(|g| *g = 0.0);
    a.accumulate_session(&s, &ctx());
    let analytic = a.grad.clone();
    let eps = 1e-5;
    let loss_at = |theta: &[f64]| {
        let mut m = base_clone(&base);
        m.theta.copy_from_slice(theta);
        m.accumulate_session(&s, &ctx()).0
    };
    let mut theta = base.theta.clone();
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + eps;
        let up = loss_at(&theta);
        theta[i] = orig - eps;
        let down = loss_at(&theta);
        theta[i] = orig;
        let num = (up - down) / (2.0 * eps);
        worst = worst.max((num - analytic[i]).abs() / (1e-6 + num.abs().max(analytic[i].abs())));
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

fn base_clone(m: &NarRecommender) -> NarRecommender {
    let cat = catalog(20);
    let ace = m.config.features.use_ace.then(|| store(20, 3));
    let mut c = NarRecommender::new(m.config.clone(), &cat, ace).unwrap();
    c.restore(&m.snapshot()).unwrap();
    c
}

#[test]
fn no_ace_input_is_smaller_by_ace_and_presence() {
    let with = model(true);
    let without = model(false);
    assert_eq!(with.d_in() - without.d_in(), 3 + 1);
    assert_eq!(without.name(), "No-ACE");
}

#[test]
fn training_is_deterministic() {
    let mut a = model(true);
    let mut b = model(true);
    train(&mut a, 9);
    train(&mut b, 9);
    assert_eq!(a.loss_history(), b.loss_history());
    assert_eq!(a.params(), b.params());
    assert_eq!(a.optimizer_steps(), 5);
}

#[test]
fn loss_decreases_on_repeated_pattern() {
    let mut m = model(true);
    let s = session(1, &[0, 2, 6], 36_000);
    for _ in 0..300 {
        m.observe(&s, &ctx());
    }
    let h = m.loss_history();
    let first: f64 = h[..10].iter().sum::<f64>() / 10.0;
    let last: f64 = h[h.len() - 10..].iter().sum::<f64>() / 10.0;
    assert!(last < 0.5 * first, "{first} -> {last}");
}

#[test]
fn scoring_does_not_change_state_and_is_stable() {
    let mut m = model(true);
    train(&mut m, 4);
    let before = m.state_digest();
    let s = session(5, &[1, 2], 50_000);
    let q = Query::new(5, &s.clicks[..1]);
    let cands: Vec<ArticleIdx> = (0..20).map(ArticleIdx).collect();
    let a = m.score(&q, &cands);
    let b = m.score(&q, &cands);
    assert_eq!(a, b);
    assert_eq!(a.len(), 20);
    assert!(a.iter().all(|s| s.is_finite()));
    assert_eq!(m.state_digest(), before);
}

#[test]
fn snapshot_resume_continues_identically() {
    let mut a = model(false);
    train(&mut a, 3);
    // Leave a partially filled batch pending.
    a.observe(&session(50, &[3, 8], 37_000), &ctx());
    let mut b = base_clone(&a);
    assert_eq!(b.snapshot(), a.snapshot());
    train(&mut a, 5);
    train(&mut b, 5);
    assert_eq!(a.params(), b.params());
    assert_eq!(a.loss_history(), b.loss_history());
}

#[test]
fn snapshot_with_other_config_rejected() {
    let a = model(true);
    let mut b = model(false);
    assert!(b.restore(&a.snapshot()).is_err());
}

#[test]
fn empty_pool_trains_nothing() {
    let mut m = model(true);
    let c = HourContext {
        hour_start: 0,
        recent: &[],
    };
    m.observe(&session(1, &[0, 1, 2], 0), &c);
    m.end_hour(&c);
    assert_eq!(m.optimizer_steps(), 0);
    assert_eq!(m.features().popularity.total(), 3);
}

#[test]
fn adam_first_step_moves_by_lr() {
    let mut adam = Adam::new(2, 0.1, 0.9, 0.999, 1e-8);
    let mut theta = vec![1.0, -1.0];
    adam.step(&mut theta, &[3.0, -0.5]);
    assert!((theta[0] - 0.9).abs() < 1e-6 && (theta[1] + 0.9).abs() < 1e-6);
}
