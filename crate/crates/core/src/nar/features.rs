//! Input assembly: per-click vectors built from the article content
//! embedding, article metadata, article context (novelty, recency) and user
//! context. Categorical fields are hashed into trainable embedding tables
//! that live in the model's parameter buffer.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::codec::{fnv1a, Reader, Writer};
use crate::content::EmbeddingStore;
use crate::error::{Error, Result};
use crate::eval::PopularityEstimator;
use crate::ingest::{ArticleIdx, Catalog, ClickEvent, Timestamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableSpec {
    pub buckets: usize,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSpec {
    pub use_ace: bool,
    pub d_ace: usize,
    pub use_author: bool,
    pub category: TableSpec,
    pub author: TableSpec,
    /// Shared by device, os, referrer, city, region and country.
    pub context: TableSpec,
    pub dow_dim: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            use_ace: true,
            d_ace: 250,
            use_author: false,
            category: TableSpec { buckets: 512, dim: 16 },
            author: TableSpec { buckets: 512, dim: 16 },
            context: TableSpec { buckets: 64, dim: 4 },
            dow_dim: 4,
        }
    }
}

const CONTEXT_FIELDS: [&str; 6] = ["device", "os", "referrer", "city", "region", "country"];

impl FeatureSpec {
    /// Size of the article part: ACE and presence bit, category, author,
    /// novelty, recency.
    pub fn d_article(&self) -> usize {
        let ace = if self.use_ace { self.d_ace + 1 } else { 0 };
        let author = if self.use_author { self.author.dim } else { 0 };
        ace + self.category.dim + author + 2
    }

    /// Size of the user-context part: six hashed fields, day of week, and
    /// the hour of day as a (sin, cos) pair.
    pub fn d_context(&self) -> usize {
        CONTEXT_FIELDS.len() * self.context.dim + self.dow_dim + 2
    }

    pub fn d_in(&self) -> usize {
        self.d_article() + self.d_context()
    }

    /// `(name, rows, dim)` of every embedding table, in buffer order.
    pub fn tables(&self) -> Vec<(&'static str, usize, usize)> {
        let mut t = vec![("emb.category", self.category.buckets, self.category.dim)];
        if self.use_author {
            t.push(("emb.author", self.author.buckets, self.author.dim));
        }
        for f in CONTEXT_FIELDS {
            t.push((context_table_name(f), self.context.buckets, self.context.dim));
        }
        t.push(("emb.dow", 7, self.dow_dim));
        t
    }

    pub fn n_table_params(&self) -> usize {
        self.tables().iter().map(|&(_, r, d)| r * d).sum()
    }

    pub fn write(&self, w: &mut Writer) {
        w.u8(self.use_ace as u8);
        w.len(self.d_ace);
        w.u8(self.use_author as u8);
        for t in [self.category, self.author, self.context] {
            w.len(t.buckets);
            w.len(t.dim);
        }
        w.len(self.dow_dim);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let use_ace = r.u8()? != 0;
        let d_ace = r.u64()? as usize;
        let use_author = r.u8()? != 0;
        let mut t = [TableSpec { buckets: 0, dim: 0 }; 3];
        for s in &mut t {
            s.buckets = r.u64()? as usize;
            s.dim = r.u64()? as usize;
        }
        Ok(FeatureSpec {
            use_ace,
            d_ace,
            use_author,
            category: t[0],
            author: t[1],
            context: t[2],
            dow_dim: r.u64()? as usize,
        })
    }
}

fn context_table_name(field: &str) -> &'static str {
    match field {
        "device" => "emb.device",
        "os" => "emb.os",
        "referrer" => "emb.referrer",
        "city" => "emb.city",
        "region" => "emb.region",
        _ => "emb.country",
    }
}

/// Bucket 0 holds absent values; others hash into `1..buckets`.
pub fn bucket_of_str(value: Option<&str>, buckets: usize) -> usize {
    match value {
        None | Some("") => 0,
        Some(v) if buckets > 1 => 1 + (fnv1a(v.as_bytes()) % (buckets as u64 - 1)) as usize,
        Some(_) => 0,
    }
}

pub fn bucket_of_label(value: Option<i64>, buckets: usize) -> usize {
    match value {
        Some(v) if buckets > 1 => 1 + v.rem_euclid(buckets as i64 - 1) as usize,
        _ => 0,
    }
}

/// Monday = 0.
pub fn day_of_week(ts: Timestamp) -> usize {
    (ts.div_euclid(86_400) + 3).rem_euclid(7) as usize
}

pub fn hour_of_day(ts: Timestamp) -> usize {
    (ts.rem_euclid(86_400) / 3600) as usize
}

pub fn hour_encoding(hour: usize) -> (f64, f64) {
    let a = 2.0 * PI * hour as f64 / 24.0;
    (a.sin(), a.cos())
}

/// Welford running mean and variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// `(x − mean) / sd`; the scale is left alone while the variance is
    /// not yet defined or vanishes.
    pub fn standardize(&self, x: f64) -> f64 {
        let sd = self.variance().sqrt();
        if sd > 1e-12 {
            (x - self.mean) / sd
        } else {
            x - self.mean
        }
    }

    fn write(&self, w: &mut Writer) {
        w.u64(self.n);
        w.f64(self.mean);
        w.f64(self.m2);
    }

    fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(RunningStats {
            n: r.u64()?,
            mean: r.f64()?,
            m2: r.f64()?,
        })
    }
}

pub fn raw_recency(published_at: Timestamp, now: Timestamp) -> f64 {
    let hours = (now - published_at).max(0) as f64 / 3600.0;
    hours.ln_1p()
}

#[derive(Clone, Copy, Debug)]
struct ArticleMeta {
    published_at: Timestamp,
    category: usize,
    author: usize,
}

/// A feature vector plus the embedding-table rows it copied, as
/// `(position in vector, offset in parameter buffer, width)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assembled {
    pub v: Vec<f64>,
    pub rows: Vec<(usize, usize, usize)>,
}

impl Assembled {
    /// Adds the gradient `dv` of this vector into the table rows it used.
    pub fn scatter(&self, dv: &[f64], scale: f64, grad: &mut [f64]) {
        for &(at, off, dim) in &self.rows {
            for (g, d) in grad[off..off + dim].iter_mut().zip(&dv[at..at + dim]) {
                *g += scale * d;
            }
        }
    }
}

/// Builds input and candidate vectors. Holds the training-time running
/// statistics and the popularity counts behind the novelty feature.
#[derive(Clone, Debug)]
pub struct FeatureBuilder {
    pub spec: FeatureSpec,
    /// Offset of the first embedding table in the parameter buffer.
    table_offsets: Vec<usize>,
    meta: Vec<ArticleMeta>,
    ace: Option<Arc<EmbeddingStore>>,
    pub popularity: PopularityEstimator,
    pub novelty_stats: RunningStats,
    pub recency_stats: RunningStats,
}

impl FeatureBuilder {
    /// `tables_at` is where the embedding tables start in the parameter
    /// buffer. `ace` must be given exactly when `spec.use_ace`.
    pub fn new(spec: FeatureSpec, catalog: &Catalog, ace: Option<Arc<EmbeddingStore>>, tables_at: usize) -> Result<Self> {
        match (&ace, spec.use_ace) {
            (Some(store), true) if store.dim() != spec.d_ace => {
                return Err(Error::Config(format!(
                    "ACE dimension {} differs from the configured {}",
                    store.dim(),
                    spec.d_ace
                )))
            }
            (None, true) => return Err(Error::Config("use_ace needs an embedding store".into())),
            (Some(_), false) => return Err(Error::Config("No-ACE model given an embedding store".into())),
            _ => {}
        }
        let mut table_offsets = Vec::new();
        let mut at = tables_at;
        for (_, rows, dim) in spec.tables() {
            table_offsets.push(at);
            at += rows * dim;
        }
        let meta = catalog
            .articles()
            .iter()
            .map(|a| ArticleMeta {
                published_at: a.published_at,
                category: bucket_of_label(Some(a.category_id), spec.category.buckets),
                author: bucket_of_label(a.author_id, spec.author.buckets),
            })
            .collect();
        Ok(FeatureBuilder {
            spec,
            table_offsets,
            meta,
            ace,
            popularity: PopularityEstimator::default(),
            novelty_stats: RunningStats::default(),
            recency_stats: RunningStats::default(),
        })
    }

    pub fn n_articles(&self) -> usize {
        self.meta.len()
    }

    fn embed(&self, theta: &[f64], table: usize, bucket: usize, out: &mut Assembled) {
        let (_, rows, dim) = self.spec.tables()[table];
        let off = self.table_offsets[table] + bucket.min(rows - 1) * dim;
        out.rows.push((out.v.len(), off, dim));
        out.v.extend_from_slice(&theta[off..off + dim]);
    }

    /// Unstandardized (novelty, recency) of `article` at `now`.
    pub fn raw_scalars(&self, article: ArticleIdx, now: Timestamp) -> (f64, f64) {
        let novelty = -self.popularity.probability(article).log2();
        (novelty, raw_recency(self.meta[article.index()].published_at, now))
    }

    pub fn article_vector(&self, theta: &[f64], article: ArticleIdx, now: Timestamp) -> Assembled {
        let mut out = Assembled {
            v: Vec::with_capacity(self.spec.d_in()),
            rows: Vec::with_capacity(10),
        };
        self.push_article(theta, article, now, &mut out);
        out
    }

    fn push_article(&self, theta: &[f64], article: ArticleIdx, now: Timestamp, out: &mut Assembled) {
        let m = self.meta[article.index()];
        if let Some(store) = &self.ace {
            match store.get(article) {
                Some(v) => {
                    out.v.extend_from_slice(v);
                    out.v.push(1.0);
                }
                None => out.v.extend(std::iter::repeat_n(0.0, self.spec.d_ace + 1)),
            }
        }
        let mut table = 0;
        self.embed(theta, table, m.category, out);
        table += 1;
        if self.spec.use_author {
            self.embed(theta, table, m.author, out);
        }
        let (novelty, recency) = self.raw_scalars(article, now);
        out.v.push(self.novelty_stats.standardize(novelty));
        out.v.push(self.recency_stats.standardize(recency));
    }

    pub fn click_vector(&self, theta: &[f64], click: &ClickEvent) -> Assembled {
        let mut out = self.article_vector(theta, click.article, click.ts);
        let first_ctx = if self.spec.use_author { 2 } else { 1 };
        let buckets = self.spec.context.buckets;
        let values = [
            Some(click.device.as_str()),
            Some(click.os.as_str()),
            Some(click.referrer.as_str()),
            click.city.as_deref(),
            click.region.as_deref(),
            click.country.as_deref(),
        ];
        for (k, v) in values.into_iter().enumerate() {
            self.embed(theta, first_ctx + k, bucket_of_str(v, buckets), &mut out);
        }
        self.embed(theta, first_ctx + CONTEXT_FIELDS.len(), day_of_week(click.ts), &mut out);
        let (s, c) = hour_encoding(hour_of_day(click.ts));
        out.v.push(s);
        out.v.push(c);
        debug_assert_eq!(out.v.len(), self.spec.d_in());
        out
    }

    /// Updates the running statistics and popularity counts with the clicks
    /// of a training session.
    pub fn learn(&mut self, clicks: &[ClickEvent]) {
        for c in clicks {
            let (novelty, recency) = self.raw_scalars(c.article, c.ts);
            self.novelty_stats.push(novelty);
            self.recency_stats.push(recency);
        }
        for c in clicks {
            self.popularity.observe(c.article);
        }
    }

    pub fn write_state(&self, w: &mut Writer) {
        self.popularity.write(w);
        self.novelty_stats.write(w);
        self.recency_stats.write(w);
    }

    pub fn read_state(&mut self, r: &mut Reader<'_>) -> Result<()> {
        self.popularity = PopularityEstimator::read(r)?;
        self.novelty_stats = RunningStats::read(r)?;
        self.recency_stats = RunningStats::read(r)?;
        Ok(())
    }
}
