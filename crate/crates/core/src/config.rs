//! Run configuration: a flat `key=value` file with section prefixes.
//!
//! ```text
//! data.source=synthetic
//! synthetic.articles=2000
//! encoder.kind=lsa
//! recommenders=sr,co,rp,nar,nar_no_ace
//! nar.hidden=64
//! eval.warmup_hours=48
//! output.dir=out
//! ```
//!
//! Every key has a default except the data paths of file-backed sources.
//! Unknown keys, and keys of sections the chosen source does not use, are
//! rejected.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::SrDecay;
use crate::content::{Doc2vecConfig, EncoderConfig, EncoderKind, SvdParams, WordEmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::ProtocolConfig;
use crate::ingest::SyntheticConfig;
use crate::keyvalue::KeyValues;
use crate::nar::{NarConfig, TableSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticConfig),
    Canonical { events: PathBuf, articles: PathBuf },
    G1 { clicks_dir: PathBuf, metadata: PathBuf, columns: KeyValues },
    Adressa { log_dir: PathBuf, fields: KeyValues },
}

impl DataSource {
    pub fn name(&self) -> &'static str {
        match self {
            DataSource::Synthetic(_) => "synthetic",
            DataSource::Canonical { .. } => "canonical",
            DataSource::G1 { .. } => "g1",
            DataSource::Adressa { .. } => "adressa",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RosterEntry {
    Co,
    Sr,
    ItemKnn,
    Rp,
    Cb,
    /// NAR; uses the article content embeddings unless `nar.use_ace=false`.
    Nar,
    /// NAR with `use_ace` forced off, to run beside [`RosterEntry::Nar`].
    NarNoAce,
    Random,
    Oracle,
}

impl RosterEntry {
    pub const ALL: [RosterEntry; 9] = [
        RosterEntry::Co,
        RosterEntry::Sr,
        RosterEntry::ItemKnn,
        RosterEntry::Rp,
        RosterEntry::Cb,
        RosterEntry::Nar,
        RosterEntry::NarNoAce,
        RosterEntry::Random,
        RosterEntry::Oracle,
    ];

    pub fn token(self) -> &'static str {
        match self {
            RosterEntry::Co => "co",
            RosterEntry::Sr => "sr",
            RosterEntry::ItemKnn => "item_knn",
            RosterEntry::Rp => "rp",
            RosterEntry::Cb => "cb",
            RosterEntry::Nar => "nar",
            RosterEntry::NarNoAce => "nar_no_ace",
            RosterEntry::Random => "random",
            RosterEntry::Oracle => "oracle",
        }
    }
}

impl fmt::Display for RosterEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for RosterEntry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RosterEntry::ALL.into_iter().find(|r| r.token() == s).ok_or_else(|| {
            let valid: Vec<&str> = RosterEntry::ALL.iter().map(|r| r.token()).collect();
            Error::Config(format!("unknown recommender `{s}` (valid: {})", valid.join(", ")))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderSettings {
    pub kind: EncoderKind,
    pub dim: usize,
    pub seed: u64,
    pub df_threshold: usize,
    pub svd: SvdParams,
    pub doc2vec: Doc2vecConfig,
    /// Pretrained word vectors for `w2v_tfidf`.
    pub word_vectors: Option<PathBuf>,
    /// Precomputed embedding file; when set nothing is encoded at run time.
    pub embeddings: Option<PathBuf>,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        let base = EncoderConfig::new(EncoderKind::Lsa);
        EncoderSettings {
            kind: base.kind,
            dim: base.dim,
            seed: base.seed,
            df_threshold: base.df_threshold,
            svd: base.svd,
            doc2vec: base.doc2vec,
            word_vectors: None,
            embeddings: None,
        }
    }
}

impl EncoderSettings {
    /// The encoder configuration, with word vectors loaded if configured.
    pub fn encoder_config(&self) -> Result<EncoderConfig> {
        let word_vectors = match &self.word_vectors {
            Some(p) => Some(WordEmbeddingTable::load_text(p)?),
            None => None,
        };
        Ok(EncoderConfig {
            kind: self.kind,
            dim: self.dim,
            seed: self.seed,
            df_threshold: self.df_threshold,
            svd: self.svd.clone(),
            doc2vec: Doc2vecConfig {
                dim: self.dim,
                seed: self.seed,
                ..self.doc2vec.clone()
            },
            word_vectors,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    pub encoder: EncoderSettings,
    pub recommenders: Vec<RosterEntry>,
    pub sr_decay: SrDecay,
    pub random_seed: u64,
    pub nar: NarConfig,
    pub protocol: ProtocolConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSource::Synthetic(SyntheticConfig {
                n_sessions: Some(50_000),
                ..SyntheticConfig::new(12, 2000, 15_000, 16, 7)
            }),
            encoder: EncoderSettings::default(),
            recommenders: vec![RosterEntry::Co, RosterEntry::Sr, RosterEntry::ItemKnn, RosterEntry::Rp],
            sr_decay: SrDecay::Inverse,
            random_seed: 1,
            nar: NarConfig::default(),
            protocol: ProtocolConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Typed reads from a [`KeyValues`] that remember which keys were used.
struct Fields<'a> {
    kv: &'a KeyValues,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Fields<'a> {
    fn new(kv: &'a KeyValues) -> Self {
        Fields {
            kv,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(key.to_string());
        self.kv.get_nonempty(key)
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        self.used.borrow_mut().insert(key.to_string());
        Ok(self.kv.parsed(key)?.unwrap_or(default))
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        self.raw(key)
            .map(PathBuf::from)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    fn section(&self, prefix: &str) -> KeyValues {
        let mut out = KeyValues::default();
        for (k, v) in self.kv.iter() {
            if let Some(rest) = k.strip_prefix(prefix) {
                self.used.borrow_mut().insert(k.to_string());
                out.insert(rest, v);
            }
        }
        out
    }

    fn finish(self) -> Result<()> {
        let used = self.used.into_inner();
        self.kv.reject_unknown(|k| used.contains(k))
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("key `{key}`: expected true or false, got `{v}`"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KeyValues::load(path)?)
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let f = Fields::new(kv);
        let d = RunConfig::default();
        let data = match f.raw("data.source").unwrap_or("synthetic") {
            "synthetic" => {
                let DataSource::Synthetic(s) = d.data.clone() else { unreachable!() };
                DataSource::Synthetic(SyntheticConfig {
                    n_topics: f.or("synthetic.topics", s.n_topics)?,
                    n_articles: f.or("synthetic.articles", s.n_articles)?,
                    n_users: f.or("synthetic.users", s.n_users)?,
                    days: f.or("synthetic.days", s.days)?,
                    seed: f.or("synthetic.seed", s.seed)?,
                    n_sessions: match f.raw("synthetic.sessions") {
                        None => s.n_sessions,
                        Some("auto") => None,
                        Some(v) => Some(v.parse().map_err(|_| {
                            Error::Config(format!("key `synthetic.sessions`: expected a count or `auto`, got `{v}`"))
                        })?),
                    },
                    topics_per_category: f.or("synthetic.topics_per_category", s.topics_per_category)?,
                    p_follow_link: f.or("synthetic.p_follow_link", s.p_follow_link)?,
                    p_same_topic: f.or("synthetic.p_same_topic", s.p_same_topic)?,
                    p_user_topic: f.or("synthetic.p_user_topic", s.p_user_topic)?,
                    topic_word_share: f.or("synthetic.topic_word_share", s.topic_word_share)?,
                })
            }
            "canonical" => DataSource::Canonical {
                events: f.path("data.events")?,
                articles: f.path("data.articles")?,
            },
            "g1" => DataSource::G1 {
                clicks_dir: f.path("data.clicks_dir")?,
                metadata: f.path("data.metadata")?,
                columns: f.section("adapter."),
            },
            "adressa" => DataSource::Adressa {
                log_dir: f.path("data.log_dir")?,
                fields: f.section("adapter."),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown data.source `{other}` (valid: synthetic, canonical, g1, adressa)"
                )))
            }
        };

        let e = &d.encoder;
        let encoder = EncoderSettings {
            kind: f.or("encoder.kind", e.kind)?,
            dim: f.or("encoder.dim", e.dim)?,
            seed: f.or("encoder.seed", e.seed)?,
            df_threshold: f.or("encoder.df_threshold", e.df_threshold)?,
            svd: SvdParams {
                oversampling: f.or("encoder.svd.oversampling", e.svd.oversampling)?,
                power_iters: f.or("encoder.svd.power_iters", e.svd.power_iters)?,
                max_power_iters: f.or("encoder.svd.max_power_iters", e.svd.max_power_iters)?,
                tolerance: f.or("encoder.svd.tolerance", e.svd.tolerance)?,
            },
            doc2vec: Doc2vecConfig {
                epochs: f.or("encoder.doc2vec.epochs", e.doc2vec.epochs)?,
                negatives: f.or("encoder.doc2vec.negatives", e.doc2vec.negatives)?,
                alpha: f.or("encoder.doc2vec.alpha", e.doc2vec.alpha)?,
                min_alpha: f.or("encoder.doc2vec.min_alpha", e.doc2vec.min_alpha)?,
                min_count: f.or("encoder.doc2vec.min_count", e.doc2vec.min_count)?,
                infer_epochs: f.or("encoder.doc2vec.infer_epochs", e.doc2vec.infer_epochs)?,
                ..e.doc2vec.clone()
            },
            word_vectors: f.opt_path("encoder.word_vectors"),
            embeddings: f.opt_path("encoder.embeddings"),
        };

        let recommenders = match f.raw("recommenders") {
            None => d.recommenders.clone(),
            Some(list) => list
                .split(',')
                .map(|t| t.trim())
                .filter(|t| !t.is_empty())
                .map(RosterEntry::from_str)
                .collect::<Result<Vec<_>>>()?,
        };

        let n = &d.nar;
        let nf = &n.features;
        let use_ace = f.raw("nar.use_ace").map(|v| parse_bool("nar.use_ace", v)).transpose()?;
        let use_author = f.raw("nar.use_author").map(|v| parse_bool("nar.use_author", v)).transpose()?;
        let nar = NarConfig {
            features: crate::nar::FeatureSpec {
                use_ace: use_ace.unwrap_or(nf.use_ace),
                d_ace: nf.d_ace,
                use_author: use_author.unwrap_or(nf.use_author),
                category: TableSpec {
                    buckets: f.or("nar.category_buckets", nf.category.buckets)?,
                    dim: f.or("nar.category_dim", nf.category.dim)?,
                },
                author: TableSpec {
                    buckets: f.or("nar.author_buckets", nf.author.buckets)?,
                    dim: f.or("nar.author_dim", nf.author.dim)?,
                },
                context: TableSpec {
                    buckets: f.or("nar.context_buckets", nf.context.buckets)?,
                    dim: f.or("nar.context_dim", nf.context.dim)?,
                },
                dow_dim: f.or("nar.dow_dim", nf.dow_dim)?,
            },
            hidden: f.or("nar.hidden", n.hidden)?,
            head_hidden: f.or("nar.head_hidden", n.head_hidden)?,
            lr: f.or("nar.lr", n.lr)?,
            beta1: f.or("nar.beta1", n.beta1)?,
            beta2: f.or("nar.beta2", n.beta2)?,
            adam_eps: f.or("nar.adam_eps", n.adam_eps)?,
            batch_size: f.or("nar.batch_size", n.batch_size)?,
            n_train_neg: f.or("nar.n_train_neg", n.n_train_neg)?,
            seed: f.or("nar.seed", n.seed)?,
        };

        let p = &d.protocol;
        let protocol = ProtocolConfig {
            warmup_hours: f.or("eval.warmup_hours", p.warmup_hours)?,
            eval_every: f.or("eval.every", p.eval_every)?,
            n_eval_neg: f.or("eval.n_neg", p.n_eval_neg)?,
            list_len: f.or("eval.list_len", p.list_len)?,
            seed: f.or("eval.seed", p.seed)?,
        };

        let cfg = RunConfig {
            data,
            encoder,
            recommenders,
            sr_decay: f.or("sr.decay", d.sr_decay)?,
            random_seed: f.or("random.seed", d.random_seed)?,
            nar,
            protocol,
            output_dir: f.opt_path("output.dir").unwrap_or(d.output_dir),
        };
        f.finish()?;
        Ok(cfg)
    }

    /// Every setting, explicitly; parsing the result yields `self`.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        let mut put = |k: &str, v: String| kv.insert(k, v);
        put("data.source", self.data.name().into());
        match &self.data {
            DataSource::Synthetic(s) => {
                put("synthetic.topics", s.n_topics.to_string());
                put("synthetic.articles", s.n_articles.to_string());
                put("synthetic.users", s.n_users.to_string());
                put("synthetic.days", s.days.to_string());
                put("synthetic.seed", s.seed.to_string());
                put("synthetic.sessions", s.n_sessions.map_or_else(|| "auto".into(), |n| n.to_string()));
                put("synthetic.topics_per_category", s.topics_per_category.to_string());
                put("synthetic.p_follow_link", s.p_follow_link.to_string());
                put("synthetic.p_same_topic", s.p_same_topic.to_string());
                put("synthetic.p_user_topic", s.p_user_topic.to_string());
                put("synthetic.topic_word_share", s.topic_word_share.to_string());
            }
            DataSource::Canonical { events, articles } => {
                put("data.events", events.display().to_string());
                put("data.articles", articles.display().to_string());
            }
            DataSource::G1 {
                clicks_dir,
                metadata,
                columns,
            } => {
                put("data.clicks_dir", clicks_dir.display().to_string());
                put("data.metadata", metadata.display().to_string());
                for (k, v) in columns.iter() {
                    put(&format!("adapter.{k}"), v.into());
                }
            }
            DataSource::Adressa { log_dir, fields } => {
                put("data.log_dir", log_dir.display().to_string());
                for (k, v) in fields.iter() {
                    put(&format!("adapter.{k}"), v.into());
                }
            }
        }
        let e = &self.encoder;
        put("encoder.kind", e.kind.name().into());
        put("encoder.dim", e.dim.to_string());
        put("encoder.seed", e.seed.to_string());
        put("encoder.df_threshold", e.df_threshold.to_string());
        put("encoder.svd.oversampling", e.svd.oversampling.to_string());
        put("encoder.svd.power_iters", e.svd.power_iters.to_string());
        put("encoder.svd.max_power_iters", e.svd.max_power_iters.to_string());
        put("encoder.svd.tolerance", e.svd.tolerance.to_string());
        put("encoder.doc2vec.epochs", e.doc2vec.epochs.to_string());
        put("encoder.doc2vec.negatives", e.doc2vec.negatives.to_string());
        put("encoder.doc2vec.alpha", e.doc2vec.alpha.to_string());
        put("encoder.doc2vec.min_alpha", e.doc2vec.min_alpha.to_string());
        put("encoder.doc2vec.min_count", e.doc2vec.min_count.to_string());
        put("encoder.doc2vec.infer_epochs", e.doc2vec.infer_epochs.to_string());
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        put("encoder.word_vectors", path(&e.word_vectors));
        put("encoder.embeddings", path(&e.embeddings));
        let roster: Vec<&str> = self.recommenders.iter().map(|r| r.token()).collect();
        put("recommenders", roster.join(","));
        put("sr.decay", self.sr_decay.to_string());
        put("random.seed", self.random_seed.to_string());
        let n = &self.nar;
        let nf = &n.features;
        put("nar.use_ace", nf.use_ace.to_string());
        put("nar.use_author", nf.use_author.to_string());
        put("nar.category_buckets", nf.category.buckets.to_string());
        put("nar.category_dim", nf.category.dim.to_string());
        put("nar.author_buckets", nf.author.buckets.to_string());
        put("nar.author_dim", nf.author.dim.to_string());
        put("nar.context_buckets", nf.context.buckets.to_string());
        put("nar.context_dim", nf.context.dim.to_string());
        put("nar.dow_dim", nf.dow_dim.to_string());
        put("nar.hidden", n.hidden.to_string());
        put("nar.head_hidden", n.head_hidden.to_string());
        put("nar.lr", n.lr.to_string());
        put("nar.beta1", n.beta1.to_string());
        put("nar.beta2", n.beta2.to_string());
        put("nar.adam_eps", n.adam_eps.to_string());
        put("nar.batch_size", n.batch_size.to_string());
        put("nar.n_train_neg", n.n_train_neg.to_string());
        put("nar.seed", n.seed.to_string());
        for (k, v) in self.protocol.manifest().iter() {
            put(k, v.into());
        }
        put("output.dir", self.output_dir.display().to_string());
        kv
    }

    pub fn to_text(&self) -> String {
        self.to_kv().to_text()
    }

    /// Whether any configured recommender reads article content embeddings.
    pub fn needs_embeddings(&self) -> bool {
        self.recommenders
            .iter()
            .any(|r| *r == RosterEntry::Cb || (*r == RosterEntry::Nar && self.nar.features.use_ace))
    }

    /// Range checks and path existence; run before any computation.
    pub fn validate(&self) -> Result<()> {
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        let e = &self.encoder;
        if e.dim == 0 {
            return Err(Error::Config("encoder.dim must be >= 1".into()));
        }
        if e.svd.tolerance < 0.0 || e.svd.max_power_iters < e.svd.power_iters {
            return Err(Error::Config("encoder.svd: need tolerance >= 0 and max_power_iters >= power_iters".into()));
        }
        if e.kind == EncoderKind::Doc2vec && (e.doc2vec.epochs == 0 || e.doc2vec.negatives == 0) {
            return Err(Error::Config("encoder.doc2vec: epochs and negatives must be >= 1".into()));
        }
        if e.kind == EncoderKind::W2vTfidf && e.word_vectors.is_none() && e.embeddings.is_none() {
            return Err(Error::Config("encoder.kind=w2v_tfidf needs encoder.word_vectors".into()));
        }
        if self.recommenders.is_empty() {
            return Err(Error::Config("recommenders must name at least one recommender".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &self.recommenders {
            if !seen.insert(*r) {
                return Err(Error::Config(format!("recommender `{r}` listed twice")));
            }
        }
        if seen.contains(&RosterEntry::Nar) && seen.contains(&RosterEntry::NarNoAce) && !self.nar.features.use_ace {
            return Err(Error::Config("nar and nar_no_ace both run without content embeddings".into()));
        }
        if self.needs_embeddings() && e.kind == EncoderKind::None && e.embeddings.is_none() {
            return Err(Error::Config(
                "cb and nar with nar.use_ace=true need content embeddings: set encoder.kind or encoder.embeddings".into(),
            ));
        }
        self.nar.validate()?;
        self.protocol.validate()?;
        let mut paths: Vec<&Path> = Vec::new();
        match &self.data {
            DataSource::Synthetic(_) => {}
            DataSource::Canonical { events, articles } => paths.extend([events.as_path(), articles.as_path()]),
            DataSource::G1 { clicks_dir, metadata, .. } => paths.extend([clicks_dir.as_path(), metadata.as_path()]),
            DataSource::Adressa { log_dir, .. } => paths.push(log_dir),
        }
        paths.extend(e.word_vectors.as_deref());
        paths.extend(e.embeddings.as_deref());
        for p in paths {
            if !p.exists() {
                return Err(Error::Config(format!("path does not exist: {}", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = c.to_text();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
        assert_eq!(RunConfig::parse("").unwrap(), c);
        assert_eq!(c.encoder.dim, crate::content::DEFAULT_DIM);
    }

    #[test]
    fn custom_round_trip() {
        let text = "data.source=g1\ndata.clicks_dir=/x/clicks\ndata.metadata=/x/meta.csv\n\
                    adapter.user_id=uid\nadapter.article.title=t\n\
                    recommenders=sr, nar ,nar_no_ace,cb\nnar.hidden=32\nnar.lr=0.0025\n\
                    nar.use_ace=false\nencoder.kind=doc2vec\nencoder.dim=100\nsr.decay=linear\n\
                    eval.warmup_hours=24\noutput.dir=/tmp/o\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.nar.hidden, 32);
        assert!(!c.nar.features.use_ace);
        assert_eq!(c.recommenders.len(), 4);
        match &c.data {
            DataSource::G1 { columns, .. } => assert_eq!(columns.get("article.title"), Some("t")),
            other => panic!("{other:?}"),
        }
        let again = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_text(), c.to_text());
    }

    #[test]
    fn unknown_and_foreign_keys_rejected() {
        let err = RunConfig::parse("nar.hiden=3").unwrap_err().to_string();
        assert!(err.contains("nar.hiden"), "{err}");
        // Synthetic settings mean nothing for a canonical source.
        assert!(RunConfig::parse("data.source=canonical\ndata.events=a\ndata.articles=b\nsynthetic.days=3").is_err());
        assert!(RunConfig::parse("recommenders=sr,bogus").is_err());
        assert!(RunConfig::parse("nar.use_ace=maybe").is_err());
        assert!(RunConfig::parse("data.source=canonical").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.validate().unwrap();
        c.data = DataSource::Canonical {
            events: PathBuf::from("/definitely/missing/events.tsv"),
            articles: PathBuf::from("/definitely/missing/articles.tsv"),
        };
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("/definitely/missing/events.tsv"), "{err}");

        let mut c = RunConfig::default();
        c.recommenders = vec![RosterEntry::Cb];
        c.encoder.kind = EncoderKind::None;
        assert!(c.validate().is_err());
        c.recommenders = vec![RosterEntry::Nar];
        c.nar.features.use_ace = false;
        c.validate().unwrap();
        c.recommenders = vec![RosterEntry::Sr, RosterEntry::Sr];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.protocol.eval_every = 0;
        assert!(c.validate().is_err());
    }
}
