//! Article content embeddings (ACEs): unit-norm vectors computed from an
//! article's title and leading sentences, once, before the stream replay.

pub mod doc2vec;
pub mod lsa;
pub mod sparse;
pub mod text;
pub mod tfidf;
pub mod w2v;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};

pub use doc2vec::{Doc2vecConfig, Doc2vecModel};
pub use lsa::{lsa_fit, randomized_svd, LsaModel, SvdParams, TruncatedSvd};
pub use text::{prepare_text, tokenize};
pub use tfidf::TfidfModel;
pub use w2v::{w2v_tfidf_encode, WordEmbeddingTable};

use crate::error::{Error, Result};
use crate::ingest::{ArticleIdx, Catalog};
use crate::keyvalue::KeyValues;

/// Default embedding dimension for every encoder.
pub const DEFAULT_DIM: usize = 250;
/// Tolerance on the unit norm of emitted embeddings.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Scales `v` to unit Euclidean norm; `None` when it is (numerically) zero
/// or not finite.
pub fn l2_normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm < 1e-12 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContentEmbedding {
    pub article_id: String,
    pub vec: Vec<f64>,
}

impl ContentEmbedding {
    pub fn new(article_id: impl Into<String>, vec: Vec<f64>) -> Result<Self> {
        let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Data(format!("embedding norm {norm} is not 1")));
        }
        Ok(ContentEmbedding {
            article_id: article_id.into(),
            vec,
        })
    }

    pub fn norm(&self) -> f64 {
        self.vec.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EncoderKind {
    None,
    Lsa,
    W2vTfidf,
    Doc2vec,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 4] = [EncoderKind::None, EncoderKind::Lsa, EncoderKind::W2vTfidf, EncoderKind::Doc2vec];

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::None => "none",
            EncoderKind::Lsa => "lsa",
            EncoderKind::W2vTfidf => "w2v_tfidf",
            EncoderKind::Doc2vec => "doc2vec",
        }
    }

    /// Label used in reports, e.g. `LSA`.
    pub fn label(self) -> &'static str {
        match self {
            EncoderKind::None => "No-ACE",
            EncoderKind::Lsa => "LSA",
            EncoderKind::W2vTfidf => "W2V*TF-IDF",
            EncoderKind::Doc2vec => "doc2vec",
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = EncoderKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown encoder `{s}` (valid: {})", valid.join(", ")))
            })
    }
}

#[derive(Clone, Debug)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub dim: usize,
    pub seed: u64,
    pub df_threshold: usize,
    pub svd: SvdParams,
    pub doc2vec: Doc2vecConfig,
    pub word_vectors: Option<WordEmbeddingTable>,
}

impl EncoderConfig {
    pub fn new(kind: EncoderKind) -> Self {
        EncoderConfig {
            kind,
            dim: DEFAULT_DIM,
            seed: 1,
            df_threshold: 2,
            svd: SvdParams::default(),
            doc2vec: Doc2vecConfig::default(),
            word_vectors: None,
        }
    }

    /// Hyperparameters for the sidecar manifest.
    pub fn manifest(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("encoder", self.kind.name());
        kv.insert("seed", self.seed.to_string());
        match self.kind {
            EncoderKind::None => {}
            EncoderKind::Lsa => {
                kv.insert("df_threshold", self.df_threshold.to_string());
                kv.insert("svd.oversampling", self.svd.oversampling.to_string());
                kv.insert("svd.power_iters", self.svd.power_iters.to_string());
                kv.insert("svd.max_power_iters", self.svd.max_power_iters.to_string());
                kv.insert("svd.tolerance", self.svd.tolerance.to_string());
            }
            EncoderKind::W2vTfidf => {
                kv.insert("df_threshold", self.df_threshold.to_string());
            }
            EncoderKind::Doc2vec => {
                let d = &self.doc2vec;
                kv.insert("doc2vec.objective", "pv-dbow");
                kv.insert("doc2vec.epochs", d.epochs.to_string());
                kv.insert("doc2vec.negatives", d.negatives.to_string());
                kv.insert("doc2vec.alpha", d.alpha.to_string());
                kv.insert("doc2vec.min_alpha", d.min_alpha.to_string());
                kv.insert("doc2vec.min_count", d.min_count.to_string());
            }
        }
        kv
    }
}

/// Embeddings indexed by [`ArticleIdx`]; `None` marks a textless article.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: Vec<Option<Vec<f64>>>,
}

impl EmbeddingStore {
    pub fn empty(n_articles: usize) -> Self {
        EmbeddingStore {
            dim: 0,
            vectors: vec![None; n_articles],
        }
    }

    pub fn from_vectors(dim: usize, vectors: Vec<Option<Vec<f64>>>) -> Result<Self> {
        for v in vectors.iter().flatten() {
            if v.len() != dim {
                return Err(Error::Data(format!("embedding of dimension {} in a {dim}-dim store", v.len())));
            }
        }
        Ok(EmbeddingStore { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, idx: ArticleIdx) -> Option<&[f64]> {
        self.vectors.get(idx.index()).and_then(|v| v.as_deref())
    }

    /// Number of catalog slots, with or without an embedding.
    pub fn len_slots(&self) -> usize {
        self.vectors.len()
    }

    /// Number of articles with an embedding.
    pub fn len(&self) -> usize {
        self.vectors.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn embeddings<'a>(&'a self, catalog: &'a Catalog) -> impl Iterator<Item = ContentEmbedding> + 'a {
        catalog.iter().filter_map(|(idx, a)| {
            self.get(idx).map(|v| ContentEmbedding {
                article_id: a.id.clone(),
                vec: v.to_vec(),
            })
        })
    }

    pub fn manifest_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".manifest");
        PathBuf::from(p)
    }

    /// Writes `article_id<TAB>v1 v2 …` lines and a `<path>.manifest` file.
    pub fn write(&self, path: &Path, catalog: &Catalog, manifest: &KeyValues) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for e in self.embeddings(catalog) {
            let vals: Vec<String> = e.vec.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}\t{}", e.article_id, vals.join(" ")).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let mut manifest = manifest.clone();
        manifest.insert("dim", self.dim.to_string());
        manifest.insert("count", self.len().to_string());
        let mpath = Self::manifest_path(path);
        std::fs::write(&mpath, manifest.to_text()).map_err(|e| Error::io(&mpath, e))
    }

    /// Reads an embedding file against `catalog`; ids not in the catalog
    /// are skipped.
    pub fn read(path: &Path, catalog: &Catalog) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vectors = vec![None; catalog.len()];
        let mut dim = None;
        let mut unknown = 0;
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Data(format!("{}: line {}: {what}", path.display(), no + 1));
            let (id, vals) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
            let v: Vec<f64> = vals
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad float"))?;
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => return Err(bad("dimension differs from earlier lines")),
                _ => {}
            }
            match catalog.resolve(id) {
                Some(idx) => vectors[idx.index()] = Some(v),
                None => unknown += 1,
            }
        }
        if unknown > 0 {
            warn!("{}: {unknown} embeddings for unknown articles ignored", path.display());
        }
        Ok(EmbeddingStore {
            dim: dim.unwrap_or(0),
            vectors,
        })
    }
}

/// Computes one embedding per article with text. `EncoderKind::None`
/// yields an empty store.
pub fn encode_corpus(config: &EncoderConfig, catalog: &Catalog) -> Result<EmbeddingStore> {
    if config.kind == EncoderKind::None {
        return Ok(EmbeddingStore::empty(catalog.len()));
    }
    let tokens: Vec<Vec<String>> = catalog.articles().iter().map(prepare_text).collect();
    let with_text: Vec<usize> = (0..tokens.len()).filter(|&i| !tokens[i].is_empty()).collect();
    let docs: Vec<Vec<String>> = with_text.iter().map(|&i| tokens[i].clone()).collect();
    if docs.is_empty() {
        return Err(Error::Data("no article has text to encode".into()));
    }
    let mut vectors: Vec<Option<Vec<f64>>> = vec![None; catalog.len()];

    let dim = match config.kind {
        EncoderKind::None => unreachable!(),
        EncoderKind::Lsa => {
            let tfidf = TfidfModel::fit(&docs, config.df_threshold)?;
            let matrix = tfidf.transform_corpus(&docs);
            let (model, us) = lsa_fit(&matrix, config.dim, &config.svd, config.seed)?;
            info!(
                "LSA: {} docs, {} terms, rank {}",
                docs.len(),
                tfidf.vocab_size(),
                model.k
            );
            for (row, &i) in with_text.iter().enumerate() {
                vectors[i] = l2_normalized(us.row(row).iter().copied().collect());
            }
            model.k
        }
        EncoderKind::W2vTfidf => {
            let table = config
                .word_vectors
                .as_ref()
                .ok_or_else(|| Error::Config("w2v_tfidf needs pretrained word vectors".into()))?;
            let tfidf = TfidfModel::fit(&docs, config.df_threshold)?;
            info!("W2V*TF-IDF: word-vector coverage {:.3}", table.coverage(&docs));
            for (row, &i) in with_text.iter().enumerate() {
                vectors[i] = w2v_tfidf_encode(table, &tfidf, &docs[row]);
            }
            table.dim()
        }
        EncoderKind::Doc2vec => {
            let cfg = Doc2vecConfig {
                dim: config.dim,
                seed: config.seed,
                ..config.doc2vec.clone()
            };
            let model = Doc2vecModel::fit(&docs, cfg)?;
            for (row, &i) in with_text.iter().enumerate() {
                vectors[i] = model.embedding(row);
            }
            config.dim
        }
    };
    let textless = vectors.iter().filter(|v| v.is_none()).count();
    if textless > 0 {
        info!("{textless} of {} articles are textless", catalog.len());
    }
    EmbeddingStore::from_vectors(dim, vectors)
}
