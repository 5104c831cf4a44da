//! Session-based news recommendation with content-aware and
//! content-agnostic recommenders, evaluated by replaying a click stream in
//! time order.
//!
//! The pipeline is: [`ingest`] raw logs into sessions, [`content`] encoders
//! turn article text into unit-norm embeddings, [`baselines`] and [`nar`]
//! provide recommenders behind one [`Recommender`] trait, and [`eval`]
//! drives the hour-by-hour train/evaluate loop and computes HR, MRR,
//! coverage and novelty.

pub mod baselines;
pub mod codec;
pub mod config;
pub mod content;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod keyvalue;
pub mod nar;
pub mod pipeline;

pub use config::RunConfig;
pub use baselines::{rank_candidates, Query, Recommender, ScoredCandidates};
pub use content::{ContentEmbedding, EmbeddingStore, EncoderKind};
pub use error::{Error, Result};
pub use eval::{MetricsReport, ProtocolConfig};
pub use ingest::{Article, ArticleIdx, Catalog, ClickEvent, Dataset, Session, Timestamp};
pub use keyvalue::KeyValues;
