//! Raw portal logs to time-ordered, preprocessed sessions.

pub mod adapters;
pub mod canonical;
pub mod session;
pub mod synthetic;
pub mod types;

use std::path::Path;

pub use adapters::{load_adressa, load_g1, AdapterReport, ARTICLES_FILE, EVENTS_FILE};
pub use canonical::{load_canonical, LoadStats, RawClick};
pub use session::{
    build_sessions, check_session, preprocess_session, sessionize, MAX_SESSION_CLICKS, MIN_SESSION_CLICKS,
    SESSION_GAP_SECS,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticCorpus};
pub use types::{Article, ArticleIdx, Catalog, ClickEvent, DatasetSummary, Session, Timestamp};

use crate::error::Result;

/// A catalog together with its preprocessed sessions, sorted by start time.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub catalog: Catalog,
    pub sessions: Vec<Session>,
}

impl Dataset {
    pub fn from_events(catalog: Catalog, events: Vec<ClickEvent>) -> Self {
        Dataset {
            sessions: build_sessions(events, SESSION_GAP_SECS),
            catalog,
        }
    }

    pub fn load(events_path: &Path, articles_path: &Path) -> Result<(Self, LoadStats)> {
        let (events, catalog, stats) = load_canonical(events_path, articles_path)?;
        Ok((Self::from_events(catalog, events), stats))
    }

    pub fn from_synthetic(corpus: &SyntheticCorpus) -> Self {
        let (catalog, _) = Catalog::new(corpus.articles.clone());
        let events = corpus
            .clicks
            .iter()
            .filter_map(|c| c.clone().resolve(&catalog))
            .collect();
        Self::from_events(catalog, events)
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary::from_sessions(&self.sessions)
    }
}
