//! End-to-end run driven by a [`RunConfig`]: load data, encode content,
//! build the recommenders, replay the stream and write the reports.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;

use crate::baselines::{
    CoOccurrence, ContentBased, ItemKnn, Oracle, RandomScorer, RecentPopularity, Recommender, SequentialRules,
};
use crate::config::{DataSource, RosterEntry, RunConfig};
use crate::content::{encode_corpus, EmbeddingStore, EncoderKind};
use crate::error::{Error, Result};
use crate::eval::{self, MetricsReport};
use crate::ingest::{self, generate_synthetic, Catalog, Dataset};
use crate::keyvalue::KeyValues;
use crate::nar::{NarConfig, NarRecommender};

pub const REPORT_JSON: &str = "report.json";
pub const HOURLY_CSV: &str = "hourly.csv";
pub const PLOT_CSV: &str = "plot_data.csv";

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let ingest_dir = cfg.output_dir.join("data");
    let dataset = match &cfg.data {
        DataSource::Synthetic(s) => Dataset::from_synthetic(&generate_synthetic(s)?),
        DataSource::Canonical { events, articles } => Dataset::load(events, articles)?.0,
        DataSource::G1 {
            clicks_dir,
            metadata,
            columns,
        } => {
            let r = ingest::load_g1(clicks_dir, metadata, columns, &ingest_dir)?;
            Dataset::load(&r.events_path, &r.articles_path)?.0
        }
        DataSource::Adressa { log_dir, fields } => {
            let r = ingest::load_adressa(log_dir, fields, &ingest_dir)?;
            Dataset::load(&r.events_path, &r.articles_path)?.0
        }
    };
    let s = dataset.summary();
    info!(
        "{} users, {} sessions, {} clicks, {} articles",
        s.users,
        s.sessions,
        s.clicks,
        dataset.catalog.len()
    );
    Ok(dataset)
}

/// Content embeddings, when some configured recommender needs them.
pub fn load_embeddings(cfg: &RunConfig, catalog: &Catalog) -> Result<Option<Arc<EmbeddingStore>>> {
    if !cfg.needs_embeddings() {
        return Ok(None);
    }
    let store = match &cfg.encoder.embeddings {
        Some(path) => EmbeddingStore::read(path, catalog)?,
        None if cfg.encoder.kind == EncoderKind::None => {
            return Err(Error::Config("no content embeddings configured".into()));
        }
        None => encode_corpus(&cfg.encoder.encoder_config()?, catalog)?,
    };
    info!("{} articles embedded in {} dimensions", store.len(), store.dim());
    Ok(Some(Arc::new(store)))
}

fn nar(config: &NarConfig, catalog: &Catalog, ace: Option<&Arc<EmbeddingStore>>, label: Option<String>) -> Result<Box<dyn Recommender>> {
    let mut config = config.clone();
    let ace = if config.features.use_ace {
        let store = ace.ok_or_else(|| Error::Config("nar.use_ace=true needs content embeddings".into()))?;
        config.features.d_ace = store.dim();
        Some(Arc::clone(store))
    } else {
        None
    };
    let model = NarRecommender::new(config, catalog, ace)?;
    Ok(Box::new(match label {
        Some(l) => model.with_label(l),
        None => model,
    }))
}

/// Encoder recorded in the manifest beside an embedding file, if any.
fn embedding_encoder(path: &Path) -> Option<EncoderKind> {
    let manifest = KeyValues::load(&EmbeddingStore::manifest_path(path)).ok()?;
    manifest.get("encoder")?.parse().ok()
}

/// The recommenders named in the config, in roster order.
pub fn build_roster(cfg: &RunConfig, catalog: &Catalog, ace: Option<Arc<EmbeddingStore>>) -> Result<Vec<Box<dyn Recommender>>> {
    let need_ace = || {
        ace.clone()
            .ok_or_else(|| Error::Config("content-based recommenders need content embeddings".into()))
    };
    let content_label = match &cfg.encoder.embeddings {
        Some(path) => match embedding_encoder(path) {
            Some(kind) => format!("NAR+{}", kind.label()),
            None => "NAR+ACE".to_string(),
        },
        None => format!("NAR+{}", cfg.encoder.kind.label()),
    };
    cfg.recommenders
        .iter()
        .map(|entry| -> Result<Box<dyn Recommender>> {
            Ok(match entry {
                RosterEntry::Co => Box::new(CoOccurrence::default()),
                RosterEntry::Sr => Box::new(SequentialRules::new(cfg.sr_decay)),
                RosterEntry::ItemKnn => Box::new(ItemKnn::default()),
                RosterEntry::Rp => Box::new(RecentPopularity::default()),
                RosterEntry::Cb => Box::new(ContentBased::new(need_ace()?)),
                RosterEntry::Nar => {
                    let label = cfg.nar.features.use_ace.then(|| content_label.clone());
                    nar(&cfg.nar, catalog, ace.as_ref(), label)?
                }
                RosterEntry::NarNoAce => {
                    let mut c = cfg.nar.clone();
                    c.features.use_ace = false;
                    nar(&c, catalog, None, None)?
                }
                RosterEntry::Random => Box::new(RandomScorer::new(cfg.random_seed)),
                RosterEntry::Oracle => Box::new(Oracle),
            })
        })
        .collect()
}

/// Validates `cfg`, then runs the whole evaluation.
pub fn execute(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    let ace = load_embeddings(cfg, &dataset.catalog)?;
    let mut roster = build_roster(cfg, &dataset.catalog, ace)?;
    let mut report = eval::run(&dataset, &mut roster, &cfg.protocol)?;
    for (k, v) in cfg.to_kv().iter() {
        report.manifest.insert(format!("config.{k}"), v.to_string());
    }
    let s = dataset.summary();
    for (k, v) in [
        ("users", s.users),
        ("sessions", s.sessions),
        ("clicks", s.clicks),
        ("articles", dataset.catalog.len()),
    ] {
        report.manifest.insert(format!("data.{k}"), v.to_string());
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportPaths {
    pub json: PathBuf,
    pub hourly: PathBuf,
    pub plot: PathBuf,
}

/// Writes the JSON aggregate, the per-hour CSV and the plot data to `dir`.
pub fn write_reports(report: &MetricsReport, dir: &Path) -> Result<ReportPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ReportPaths {
        json: dir.join(REPORT_JSON),
        hourly: dir.join(HOURLY_CSV),
        plot: dir.join(PLOT_CSV),
    };
    report.write_json(&paths.json)?;
    report.write_hourly_csv(&paths.hourly)?;
    report.write_tidy_csv(&paths.plot)?;
    Ok(paths)
}
