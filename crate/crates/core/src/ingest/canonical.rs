//! Canonical on-disk schema shared by every dataset adapter.
//!
//! Both files are UTF-8, one record per line, fields separated by a single
//! tab and no header line. An empty field means "absent". Tabs and line
//! breaks inside text fields are replaced by spaces on write.
//!
//! events:   `user_id  article_id  ts  device  os  referrer  city  region  country`
//! articles: `article_id  published_at  category_id  author_id  title  body`

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;

use super::types::{Article, Catalog, ClickEvent, Timestamp};
use crate::error::{Error, Result};

pub const EVENT_FIELDS: usize = 9;
pub const ARTICLE_FIELDS: usize = 6;

/// A click whose article reference has not been resolved against a catalog.
#[derive(Clone, Debug, PartialEq)]
pub struct RawClick {
    pub user_id: String,
    pub article_id: String,
    pub ts: Timestamp,
    pub device: String,
    pub os: String,
    pub referrer: String,
    pub city: Option<String>,
    pub region: Option<String>,
    pub country: Option<String>,
}

impl RawClick {
    pub fn resolve(self, catalog: &Catalog) -> Option<ClickEvent> {
        let article = catalog.resolve(&self.article_id)?;
        Some(ClickEvent {
            user_id: self.user_id,
            article,
            ts: self.ts,
            device: self.device,
            os: self.os,
            referrer: self.referrer,
            city: self.city,
            region: self.region,
            country: self.country,
        })
    }
}

/// Bookkeeping from [`load_canonical`].
///
/// `event_lines == malformed_events + unresolved_events + emitted_events`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub event_lines: usize,
    pub malformed_events: usize,
    pub unresolved_events: usize,
    pub emitted_events: usize,
    pub article_lines: usize,
    pub malformed_articles: usize,
    pub duplicate_articles: usize,
}

fn clean(field: &str) -> String {
    field.replace(['\t', '\n', '\r'], " ")
}

fn opt(field: &str) -> Option<String> {
    if field.is_empty() {
        None
    } else {
        Some(field.to_string())
    }
}

pub fn format_event(e: &RawClick) -> String {
    let o = |v: &Option<String>| v.as_deref().map(clean).unwrap_or_default();
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        clean(&e.user_id),
        clean(&e.article_id),
        e.ts,
        clean(&e.device),
        clean(&e.os),
        clean(&e.referrer),
        o(&e.city),
        o(&e.region),
        o(&e.country)
    )
}

pub fn parse_event(line: &str) -> std::result::Result<RawClick, String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != EVENT_FIELDS {
        return Err(format!("expected {EVENT_FIELDS} fields, found {}", f.len()));
    }
    if f[0].is_empty() {
        return Err("empty user_id".into());
    }
    if f[1].is_empty() {
        return Err("empty article_id".into());
    }
    let ts: Timestamp = f[2]
        .parse()
        .map_err(|_| format!("bad timestamp `{}`", f[2]))?;
    Ok(RawClick {
        user_id: f[0].to_string(),
        article_id: f[1].to_string(),
        ts,
        device: f[3].to_string(),
        os: f[4].to_string(),
        referrer: f[5].to_string(),
        city: opt(f[6]),
        region: opt(f[7]),
        country: opt(f[8]),
    })
}

pub fn format_article(a: &Article) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        clean(&a.id),
        a.published_at,
        a.category_id,
        a.author_id.map(|v| v.to_string()).unwrap_or_default(),
        clean(&a.title),
        clean(&a.body)
    )
}

pub fn parse_article(line: &str) -> std::result::Result<Article, String> {
    let f: Vec<&str> = line.splitn(ARTICLE_FIELDS, '\t').collect();
    if f.len() != ARTICLE_FIELDS {
        return Err(format!("expected {ARTICLE_FIELDS} fields, found {}", f.len()));
    }
    if f[0].is_empty() {
        return Err("empty article_id".into());
    }
    let published_at = f[1]
        .parse()
        .map_err(|_| format!("bad published_at `{}`", f[1]))?;
    let category_id = f[2]
        .parse()
        .map_err(|_| format!("bad category_id `{}`", f[2]))?;
    let author_id = if f[3].is_empty() {
        None
    } else {
        Some(f[3].parse().map_err(|_| format!("bad author_id `{}`", f[3]))?)
    };
    Ok(Article {
        id: f[0].to_string(),
        published_at,
        category_id,
        author_id,
        title: f[4].to_string(),
        body: f[5].to_string(),
    })
}

pub fn write_events<'a>(path: &Path, events: impl IntoIterator<Item = &'a RawClick>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in events {
        writeln!(w, "{}", format_event(e)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_articles<'a>(path: &Path, articles: impl IntoIterator<Item = &'a Article>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for a in articles {
        writeln!(w, "{}", format_article(a)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct LineTally {
    total: usize,
    malformed: usize,
    first: Option<(usize, String)>,
}

impl LineTally {
    fn new() -> Self {
        LineTally {
            total: 0,
            malformed: 0,
            first: None,
        }
    }

    fn bad(&mut self, line_no: usize, reason: String) {
        self.malformed += 1;
        if self.first.is_none() {
            self.first = Some((line_no, reason));
        }
    }

    fn check(self, path: &Path) -> Result<()> {
        if self.malformed * 100 > self.total {
            let (first_line, first_reason) = self.first.unwrap_or_default();
            return Err(Error::TooManyMalformed {
                path: path.to_path_buf(),
                malformed: self.malformed,
                total: self.total,
                first_line,
                first_reason,
            });
        }
        if self.malformed > 0 {
            warn!(
                "{}: skipped {} malformed of {} lines",
                path.display(),
                self.malformed,
                self.total
            );
        }
        Ok(())
    }
}

fn for_each_line(path: &Path, mut f: impl FnMut(usize, &str)) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, line);
    }
    Ok(())
}

pub fn read_articles(path: &Path) -> Result<(Vec<Article>, usize, usize)> {
    let mut tally = LineTally::new();
    let mut articles = Vec::new();
    for_each_line(path, |no, line| {
        tally.total += 1;
        match parse_article(line) {
            Ok(a) => articles.push(a),
            Err(reason) => tally.bad(no, reason),
        }
    })?;
    let (total, malformed) = (tally.total, tally.malformed);
    tally.check(path)?;
    Ok((articles, total, malformed))
}

pub fn read_raw_events(path: &Path) -> Result<(Vec<RawClick>, usize, usize)> {
    let mut tally = LineTally::new();
    let mut events = Vec::new();
    for_each_line(path, |no, line| {
        tally.total += 1;
        match parse_event(line) {
            Ok(e) => events.push(e),
            Err(reason) => tally.bad(no, reason),
        }
    })?;
    let (total, malformed) = (tally.total, tally.malformed);
    tally.check(path)?;
    Ok((events, total, malformed))
}

/// Loads the catalog, then the click stream, dropping clicks whose article
/// is not in the catalog. Events are returned in non-decreasing `ts` order
/// (stable with respect to file order).
pub fn load_canonical(
    events_path: &Path,
    articles_path: &Path,
) -> Result<(Vec<ClickEvent>, Catalog, LoadStats)> {
    let (articles, article_lines, malformed_articles) = read_articles(articles_path)?;
    let (catalog, duplicate_articles) = Catalog::new(articles);
    if duplicate_articles > 0 {
        warn!("{duplicate_articles} duplicate article ids ignored");
    }

    let (raw, event_lines, malformed_events) = read_raw_events(events_path)?;
    let mut unresolved = 0;
    let mut events: Vec<ClickEvent> = raw
        .into_iter()
        .filter_map(|r| {
            let e = r.resolve(&catalog);
            if e.is_none() {
                unresolved += 1;
            }
            e
        })
        .collect();
    events.sort_by_key(|e| e.ts);
    if unresolved > 0 {
        warn!("dropped {unresolved} events referencing unknown articles");
    }

    let stats = LoadStats {
        event_lines,
        malformed_events,
        unresolved_events: unresolved,
        emitted_events: events.len(),
        article_lines,
        malformed_articles,
        duplicate_articles,
    };
    Ok((events, catalog, stats))
}
