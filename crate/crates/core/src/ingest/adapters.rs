//! Portal-specific adapters. Each one is a pure field map from the source
//! layout onto the canonical schema; the map comes from a `key=value` file.
//!
//! Event keys: `user_id`, `article_id`, `ts` (required), `ts_unit` (`s` or
//! `ms`, default `s`), `device`, `os`, `referrer`, `city`, `region`,
//! `country`.
//!
//! Article keys (prefixed `article.`): `article_id`, `published_at`,
//! `category_id`, `author_id`, `title`, `body`, plus `published_unit`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::Value;

use super::canonical::{write_articles, write_events, RawClick};
use super::session::{build_sessions, SESSION_GAP_SECS};
use super::types::{Article, Catalog, DatasetSummary, Timestamp};
use crate::error::{Error, Result};
use crate::keyvalue::KeyValues;

pub const EVENTS_FILE: &str = "events.tsv";
pub const ARTICLES_FILE: &str = "articles.tsv";

const EVENT_KEYS: &[&str] = &[
    "user_id", "article_id", "ts", "ts_unit", "device", "os", "referrer", "city", "region", "country",
];
const ARTICLE_KEYS: &[&str] = &[
    "article.article_id",
    "article.published_at",
    "article.published_unit",
    "article.category_id",
    "article.author_id",
    "article.title",
    "article.body",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdapterReport {
    pub summary: DatasetSummary,
    pub records: usize,
    pub dropped_records: usize,
    pub events_path: PathBuf,
    pub articles_path: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TimeUnit {
    Seconds,
    Millis,
}

impl TimeUnit {
    fn from_map(map: &KeyValues, key: &str) -> Result<Self> {
        match map.get_nonempty(key).unwrap_or("s") {
            "s" => Ok(TimeUnit::Seconds),
            "ms" => Ok(TimeUnit::Millis),
            other => Err(Error::Config(format!("`{key}` must be `s` or `ms`, got `{other}`"))),
        }
    }

    fn to_secs(self, raw: i64) -> Timestamp {
        match self {
            TimeUnit::Seconds => raw,
            TimeUnit::Millis => raw.div_euclid(1000),
        }
    }
}

fn parse_time(raw: &str, unit: TimeUnit) -> Option<Timestamp> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i64>() {
        return Some(unit.to_secs(v));
    }
    if let Ok(v) = raw.parse::<f64>() {
        if v.is_finite() {
            return Some(unit.to_secs(v as i64));
        }
    }
    chrono::DateTime::parse_from_rfc3339(raw)
        .ok()
        .map(|d| d.timestamp())
}

/// Summarizes the canonical output the way the dataset statistics are
/// usually reported: after sessionization and preprocessing.
pub fn summarize(raw: &[RawClick], catalog: &Catalog) -> DatasetSummary {
    let events = raw.iter().filter_map(|r| r.clone().resolve(catalog));
    DatasetSummary::from_sessions(&build_sessions(events, SESSION_GAP_SECS))
}

fn finish(
    mut clicks: Vec<RawClick>,
    articles: Vec<Article>,
    records: usize,
    dropped_records: usize,
    out_dir: &Path,
) -> Result<AdapterReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    clicks.sort_by_key(|c| c.ts);
    let events_path = out_dir.join(EVENTS_FILE);
    let articles_path = out_dir.join(ARTICLES_FILE);
    let (catalog, _) = Catalog::new(articles);
    write_events(&events_path, &clicks)?;
    write_articles(&articles_path, catalog.articles())?;
    let summary = summarize(&clicks, &catalog);
    info!("wrote {} events and {} articles to {}", clicks.len(), catalog.len(), out_dir.display());
    Ok(AdapterReport {
        summary,
        records,
        dropped_records,
        events_path,
        articles_path,
    })
}

struct CsvColumns {
    index: HashMap<String, usize>,
    path: PathBuf,
}

impl CsvColumns {
    fn new(headers: &csv::StringRecord, path: &Path) -> Self {
        CsvColumns {
            index: headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect(),
            path: path.to_path_buf(),
        }
    }

    fn lookup(&self, map: &KeyValues, key: &str, required: bool) -> Result<Option<usize>> {
        let column = match map.get_nonempty(key) {
            Some(c) => c,
            None if required => return Err(Error::Config(format!("column map lacks required key `{key}`"))),
            None => return Ok(None),
        };
        self.index.get(column).copied().map(Some).ok_or_else(|| Error::MissingColumn {
            field: key.to_string(),
            column: column.to_string(),
            path: self.path.clone(),
        })
    }
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

/// Converts the Globo.com (G1) release: a directory of hourly click CSVs
/// plus one article-metadata CSV.
pub fn load_g1(clicks_dir: &Path, metadata_path: &Path, column_map: &KeyValues, out_dir: &Path) -> Result<AdapterReport> {
    column_map.reject_unknown(|k| EVENT_KEYS.contains(&k) || ARTICLE_KEYS.contains(&k))?;
    let ts_unit = TimeUnit::from_map(column_map, "ts_unit")?;
    let pub_unit = TimeUnit::from_map(column_map, "article.published_unit")?;

    let mut articles = Vec::new();
    let mut meta = csv::Reader::from_path(metadata_path).map_err(|e| csv_err(metadata_path, e))?;
    let cols = CsvColumns::new(meta.headers().map_err(|e| csv_err(metadata_path, e))?, metadata_path);
    let a_id = cols.lookup(column_map, "article.article_id", true)?.unwrap();
    let a_pub = cols.lookup(column_map, "article.published_at", true)?.unwrap();
    let a_cat = cols.lookup(column_map, "article.category_id", true)?.unwrap();
    let a_author = cols.lookup(column_map, "article.author_id", false)?;
    let a_title = cols.lookup(column_map, "article.title", false)?;
    let a_body = cols.lookup(column_map, "article.body", false)?;
    let mut bad_meta = 0usize;
    for rec in meta.records() {
        let rec = rec.map_err(|e| csv_err(metadata_path, e))?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let id = field(a_id);
        let (Some(published_at), Ok(category_id)) = (parse_time(field(a_pub), pub_unit), field(a_cat).parse::<i64>())
        else {
            bad_meta += 1;
            continue;
        };
        if id.is_empty() {
            bad_meta += 1;
            continue;
        }
        articles.push(Article {
            id: id.to_string(),
            published_at,
            category_id,
            author_id: a_author.and_then(|i| field(i).parse().ok()),
            title: a_title.map(|i| field(i).to_string()).unwrap_or_default(),
            body: a_body.map(|i| field(i).to_string()).unwrap_or_default(),
        });
    }
    if bad_meta > 0 {
        warn!("{}: skipped {bad_meta} unusable metadata rows", metadata_path.display());
    }

    let mut clicks = Vec::new();
    let (mut records, mut dropped) = (0usize, 0usize);
    for path in csv_files(clicks_dir)? {
        let mut rdr = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let cols = CsvColumns::new(rdr.headers().map_err(|e| csv_err(&path, e))?, &path);
        let user = cols.lookup(column_map, "user_id", true)?.unwrap();
        let article = cols.lookup(column_map, "article_id", true)?.unwrap();
        let ts = cols.lookup(column_map, "ts", true)?.unwrap();
        let ctx: Vec<Option<usize>> = ["device", "os", "referrer", "city", "region", "country"]
            .iter()
            .map(|k| cols.lookup(column_map, k, false))
            .collect::<Result<_>>()?;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(&path, e))?;
            records += 1;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let get = |i: Option<usize>| i.map(|i| field(i).to_string()).unwrap_or_default();
            let opt = |i: Option<usize>| i.map(|i| field(i).to_string()).filter(|s| !s.is_empty());
            let (Some(t), false, false) = (parse_time(field(ts), ts_unit), field(user).is_empty(), field(article).is_empty())
            else {
                dropped += 1;
                continue;
            };
            clicks.push(RawClick {
                user_id: field(user).to_string(),
                article_id: field(article).to_string(),
                ts: t,
                device: get(ctx[0]),
                os: get(ctx[1]),
                referrer: get(ctx[2]),
                city: opt(ctx[3]),
                region: opt(ctx[4]),
                country: opt(ctx[5]),
            });
        }
    }
    finish(clicks, articles, records, dropped, out_dir)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

fn json_str(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::Null => None,
        Value::String(s) if s.is_empty() => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(a) => json_str(a.first()),
        other => Some(other.to_string()),
    }
}

/// Assigns dense integer labels in first-seen order.
#[derive(Default)]
struct Labeler(BTreeMap<String, i64>);

impl Labeler {
    fn label(&mut self, s: &str) -> i64 {
        let next = self.0.len() as i64;
        *self.0.entry(s.to_string()).or_insert(next)
    }
}

/// Converts the Adressa release: a directory of JSON-lines event logs where
/// each record carries both the click and the article's metadata.
/// Categorical article fields (category, author) are labelled with dense
/// integers in first-seen order.
pub fn load_adressa(log_dir: &Path, field_map: &KeyValues, out_dir: &Path) -> Result<AdapterReport> {
    field_map.reject_unknown(|k| EVENT_KEYS.contains(&k) || ARTICLE_KEYS.contains(&k))?;
    let ts_unit = TimeUnit::from_map(field_map, "ts_unit")?;
    let pub_unit = TimeUnit::from_map(field_map, "article.published_unit")?;
    let f_user = field_map.require("user_id")?;
    let f_article = field_map.require("article_id")?;
    let f_ts = field_map.require("ts")?;
    let ctx_fields: Vec<Option<&str>> = ["device", "os", "referrer", "city", "region", "country"]
        .iter()
        .map(|k| field_map.get_nonempty(k))
        .collect();
    let art_field = |k: &str| field_map.get_nonempty(k);

    let mut files: Vec<PathBuf> = std::fs::read_dir(log_dir)
        .map_err(|e| Error::io(log_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();

    let mut categories = Labeler::default();
    let mut authors = Labeler::default();
    let mut articles: BTreeMap<String, Article> = BTreeMap::new();
    let mut clicks = Vec::new();
    let (mut records, mut dropped) = (0usize, 0usize);

    for path in files {
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            records += 1;
            let Ok(Value::Object(rec)) = serde_json::from_str::<Value>(&line) else {
                dropped += 1;
                continue;
            };
            let get = |f: Option<&str>| f.and_then(|f| json_str(rec.get(f)));
            let (Some(user), Some(article_id), Some(ts)) = (
                get(Some(f_user)),
                get(Some(f_article)),
                get(Some(f_ts)).and_then(|t| parse_time(&t, ts_unit)),
            ) else {
                dropped += 1;
                continue;
            };

            let entry = articles.entry(article_id.clone()).or_insert_with(|| Article {
                id: article_id.clone(),
                published_at: Timestamp::MIN,
                category_id: -1,
                author_id: None,
                title: String::new(),
                body: String::new(),
            });
            if entry.published_at == Timestamp::MIN {
                if let Some(p) = get(art_field("article.published_at")).and_then(|p| parse_time(&p, pub_unit)) {
                    entry.published_at = p;
                }
            }
            if entry.category_id < 0 {
                if let Some(c) = get(art_field("article.category_id")) {
                    entry.category_id = categories.label(&c);
                }
            }
            if entry.author_id.is_none() {
                entry.author_id = get(art_field("article.author_id")).map(|a| authors.label(&a));
            }
            if entry.title.is_empty() {
                entry.title = get(art_field("article.title")).unwrap_or_default();
            }
            if entry.body.is_empty() {
                entry.body = get(art_field("article.body")).unwrap_or_default();
            }

            clicks.push(RawClick {
                user_id: user,
                article_id,
                ts,
                device: get(ctx_fields[0]).unwrap_or_default(),
                os: get(ctx_fields[1]).unwrap_or_default(),
                referrer: get(ctx_fields[2]).unwrap_or_default(),
                city: get(ctx_fields[3]),
                region: get(ctx_fields[4]),
                country: get(ctx_fields[5]),
            });
        }
    }

    // Articles never seen with a publish time fall back to their first click.
    let mut first_click: HashMap<&str, Timestamp> = HashMap::new();
    for c in &clicks {
        let e = first_click.entry(c.article_id.as_str()).or_insert(c.ts);
        *e = (*e).min(c.ts);
    }
    let articles: Vec<Article> = articles
        .into_values()
        .map(|mut a| {
            if a.published_at == Timestamp::MIN {
                a.published_at = first_click.get(a.id.as_str()).copied().unwrap_or(0);
            }
            a.category_id = a.category_id.max(0);
            a
        })
        .collect();
    if dropped > 0 {
        warn!("{}: dropped {dropped} of {records} records", log_dir.display());
    }
    finish(clicks, articles, records, dropped, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1_map() -> KeyValues {
        KeyValues::parse(
            "user_id=user_id\narticle_id=click_article_id\nts=click_timestamp\nts_unit=ms\n\
             device=click_deviceGroup\nos=click_os\nreferrer=click_referrer_type\n\
             region=click_region\ncountry=click_country\n\
             article.article_id=article_id\narticle.published_at=created_at_ts\n\
             article.published_unit=ms\narticle.category_id=category_id\n",
        )
        .unwrap()
    }

    #[test]
    fn g1_ten_rows_match_hand_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let clicks = dir.path().join("clicks");
        std::fs::create_dir(&clicks).unwrap();
        std::fs::write(
            dir.path().join("meta.csv"),
            "article_id,category_id,created_at_ts,publisher_id,words_count\n\
             100,7,1506800000000,0,120\n200,8,1506810000000,0,90\n300,7,1506820000000,0,50\n",
        )
        .unwrap();
        let mut csv = String::from(
            "user_id,session_id,session_start,session_size,click_article_id,click_timestamp,\
             click_environment,click_deviceGroup,click_os,click_country,click_region,click_referrer_type\n",
        );
        let rows = [
            (1, 100, 1506826800000i64, 1, 17, 1, 25, 2),
            (1, 200, 1506826860500, 1, 17, 1, 25, 2),
            (2, 100, 1506826900000, 3, 2, 1, 13, 1),
            (2, 300, 1506827000999, 3, 2, 1, 13, 1),
            (3, 300, 1506827100000, 4, 20, 1, 21, 5),
            (3, 200, 1506827200000, 4, 20, 1, 21, 5),
            (3, 100, 1506827300000, 4, 20, 1, 21, 5),
            (4, 200, 1506827400000, 1, 17, 1, 25, 2),
            (4, 300, 1506827500000, 1, 17, 1, 25, 2),
            (5, 100, 1506827600000, 3, 2, 1, 9, 7),
        ];
        for (u, a, ts, dev, os, country, region, refr) in rows {
            csv.push_str(&format!("{u},s{u},0,2,{a},{ts},4,{dev},{os},{country},{region},{refr}\n"));
        }
        std::fs::write(clicks.join("clicks_hour_000.csv"), csv).unwrap();

        let out = dir.path().join("out");
        let report = load_g1(&clicks, &dir.path().join("meta.csv"), &g1_map(), &out).unwrap();
        let got = std::fs::read_to_string(out.join(EVENTS_FILE)).unwrap();
        let expected = "1\t100\t1506826800\t1\t17\t2\t\t25\t1\n\
                        1\t200\t1506826860\t1\t17\t2\t\t25\t1\n\
                        2\t100\t1506826900\t3\t2\t1\t\t13\t1\n\
                        2\t300\t1506827000\t3\t2\t1\t\t13\t1\n\
                        3\t300\t1506827100\t4\t20\t5\t\t21\t1\n\
                        3\t200\t1506827200\t4\t20\t5\t\t21\t1\n\
                        3\t100\t1506827300\t4\t20\t5\t\t21\t1\n\
                        4\t200\t1506827400\t1\t17\t2\t\t25\t1\n\
                        4\t300\t1506827500\t1\t17\t2\t\t25\t1\n\
                        5\t100\t1506827600\t3\t2\t7\t\t9\t1\n";
        assert_eq!(got, expected);
        let arts = std::fs::read_to_string(out.join(ARTICLES_FILE)).unwrap();
        assert_eq!(arts.lines().next(), Some("100\t1506800000\t7\t\t\t"));
        // user 5 has a single click and is discarded by preprocessing
        assert_eq!(
            report.summary,
            DatasetSummary { users: 4, sessions: 4, clicks: 9, articles: 3 }
        );
    }

    #[test]
    fn g1_empty_dir_gives_empty_output() {
        let dir = tempfile::tempdir().unwrap();
        let clicks = dir.path().join("clicks");
        std::fs::create_dir(&clicks).unwrap();
        std::fs::write(dir.path().join("meta.csv"), "article_id,category_id,created_at_ts\n1,1,0\n").unwrap();
        let out = dir.path().join("out");
        let report = load_g1(&clicks, &dir.path().join("meta.csv"), &g1_map(), &out).unwrap();
        assert_eq!(report.summary, DatasetSummary::default());
        assert_eq!(std::fs::read_to_string(out.join(EVENTS_FILE)).unwrap(), "");
    }

    #[test]
    fn g1_missing_column_names_it() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("c")).unwrap();
        std::fs::write(dir.path().join("meta.csv"), "article_id,created_at_ts\n1,0\n").unwrap();
        let err = load_g1(&dir.path().join("c"), &dir.path().join("meta.csv"), &g1_map(), dir.path()).unwrap_err();
        match err {
            Error::MissingColumn { column, .. } => assert_eq!(column, "category_id"),
            other => panic!("unexpected {other}"),
        }
    }

    fn adressa_map() -> KeyValues {
        KeyValues::parse(
            "user_id=userId\narticle_id=id\nts=time\ndevice=deviceType\nos=os\nreferrer=referrerHostClass\n\
             city=city\nregion=region\ncountry=country\narticle.published_at=publishtime\n\
             article.category_id=category1\narticle.author_id=author\narticle.title=title\n",
        )
        .unwrap()
    }

    #[test]
    fn adressa_five_records_match_hand_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let logs = dir.path().join("logs");
        std::fs::create_dir(&logs).unwrap();
        let lines = [
            r#"{"userId":"cx:1","id":"a1","time":1483225200,"deviceType":"Mobile","os":"iPhone OS","referrerHostClass":"social","city":"trondheim","region":"sor-trondelag","country":"no","publishtime":"2017-01-01T00:00:00.000Z","category1":"nyheter","author":["Ola"],"title":"Storm i byen"}"#,
            r#"{"userId":"cx:1","id":"a2","time":1483225300,"deviceType":"Mobile","os":"iPhone OS","referrerHostClass":"internal","city":"trondheim","region":"sor-trondelag","country":"no","publishtime":"2017-01-01T01:00:00.000Z","category1":"sport","title":"Kamp"}"#,
            r#"{"userId":"cx:2","time":1483225400,"deviceType":"Desktop"}"#,
            r#"{"userId":"cx:2","id":"a1","time":1483225500,"deviceType":"Desktop","os":"Windows","referrerHostClass":"search","country":"no"}"#,
            r#"{"userId":"cx:2","id":"a3","time":1483225600,"deviceType":"Desktop","os":"Windows","referrerHostClass":"internal","country":"no","category1":"nyheter","author":"Kari"}"#,
        ];
        std::fs::write(logs.join("20170101"), lines.join("\n")).unwrap();
        let out = dir.path().join("out");
        let report = load_adressa(&logs, &adressa_map(), &out).unwrap();
        assert_eq!(report.records, 5);
        assert_eq!(report.dropped_records, 1);
        let got = std::fs::read_to_string(out.join(EVENTS_FILE)).unwrap();
        let expected = "cx:1\ta1\t1483225200\tMobile\tiPhone OS\tsocial\ttrondheim\tsor-trondelag\tno\n\
                        cx:1\ta2\t1483225300\tMobile\tiPhone OS\tinternal\ttrondheim\tsor-trondelag\tno\n\
                        cx:2\ta1\t1483225500\tDesktop\tWindows\tsearch\t\t\tno\n\
                        cx:2\ta3\t1483225600\tDesktop\tWindows\tinternal\t\t\tno\n";
        assert_eq!(got, expected);
        let arts = std::fs::read_to_string(out.join(ARTICLES_FILE)).unwrap();
        let expected_arts = "a1\t1483228800\t0\t0\tStorm i byen\t\n\
                             a2\t1483232400\t1\t\tKamp\t\n\
                             a3\t1483225600\t0\t1\t\t\n";
        assert_eq!(arts, expected_arts);
        assert_eq!(report.summary.sessions, 2);
    }
}
