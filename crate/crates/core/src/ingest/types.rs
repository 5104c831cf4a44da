use std::collections::HashMap;

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

/// Dense index of an article inside a [`Catalog`].
///
/// The catalog keeps articles sorted by their opaque id, so comparing two
/// indices orders the articles by id as well.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArticleIdx(pub u32);

impl ArticleIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Article {
    pub id: String,
    pub published_at: Timestamp,
    pub category_id: i64,
    pub author_id: Option<i64>,
    pub title: String,
    pub body: String,
}

/// One page view.
#[derive(Clone, Debug, PartialEq)]
pub struct ClickEvent {
    pub user_id: String,
    pub article: ArticleIdx,
    pub ts: Timestamp,
    pub device: String,
    pub os: String,
    pub referrer: String,
    pub city: Option<String>,
    pub region: Option<String>,
    pub country: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub id: u64,
    pub user_id: String,
    pub start_ts: Timestamp,
    pub clicks: Vec<ClickEvent>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    pub fn articles(&self) -> impl Iterator<Item = ArticleIdx> + '_ {
        self.clicks.iter().map(|c| c.article)
    }

    pub fn end_ts(&self) -> Timestamp {
        self.clicks.last().map_or(self.start_ts, |c| c.ts)
    }
}

/// Article catalog, sorted by article id.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    articles: Vec<Article>,
    by_id: HashMap<String, ArticleIdx>,
}

impl Catalog {
    /// Builds a catalog. Duplicate ids keep the first occurrence; the number
    /// of discarded duplicates is returned alongside.
    pub fn new(mut articles: Vec<Article>) -> (Self, usize) {
        articles.sort_by(|a, b| a.id.cmp(&b.id));
        let before = articles.len();
        articles.dedup_by(|later, earlier| later.id == earlier.id);
        let duplicates = before - articles.len();
        let by_id = articles
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), ArticleIdx(i as u32)))
            .collect();
        (Catalog { articles, by_id }, duplicates)
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn resolve(&self, id: &str) -> Option<ArticleIdx> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, idx: ArticleIdx) -> &Article {
        &self.articles[idx.index()]
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArticleIdx, &Article)> {
        self.articles
            .iter()
            .enumerate()
            .map(|(i, a)| (ArticleIdx(i as u32), a))
    }

    /// True when at least one article carries an author label.
    pub fn has_authors(&self) -> bool {
        self.articles.iter().any(|a| a.author_id.is_some())
    }
}

/// Counts reported by the dataset adapters.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub sessions: usize,
    pub clicks: usize,
    pub articles: usize,
}

impl DatasetSummary {
    pub fn from_sessions(sessions: &[Session]) -> Self {
        let mut users = std::collections::HashSet::new();
        let mut articles = std::collections::HashSet::new();
        let mut clicks = 0;
        for s in sessions {
            users.insert(s.user_id.as_str());
            for c in &s.clicks {
                articles.insert(c.article);
            }
            clicks += s.clicks.len();
        }
        DatasetSummary {
            users: users.len(),
            sessions: sessions.len(),
            clicks,
            articles: articles.len(),
        }
    }

    pub fn avg_session_length(&self) -> f64 {
        if self.sessions == 0 {
            0.0
        } else {
            self.clicks as f64 / self.sessions as f64
        }
    }
}

impl std::fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "# users              {:>12}", self.users)?;
        writeln!(f, "# sessions           {:>12}", self.sessions)?;
        writeln!(f, "# clicks             {:>12}", self.clicks)?;
        writeln!(f, "# articles           {:>12}", self.articles)?;
        write!(f, "avg. session length  {:>12.2}", self.avg_session_length())
    }
}
