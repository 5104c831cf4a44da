use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ttest::{paired_ttest, PairedTTest, SIGNIFICANCE_LEVEL};
use crate::error::{Error, Result};
use crate::ingest::Timestamp;

/// The per-sample metrics, in the order stored in [`SampleResult::values`].
pub const SAMPLE_METRICS: [&str; 3] = ["HR", "MRR", "ESI-R"];

/// HR, MRR and ESI-R of one recommender on one prediction task.
pub type SampleValues = [f64; 3];

/// Outcome of one next-click prediction for every recommender.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleResult {
    pub hour: i64,
    pub session_id: u64,
    pub prefix_len: usize,
    pub pool_size: usize,
    /// One entry per recommender, in roster order.
    pub values: Vec<SampleValues>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub hr: f64,
    pub mrr: f64,
    /// `None` when nothing was recommendable in the hour.
    pub cov: Option<f64>,
    pub esi_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourRow {
    pub hour: i64,
    pub hour_start: Timestamp,
    pub samples: usize,
    pub skipped_empty_pool: usize,
    pub small_pool: usize,
    pub recommendable: usize,
    /// One entry per recommender, in roster order.
    pub values: Vec<MetricValues>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommenderSummary {
    pub name: String,
    pub hr: f64,
    pub mrr: f64,
    pub cov: Option<f64>,
    pub esi_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub metric: String,
    pub a: String,
    pub b: String,
    pub n_sessions: usize,
    pub mean_diff: f64,
    /// `None` when every per-session difference is the same nonzero value.
    pub t: Option<f64>,
    pub p: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

impl Significance {
    fn new(metric: &str, a: &str, b: &str, test: PairedTTest) -> Self {
        Significance {
            metric: metric.to_string(),
            a: a.to_string(),
            b: b.to_string(),
            n_sessions: test.n,
            mean_diff: test.mean_diff,
            t: test.t.is_finite().then_some(test.t),
            p: test.p,
            p_adjusted: test.p_adjusted,
            significant: test.significant(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub list_len: usize,
    pub recommenders: Vec<String>,
    pub eval_hours: usize,
    pub samples: usize,
    pub skipped_empty_pool: usize,
    pub small_pool_samples: usize,
    pub significance_level: f64,
    pub aggregate: Vec<RecommenderSummary>,
    pub significance: Vec<Significance>,
    pub hours: Vec<HourRow>,
    pub manifest: BTreeMap<String, String>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Per-recommender, per-session averages of each sample metric. Sessions are
/// ordered by `(hour, session id)`.
pub fn session_means(samples: &[&SampleResult], n_rec: usize) -> Vec<Vec<Vec<f64>>> {
    let mut groups: BTreeMap<(i64, u64), Vec<&SampleResult>> = BTreeMap::new();
    for &s in samples {
        groups.entry((s.hour, s.session_id)).or_default().push(s);
    }
    (0..n_rec)
        .map(|r| {
            (0..SAMPLE_METRICS.len())
                .map(|m| {
                    groups
                        .values()
                        .map(|g| mean(g.iter().map(|s| s.values[r][m])))
                        .collect()
                })
                .collect()
        })
        .collect()
}

impl MetricsReport {
    /// Aggregates sample results and per-hour coverage into a report.
    /// `hours` carries everything but the sample counts and HR/MRR/ESI-R
    /// means, which are recomputed from `samples`.
    pub fn build(
        recommenders: Vec<String>,
        list_len: usize,
        mut hours: Vec<HourRow>,
        samples: &[SampleResult],
        manifest: BTreeMap<String, String>,
    ) -> Result<Self> {
        let n_rec = recommenders.len();
        let mut sorted: Vec<&SampleResult> = samples.iter().collect();
        sorted.sort_by_key(|s| (s.hour, s.session_id, s.prefix_len));
        let samples = sorted;
        for row in &mut hours {
            let hs: Vec<&SampleResult> = samples.iter().copied().filter(|s| s.hour == row.hour).collect();
            row.samples = hs.len();
            for (r, v) in row.values.iter_mut().enumerate() {
                v.hr = mean(hs.iter().map(|s| s.values[r][0]));
                v.mrr = mean(hs.iter().map(|s| s.values[r][1]));
                v.esi_r = mean(hs.iter().map(|s| s.values[r][2]));
            }
        }
        let aggregate = recommenders
            .iter()
            .enumerate()
            .map(|(r, name)| {
                let covs: Vec<f64> = hours.iter().filter_map(|h| h.values[r].cov).collect();
                RecommenderSummary {
                    name: name.clone(),
                    hr: mean(samples.iter().map(|s| s.values[r][0])),
                    mrr: mean(samples.iter().map(|s| s.values[r][1])),
                    cov: (!covs.is_empty()).then(|| mean(covs.iter().copied())),
                    esi_r: mean(samples.iter().map(|s| s.values[r][2])),
                }
            })
            .collect();
        let per_session = session_means(&samples, n_rec);
        let n_pairs = n_rec * n_rec.saturating_sub(1) / 2;
        let mut significance = Vec::new();
        if per_session.first().is_some_and(|m| m[0].len() >= 2) {
            for (m, metric) in SAMPLE_METRICS.iter().enumerate() {
                for a in 0..n_rec {
                    for b in a + 1..n_rec {
                        let test = paired_ttest(&per_session[a][m], &per_session[b][m], n_pairs)?;
                        significance.push(Significance::new(
                            &format!("{metric}@{list_len}"),
                            &recommenders[a],
                            &recommenders[b],
                            test,
                        ));
                    }
                }
            }
        }
        Ok(MetricsReport {
            list_len,
            eval_hours: hours.len(),
            samples: samples.len(),
            skipped_empty_pool: hours.iter().map(|h| h.skipped_empty_pool).sum(),
            small_pool_samples: hours.iter().map(|h| h.small_pool).sum(),
            significance_level: SIGNIFICANCE_LEVEL,
            recommenders,
            aggregate,
            significance,
            hours,
            manifest,
        })
    }

    pub fn summary(&self, name: &str) -> Option<&RecommenderSummary> {
        self.aggregate.iter().find(|s| s.name == name)
    }

    pub fn metric_names(&self) -> [String; 4] {
        let n = self.list_len;
        [format!("HR@{n}"), format!("MRR@{n}"), format!("COV@{n}"), format!("ESI-R@{n}")]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("malformed report: {e}")))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// One row per (hour, recommender) with a column per metric.
    pub fn write_hourly_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let [hr, mrr, cov, esi] = self.metric_names();
        w.write_record(["hour", "hour_start", "recommender", "samples", &hr, &mrr, &cov, &esi])
            .map_err(|e| csv_error(path, e))?;
        for h in &self.hours {
            for (name, v) in self.recommenders.iter().zip(&h.values) {
                w.write_record([
                    h.hour.to_string(),
                    h.hour_start.to_string(),
                    name.clone(),
                    h.samples.to_string(),
                    v.hr.to_string(),
                    v.mrr.to_string(),
                    v.cov.map(|c| c.to_string()).unwrap_or_default(),
                    v.esi_r.to_string(),
                ])
                .map_err(|e| csv_error(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Long format `(hour, recommender, metric, value)` for plotting.
    pub fn write_tidy_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["hour", "recommender", "metric", "value"])
            .map_err(|e| csv_error(path, e))?;
        let names = self.metric_names();
        for h in &self.hours {
            for (rec, v) in self.recommenders.iter().zip(&h.values) {
                let vals = [Some(v.hr), Some(v.mrr), v.cov, Some(v.esi_r)];
                for (metric, val) in names.iter().zip(vals) {
                    if let Some(val) = val {
                        w.write_record([h.hour.to_string(), rec.clone(), metric.clone(), val.to_string()])
                            .map_err(|e| csv_error(path, e))?;
                    }
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Plain-text results table followed by the significant comparisons.
    pub fn render_table(&self) -> String {
        let names = self.metric_names();
        let width = self.recommenders.iter().map(String::len).max().unwrap_or(0).max(11);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "recommender");
        for n in &names {
            let _ = write!(out, " {n:>9}");
        }
        out.push('\n');
        for s in &self.aggregate {
            let _ = write!(out, "{:<width$}", s.name);
            let cov = s.cov.map_or_else(|| "-".to_string(), |c| format!("{c:.4}"));
            let _ = writeln!(out, " {:>9.4} {:>9.4} {:>9} {:>9.4}", s.hr, s.mrr, cov, s.esi_r);
        }
        let _ = writeln!(
            out,
            "{} samples over {} evaluation hours ({} skipped for an empty pool, {} with a short pool)",
            self.samples, self.eval_hours, self.skipped_empty_pool, self.small_pool_samples
        );
        let sig: Vec<&Significance> = self.significance.iter().filter(|s| s.significant).collect();
        if !sig.is_empty() {
            let _ = writeln!(out, "significant at p < {} (Bonferroni):", self.significance_level);
            for s in sig {
                let _ = writeln!(out, "  {}: {} vs {} (diff {:+.4}, p = {:.2e})", s.metric, s.a, s.b, s.mean_diff, s.p_adjusted);
            }
        }
        out
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}
