use std::collections::BTreeSet;

use super::PopularityEstimator;
use crate::error::{Error, Result};
use crate::ingest::ArticleIdx;

/// Rank discount base for ESI-R.
pub const ESI_DISCOUNT: f64 = 0.85;

/// 1-based rank of `positive`; its absence is a protocol bug.
pub fn rank_of(ranking: &[ArticleIdx], positive: ArticleIdx) -> Result<usize> {
    ranking
        .iter()
        .position(|&a| a == positive)
        .map(|p| p + 1)
        .ok_or_else(|| Error::Contract(format!("positive article {} missing from ranking", positive.0)))
}

pub fn hr_at_n(ranking: &[ArticleIdx], positive: ArticleIdx, n: usize) -> Result<f64> {
    Ok(if rank_of(ranking, positive)? <= n { 1.0 } else { 0.0 })
}

pub fn mrr_at_n(ranking: &[ArticleIdx], positive: ArticleIdx, n: usize) -> Result<f64> {
    let r = rank_of(ranking, positive)?;
    Ok(if r <= n { 1.0 / r as f64 } else { 0.0 })
}

/// Share of `recommendable` appearing in at least one top-`n` list; `None`
/// when nothing is recommendable.
pub fn coverage_at_n<L: AsRef<[ArticleIdx]>>(lists: &[L], recommendable: &BTreeSet<ArticleIdx>, n: usize) -> Option<f64> {
    if recommendable.is_empty() {
        return None;
    }
    let shown: BTreeSet<ArticleIdx> = lists
        .iter()
        .flat_map(|l| l.as_ref().iter().take(n).copied())
        .filter(|a| recommendable.contains(a))
        .collect();
    Some(shown.len() as f64 / recommendable.len() as f64)
}

/// Rank-discounted mean self-information `−log₂ p̂` of the top-`n` items,
/// with discount `0.85^(k−1)` at rank `k`.
pub fn esi_r_at_n(ranking: &[ArticleIdx], popularity: &PopularityEstimator, n: usize) -> f64 {
    let top = &ranking[..n.min(ranking.len())];
    let Some(&first) = top.first() else {
        return 0.0;
    };
    // Weighted mean taken relative to the first item, so equal values
    // average to themselves exactly.
    let base = popularity.self_information(first);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut disc = 1.0;
    for &a in top {
        num += disc * (popularity.self_information(a) - base);
        den += disc;
        disc *= ESI_DISCOUNT;
    }
    base + num / den
}
