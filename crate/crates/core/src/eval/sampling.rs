use rand::seq::index;
use rand::Rng;

use crate::ingest::ArticleIdx;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSample {
    pub negatives: Vec<ArticleIdx>,
    /// Eligible articles before sampling.
    pub pool_size: usize,
}

impl CandidateSample {
    /// Fewer eligible articles than requested negatives.
    pub fn is_small(&self, n_neg: usize) -> bool {
        self.pool_size < n_neg
    }
}

/// Draws up to `n_neg` negatives uniformly without replacement from `pool`
/// (ascending, deduplicated) minus `viewed` minus `positive`. `None` when
/// nothing is eligible.
pub fn sample_candidates(
    positive: ArticleIdx,
    viewed: &[ArticleIdx],
    pool: &[ArticleIdx],
    n_neg: usize,
    rng: &mut impl Rng,
) -> Option<CandidateSample> {
    let eligible: Vec<ArticleIdx> = pool
        .iter()
        .copied()
        .filter(|&a| a != positive && !viewed.contains(&a))
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let take = n_neg.min(eligible.len());
    let negatives = index::sample(rng, eligible.len(), take)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    Some(CandidateSample {
        negatives,
        pool_size: eligible.len(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pool(n: u32) -> Vec<ArticleIdx> {
        (0..n).map(ArticleIdx).collect()
    }

    #[test]
    fn full_pool_gives_fifty_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let viewed = [ArticleIdx(3), ArticleIdx(7)];
        let s = sample_candidates(ArticleIdx(5), &viewed, &pool(203), 50, &mut rng).unwrap();
        assert_eq!(s.pool_size, 200);
        assert_eq!(s.negatives.iter().collect::<BTreeSet<_>>().len(), 50);
        assert!(!s.is_small(50));
    }

    #[test]
    fn small_pool_is_used_whole() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_candidates(ArticleIdx(100), &[], &pool(30), 50, &mut rng).unwrap();
        assert_eq!(s.pool_size, 30);
        assert_eq!(s.negatives.iter().copied().collect::<BTreeSet<_>>(), pool(30).into_iter().collect());
        assert!(s.is_small(50));
    }

    #[test]
    fn empty_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_candidates(ArticleIdx(0), &[ArticleIdx(1)], &pool(2), 50, &mut rng), None);
    }

    #[test]
    fn seeded_draws_repeat() {
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            sample_candidates(ArticleIdx(0), &[], &pool(500), 50, &mut rng)
        };
        assert_eq!(draw(), draw());
    }

    proptest! {
        #[test]
        fn negatives_avoid_session_and_positive(
            n in 1u32..120,
            pos in 0u32..130,
            viewed in proptest::collection::vec(0u32..130, 0..10),
            seed in any::<u64>(),
        ) {
            let viewed: Vec<ArticleIdx> = viewed.into_iter().map(ArticleIdx).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Some(s) = sample_candidates(ArticleIdx(pos), &viewed, &pool(n), 50, &mut rng) {
                prop_assert!(s.negatives.len() <= 50);
                prop_assert_eq!(s.negatives.len(), s.pool_size.min(50));
                prop_assert!(!s.negatives.contains(&ArticleIdx(pos)));
                prop_assert!(s.negatives.iter().all(|a| !viewed.contains(a) && a.0 < n));
                prop_assert_eq!(s.negatives.iter().collect::<BTreeSet<_>>().len(), s.negatives.len());
            }
        }
    }
}
