//! Latent semantic analysis: TF-IDF followed by a randomized truncated SVD.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::l2_normalized;
use super::sparse::{LinearOperator, SparseVec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SvdParams {
    pub oversampling: usize,
    /// Power iterations always applied.
    pub power_iters: usize,
    /// Further power iterations are applied until the top singular values
    /// change by less than `tolerance` (relative) or this cap is reached.
    pub max_power_iters: usize,
    pub tolerance: f64,
}

impl Default for SvdParams {
    fn default() -> Self {
        SvdParams {
            oversampling: 10,
            power_iters: 2,
            max_power_iters: 100,
            tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// m × k
    pub u: DMatrix<f64>,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    /// n × k
    pub v: DMatrix<f64>,
    pub power_iters_used: usize,
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Top singular values of `Qᵀ A` from the eigenvalues of `(QᵀA)(QᵀA)ᵀ`;
/// only used to monitor convergence.
fn ritz_values(b: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let gram = b * b.transpose();
    let mut ev: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.truncate(k);
    ev
}

/// Randomized range finder with subspace (power) iteration.
///
/// A seeded Gaussian test matrix with `k + oversampling` columns sketches
/// the range of `a`; each power iteration re-orthonormalizes through `Aᵀ`
/// and `A`. The SVD of the small projected matrix gives the factors.
pub fn randomized_svd(a: &impl LinearOperator, k: usize, params: &SvdParams, seed: u64) -> TruncatedSvd {
    let (m, n) = (a.nrows(), a.ncols());
    let full = m.min(n);
    let k = k.min(full);
    let l = (k + params.oversampling).min(full);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormal_basis(a.apply(&omega));
    let iterate = |q: &DMatrix<f64>| {
        let z = orthonormal_basis(a.apply_transpose(q));
        orthonormal_basis(a.apply(&z))
    };
    for _ in 0..params.power_iters {
        q = iterate(&q);
    }
    let mut used = params.power_iters;
    if l < full {
        let mut prev = ritz_values(&a.apply_transpose(&q).transpose(), k);
        while used < params.max_power_iters {
            q = iterate(&q);
            used += 1;
            let cur = ritz_values(&a.apply_transpose(&q).transpose(), k);
            let change = prev
                .iter()
                .zip(&cur)
                .map(|(p, c)| (p - c).abs() / c.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            prev = cur;
            if change <= params.tolerance {
                break;
            }
        }
    }

    // B = Qᵀ A  (l × n)
    let b = a.apply_transpose(&q).transpose();
    let svd = SVD::new(b, true, true);
    let u_b = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    order.truncate(k);

    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_small = DMatrix::from_fn(u_b.nrows(), k, |r, c| u_b[(r, order[c])]);
    let v = DMatrix::from_fn(n, k, |r, c| v_t[(order[c], r)]);
    TruncatedSvd {
        u: &q * u_small,
        singular_values,
        v,
        power_iters_used: used,
    }
}

#[derive(Clone, Debug)]
pub struct LsaModel {
    /// |V| × k right singular vectors.
    pub projection: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub k: usize,
}

/// Relative size below which a singular value counts as zero.
const RANK_TOL: f64 = 1e-10;

/// Returns the model and the (unnormalized) `U·Σ` rows of the training
/// documents.
pub fn lsa_fit(tfidf: &impl LinearOperator, k: usize, params: &SvdParams, seed: u64) -> Result<(LsaModel, DMatrix<f64>)> {
    if tfidf.nrows() == 0 || tfidf.ncols() == 0 {
        return Err(Error::Data("LSA needs a non-empty TF-IDF matrix".into()));
    }
    let svd = randomized_svd(tfidf, k, params, seed);
    let top = svd.singular_values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::Data("LSA needs a non-zero TF-IDF matrix".into()));
    }
    let rank = svd.singular_values.iter().take_while(|&&s| s > RANK_TOL * top).count();
    if rank < k {
        warn!("LSA rank {k} exceeds matrix rank {rank}; reducing");
    }
    let projection = svd.v.columns(0, rank).into_owned();
    let mut docs = svd.u.columns(0, rank).into_owned();
    for (c, s) in svd.singular_values.iter().take(rank).enumerate() {
        docs.column_mut(c).scale_mut(*s);
    }
    Ok((
        LsaModel {
            projection,
            singular_values: svd.singular_values[..rank].to_vec(),
            k: rank,
        },
        docs,
    ))
}

impl LsaModel {
    /// Fold-in `vᵀ · projection`, before normalization.
    pub fn project(&self, tfidf: &SparseVec) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for (i, w) in tfidf.iter() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += w * self.projection[(i, c)];
            }
        }
        out
    }

    /// Unit-norm embedding, or `None` for a document with no weight in the
    /// latent space.
    pub fn encode(&self, tfidf: &SparseVec) -> Option<Vec<f64>> {
        l2_normalized(self.project(tfidf))
    }
}
