//! Independent reference computations used by the integration tests.

/// Singular values of a dense row-major matrix by one-sided Jacobi
/// rotations, in non-increasing order.
pub fn jacobi_singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len();
    let n = rows[0].len();
    // Work on columns.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| rows[i][j]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    alpha += cols[p][i] * cols[p][i];
                    beta += cols[q][i] * cols[q][i];
                    gamma += cols[p][i] * cols[q][i];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (a, b) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * a - s * b;
                    cols[q][i] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `m[a][b]`: number of sessions containing both `a` and `b` (`a != b`).
pub fn co_matrix(sessions: &[Vec<u32>], n_items: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0; n_items]; n_items];
    for s in sessions {
        for &a in s {
            for &b in s {
                if a != b {
                    m[a as usize][b as usize] += 1;
                }
            }
        }
    }
    m
}

/// `m[x][y]`: sum over sessions and positions `p < q` with `s[p] = x`,
/// `s[q] = y` of `1 / (q − p)`.
pub fn sr_matrix(sessions: &[Vec<u32>], n_items: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n_items]; n_items];
    for s in sessions {
        for p in 0..s.len() {
            for q in p + 1..s.len() {
                m[s[p] as usize][s[q] as usize] += 1.0 / (q - p) as f64;
            }
        }
    }
    m
}

/// Cosine of rows `a` and `b` of a co-occurrence matrix; 0 when either row
/// is zero.
pub fn row_cosine(m: &[Vec<u64>], a: u32, b: u32) -> f64 {
    let (ra, rb) = (&m[a as usize], &m[b as usize]);
    let dot: f64 = ra.iter().zip(rb).map(|(x, y)| (*x as f64) * (*y as f64)).sum();
    let na = ra.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb = rb.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Clicks on `article` at most `window` seconds old at `now`, excluding
/// clicks exactly `window` old.
pub fn window_count(clicks: &[(u32, i64)], article: u32, now: i64, window: i64) -> u64 {
    clicks
        .iter()
        .filter(|&&(a, ts)| a == article && ts <= now && now - ts < window)
        .count() as u64
}
