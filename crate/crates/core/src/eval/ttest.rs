use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance level applied to Bonferroni-adjusted p-values.
pub const SIGNIFICANCE_LEVEL: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p: f64,
    pub p_adjusted: f64,
}

impl PairedTTest {
    pub fn significant(&self) -> bool {
        self.p_adjusted < SIGNIFICANCE_LEVEL
    }
}

/// Two-sided paired Student's t-test of `a − b`, with the p-value multiplied
/// by `n_comparisons` (capped at 1).
pub fn paired_ttest(a: &[f64], b: &[f64], n_comparisons: usize) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!("paired series differ in length ({} vs {})", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Data(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean / (var / n as f64).sqrt();
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("n >= 2 gives positive dof");
        (t, 2.0 * dist.cdf(-t.abs()))
    };
    Ok(PairedTTest {
        n,
        mean_diff: mean,
        t,
        p,
        p_adjusted: (p * n_comparisons.max(1) as f64).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series() {
        let a = [0.1, 0.5, 0.3];
        let r = paired_ttest(&a, &a, 10).unwrap();
        assert_eq!((r.t, r.p_adjusted), (0.0, 1.0));
    }

    #[test]
    fn constant_shift() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, 1.5, 2.5];
        let r = paired_ttest(&a, &b, 3).unwrap();
        assert_eq!(r.p_adjusted, 0.0);
        assert!(r.significant());
    }

    #[test]
    fn twenty_pairs_hand_computed() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() + 0.2).collect();
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 0.91).cos() * 0.5).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mut sum = 0.0;
        for x in &d {
            sum += x;
        }
        let mean = sum / 20.0;
        let mut ss = 0.0;
        for x in &d {
            ss += (x - mean) * (x - mean);
        }
        let sd = (ss / 19.0).sqrt();
        let t = mean / (sd / 20f64.sqrt());
        let r = paired_ttest(&a, &b, 1).unwrap();
        assert!((r.t - t).abs() < 1e-9, "{} vs {t}", r.t);
        assert!(r.p > 0.0 && r.p < 1.0);
        let r6 = paired_ttest(&a, &b, 6).unwrap();
        assert!((r6.p_adjusted - (6.0 * r.p).min(1.0)).abs() < 1e-15);
    }

    #[test]
    fn known_p_value() {
        // t = 2.262157 is the two-sided 5% critical value for 9 dof.
        let d = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let shift = 2.262157 * (10.0f64 / 9.0).sqrt() / 10f64.sqrt();
        let a: Vec<f64> = d.iter().map(|x| x + shift).collect();
        let r = paired_ttest(&a, &[0.0; 10], 1).unwrap();
        assert!((r.t - 2.262157).abs() < 1e-9);
        assert!((r.p - 0.05).abs() < 1e-6, "{}", r.p);
    }

    #[test]
    fn rejects_short_or_unpaired() {
        assert!(paired_ttest(&[1.0], &[2.0], 1).is_err());
        assert!(paired_ttest(&[1.0, 2.0], &[2.0], 1).is_err());
    }
}
