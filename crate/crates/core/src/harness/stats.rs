//! Paired and two-sample t-tests with Bonferroni correction.

use crate::error::{CtflowError, Result};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy)]
pub struct TTestResult {
    pub t: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
    /// Zero-variance input: the statistic is reported as +-inf or 0 and
    /// the p-value degenerates to 0 or 1.
    pub degenerate: bool,
}

fn two_sided_p(t: f64, dof: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof).expect("valid dof");
    2.0 * dist.cdf(-t.abs())
}

/// Paired t-test of equal-length samples with Bonferroni adjustment over
/// `n_comparisons` tests. Significance is judged at 0.05 on the adjusted
/// p-value.
pub fn paired_ttest_bonferroni(
    group_a: &[f64],
    group_b: &[f64],
    n_comparisons: usize,
) -> Result<TTestResult> {
    if group_a.len() != group_b.len() {
        return Err(CtflowError::Stats("paired samples differ in length".into()));
    }
    let n = group_a.len();
    if n < 2 {
        return Err(CtflowError::Stats("need at least two pairs".into()));
    }
    if n_comparisons == 0 {
        return Err(CtflowError::Stats("n_comparisons must be positive".into()));
    }
    let diffs: Vec<f64> = group_a.iter().zip(group_b).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTestResult {
            t,
            p_raw: p,
            p_adjusted: (p * n_comparisons as f64).min(1.0),
            significant: p < 0.05,
            degenerate: true,
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let p = two_sided_p(t, (n - 1) as f64);
    let p_adjusted = (p * n_comparisons as f64).min(1.0);
    Ok(TTestResult {
        t,
        p_raw: p,
        p_adjusted,
        significant: p_adjusted < 0.05,
        degenerate: false,
    })
}

/// Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.
pub fn welch_ttest(group_a: &[f64], group_b: &[f64]) -> Result<(f64, f64)> {
    let (na, nb) = (group_a.len(), group_b.len());
    if na < 2 || nb < 2 {
        return Err(CtflowError::Stats("need at least two samples per group".into()));
    }
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let var = |g: &[f64], m: f64| g.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (g.len() - 1) as f64;
    let (ma, mb) = (mean(group_a), mean(group_b));
    let (va, vb) = (var(group_a, ma), var(group_b, mb));
    let sa = va / na as f64;
    let sb = vb / nb as f64;
    if sa + sb == 0.0 {
        return Ok(if ma == mb {
            (0.0, 1.0)
        } else {
            ((ma - mb).signum() * f64::INFINITY, 0.0)
        });
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let dof = (sa + sb).powi(2)
        / (sa * sa / (na as f64 - 1.0) + sb * sb / (nb as f64 - 1.0));
    Ok((t, two_sided_p(t, dof)))
}
