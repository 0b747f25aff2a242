//! Two-sample t-test, Wilcoxon signed-rank test and Bonferroni correction.

use serde::{Deserialize, Serialize};

use super::metrics::mean;
use crate::error::{CoreError, Result};
use crate::matrix::FeatureMatrix;
use crate::special::{normal_sf, student_t_two_sided};

/// Largest nonzero-difference count evaluated with the exact null distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;
pub const WILCOXON_MIN_PAIRS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Pooled-variance Student t-test, two-sided, `df = n₁ + n₂ − 2`.
pub fn ttest_two_sample(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(CoreError::InsufficientData(format!(
            "t-test needs at least 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(CoreError::Data("non-finite value in t-test input".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let ss = |x: &[f64], m: f64| x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let df = na + nb - 2.0;
    let pooled = (ss(a, ma) + ss(b, mb)) / df;
    if pooled <= 0.0 {
        return Err(CoreError::DegenerateTest("zero pooled variance".into()));
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let p = student_t_two_sided(t, df).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(TTest {
        t,
        df,
        p,
        mean_a: ma,
        mean_b: mb,
        n_a: a.len(),
        n_b: b.len(),
    })
}

pub fn bonferroni(p: f64, m_tests: usize) -> f64 {
    (p * m_tests as f64).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// `min(W+, W−)`.
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub p: f64,
    pub bonferroni_p: f64,
    pub exact: bool,
}

/// Average ranks (1-based) of `|d|`, with tie group sizes.
fn average_ranks(abs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0.0; abs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && abs[order[end]] == abs[order[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// `P(W ≤ w)` under the null, by counting sign assignments over the
/// (doubled, hence integer) ranks.
fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let limit = (2.0 * w).round() as usize;
    let below: f64 = counts[..=limit.min(total)].iter().sum();
    below / 2f64.powi(ranks.len() as i32)
}

pub fn wilcoxon_signed_rank(before: &[f64], after: &[f64], m_tests: usize) -> Result<Wilcoxon> {
    if before.len() != after.len() {
        return Err(CoreError::Shape {
            expected: before.len(),
            got: after.len(),
        });
    }
    if before.iter().chain(after).any(|v| !v.is_finite()) {
        return Err(CoreError::Data("non-finite value in Wilcoxon input".into()));
    }
    let diffs: Vec<f64> = after
        .iter()
        .zip(before)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(CoreError::DegenerateTest("all paired differences are zero".into()));
    }
    let n = diffs.len();
    if n < WILCOXON_MIN_PAIRS {
        return Err(CoreError::InsufficientData(format!(
            "Wilcoxon test needs {WILCOXON_MIN_PAIRS} nonzero differences, got {n}"
        )));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let nf = n as f64;
    let w_minus = nf * (nf + 1.0) / 2.0 - w_plus;
    let w = w_plus.min(w_minus);

    let exact = n <= WILCOXON_EXACT_MAX;
    let p = if exact {
        2.0 * exact_lower_tail(&ranks, w)
    } else {
        let mu = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
        let z = ((w - mu + 0.5) / sd).min(0.0);
        2.0 * normal_sf(-z)
    }
    .clamp(f64::MIN_POSITIVE, 1.0);
    Ok(Wilcoxon {
        w,
        w_plus,
        w_minus,
        n,
        p,
        bonferroni_p: bonferroni(p, m_tests),
        exact,
    })
}

/// Per-feature paired test of a transformation (e.g. enhancement) on aligned
/// feature matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureShift {
    pub feature: String,
    /// `None` when the test is degenerate for this feature.
    pub test: Option<Wilcoxon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSummary {
    pub alpha: f64,
    pub features: Vec<FeatureShift>,
    pub significant: usize,
    pub fraction_significant: f64,
}

/// Wilcoxon test per column with Bonferroni correction over all columns.
pub fn feature_shift_tests(before: &FeatureMatrix, after: &FeatureMatrix, alpha: f64) -> Result<ShiftSummary> {
    let after = after.align_to(&before.ids)?;
    if before.names != after.names {
        return Err(CoreError::Data("feature matrices have different columns".into()));
    }
    let m = before.ncols();
    let mut features = Vec::with_capacity(m);
    for (j, name) in before.names.iter().enumerate() {
        let b = before.values.column(j).to_vec();
        let a = after.values.column(j).to_vec();
        let test = match wilcoxon_signed_rank(&b, &a, m) {
            Ok(t) => Some(t),
            Err(CoreError::DegenerateTest(_) | CoreError::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        };
        features.push(FeatureShift {
            feature: name.clone(),
            test,
        });
    }
    let significant = features
        .iter()
        .filter(|f| f.test.is_some_and(|t| t.bonferroni_p < alpha))
        .count();
    Ok(ShiftSummary {
        alpha,
        significant,
        fraction_significant: if m == 0 { 0.0 } else { significant as f64 / m as f64 },
        features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0, 5.0];
        let t = ttest_two_sample(&a, &a).unwrap();
        assert_eq!(t.t, 0.0);
        assert!((t.p - 1.0).abs() < 1e-12);
        assert_eq!(t.df, 6.0);
    }

    #[test]
    fn ttest_swap_changes_sign_only() {
        let a = [1.0, 2.5, 3.0, 4.0, 2.0];
        let b = [3.0, 4.0, 5.5, 3.5];
        let ab = ttest_two_sample(&a, &b).unwrap();
        let ba = ttest_two_sample(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p, ba.p);
        assert!(ab.p > 0.0 && ab.p <= 1.0);
    }

    #[test]
    fn ttest_degenerate() {
        assert!(matches!(
            ttest_two_sample(&[1.0, 1.0], &[2.0, 2.0]),
            Err(CoreError::DegenerateTest(_))
        ));
        assert!(ttest_two_sample(&[1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn wilcoxon_shift_by_one() {
        let before: Vec<f64> = (1..=20).map(f64::from).collect();
        let after: Vec<f64> = before.iter().map(|v| v + 1.0).collect();
        let w = wilcoxon_signed_rank(&before, &after, 1).unwrap();
        assert_eq!(w.w, 0.0);
        assert!(w.exact);
        assert!(w.p < 0.01);
        assert!((w.p - 2.0 / 2f64.powi(20)).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_degenerate() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(
            wilcoxon_signed_rank(&x, &x, 1),
            Err(CoreError::DegenerateTest(_))
        ));
    }

    #[test]
    fn bonferroni_scales_and_caps() {
        assert!((bonferroni(0.0001, 220) - 0.022).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 3), 1.0);
    }

    #[test]
    fn average_ranks_with_ties() {
        let (r, t) = average_ranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, vec![1, 1, 2]);
    }

    #[test]
    fn normal_branch_is_symmetric() {
        let before: Vec<f64> = (0..40).map(|i| f64::from(i) * 0.37 % 5.0).collect();
        let up: Vec<f64> = before
            .iter()
            .enumerate()
            .map(|(i, v)| v + if i % 3 == 0 { -0.5 } else { 0.8 })
            .collect();
        let down: Vec<f64> = before.iter().zip(&up).map(|(b, u)| 2.0 * b - u).collect();
        let a = wilcoxon_signed_rank(&before, &up, 1).unwrap();
        let b = wilcoxon_signed_rank(&before, &down, 1).unwrap();
        assert!(!a.exact);
        assert_eq!(a.w, b.w);
        assert!((a.p - b.p).abs() < 1e-15);
    }
}
