//! Regression error and agreement measures.

use crate::error::{CoreError, Result};

fn check_pair(a: &[f64], b: &[f64], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(CoreError::Shape {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < min {
        return Err(CoreError::EmptyInput(format!("need at least {min} paired values")));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(CoreError::Data("non-finite value in metric input".into()));
    }
    Ok(())
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1)?;
    Ok((pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Pearson correlation; 0 if either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Concordance correlation coefficient with population moments.
/// Two constant inputs with equal means carry no agreement information and
/// score 0.
pub fn ccc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    let denom = variance(a) + variance(b) + (ma - mb) * (ma - mb);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * cov / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let p = [1.0, 2.0, 3.0];
        let t = [2.0, 2.0, 2.0];
        assert!((rmse(&p, &t).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((mae(&p, &t).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rmse(&t, &t).unwrap(), 0.0);
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.5).collect();
        assert!((rmse(&shifted, &p).unwrap() - 1.5).abs() < 1e-15);
        assert!((mae(&shifted, &p).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn ccc_cases() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((ccc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let z = [-1.5, -0.5, 0.5, 1.5];
        let nz: Vec<f64> = z.iter().map(|v| -v).collect();
        assert!((ccc(&z, &nz).unwrap() + 1.0).abs() < 1e-12);
        // cov = 1, var a = 1.25, var b = 1, mean diff = 0.5
        let b = [2.0, 2.0, 4.0, 4.0];
        assert!((ccc(&a, &b).unwrap() - 2.0 / 2.5).abs() < 1e-12);
        assert_eq!(ccc(&[3.0, 3.0], &[3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(CoreError::Shape { .. })));
        assert!(matches!(mae(&[], &[]), Err(CoreError::EmptyInput(_))));
        assert!(matches!(ccc(&[1.0], &[1.0]), Err(CoreError::EmptyInput(_))));
        assert!(matches!(rmse(&[f64::NAN], &[1.0]), Err(CoreError::Data(_))));
    }
}
