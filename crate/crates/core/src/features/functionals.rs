//! Statistical functionals over the present values of a track.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalSet {
    /// min, max, mean, variance
    Basic4,
    /// basic4 plus skewness and excess kurtosis
    Full6,
    /// skewness and excess kurtosis only
    Shape2,
}

impl FunctionalSet {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FunctionalSet::Basic4 => &["min", "max", "mean", "var"],
            FunctionalSet::Full6 => &["min", "max", "mean", "var", "skew", "kurt"],
            FunctionalSet::Shape2 => &["skew", "kurt"],
        }
    }
}

/// Evaluate `set` over `values`. `None` marks an undefined statistic:
/// no values at all, fewer than 2 for the variance, or fewer than 3 (or zero
/// spread) for skewness and kurtosis. Variance is the population variance and
/// kurtosis is excess kurtosis.
pub fn functionals(values: &[f64], set: FunctionalSet) -> Vec<(&'static str, Option<f64>)> {
    let n = values.len();
    let nf = n as f64;
    let mean = (n > 0).then(|| values.iter().sum::<f64>() / nf);
    let moments = mean.map(|m| {
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for v in values {
            let d = v - m;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        (m2 / nf, m3 / nf, m4 / nf)
    });
    // spread below this is rounding noise relative to the data scale
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let shape_defined = |m2: f64| n >= 3 && m2.sqrt() > 1e-12 * scale;

    set.names()
        .iter()
        .map(|&name| {
            let v = match name {
                "min" => (n > 0).then(|| values.iter().copied().fold(f64::INFINITY, f64::min)),
                "max" => (n > 0).then(|| values.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                "mean" => mean,
                "var" => moments.filter(|_| n >= 2).map(|(m2, _, _)| m2),
                "skew" => moments
                    .filter(|&(m2, _, _)| shape_defined(m2))
                    .map(|(m2, m3, _)| m3 / m2.powf(1.5)),
                "kurt" => moments
                    .filter(|&(m2, _, _)| shape_defined(m2))
                    .map(|(m2, _, m4)| m4 / (m2 * m2) - 3.0),
                _ => unreachable!("unknown functional {name}"),
            };
            (name, v)
        })
        .collect()
}
