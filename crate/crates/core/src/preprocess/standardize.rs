use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{CoreError, Result};

/// Columns with a standard deviation below this are treated as constant.
const CONSTANT_SIGMA: f64 = 1e-12;

/// Per-column z-scoring `y = (x − μ)/σ` with population σ, learned from
/// training rows only. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Standardizer {
    pub fn fit(train: &Array2<f64>, names: &[String]) -> Result<Self> {
        let n = train.nrows();
        if n < 2 {
            return Err(CoreError::InsufficientData(format!(
                "standardizer needs at least 2 training rows, got {n}"
            )));
        }
        if names.len() != train.ncols() {
            return Err(CoreError::Shape {
                expected: train.ncols(),
                got: names.len(),
            });
        }
        let mean: Vec<f64> = train.mean_axis(Axis(0)).expect("nonempty").to_vec();
        let std: Vec<f64> = train
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(col, mu)| {
                // rounding in the mean would leave a tiny σ on large constant columns
                if col.iter().all(|v| *v == col[0]) {
                    return 0.0;
                }
                (col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64).sqrt()
            })
            .collect();
        let constant = std.iter().map(|s| *s < CONSTANT_SIGMA).collect();
        Ok(Standardizer {
            names: names.to_vec(),
            mean,
            std,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, rows: &Array2<f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.dim() {
            return Err(CoreError::Shape {
                expected: self.dim(),
                got: rows.ncols(),
            });
        }
        let mut out = rows.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            if self.constant[j] {
                col.fill(0.0);
            } else {
                let (mu, sd) = (self.mean[j], self.std[j]);
                col.mapv_inplace(|x| (x - mu) / sd);
            }
        }
        Ok(out)
    }

    /// Two-column table keyed by feature name.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "mean", "std"])?;
        for ((n, m), s) in self.names.iter().zip(&self.mean).zip(&self.std) {
            w.write_record([n.clone(), m.to_string(), s.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| CoreError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CoreError::Format(e.to_string()))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut names = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| CoreError::Format(format!("bad number {:?}", &rec[i])))
            };
            names.push(rec[0].to_string());
            mean.push(num(1)?);
            std.push(num(2)?);
        }
        let constant = std.iter().map(|s| *s < CONSTANT_SIGMA).collect();
        Ok(Standardizer {
            names,
            mean,
            std,
            constant,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic_str(path, &self.to_csv_string()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn hand_values() {
        let s = Standardizer::fit(&array![[1.0, 5.0], [3.0, 5.0]], &names(2)).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std[0], 1.0);
        assert_eq!(s.constant, vec![false, true]);
        let t = s.transform(&array![[2.0, 9.0], [3.0, 1.0]]).unwrap();
        assert_eq!(t, array![[0.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Standardizer::fit(&array![[1.0]], &names(1)),
            Err(CoreError::InsufficientData(_))
        ));
        let s = Standardizer::fit(&array![[1.0], [2.0]], &names(1)).unwrap();
        assert!(matches!(
            s.transform(&array![[1.0, 2.0]]),
            Err(CoreError::Shape { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn held_out_rows_use_training_statistics() {
        let train = array![[0.0], [1.0], [2.0], [3.0]];
        let s = Standardizer::fit(&train, &names(1)).unwrap();
        let test = s.transform(&array![[10.0], [11.0]]).unwrap();
        assert!(test.mean().unwrap() > 1.0);
    }

    #[test]
    fn table_round_trip() {
        let s = Standardizer::fit(&array![[1.0, 0.5], [4.0, 0.25], [2.0, 0.125]], &names(2)).unwrap();
        assert_eq!(Standardizer::parse_csv(&s.to_csv_string().unwrap()).unwrap(), s);
    }
}
