//! Named feature matrix with sample ids as row keys.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, names: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != ids.len() {
            return Err(CoreError::Shape {
                expected: ids.len(),
                got: values.nrows(),
            });
        }
        if values.ncols() != names.len() {
            return Err(CoreError::Shape {
                expected: names.len(),
                got: values.ncols(),
            });
        }
        Ok(FeatureMatrix { ids, names, values })
    }

    pub fn from_rows(ids: Vec<String>, names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        let mut flat = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(CoreError::Shape {
                    expected: p,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let values = Array2::from_shape_vec((rows.len(), p), flat).map_err(|e| CoreError::Data(e.to_string()))?;
        FeatureMatrix::new(ids, names, values)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            names: self.names.clone(),
            values: self.values.select(Axis(0), rows),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: self.ids.clone(),
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            values: self.values.select(Axis(1), cols),
        }
    }

    /// Reorder rows to follow `ids`; every id must be present.
    pub fn align_to(&self, ids: &[String]) -> Result<FeatureMatrix> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let rows = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| CoreError::Data(format!("no feature row for sample {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_rows(&rows))
    }

    /// CSV with a `sample_id` column followed by one column per feature.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["sample_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.ids.iter().zip(self.values.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| CoreError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CoreError::Format(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic_str(path, &self.to_csv_string()?)
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        let text = crate::io::read_to_string(path)?;
        FeatureMatrix::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<FeatureMatrix> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.get(0) != Some("sample_id") {
            return Err(CoreError::Format(
                "feature CSV must start with a sample_id column".into(),
            ));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| CoreError::Format(format!("not a number: {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        FeatureMatrix::from_rows(ids, names, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_round_trip_is_lossless() {
        let m = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            array![[0.1, -1e-300], [std::f64::consts::PI, 12345.678]],
        )
        .unwrap();
        let back = FeatureMatrix::parse_csv(&m.to_csv_string().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn align_and_shape_errors() {
        let m =
            FeatureMatrix::from_rows(vec!["a".into(), "b".into()], vec!["x".into()], &[vec![1.0], vec![2.0]]).unwrap();
        let al = m.align_to(&["b".into(), "a".into()]).unwrap();
        assert_eq!(al.values[[0, 0]], 2.0);
        assert!(m.align_to(&["c".into()]).is_err());
        assert!(FeatureMatrix::from_rows(vec!["a".into()], vec!["x".into()], &[vec![1.0, 2.0]]).is_err());
    }
}
