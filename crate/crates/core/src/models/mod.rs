//! Regressors: RBF support-vector regression, random forest and a
//! feedforward network, plus grid-search tuning.

mod fnn;
mod forest;
mod grid;
mod svr;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub use fnn::{FnnConfig, FnnModel, Gradients};
pub use forest::{ForestModel, ForestParams, Node, RegressionTree};
pub use grid::{grid_search, ForestGrid, GridResult, GridRow, GridSearchPlan, SvrGrid};
pub use svr::{solve_dual, squared_distances, DualSolution, SvrModel, SvrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Svr,
    Forest,
    Fnn,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Svr, ModelFamily::Forest, ModelFamily::Fnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Svr => "svr",
            ModelFamily::Forest => "forest",
            ModelFamily::Fnn => "fnn",
        }
    }

    /// Short name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::Svr => "SVM",
            ModelFamily::Forest => "RF",
            ModelFamily::Fnn => "FNN",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svr" | "svm" => Ok(ModelFamily::Svr),
            "forest" | "rf" => Ok(ModelFamily::Forest),
            "fnn" => Ok(ModelFamily::Fnn),
            other => Err(CoreError::Config(format!("unknown model family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyperparams {
    Svr(SvrParams),
    Forest(ForestParams),
    Fnn(FnnConfig),
}

impl Hyperparams {
    pub fn family(&self) -> ModelFamily {
        match self {
            Hyperparams::Svr(_) => ModelFamily::Svr,
            Hyperparams::Forest(_) => ModelFamily::Forest,
            Hyperparams::Fnn(_) => ModelFamily::Fnn,
        }
    }

    /// Compact description of the tuned values.
    pub fn describe(&self) -> String {
        match self {
            Hyperparams::Svr(p) => format!("C={} gamma={} epsilon={}", p.c, p.gamma, p.epsilon),
            Hyperparams::Forest(p) => format!(
                "n_trees={} max_depth={}",
                p.n_trees,
                p.max_depth.map_or("unlimited".to_string(), |d| d.to_string())
            ),
            Hyperparams::Fnn(c) => format!("hidden={:?} epochs={}", c.hidden, c.epochs),
        }
    }
}

/// A trained predictor of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum RegressorModel {
    Svr(SvrModel),
    Forest(ForestModel),
    Fnn(FnnModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    model: RegressorModel,
}

impl RegressorModel {
    pub fn fit(params: &Hyperparams, x: ArrayView2<f64>, y: &[f64], seed: u64) -> Result<Self> {
        Ok(match params {
            Hyperparams::Svr(p) => RegressorModel::Svr(SvrModel::fit(x, y, p)?),
            Hyperparams::Forest(p) => RegressorModel::Forest(ForestModel::fit(x, y, p, seed)?),
            Hyperparams::Fnn(c) => RegressorModel::Fnn(FnnModel::fit(x, y, c, seed)?),
        })
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            RegressorModel::Svr(_) => ModelFamily::Svr,
            RegressorModel::Forest(_) => ModelFamily::Forest,
            RegressorModel::Fnn(_) => ModelFamily::Fnn,
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        match self {
            RegressorModel::Svr(m) => m.predict(x),
            RegressorModel::Forest(m) => m.predict(x),
            RegressorModel::Fnn(m) => m.predict(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let saved: SavedModel = serde_json::from_str(text)?;
        if saved.format_version != MODEL_FORMAT_VERSION {
            return Err(CoreError::Format(format!(
                "model format version {} is not supported",
                saved.format_version
            )));
        }
        Ok(saved.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic_str(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::io::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn json_round_trip_for_every_family() {
        let x = Array2::from_shape_fn((24, 3), |(i, j)| ((i * 5 + j * 3) % 7) as f64 / 7.0 - 0.4);
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] * 3.0 - r[2] + 0.1).collect();
        let params = [
            Hyperparams::Svr(SvrParams {
                gamma: 0.5,
                ..Default::default()
            }),
            Hyperparams::Forest(ForestParams {
                n_trees: 4,
                ..Default::default()
            }),
            Hyperparams::Fnn(FnnConfig {
                hidden: vec![5, 4],
                epochs: 3,
                ..Default::default()
            }),
        ];
        for p in &params {
            let m = RegressorModel::fit(p, x.view(), &y, 1).unwrap();
            assert_eq!(m.family(), p.family());
            let back = RegressorModel::from_json(&m.to_json().unwrap()).unwrap();
            let a = m.predict(x.view()).unwrap();
            let b = back.predict(x.view()).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
            }
        }
    }

    #[test]
    fn family_names_parse() {
        for f in ModelFamily::ALL {
            assert_eq!(f.as_str().parse::<ModelFamily>().unwrap(), f);
        }
        assert_eq!("RF".parse::<ModelFamily>().unwrap(), ModelFamily::Forest);
        assert!("lstm".parse::<ModelFamily>().is_err());
    }
}
