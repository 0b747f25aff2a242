//! Grid search with subject-independent inner cross-validation.

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FnnConfig, ForestParams, Hyperparams, ModelFamily, RegressorModel, SvrModel, SvrParams};
use crate::error::{CoreError, Result};
use crate::evaluation::folds::group_folds;
use crate::evaluation::metrics::rmse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: f64,
}

impl Default for SvrGrid {
    fn default() -> Self {
        SvrGrid {
            c: vec![0.1, 1.0, 10.0, 100.0],
            gamma: vec![1e-4, 1e-3, 1e-2, 1e-1],
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    /// Depth limits; written as `"unlimited"` in config files when absent.
    #[serde(with = "depth_list")]
    pub max_depth: Vec<Option<usize>>,
    pub bootstrap: bool,
}

mod depth_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Depth(usize),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &[Option<usize>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|d| match d {
            Some(n) => Repr::Depth(*n),
            None => Repr::Word("unlimited".into()),
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<usize>>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Depth(n) => Ok(Some(n)),
                Repr::Word(w) if w == "unlimited" || w == "none" => Ok(None),
                Repr::Word(w) => Err(serde::de::Error::custom(format!("bad depth {w:?}"))),
            })
            .collect()
    }
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid {
            n_trees: vec![100, 300],
            max_depth: vec![Some(8), Some(16), None],
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSearchPlan {
    pub inner_folds: usize,
    pub svr: SvrGrid,
    pub forest: ForestGrid,
    /// The network is not tuned; this is its single configuration.
    pub fnn: FnnConfig,
}

impl Default for GridSearchPlan {
    fn default() -> Self {
        GridSearchPlan {
            inner_folds: 5,
            svr: SvrGrid::default(),
            forest: ForestGrid::default(),
            fnn: FnnConfig::default(),
        }
    }
}

impl GridSearchPlan {
    /// Grid points in evaluation (and tie-break) order.
    pub fn points(&self, family: ModelFamily) -> Vec<Hyperparams> {
        match family {
            ModelFamily::Svr => self
                .svr
                .c
                .iter()
                .flat_map(|&c| {
                    self.svr.gamma.iter().map(move |&gamma| {
                        Hyperparams::Svr(SvrParams {
                            c,
                            gamma,
                            epsilon: self.svr.epsilon,
                            ..Default::default()
                        })
                    })
                })
                .collect(),
            ModelFamily::Forest => self
                .forest
                .n_trees
                .iter()
                .flat_map(|&n_trees| {
                    self.forest.max_depth.iter().map(move |&d| {
                        Hyperparams::Forest(ForestParams {
                            n_trees,
                            max_depth: d,
                            bootstrap: self.forest.bootstrap,
                            ..Default::default()
                        })
                    })
                })
                .collect(),
            ModelFamily::Fnn => vec![Hyperparams::Fnn(self.fnn.clone())],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_folds < 2 {
            return Err(CoreError::Config("inner_folds must be at least 2".into()));
        }
        for f in ModelFamily::ALL {
            if self.points(f).is_empty() {
                return Err(CoreError::Config(format!("empty grid for {f}")));
            }
        }
        self.fnn.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: Hyperparams,
    pub fold_rmse: Vec<f64>,
    pub mean_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Hyperparams,
    pub best_index: usize,
    pub table: Vec<GridRow>,
}

/// Evaluate every grid point on `plan.inner_folds` subject-independent folds
/// (stratified by the target) and return the minimum mean RMSE point.
/// Ties go to the earlier grid point.
pub fn grid_search(
    family: ModelFamily,
    x: ArrayView2<f64>,
    y: &[f64],
    groups: &[String],
    plan: &GridSearchPlan,
    seed: u64,
) -> Result<GridResult> {
    let points = plan.points(family);
    if points.is_empty() {
        return Err(CoreError::Config(format!("empty grid for {family}")));
    }
    if groups.len() != y.len() || x.nrows() != y.len() {
        return Err(CoreError::Shape {
            expected: y.len(),
            got: groups.len().min(x.nrows()),
        });
    }
    let k = plan.inner_folds;
    let folds = group_folds(groups, y, k, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] == f);
            (train, test)
        })
        .collect();
    let sq = (family == ModelFamily::Svr).then(|| super::squared_distances(x));

    let table: Vec<GridRow> = points
        .par_iter()
        .map(|params| -> Result<GridRow> {
            let mut fold_rmse = Vec::with_capacity(k);
            for (train, test) in &splits {
                let xt = x.select(Axis(0), train);
                let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let xv = x.select(Axis(0), test);
                let yv: Vec<f64> = test.iter().map(|&i| y[i]).collect();
                let pred = match (params, &sq) {
                    (Hyperparams::Svr(p), Some(d)) => {
                        let sub = d.select(Axis(0), train).select(Axis(1), train);
                        SvrModel::fit_with_distances(xt.view(), &yt, sub.view(), p)?.predict(xv.view())?
                    }
                    _ => RegressorModel::fit(params, xt.view(), &yt, seed)?.predict(xv.view())?,
                };
                fold_rmse.push(rmse(&pred, &yv)?);
            }
            let mean_rmse = fold_rmse.iter().sum::<f64>() / k as f64;
            Ok(GridRow {
                params: params.clone(),
                fold_rmse,
                mean_rmse,
            })
        })
        .collect::<Result<_>>()?;

    let mut best_index = 0;
    for (i, row) in table.iter().enumerate() {
        if row.mean_rmse < table[best_index].mean_rmse {
            best_index = i;
        }
    }
    Ok(GridResult {
        best: table[best_index].params.clone(),
        best_index,
        table,
    })
}
