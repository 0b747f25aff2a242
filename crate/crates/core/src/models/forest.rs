//! Random forest regression: bootstrap-sampled CART trees with
//! variance-reduction splits over a random feature subset.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svr::check_xy;
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or hold `min_samples_leaf` rows.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    /// Features examined per split; `None` means `max(1, p/3)`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
    pub params: ForestParams,
    pub seed: u64,
}

struct Builder<'a, 'b> {
    x: ArrayView2<'a, f64>,
    y: &'b [f64],
    max_depth: Option<usize>,
    min_leaf: usize,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    features: Vec<usize>,
    pairs: Vec<(f64, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_, '_> {
    fn mean(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let value = self.mean(idx);
        self.nodes.push(Node::Leaf { value });
        let n = idx.len();
        let depth_left = self.max_depth.is_none_or(|d| depth < d);
        let pure = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        if !depth_left || pure || n < 2 * self.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(idx) else {
            return id;
        };
        let mut split = 0;
        for k in 0..n {
            if self.x[[idx[k], best.feature]] <= best.threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        if split == 0 || split == n {
            return id;
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Draw features without replacement until `mtry` non-constant ones have
    /// been examined; constant features do not count toward the budget.
    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let n = idx.len();
        let p = self.features.len();
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let parent = total * total / n as f64;
        let mut best: Option<BestSplit> = None;
        let mut examined = 0;
        for k in 0..p {
            if examined >= self.mtry {
                break;
            }
            let pick = self.rng.gen_range(k..p);
            self.features.swap(k, pick);
            let f = self.features[k];

            self.pairs.clear();
            self.pairs.extend(idx.iter().map(|&i| (self.x[[i, f]], self.y[i])));
            self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.pairs[0].0 == self.pairs[n - 1].0 {
                continue;
            }
            examined += 1;

            let mut left = 0.0;
            for s in 1..n {
                left += self.pairs[s - 1].1;
                if s < self.min_leaf || n - s < self.min_leaf {
                    continue;
                }
                let (lo, hi) = (self.pairs[s - 1].0, self.pairs[s].0);
                if lo == hi {
                    continue;
                }
                let right = total - left;
                let score = left * left / s as f64 + right * right / (n - s) as f64;
                if score > parent + 1e-12 * parent.abs().max(1.0) && best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = 0.5 * (lo + hi);
                    best = Some(BestSplit {
                        feature: f,
                        threshold: if mid < hi { mid } else { lo },
                        score,
                    });
                }
            }
        }
        best
    }
}

/// Generator for tree `t`: one ChaCha stream per tree, so results do not
/// depend on how trees are scheduled.
fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

impl ForestModel {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], params: &ForestParams, seed: u64) -> Result<Self> {
        check_xy(x, y, 2)?;
        if params.n_trees == 0 || params.min_samples_leaf == 0 {
            return Err(CoreError::Config(
                "forest needs n_trees >= 1 and min_samples_leaf >= 1".into(),
            ));
        }
        let (n, p) = x.dim();
        let mtry = params.max_features.unwrap_or(p / 3).clamp(1, p.max(1));
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(seed, t);
                let mut idx: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut b = Builder {
                    x,
                    y,
                    max_depth: params.max_depth,
                    min_leaf: params.min_samples_leaf,
                    mtry,
                    rng,
                    nodes: Vec::new(),
                    features: (0..p).collect(),
                    pairs: Vec::with_capacity(n),
                };
                b.grow(&mut idx, 0);
                RegressionTree { nodes: b.nodes }
            })
            .collect();
        Ok(ForestModel {
            trees,
            n_features: p,
            params: *params,
            seed,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(CoreError::Shape {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        Ok(x.rows().into_iter().map(|r| self.predict_row(&r.to_vec())).collect())
    }
}
