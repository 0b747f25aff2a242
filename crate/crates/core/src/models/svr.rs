//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual over `2n` variables is solved by SMO with second-order working
//! set selection (no shrinking), following the LIBSVM formulation: variables
//! `t < n` carry label +1 and linear term `ε − y_t`, variables `t ≥ n` carry
//! label −1 and linear term `ε + y_{t−n}`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrParams {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// KKT violation tolerance that stops SMO.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            gamma: 0.01,
            epsilon: 0.1,
            tolerance: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SvrParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.gamma > 0.0 && self.epsilon >= 0.0 && self.tolerance > 0.0) {
            return Err(CoreError::Config(format!(
                "SVR needs C > 0, gamma > 0, epsilon >= 0, tolerance > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i − α_i*` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub params: SvrParams,
    pub converged: bool,
    pub iterations: usize,
}

/// Pairwise squared Euclidean distances between rows.
pub fn squared_distances(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
    let gram = x.dot(&x.t());
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            (norms[i] + norms[j] - 2.0 * gram[[i, j]]).max(0.0)
        }
    })
}

pub(crate) fn check_xy(x: ArrayView2<f64>, y: &[f64], min_rows: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(CoreError::Shape {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() < min_rows {
        return Err(CoreError::InsufficientData(format!(
            "need at least {min_rows} training rows, got {}",
            x.nrows()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CoreError::Data("non-finite training value".into()));
    }
    Ok(())
}

/// Result of the dual solve: `β = α − α*`, `ρ` and convergence status.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub beta: Vec<f64>,
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Solve the ε-SVR dual for a precomputed `n × n` kernel matrix.
pub fn solve_dual(kernel: ArrayView2<f64>, y: &[f64], params: &SvrParams) -> DualSolution {
    let n = y.len();
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let k = |s: usize, t: usize| kernel[[s % n, t % n]];

    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - n]
            }
        })
        .collect();
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        // first index: maximal violation
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            let v = if sign(t) > 0.0 {
                (!upper(alpha[t])).then(|| -grad[t])
            } else {
                (!lower(alpha[t])).then(|| grad[t])
            };
            if let Some(v) = v {
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        // second index: largest objective decrease
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i != usize::MAX {
            let kii = k(i, i);
            for t in 0..l {
                let (ok, g) = if sign(t) > 0.0 {
                    (!lower(alpha[t]), grad[t])
                } else {
                    (!upper(alpha[t]), -grad[t])
                };
                if !ok {
                    continue;
                }
                gmax2 = gmax2.max(g);
                let diff = gmax + g;
                if diff > 0.0 {
                    let quad = kii + k(t, t) - 2.0 * k(i, t);
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= obj_min {
                        obj_min = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < params.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let qij = yi * yj * k(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let quad = (k(i, i) + k(j, j) + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            let yt = sign(t);
            *g += yt * (yi * k(i, t) * di + yj * k(j, t) * dj);
        }
    }

    // ρ: mean over free variables, else midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if upper(alpha[t]) {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let beta = (0..n).map(|t| alpha[t] - alpha[t + n]).collect();
    DualSolution {
        beta,
        rho,
        converged,
        iterations,
    }
}

impl SvrModel {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], params: &SvrParams) -> Result<Self> {
        check_xy(x, y, 2)?;
        let d2 = squared_distances(x);
        Self::fit_with_distances(x, y, d2.view(), params)
    }

    /// Fit reusing a precomputed squared-distance matrix of the rows of `x`.
    pub fn fit_with_distances(
        x: ArrayView2<f64>,
        y: &[f64],
        sq_dist: ArrayView2<f64>,
        params: &SvrParams,
    ) -> Result<Self> {
        params.validate()?;
        check_xy(x, y, 2)?;
        if sq_dist.dim() != (x.nrows(), x.nrows()) {
            return Err(CoreError::Shape {
                expected: x.nrows(),
                got: sq_dist.nrows(),
            });
        }
        let gamma = params.gamma;
        let kernel = sq_dist.mapv(|d| (-gamma * d).exp());
        let sol = solve_dual(kernel.view(), y, params);
        let mut support_vectors = Vec::new();
        let mut dual_coef = Vec::new();
        for (i, b) in sol.beta.iter().enumerate() {
            if *b != 0.0 {
                support_vectors.push(x.row(i).to_vec());
                dual_coef.push(*b);
            }
        }
        Ok(SvrModel {
            support_vectors,
            dual_coef,
            bias: -sol.rho,
            params: *params,
            converged: sol.converged,
            iterations: sol.iterations,
        })
    }

    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(|v| v.len())
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let g = self.params.gamma;
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, b)| {
                let d: f64 = sv.iter().zip(row).map(|(a, c)| (a - c) * (a - c)).sum();
                b * (-g * d).exp()
            })
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if let Some(p) = self.dim() {
            if p != x.ncols() {
                return Err(CoreError::Shape {
                    expected: p,
                    got: x.ncols(),
                });
            }
        }
        Ok(x.rows().into_iter().map(|r| self.predict_row(&r.to_vec())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> (Array2<f64>, Vec<f64>) {
        let x = Array2::from_shape_fn((n, 1), |(i, _)| -1.0 + 2.0 * i as f64 / (n - 1) as f64);
        let y = x.column(0).to_vec();
        (x, y)
    }

    #[test]
    fn constant_target_is_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((15, 3), |_| rng.gen_range(-1.0..1.0));
        let m = SvrModel::fit(x.view(), &[1.0; 15], &SvrParams::default()).unwrap();
        for p in m.predict(x.view()).unwrap() {
            assert!((p - 1.0).abs() <= 0.1 + 1e-9, "{p}");
        }
    }

    #[test]
    fn interpolates_a_line() {
        let (x, y) = line(30);
        let params = SvrParams {
            c: 100.0,
            gamma: 1.0,
            epsilon: 0.01,
            ..Default::default()
        };
        let m = SvrModel::fit(x.view(), &y, &params).unwrap();
        assert!(m.converged);
        let p = m.predict(x.view()).unwrap();
        let rmse = (p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 30.0).sqrt();
        assert!(rmse < 0.1, "{rmse}");
        assert!(m.dual_coef.iter().all(|b| b.abs() <= params.c + 1e-9));
    }

    #[test]
    fn row_order_does_not_matter() {
        let (x, y) = line(12);
        let params = SvrParams {
            c: 10.0,
            gamma: 0.5,
            ..Default::default()
        };
        let a = SvrModel::fit(x.view(), &y, &params).unwrap();
        let rev: Vec<usize> = (0..12).rev().collect();
        let xr = x.select(ndarray::Axis(0), &rev);
        let yr: Vec<f64> = rev.iter().map(|&i| y[i]).collect();
        let b = SvrModel::fit(xr.view(), &yr, &params).unwrap();
        for (p, q) in a.predict(x.view()).unwrap().iter().zip(b.predict(x.view()).unwrap()) {
            assert!((p - q).abs() < 1e-2);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = Array2::zeros((3, 2));
        assert!(matches!(
            SvrModel::fit(x.view(), &[1.0, 2.0], &SvrParams::default()),
            Err(CoreError::Shape { .. })
        ));
        assert!(matches!(
            SvrModel::fit(x.view(), &[1.0, f64::NAN, 2.0], &SvrParams::default()),
            Err(CoreError::Data(_))
        ));
        let m = SvrModel::fit(x.view(), &[1.0, 2.0, 3.0], &SvrParams::default()).unwrap();
        if m.dim().is_some() {
            assert!(m.predict(Array2::zeros((1, 5)).view()).is_err());
        }
    }
}
