//! Feedforward regression network: ReLU hidden layers with inverted dropout,
//! linear output, mean-squared-error loss and Adam updates.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::svr::check_xy;
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FnnConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for FnnConfig {
    fn default() -> Self {
        FnnConfig {
            hidden: vec![500, 250, 125, 125],
            dropout: 0.3,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 150,
            batch_size: 32,
        }
    }
}

impl FnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0)
            || !(0.0..1.0).contains(&self.dropout)
            || !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.adam_eps > 0.0)
            || self.epochs == 0
            || self.batch_size == 0
        {
            return Err(CoreError::Config(format!("invalid network configuration {self:?}")));
        }
        Ok(())
    }

    /// Closed-form parameter count for `input` features.
    pub fn parameter_count(&self, input: usize) -> usize {
        let mut sizes = vec![input];
        sizes.extend(&self.hidden);
        sizes.push(1);
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    /// `weights[l]` maps layer `l` (rows) to layer `l + 1` (columns).
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub config: FnnConfig,
    /// Targets are z-scored for training and mapped back at prediction.
    pub target_mean: f64,
    pub target_std: f64,
    /// Training-set MSE after the last epoch with dropout off, in standardized
    /// target units.
    pub final_loss: f64,
}

/// Gradients laid out like the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

struct Pass {
    /// Input to each layer (after activation and dropout).
    inputs: Vec<Array2<f64>>,
    /// Combined ReLU-derivative and dropout scale for each hidden layer.
    masks: Vec<Array2<f64>>,
    output: Array1<f64>,
}

impl FnnModel {
    /// He-initialized network with zero biases.
    pub fn init(input: usize, config: &FnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::init_with(input, config, &mut rng))
    }

    fn init_with(input: usize, config: &FnnConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut sizes = vec![input];
        sizes.extend(&config.hidden);
        sizes.push(1);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let normal = Normal::new(0.0, (2.0 / w[0].max(1) as f64).sqrt()).expect("positive std");
            weights.push(Array2::from_shape_fn((w[0], w[1]), |_| normal.sample(rng)));
            biases.push(Array1::zeros(w[1]));
        }
        FnnModel {
            weights,
            biases,
            config: config.clone(),
            target_mean: 0.0,
            target_std: 1.0,
            final_loss: f64::NAN,
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.n_features()];
        s.extend(self.weights.iter().map(|w| w.ncols()));
        s
    }

    fn forward(&self, x: ArrayView2<f64>, dropout: Option<(&mut ChaCha8Rng, f64)>) -> Pass {
        let last = self.weights.len() - 1;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut masks = Vec::with_capacity(last);
        let mut a = x.to_owned();
        let mut drop = dropout;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = a.dot(w) + b;
            inputs.push(a);
            if l == last {
                return Pass {
                    inputs,
                    masks,
                    output: z.column(0).to_owned(),
                };
            }
            let mut mask = z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
            if let Some((rng, rate)) = drop.as_mut() {
                let keep = 1.0 - *rate;
                mask.mapv_inplace(|m| if rng.gen::<f64>() < keep { m / keep } else { 0.0 });
            }
            a = &z * &mask;
            masks.push(mask);
        }
        unreachable!("network has an output layer")
    }

    /// Mean squared error and its gradient, from a forward pass.
    fn backward(&self, pass: &Pass, y: &[f64]) -> (f64, Gradients) {
        let n = y.len() as f64;
        let resid: Vec<f64> = pass.output.iter().zip(y).map(|(p, t)| p - t).collect();
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / n;
        let mut delta =
            Array2::from_shape_vec((y.len(), 1), resid.iter().map(|r| 2.0 * r / n).collect()).expect("column vector");
        let layers = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        for l in (0..layers).rev() {
            gw[l] = pass.inputs[l].t().dot(&delta);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                delta = delta.dot(&self.weights[l].t()) * &pass.masks[l - 1];
            }
        }
        (
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }

    /// Loss and analytic gradient with dropout disabled, against raw targets.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, y: &[f64]) -> (f64, Gradients) {
        let pass = self.forward(x, None);
        self.backward(&pass, y)
    }

    /// Loss with dropout disabled, against raw targets.
    pub fn loss(&self, x: ArrayView2<f64>, y: &[f64]) -> f64 {
        let out = self.forward(x, None).output;
        out.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64
    }

    pub fn fit(x: ArrayView2<f64>, y: &[f64], config: &FnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        check_xy(x, y, 2)?;
        let n = y.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let sd = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        let sd = if sd < 1e-12 { 1.0 } else { sd };
        let z: Vec<f64> = y.iter().map(|v| (v - mean) / sd).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::init_with(x.ncols(), config, &mut rng);
        model.target_mean = mean;
        model.target_std = sd;

        let mut m_w: Vec<Array2<f64>> = model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let mut v_w = m_w.clone();
        let mut m_b: Vec<Array1<f64>> = model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        let mut v_b = m_b.clone();
        let (b1, b2, lr, eps) = (config.beta1, config.beta2, config.learning_rate, config.adam_eps);
        let mut step = 0i32;
        let mut order: Vec<usize> = (0..n).collect();

        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(config.batch_size) {
                let xb = x.select(Axis(0), batch);
                let yb: Vec<f64> = batch.iter().map(|&i| z[i]).collect();
                let pass = model.forward(xb.view(), Some((&mut rng, config.dropout)));
                let (loss, g) = model.backward(&pass, &yb);
                if !loss.is_finite() {
                    return Err(CoreError::Diverged { epoch });
                }
                epoch_loss += loss * batch.len() as f64;
                step += 1;
                let c1 = 1.0 - b1.powi(step);
                let c2 = 1.0 - b2.powi(step);
                let adam = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                };
                for l in 0..model.weights.len() {
                    ndarray::Zip::from(&mut model.weights[l])
                        .and(&g.weights[l])
                        .and(&mut m_w[l])
                        .and(&mut v_w[l])
                        .for_each(|p, &g, m, v| adam(p, g, m, v));
                    ndarray::Zip::from(&mut model.biases[l])
                        .and(&g.biases[l])
                        .and(&mut m_b[l])
                        .and(&mut v_b[l])
                        .for_each(|p, &g, m, v| adam(p, g, m, v));
                }
            }
            if !(epoch_loss / n as f64).is_finite() {
                return Err(CoreError::Diverged { epoch });
            }
        }
        model.final_loss = model.loss(x, &z);
        if !model.final_loss.is_finite() {
            return Err(CoreError::Diverged {
                epoch: config.epochs.saturating_sub(1),
            });
        }
        Ok(model)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(CoreError::Shape {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        let out = self.forward(x, None).output;
        Ok(out.iter().map(|v| v * self.target_std + self.target_mean).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn small() -> FnnConfig {
        FnnConfig {
            hidden: vec![8, 6],
            epochs: 20,
            ..Default::default()
        }
    }

    #[test]
    fn parameter_count_matches_closed_form() {
        let cfg = FnnConfig::default();
        let m = FnnModel::init(16, &cfg, 0).unwrap();
        let p = 16;
        let expected = (p * 500 + 500) + (500 * 250 + 250) + (250 * 125 + 125) + (125 * 125 + 125) + (125 + 1);
        assert_eq!(m.parameter_count(), expected);
        assert_eq!(cfg.parameter_count(p), expected);
        assert_eq!(m.layer_sizes(), vec![16, 500, 250, 125, 125, 1]);
    }

    #[test]
    fn zero_target_is_fitted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((64, 4), |_| StandardNormal.sample(&mut rng));
        let y = vec![0.0; 64];
        let m = FnnModel::fit(x.view(), &y, &FnnConfig::default(), 3).unwrap();
        assert!(m.final_loss < 1e-2, "{}", m.final_loss);
        let p = m.predict(x.view()).unwrap();
        assert!(p.iter().all(|v| v.abs() < 0.1));
    }

    #[test]
    fn inference_is_deterministic_and_checks_shape() {
        let m = FnnModel::init(3, &small(), 5).unwrap();
        let x = Array2::from_elem((2, 3), 0.5);
        assert_eq!(m.predict(x.view()).unwrap(), m.predict(x.view()).unwrap());
        assert!(matches!(
            m.predict(Array2::zeros((1, 4)).view()),
            Err(CoreError::Shape { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn diverging_training_is_reported() {
        let cfg = FnnConfig {
            learning_rate: 1e300,
            ..small()
        };
        let x = Array2::from_shape_fn((16, 2), |(i, j)| (i * 3 + j) as f64);
        let y: Vec<f64> = (0..16).map(f64::from).collect();
        assert!(matches!(
            FnnModel::fit(x.view(), &y, &cfg, 0),
            Err(CoreError::Diverged { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences_on_small_net() {
        let m = FnnModel::init(3, &small(), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((5, 3), |_| StandardNormal.sample(&mut rng));
        let y = [0.3, -1.0, 2.0, 0.0, 0.7];
        let (_, g) = m.loss_and_gradients(x.view(), &y);
        let h = 1e-6;
        for l in 0..m.weights.len() {
            for (idx, analytic) in g.weights[l].indexed_iter() {
                let mut plus = m.clone();
                plus.weights[l][idx] += h;
                let mut minus = m.clone();
                minus.weights[l][idx] -= h;
                let fd = (plus.loss(x.view(), &y) - minus.loss(x.view(), &y)) / (2.0 * h);
                let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "layer {l} {idx:?}: {analytic} vs {fd}");
            }
        }
    }
}
