use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbm::sigmoid;
use super::Task;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    /// L1 penalty on connection weights; biases are not penalized.
    pub l1: f64,
    pub batch_size: usize,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            hidden: vec![1024],
            epochs: 100,
            learning_rate: 1e-3,
            l1: 1e-5,
            batch_size: 32,
        }
    }
}

impl AnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("ann.hidden", "needs at least one layer, each with at least 1 unit"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("ann", "epochs and batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("ann.learning_rate", "must be positive"));
        }
        if !(self.l1 >= 0.0) {
            return Err(Error::config("ann.l1", "must be non-negative"));
        }
        Ok(())
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Learning-rate halvings tried after a non-finite loss.
pub const MAX_RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `outputs x inputs`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Fully connected network: ReLU hidden layers, one linear or logistic
/// output unit. Inputs are `features x rows` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub logistic_output: bool,
}

struct Gradient {
    weights: Vec<DMatrix<f64>>,
    bias: Vec<DVector<f64>>,
}

impl Network {
    /// `sizes` runs from the input width to the output width (1). Weights
    /// are uniform in +-sqrt(6 / fan_in); biases start at zero.
    pub fn new<R: Rng>(sizes: &[usize], logistic_output: bool, rng: &mut R) -> Network {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / fan_in.max(1) as f64).sqrt();
                Layer {
                    weights: DMatrix::from_fn(fan_out, fan_in, |_, _| rng.gen_range(-bound..bound)),
                    bias: DVector::zeros(fan_out),
                }
            })
            .collect();
        Network {
            layers,
            logistic_output,
        }
    }

    fn forward_cache(&self, x: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = vec![x.clone()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * act.last().unwrap();
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            let a = if l < last {
                z.map(|v| v.max(0.0))
            } else if self.logistic_output {
                z.map(sigmoid)
            } else {
                z.clone()
            };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let (_, act) = self.forward_cache(x);
        act.last().unwrap().iter().copied().collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.iter().map(|w| w.abs()).sum::<f64>()).sum()
    }

    /// R = sum (y - f)^2 + l1 * sum |w|.
    pub fn loss(&self, x: &DMatrix<f64>, y: &[f64], l1: f64) -> f64 {
        let f = self.forward(x);
        let sse: f64 = y.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum();
        sse + l1 * self.l1_norm()
    }

    /// Loss scaled as `sse_scale * SSE + l1_scale * sum |w|` and its
    /// gradient. The L1 term uses sign(w) with sign(0) = 0.
    fn backprop(&self, x: &DMatrix<f64>, y: &[f64], sse_scale: f64, l1_scale: f64) -> (f64, Gradient) {
        let (pre, act) = self.forward_cache(x);
        let n_layers = self.layers.len();
        let out = &act[n_layers];
        let mut sse = 0.0;
        let mut delta = DMatrix::from_fn(1, y.len(), |_, k| {
            let f = out[(0, k)];
            let r = y[k] - f;
            sse += r * r;
            let d = -2.0 * r * sse_scale;
            if self.logistic_output {
                d * f * (1.0 - f)
            } else {
                d
            }
        });
        let mut gw = vec![DMatrix::zeros(0, 0); n_layers];
        let mut gb = vec![DVector::zeros(0); n_layers];
        for l in (0..n_layers).rev() {
            let mut w_grad = &delta * act[l].transpose();
            if l1_scale > 0.0 {
                w_grad.zip_apply(&self.layers[l].weights, |g, w| {
                    *g += l1_scale * if w > 0.0 { 1.0 } else if w < 0.0 { -1.0 } else { 0.0 };
                });
            }
            gw[l] = w_grad;
            gb[l] = delta.column_sum();
            if l > 0 {
                let mut back = self.layers[l].weights.tr_mul(&delta);
                back.zip_apply(&pre[l - 1], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        let loss = sse_scale * sse + l1_scale * self.l1_norm();
        (loss, Gradient { weights: gw, bias: gb })
    }

    /// Full-data loss R and its gradient, flattened like [`Network::params`].
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &[f64], l1: f64) -> (f64, Vec<f64>) {
        let (loss, g) = self.backprop(x, y, 1.0, l1);
        let mut flat = Vec::new();
        for (w, b) in g.weights.iter().zip(&g.bias) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        (loss, flat)
    }

    /// Weights (column-major) then bias, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for l in &self.layers {
            flat.extend(l.weights.iter());
            flat.extend(l.bias.iter());
        }
        flat
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = flat[k];
                k += 1;
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        let sizes: Vec<usize> = net
            .layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect();
        Adam {
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Network, grad: &Gradient, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let pairs: [(&mut [f64], &[f64]); 2] = [
                (layer.weights.as_mut_slice(), grad.weights[l].as_slice()),
                (layer.bias.as_mut_slice(), grad.bias[l].as_slice()),
            ];
            for (k, (param, g)) in pairs.into_iter().enumerate() {
                let (m, v) = (&mut self.m[2 * l + k], &mut self.v[2 * l + k]);
                for i in 0..param.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                    param[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Fitted network with the target scaling used in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub net: Network,
    pub task: Task,
    pub target_shift: f64,
    pub target_scale: f64,
    pub restarts: usize,
    pub final_loss: f64,
}

/// `features x rows` matrix from column-major data.
pub fn input_matrix(columns: &[Vec<f64>], n_rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(columns.len(), n_rows, |c, r| columns[c][r])
}

impl AnnModel {
    /// Mini-batch training with Adam updates on the per-row objective
    /// SSE / n + l1 * sum|w| / n. Regression targets are standardized.
    pub fn fit(columns: &[Vec<f64>], y: &[f64], cfg: &AnnConfig, task: Task, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidInput("network needs at least one row".into()));
        }
        let (shift, scale) = match task {
            Task::Classification => (0.0, 1.0),
            Task::Regression => {
                let m = y.iter().sum::<f64>() / n as f64;
                let sd = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
                (m, if sd > 0.0 { sd } else { 1.0 })
            }
        };
        let target: Vec<f64> = y.iter().map(|v| (v - shift) / scale).collect();
        let x = input_matrix(columns, n);
        let mut sizes = vec![columns.len()];
        sizes.extend(&cfg.hidden);
        sizes.push(1);
        let logistic = task == Task::Classification;

        for attempt in 0..=MAX_RESTARTS {
            let lr = cfg.learning_rate / f64::from(1u32 << attempt);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = Network::new(&sizes, logistic, &mut rng);
            let mut adam = Adam::new(&net);
            let mut order: Vec<usize> = (0..n).collect();
            let mut epoch_loss = 0.0;
            let mut ok = true;
            'epochs: for _ in 0..cfg.epochs {
                order.shuffle(&mut rng);
                epoch_loss = 0.0;
                for batch in order.chunks(cfg.batch_size) {
                    let xb = x.select_columns(batch);
                    let yb: Vec<f64> = batch.iter().map(|&i| target[i]).collect();
                    let b = batch.len() as f64;
                    let (loss, grad) = net.backprop(&xb, &yb, 1.0 / b, cfg.l1 / n as f64);
                    if !loss.is_finite() {
                        ok = false;
                        break 'epochs;
                    }
                    epoch_loss += loss * b / n as f64;
                    adam.step(&mut net, &grad, lr);
                }
                if !epoch_loss.is_finite() || !net.is_finite() {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(AnnModel {
                    net,
                    task,
                    target_shift: shift,
                    target_scale: scale,
                    restarts: attempt,
                    final_loss: epoch_loss,
                });
            }
            log::warn!("network loss diverged; retrying with learning rate {}", lr / 2.0);
        }
        Err(Error::Numerical(format!(
            "network loss stayed non-finite after {MAX_RESTARTS} learning-rate halvings"
        )))
    }

    pub fn predict(&self, columns: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
        if n_rows == 0 {
            return Vec::new();
        }
        let x = input_matrix(columns, n_rows);
        self.net
            .forward(&x)
            .into_iter()
            .map(|v| v * self.target_scale + self.target_shift)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_inputs(p: usize, n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0));
        let y = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (x, y)
    }

    fn max_rel_error(net: &Network, x: &DMatrix<f64>, y: &[f64], l1: f64) -> f64 {
        let (_, g) = net.loss_and_gradient(x, y, l1);
        let base = net.params();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..base.len() {
            let mut probe = net.clone();
            let mut p = base.clone();
            p[k] += h;
            probe.set_params(&p);
            let up = probe.loss(x, y, l1);
            p[k] -= 2.0 * h;
            probe.set_params(&p);
            let down = probe.loss(x, y, l1);
            let numeric = (up - down) / (2.0 * h);
            let denom = g[k].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((g[k] - numeric).abs() / denom);
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = random_inputs(5, 20, 1);
        for logistic in [false, true] {
            let mut net = Network::new(&[5, 4, 3, 1], logistic, &mut ChaCha8Rng::seed_from_u64(2));
            // nonzero biases exercise their gradients too
            for l in &mut net.layers {
                l.bias.fill(0.1);
            }
            for l1 in [0.0, 0.01] {
                let err = max_rel_error(&net, &x, &y, l1);
                assert!(err < 1e-4, "logistic {logistic} l1 {l1}: {err}");
            }
        }
    }

    #[test]
    fn zero_weights_give_bias_constant() {
        let (x, y) = random_inputs(3, 10, 4);
        let mut net = Network::new(&[3, 4, 1], false, &mut ChaCha8Rng::seed_from_u64(0));
        for l in &mut net.layers {
            l.weights.fill(0.0);
        }
        net.layers[1].bias[0] = 0.7;
        assert!(net.forward(&x).iter().all(|&f| f == 0.7));
        let (_, g) = net.loss_and_gradient(&x, &y, 0.0);
        let expected: f64 = -2.0 * y.iter().map(|v| v - 0.7).sum::<f64>();
        assert!((g.last().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn learns_xor() {
        let cols = vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]];
        let y = vec![0.0, 1.0, 1.0, 0.0];
        let cfg = AnnConfig {
            hidden: vec![8],
            epochs: 2000,
            learning_rate: 0.01,
            l1: 0.0,
            batch_size: 4,
        };
        let solved = (0..5).any(|seed| {
            let m = AnnModel::fit(&cols, &y, &cfg, Task::Classification, seed).unwrap();
            m.predict(&cols, 4)
                .iter()
                .zip(&y)
                .all(|(p, t)| (*p > 0.5) == (*t > 0.5))
        });
        assert!(solved);
    }

    #[test]
    fn diverging_rate_is_reported() {
        let cols = vec![vec![1e6, -1e6, 2e6]];
        let cfg = AnnConfig {
            hidden: vec![4],
            epochs: 50,
            learning_rate: 1e300,
            l1: 0.0,
            batch_size: 1,
        };
        let r = AnnModel::fit(&cols, &[1.0, 2.0, 3.0], &cfg, Task::Regression, 0);
        assert!(matches!(r, Err(Error::Numerical(_))), "{r:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = random_inputs(3, 50, 7);
        let cols: Vec<Vec<f64>> = (0..3).map(|c| x.row(c).iter().copied().collect()).collect();
        let cfg = AnnConfig { hidden: vec![6], epochs: 20, batch_size: 8, ..Default::default() };
        let a = AnnModel::fit(&cols, &y, &cfg, Task::Regression, 3).unwrap();
        let b = AnnModel::fit(&cols, &y, &cfg, Task::Regression, 3).unwrap();
        assert_eq!(a, b);
    }
}
