use serde::{Deserialize, Serialize};

use super::tree::{BinnedData, RegressionTree, TreeParams};
use super::Task;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbmConfig {
    pub n_iter: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_node: usize,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            n_iter: 100,
            learning_rate: 0.1,
            max_depth: 4,
            min_node: 10,
        }
    }
}

impl GbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.max_depth == 0 || self.min_node == 0 {
            return Err(Error::config("gbm", "n_iter, max_depth and min_node must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("gbm.learning_rate", "must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Raw scores beyond this magnitude are clipped before the logistic
/// transform so probabilities stay strictly inside (0, 1).
const MAX_LOGIT: f64 = 30.0;
/// Floor on the Newton denominator of a binomial leaf.
const MIN_HESSIAN: f64 = 1e-12;

pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-MAX_LOGIT, MAX_LOGIT);
    1.0 / (1.0 + (-x).exp())
}

/// Binomial deviance contribution of one row at raw score `f`.
fn binomial_loss(y: f64, f: f64) -> f64 {
    // log(1 + e^f) - y f, evaluated stably
    let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
    softplus - y * f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub task: Task,
    pub f0: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Training loss after each iteration, f0 first: mean squared error or
    /// mean binomial deviance / 2.
    pub train_loss: Vec<f64>,
}

impl GradientBoosting {
    pub fn fit(columns: &[Vec<f64>], y: &[f64], cfg: &GbmConfig, task: Task) -> Result<Self> {
        cfg.validate()?;
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidInput("boosting needs at least one row".into()));
        }
        let nf = n as f64;
        let mean = y.iter().sum::<f64>() / nf;
        let f0 = match task {
            Task::Regression => mean,
            Task::Classification => {
                let p = mean.clamp(1e-12, 1.0 - 1e-12);
                (p / (1.0 - p)).ln()
            }
        };
        let loss = |f: &[f64]| -> f64 {
            match task {
                Task::Regression => y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / nf,
                Task::Classification => {
                    y.iter().zip(f).map(|(a, b)| binomial_loss(*a, *b)).sum::<f64>() / nf
                }
            }
        };
        let data = BinnedData::from_columns(columns);
        let rows: Vec<u32> = (0..n as u32).collect();
        let params = TreeParams {
            min_node: cfg.min_node,
            max_depth: cfg.max_depth,
            m_try: None,
        };
        // column sampling is off, so the generator is never drawn from
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let mut f = vec![f0; n];
        let mut train_loss = vec![loss(&f)];
        let mut trees = Vec::with_capacity(cfg.n_iter);
        let mut residual = vec![0.0; n];
        for m in 0..cfg.n_iter {
            for i in 0..n {
                residual[i] = match task {
                    Task::Regression => y[i] - f[i],
                    Task::Classification => y[i] - sigmoid(f[i]),
                };
            }
            let mut tree = RegressionTree::fit_binned(&data, &rows, &residual, &params, &mut rng);
            let leaf_of: Vec<usize> = (0..n)
                .map(|i| tree.leaf_index(|c| columns[c][i]))
                .collect();
            if task == Task::Classification {
                let mut num = vec![0.0; tree.nodes.len()];
                let mut den = vec![0.0; tree.nodes.len()];
                for i in 0..n {
                    let p = sigmoid(f[i]);
                    num[leaf_of[i]] += residual[i];
                    den[leaf_of[i]] += p * (1.0 - p);
                }
                for id in 0..tree.nodes.len() {
                    if den[id] > 0.0 || num[id] != 0.0 {
                        tree.set_leaf_value(id, num[id] / den[id].max(MIN_HESSIAN));
                    }
                }
            }
            for i in 0..n {
                f[i] += cfg.learning_rate * tree.predict_row(|c| columns[c][i]);
            }
            let l = loss(&f);
            if !l.is_finite() {
                return Err(Error::Numerical(format!("boosting loss became {l} at iteration {m}")));
            }
            train_loss.push(l);
            trees.push(tree);
        }
        Ok(GradientBoosting {
            task,
            f0,
            learning_rate: cfg.learning_rate,
            trees,
            train_loss,
        })
    }

    pub fn raw_score(&self, columns: &[Vec<f64>], row: usize) -> f64 {
        self.f0
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict_row(|c| columns[c][row]))
                .sum::<f64>()
    }

    pub fn predict(&self, columns: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
        (0..n_rows)
            .map(|r| {
                let s = self.raw_score(columns, r);
                match self.task {
                    Task::Regression => s,
                    Task::Classification => sigmoid(s),
                }
            })
            .collect()
    }

    pub fn split_gains(&self, n_cols: usize) -> Vec<f64> {
        let mut g = vec![0.0; n_cols];
        for t in &self.trees {
            t.add_gains(&mut g);
        }
        g
    }
}
