use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{BinnedData, RegressionTree, TreeParams};
use super::Task;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    pub n_trees: usize,
    /// Columns tried per split; defaults to ceil(sqrt(p)) for
    /// classification and ceil(p/3) for regression.
    pub m_try: Option<usize>,
    /// Minimum rows per leaf; defaults to 1 for classification, 5 for
    /// regression.
    pub min_node: Option<usize>,
    pub max_depth: usize,
    pub bootstrap: bool,
    /// Bootstrap sample size as a fraction of the training rows.
    pub sample_fraction: f64,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 200,
            m_try: None,
            min_node: None,
            max_depth: 64,
            bootstrap: true,
            sample_fraction: 1.0,
        }
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("random_forest.n_trees", "must be at least 1"));
        }
        if self.m_try == Some(0) || self.min_node == Some(0) || self.max_depth == 0 {
            return Err(Error::config("random_forest", "m_try, min_node and max_depth must be at least 1"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::config("random_forest.sample_fraction", "must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn resolved_m_try(&self, task: Task, p: usize) -> usize {
        let p = p.max(1);
        self.m_try.unwrap_or(match task {
            Task::Classification => (p as f64).sqrt().ceil() as usize,
            Task::Regression => p.div_ceil(3),
        })
        .min(p)
    }

    pub fn resolved_min_node(&self, task: Task) -> usize {
        self.min_node.unwrap_or(match task {
            Task::Classification => 1,
            Task::Regression => 5,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
    pub task: Task,
}

/// A tree's vote for the positive class: 1, 0, or one half on a tie.
pub fn tree_vote(leaf: f64) -> f64 {
    if leaf > 0.5 {
        1.0
    } else if leaf < 0.5 {
        0.0
    } else {
        0.5
    }
}

impl RandomForest {
    /// Tree `b` draws from its own ChaCha stream `b` under `seed`, so the
    /// forest does not depend on thread scheduling.
    pub fn fit(columns: &[Vec<f64>], y: &[f64], cfg: &RfConfig, task: Task, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidInput("random forest needs at least one row".into()));
        }
        let data = BinnedData::from_columns(columns);
        let params = TreeParams {
            min_node: cfg.resolved_min_node(task),
            max_depth: cfg.max_depth,
            m_try: Some(cfg.resolved_m_try(task, data.n_cols())),
        };
        let n_sample = ((n as f64 * cfg.sample_fraction).round() as usize).max(1);
        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let rows: Vec<u32> = if cfg.bootstrap {
                    (0..n_sample).map(|_| rng.gen_range(0..n as u32)).collect()
                } else {
                    (0..n as u32).collect()
                };
                RegressionTree::fit_binned(&data, &rows, y, &params, &mut rng)
            })
            .collect();
        Ok(RandomForest { trees, task })
    }

    /// Per-tree outputs in the forest's scale: leaf means for regression,
    /// votes for classification.
    pub fn tree_outputs(&self, columns: &[Vec<f64>], row: usize) -> Vec<f64> {
        self.trees
            .iter()
            .map(|t| {
                let v = t.predict_row(|c| columns[c][row]);
                match self.task {
                    Task::Regression => v,
                    Task::Classification => tree_vote(v),
                }
            })
            .collect()
    }

    pub fn predict(&self, columns: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
        let b = self.trees.len() as f64;
        (0..n_rows)
            .into_par_iter()
            .map(|r| self.tree_outputs(columns, r).iter().sum::<f64>() / b)
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
