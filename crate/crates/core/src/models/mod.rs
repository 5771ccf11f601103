//! Learners behind one interface: GLM, random forest, gradient boosting and
//! a feed-forward network, for both sale classification and price
//! regression.
//!
//! Every learner sees the same [`FeatureMatrix`]. Categorical columns are
//! one-hot encoded. Trees keep missing cells and learn a direction for them
//! at each split; the GLM and the network impute training medians, add
//! missing-indicator columns and standardize.

mod ann;
mod encode;
mod forest;
mod gbm;
mod glm;
mod importance;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ann::{input_matrix, AnnConfig, AnnModel, Layer, Network, MAX_RESTARTS};
pub use encode::{Design, Encoder, SourceEncoding, Standardizer, DEFAULT_MAX_LEVELS};
pub use forest::{tree_vote, RandomForest, RfConfig};
pub use gbm::{sigmoid, GbmConfig, GradientBoosting};
pub use glm::{binomial_deviance, logit, Family, Glm, GlmConfig};
pub use importance::{permutation_importance, scale_to_max, Importance, PERMUTATION_REPEATS};
pub use tree::{BinnedData, Node, RegressionTree, TreeParams, MAX_BINS};

use crate::error::{Error, Result};
use crate::features::{ColumnSpec, FeatureMatrix};

/// Version of the serialized model container.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Classification, Task::Regression];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classification" | "sold" => Ok(Task::Classification),
            "regression" | "price" => Ok(Task::Regression),
            other => Err(Error::InvalidInput(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Glm,
    RandomForest,
    Gbm,
    Ann,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Glm,
        LearnerKind::RandomForest,
        LearnerKind::Gbm,
        LearnerKind::Ann,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Glm => "glm",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::Gbm => "gbm",
            LearnerKind::Ann => "ann",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "glm" => Ok(LearnerKind::Glm),
            "random_forest" | "rf" => Ok(LearnerKind::RandomForest),
            "gbm" => Ok(LearnerKind::Gbm),
            "ann" => Ok(LearnerKind::Ann),
            other => Err(Error::InvalidInput(format!("unknown learner {other:?}"))),
        }
    }
}

/// Hyperparameters of all four learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub glm: GlmConfig,
    pub random_forest: RfConfig,
    pub gbm: GbmConfig,
    pub ann: AnnConfig,
    /// One-hot level cap; rarer levels share an `other` column.
    pub max_levels: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            glm: GlmConfig::default(),
            random_forest: RfConfig::default(),
            gbm: GbmConfig::default(),
            ann: AnnConfig::default(),
            max_levels: DEFAULT_MAX_LEVELS,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        self.glm.validate()?;
        self.random_forest.validate()?;
        self.gbm.validate()?;
        self.ann.validate()?;
        if self.max_levels == 0 {
            return Err(Error::config("learners.max_levels", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum FittedParams {
    Glm { standardizer: Standardizer, glm: Glm },
    RandomForest { forest: RandomForest },
    Gbm { gbm: GradientBoosting },
    Ann { standardizer: Standardizer, ann: AnnModel },
}

/// A fitted learner with everything needed to score new rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub learner: LearnerKind,
    pub task: Task,
    pub seed: u64,
    pub manifest: Vec<ColumnSpec>,
    pub encoder: Encoder,
    pub params: FittedParams,
    /// Split-gain totals per manifest column (tree learners only).
    pub split_gains: Option<Vec<f64>>,
    pub training_rows: usize,
}

fn check_targets(task: Task, y: &[f64], n_rows: usize) -> Result<()> {
    if y.len() != n_rows {
        return Err(Error::InvalidInput(format!(
            "{} targets for {n_rows} rows",
            y.len()
        )));
    }
    if n_rows == 0 {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite target {bad}")));
    }
    if task == Task::Classification && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput("classification targets must be 0 or 1".into()));
    }
    Ok(())
}

fn source_columns(x: &FeatureMatrix) -> Vec<&[f64]> {
    (0..x.n_cols()).map(|c| x.column_at(c)).collect()
}

/// Fits `learner` on every row of `x`.
pub fn fit(
    learner: LearnerKind,
    task: Task,
    config: &LearnerConfig,
    x: &FeatureMatrix,
    y: &[f64],
    seed: u64,
) -> Result<TrainedModel> {
    config.validate()?;
    check_targets(task, y, x.n_rows())?;
    let specs = x.columns().to_vec();
    let sources = source_columns(x);
    let encoder = Encoder::fit(&specs, &sources, config.max_levels);
    let n = x.n_rows();
    let dense = matches!(learner, LearnerKind::Glm | LearnerKind::Ann);
    let mut design = encoder.transform(&specs, &sources, dense);
    let fold = |gains: Vec<f64>, design: &Design| {
        Design::fold_to_sources(&design.source_of, &gains, specs.len())
    };
    let (params, split_gains) = match learner {
        LearnerKind::RandomForest => {
            let forest = RandomForest::fit(&design.columns, y, &config.random_forest, task, seed)?;
            let gains = fold(forest.split_gains(design.n_cols()), &design);
            (FittedParams::RandomForest { forest }, Some(gains))
        }
        LearnerKind::Gbm => {
            let gbm = GradientBoosting::fit(&design.columns, y, &config.gbm, task)?;
            let gains = fold(gbm.split_gains(design.n_cols()), &design);
            (FittedParams::Gbm { gbm }, Some(gains))
        }
        LearnerKind::Glm => {
            let standardizer = Standardizer::fit(&design.columns);
            standardizer.apply(&mut design.columns);
            let family = match task {
                Task::Regression => Family::Gaussian,
                Task::Classification => Family::Binomial,
            };
            let glm = Glm::fit(&design.columns, y, family, &config.glm)?;
            if !glm.converged {
                log::warn!("GLM did not converge in {} iterations", glm.iterations);
            }
            (FittedParams::Glm { standardizer, glm }, None)
        }
        LearnerKind::Ann => {
            let standardizer = Standardizer::fit(&design.columns);
            standardizer.apply(&mut design.columns);
            let ann = AnnModel::fit(&design.columns, y, &config.ann, task, seed)?;
            (FittedParams::Ann { standardizer, ann }, None)
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        learner,
        task,
        seed,
        manifest: specs,
        encoder,
        params,
        split_gains,
        training_rows: n,
    })
}

impl TrainedModel {
    pub fn manifest_names(&self) -> Vec<String> {
        self.manifest.iter().map(|c| c.name.clone()).collect()
    }

    /// Source columns of `x` in manifest order; errors name any column that
    /// is missing from or extra to the training manifest.
    fn aligned<'a>(&self, x: &'a FeatureMatrix) -> Result<Vec<&'a [f64]>> {
        let names = self.manifest_names();
        let have = x.column_names();
        let missing: Vec<String> = names.iter().filter(|n| !have.contains(n)).cloned().collect();
        let extra: Vec<String> = have.iter().filter(|n| !names.contains(n)).cloned().collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::ManifestMismatch { missing, extra });
        }
        Ok(names
            .iter()
            .map(|n| x.column(n).expect("checked above"))
            .collect())
    }

    /// Regression values or class-1 probabilities, one per row of `x`.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        let sources = self.aligned(x)?;
        Ok(self.predict_sources(&sources, x.n_rows()))
    }

    fn uses_dense_design(&self) -> bool {
        matches!(self.params, FittedParams::Glm { .. } | FittedParams::Ann { .. })
    }

    /// Encoded (and, for dense learners, standardized) design for `sources`.
    fn design_for(&self, sources: &[&[f64]]) -> Design {
        let mut design = self.encoder.transform(&self.manifest, sources, self.uses_dense_design());
        match &self.params {
            FittedParams::Glm { standardizer, .. } | FittedParams::Ann { standardizer, .. } => {
                standardizer.apply(&mut design.columns)
            }
            _ => {}
        }
        design
    }

    fn predict_design(&self, columns: &[Vec<f64>], n: usize) -> Vec<f64> {
        match &self.params {
            FittedParams::RandomForest { forest } => forest.predict(columns, n),
            FittedParams::Gbm { gbm } => gbm.predict(columns, n),
            FittedParams::Glm { glm, .. } => glm.predict(columns, n),
            FittedParams::Ann { ann, .. } => ann.predict(columns, n),
        }
    }

    fn predict_sources(&self, sources: &[&[f64]], n: usize) -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        let design = self.design_for(sources);
        self.predict_design(&design.columns, n)
    }

    /// Scaled importance per manifest column. Tree learners use split
    /// gains; the GLM and network use permutation importance on `(x, y)`.
    pub fn variable_importance(&self, x: &FeatureMatrix, y: &[f64], seed: u64) -> Result<Importance> {
        let raw = match &self.split_gains {
            Some(g) => g.clone(),
            None => {
                let sources = self.aligned(x)?;
                if y.len() != x.n_rows() {
                    return Err(Error::InvalidInput("importance targets do not match rows".into()));
                }
                let design = self.design_for(&sources);
                permutation_importance(
                    &design.columns,
                    &design.source_of,
                    self.manifest.len(),
                    y,
                    seed,
                    |cols| self.predict_design(cols, y.len()),
                )
            }
        };
        Ok(Importance::from_raw(self.manifest_names(), raw))
    }

    /// Compact JSON; forests are too large to pretty-print.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, self)?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: TrainedModel = crate::ingest::io::read_json(path)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "{}: model format {} is not supported (expected {MODEL_FORMAT_VERSION})",
                path.display(),
                m.format_version
            )));
        }
        Ok(m)
    }
}
