use std::fs::File;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auc, regression_metrics, roc_curve};
use super::split::{out_of_time_split, HeldOutRows, Partition, SplitSpec, TrainRows};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSetKind, Labels};
use crate::models::{fit, Importance, LearnerConfig, LearnerKind, Task, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// Scores on one partition. Classification fills `auc`; regression fills
/// the error metrics. A metric that cannot be computed stays `None` and
/// `note` says why.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionMetrics {
    pub n_rows: usize,
    pub auc: Option<f64>,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub r2: Option<f64>,
    pub note: Option<String>,
}

impl PartitionMetrics {
    /// AUC for classification, RMSE for regression.
    pub fn headline(&self, task: Task) -> Option<f64> {
        match task {
            Task::Classification => self.auc,
            Task::Regression => self.rmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub task: Task,
    pub feature_set: FeatureSetKind,
    pub learner: LearnerKind,
    pub status: CellStatus,
    pub error: Option<String>,
    pub seed: u64,
    pub n_train: usize,
    pub validation: Option<PartitionMetrics>,
    pub test: Option<PartitionMetrics>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: SplitSpec,
    pub seed: u64,
    /// Sorted by (task, feature set, learner).
    pub cells: Vec<CellResult>,
}

/// A cell's fitted model and held-out predictions (NaN on training rows).
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub model: Option<TrainedModel>,
    pub predictions: Vec<f64>,
    pub importance: Option<Importance>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: MetricsReport,
    /// Parallel to `report.cells`.
    pub outcomes: Vec<CellOutcome>,
    pub partition: Partition,
}

#[derive(Debug, Clone)]
pub struct CompareOptions<'a> {
    pub learners: &'a [LearnerKind],
    pub tasks: &'a [Task],
    pub config: &'a LearnerConfig,
    pub spec: SplitSpec,
    pub seed: u64,
    /// Compute variable importance on the validation partition.
    pub importance: bool,
}

fn targets(labels: &Labels, task: Task) -> &[f64] {
    match task {
        Task::Classification => &labels.sold,
        Task::Regression => &labels.sale_psf,
    }
}

fn usable(rows: &[usize], y: &[f64]) -> Vec<usize> {
    rows.iter().copied().filter(|&r| !y[r].is_nan()).collect()
}

fn score_partition(task: Task, rows: &HeldOutRows, y: &[f64], preds: &[f64]) -> PartitionMetrics {
    let idx = usable(rows.indices(), y);
    let s: Vec<f64> = idx.iter().map(|&r| preds[r]).collect();
    let t: Vec<f64> = idx.iter().map(|&r| y[r]).collect();
    let mut m = PartitionMetrics {
        n_rows: idx.len(),
        ..Default::default()
    };
    match task {
        Task::Classification => match auc(&s, &t) {
            Ok(a) => m.auc = Some(a),
            Err(e) => m.note = Some(e.to_string()),
        },
        Task::Regression => match regression_metrics(&s, &t) {
            Ok(r) => {
                m.rmse = Some(r.rmse);
                m.mae = Some(r.mae);
                m.mse = Some(r.mse);
                m.r2 = r.r2;
                if r.r2.is_none() {
                    m.note = Some("R2 undefined for constant observations".into());
                }
            }
            Err(e) => m.note = Some(e.to_string()),
        },
    }
    m
}

/// One fitted (or failed) cell of the comparison grid, before scoring.
#[derive(Debug, Clone)]
pub struct TrainedCell {
    pub task: Task,
    pub feature_set: FeatureSetKind,
    pub learner: LearnerKind,
    /// The model, or the fit error message.
    pub model: std::result::Result<TrainedModel, String>,
    /// Fit wall time.
    pub runtime_seconds: f64,
}

/// What is persisted about a cell besides its model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedCellRecord {
    pub task: Task,
    pub feature_set: FeatureSetKind,
    pub learner: LearnerKind,
    pub status: CellStatus,
    pub error: Option<String>,
    pub runtime_seconds: f64,
}

impl TrainedCell {
    pub fn record(&self) -> TrainedCellRecord {
        TrainedCellRecord {
            task: self.task,
            feature_set: self.feature_set,
            learner: self.learner,
            status: if self.model.is_ok() { CellStatus::Ok } else { CellStatus::Failed },
            error: self.model.as_ref().err().cloned(),
            runtime_seconds: self.runtime_seconds,
        }
    }

    /// File stem for the cell's model artifact.
    pub fn file_stem(task: Task, set: FeatureSetKind, learner: LearnerKind) -> String {
        format!("{task}_{set}_{learner}")
    }
}

fn check_aligned(matrices: &[FeatureMatrix], labels: &Labels) -> Result<()> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::InvalidInput("no feature matrices to compare".into()))?;
    for m in matrices {
        if m.keys() != first.keys() {
            return Err(Error::InvalidInput(format!(
                "{} matrix row keys differ from {}",
                m.kind(),
                first.kind()
            )));
        }
    }
    if labels.keys != first.keys() {
        return Err(Error::InvalidInput("labels do not match matrix rows".into()));
    }
    Ok(())
}

/// Fits on training rows only; held-out rows never reach `fit`.
fn fit_cell(
    matrix: &FeatureMatrix,
    y: &[f64],
    task: Task,
    learner: LearnerKind,
    train: &TrainRows,
    config: &LearnerConfig,
    seed: u64,
) -> Result<TrainedModel> {
    let train_idx = usable(train.indices(), y);
    let x_train = matrix.select_rows(&train_idx);
    let y_train: Vec<f64> = train_idx.iter().map(|&r| y[r]).collect();
    fit(learner, task, config, &x_train, &y_train, seed)
}

/// Fits every (task, feature set, learner) cell on the training years.
/// Cells run in parallel; the output is sorted by that triple. A failing
/// fit is kept as an error message and the other cells still run.
pub fn train_cells(
    matrices: &[FeatureMatrix],
    labels: &Labels,
    opts: &CompareOptions<'_>,
) -> Result<Vec<TrainedCell>> {
    check_aligned(matrices, labels)?;
    let partition = out_of_time_split(matrices[0].keys(), &opts.spec)?;
    let mut jobs: Vec<(Task, &FeatureMatrix, LearnerKind)> = Vec::new();
    for &task in opts.tasks {
        for m in matrices {
            for &learner in opts.learners {
                jobs.push((task, m, learner));
            }
        }
    }
    jobs.sort_by_key(|(t, m, l)| (*t, m.kind(), *l));
    Ok(jobs
        .par_iter()
        .map(|&(task, matrix, learner)| {
            let started = Instant::now();
            let y = targets(labels, task);
            let model = fit_cell(matrix, y, task, learner, &partition.train, opts.config, opts.seed);
            let runtime_seconds = started.elapsed().as_secs_f64();
            match &model {
                Ok(m) => log::info!("{task} {} {learner}: fitted on {} rows", matrix.kind(), m.training_rows),
                Err(e) => log::error!("{task} {} {learner} failed: {e}", matrix.kind()),
            }
            TrainedCell {
                task,
                feature_set: matrix.kind(),
                learner,
                model: model.map_err(|e| e.to_string()),
                runtime_seconds,
            }
        })
        .collect())
}

/// Predictions for validation and test rows; NaN on training rows.
fn held_out_predictions(model: &TrainedModel, matrix: &FeatureMatrix, partition: &Partition) -> Result<Vec<f64>> {
    let mut held: Vec<usize> = partition.validation.indices().to_vec();
    held.extend(partition.test.indices());
    let scored = model.predict(&matrix.select_rows(&held))?;
    let mut predictions = vec![f64::NAN; matrix.n_rows()];
    for (&r, p) in held.iter().zip(scored) {
        predictions[r] = p;
    }
    Ok(predictions)
}

fn validation_importance(
    model: &TrainedModel,
    matrix: &FeatureMatrix,
    y: &[f64],
    partition: &Partition,
    seed: u64,
) -> Result<Option<Importance>> {
    let val_idx = usable(partition.validation.indices(), y);
    if val_idx.is_empty() {
        return Ok(None);
    }
    let y_val: Vec<f64> = val_idx.iter().map(|&r| y[r]).collect();
    model
        .variable_importance(&matrix.select_rows(&val_idx), &y_val, seed)
        .map(Some)
}

/// Scores trained cells on the validation and test years. `matrices` must
/// hold every feature set the cells name.
pub fn score_cells(
    cells: Vec<TrainedCell>,
    matrices: &[FeatureMatrix],
    labels: &Labels,
    spec: SplitSpec,
    seed: u64,
    importance: bool,
) -> Result<Comparison> {
    check_aligned(matrices, labels)?;
    let partition = out_of_time_split(matrices[0].keys(), &spec)?;
    let scored: Vec<Result<(CellResult, CellOutcome)>> = cells
        .into_par_iter()
        .map(|cell| {
            let matrix = matrices
                .iter()
                .find(|m| m.kind() == cell.feature_set)
                .ok_or_else(|| Error::InvalidInput(format!("no {} matrix to score", cell.feature_set)))?;
            let y = targets(labels, cell.task);
            let mut result = CellResult {
                task: cell.task,
                feature_set: cell.feature_set,
                learner: cell.learner,
                status: CellStatus::Ok,
                error: None,
                seed,
                n_train: 0,
                validation: None,
                test: None,
                runtime_seconds: cell.runtime_seconds,
            };
            let scored = cell.model.map_err(Error::InvalidInput).and_then(|model| {
                let predictions = held_out_predictions(&model, matrix, &partition)?;
                let imp = if importance {
                    validation_importance(&model, matrix, y, &partition, seed)?
                } else {
                    None
                };
                Ok((model, predictions, imp))
            });
            Ok(match scored {
                Ok((model, predictions, importance)) => {
                    result.n_train = model.training_rows;
                    result.validation = Some(score_partition(cell.task, &partition.validation, y, &predictions));
                    result.test = Some(score_partition(cell.task, &partition.test, y, &predictions));
                    (result, CellOutcome { model: Some(model), predictions, importance })
                }
                Err(e) => {
                    result.status = CellStatus::Failed;
                    result.error = Some(match e {
                        Error::InvalidInput(msg) => msg,
                        other => other.to_string(),
                    });
                    let predictions = vec![f64::NAN; matrix.n_rows()];
                    (result, CellOutcome { model: None, predictions, importance: None })
                }
            })
        })
        .collect();
    let (cells, outcomes) = scored.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(Comparison {
        report: MetricsReport { split: spec, seed, cells },
        outcomes,
        partition,
    })
}

/// Fits and scores every (feature set, learner, task) cell on the
/// validation and test years. A failing cell is recorded and the others
/// still run.
pub fn compare_models(
    matrices: &[FeatureMatrix],
    labels: &Labels,
    opts: &CompareOptions<'_>,
) -> Result<Comparison> {
    let cells = train_cells(matrices, labels, opts)?;
    score_cells(cells, matrices, labels, opts.spec, opts.seed, opts.importance)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsReport {
    pub fn cell(&self, task: Task, set: FeatureSetKind, learner: LearnerKind) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.task == task && c.feature_set == set && c.learner == learner)
    }

    /// Test-partition headline metric of a cell.
    pub fn test_metric(&self, task: Task, set: FeatureSetKind, learner: LearnerKind) -> Option<f64> {
        self.cell(task, set, learner)?.test.as_ref()?.headline(task)
    }

    /// The cell with the best test metric for `task`.
    pub fn best_test_cell(&self, task: Task) -> Option<&CellResult> {
        self.cells
            .iter()
            .filter(|c| c.task == task)
            .filter_map(|c| Some((c, c.test.as_ref()?.headline(task)?)))
            .min_by(|a, b| match task {
                Task::Classification => b.1.total_cmp(&a.1),
                Task::Regression => a.1.total_cmp(&b.1),
            })
            .map(|(c, _)| c)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header: Vec<String> = ["task", "feature_set", "learner", "status", "seed", "n_train"]
            .map(String::from)
            .to_vec();
        for p in ["validation", "test"] {
            for m in ["n_rows", "auc", "rmse", "mae", "mse", "r2"] {
                header.push(format!("{p}_{m}"));
            }
        }
        header.extend(["runtime_seconds".to_string(), "error".to_string()]);
        w.write_record(&header)?;
        for c in &self.cells {
            let mut rec = vec![
                c.task.to_string(),
                c.feature_set.to_string(),
                c.learner.to_string(),
                if c.status == CellStatus::Ok { "ok" } else { "failed" }.to_string(),
                c.seed.to_string(),
                c.n_train.to_string(),
            ];
            for p in [&c.validation, &c.test] {
                match p {
                    Some(m) => rec.extend([
                        m.n_rows.to_string(),
                        opt(m.auc),
                        opt(m.rmse),
                        opt(m.mae),
                        opt(m.mse),
                        opt(m.r2),
                    ]),
                    None => rec.extend(std::iter::repeat_n(String::new(), 6)),
                }
            }
            rec.push(format!("{:.3}", c.runtime_seconds));
            rec.push(c.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Test-year ROC points of every classification cell:
/// `feature_set,learner,fpr,tpr`.
pub fn write_roc_points(path: &Path, comparison: &Comparison, labels: &Labels) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["feature_set", "learner", "fpr", "tpr"])?;
    let rows = comparison.partition.test.indices();
    for (cell, out) in comparison.report.cells.iter().zip(&comparison.outcomes) {
        if cell.task != Task::Classification || cell.status != CellStatus::Ok {
            continue;
        }
        let s: Vec<f64> = rows.iter().map(|&r| out.predictions[r]).collect();
        let y: Vec<f64> = rows.iter().map(|&r| labels.sold[r]).collect();
        if let Ok(points) = roc_curve(&s, &y) {
            for (fpr, tpr) in points {
                w.write_record([
                    cell.feature_set.to_string(),
                    cell.learner.to_string(),
                    fpr.to_string(),
                    tpr.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
