//! Out-of-time splits, AUC and error metrics, the model comparison grid and
//! per-segment rankings.

mod compare;
mod metrics;
mod ranking;
mod split;

pub use compare::{
    compare_models, score_cells, train_cells, write_roc_points, CellOutcome, CellResult,
    CellStatus, CompareOptions, Comparison, MetricsReport, PartitionMetrics, TrainedCell,
    TrainedCellRecord,
};
pub use metrics::{auc, auc_rank, regression_metrics, roc_curve, RegressionMetrics};
pub use ranking::{rank_by_segment, ModelPredictions, RankSummary, RankingTable, SegmentRanks};
pub use split::{out_of_time_split, HeldOutRows, Partition, SplitSpec, TrainRows};
