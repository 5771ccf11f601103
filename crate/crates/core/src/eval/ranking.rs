use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{auc, regression_metrics};
use crate::error::{Error, Result};
use crate::models::Task;

/// Predictions of one model over all rows of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPredictions {
    pub name: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRanks {
    pub segment: String,
    pub n_rows: usize,
    /// Task metric per model, in [`RankingTable::models`] order.
    pub metrics: Vec<f64>,
    /// Rank per model, 1 = best; a permutation of 1..=k.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub model: String,
    /// Share of ranked segments at rank 1, 2, ... k.
    pub rank_shares: Vec<f64>,
    pub average_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub task: Task,
    pub metric: String,
    pub models: Vec<String>,
    pub segments: Vec<SegmentRanks>,
    /// Segments where the metric was undefined for some model.
    pub skipped: Vec<String>,
    pub summary: Vec<RankSummary>,
}

/// Ranks models within each segment by AUC (classification, higher is
/// better) or RMSE (regression, lower is better). Equal metrics are
/// ordered by model name. Only `rows` are scored; regression skips rows
/// with a missing observation.
pub fn rank_by_segment(
    task: Task,
    predictions: &[ModelPredictions],
    observed: &[f64],
    rows: &[usize],
    segments: &[String],
) -> Result<RankingTable> {
    if predictions.len() < 2 {
        return Err(Error::InvalidInput("ranking needs at least two models".into()));
    }
    let mut by_segment: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        if task == Task::Regression && observed[r].is_nan() {
            continue;
        }
        by_segment.entry(segments[r].as_str()).or_default().push(r);
    }
    let k = predictions.len();
    let mut out_segments = Vec::new();
    let mut skipped = Vec::new();
    for (segment, idx) in by_segment {
        let y: Vec<f64> = idx.iter().map(|&r| observed[r]).collect();
        let metrics: Result<Vec<f64>> = predictions
            .iter()
            .map(|p| {
                let s: Vec<f64> = idx.iter().map(|&r| p.scores[r]).collect();
                match task {
                    Task::Classification => auc(&s, &y),
                    Task::Regression => regression_metrics(&s, &y).map(|m| m.rmse),
                }
            })
            .collect();
        let Ok(metrics) = metrics else {
            skipped.push(segment.to_string());
            continue;
        };
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let by_metric = match task {
                Task::Classification => metrics[b].total_cmp(&metrics[a]),
                Task::Regression => metrics[a].total_cmp(&metrics[b]),
            };
            by_metric.then_with(|| predictions[a].name.cmp(&predictions[b].name))
        });
        let mut ranks = vec![0; k];
        for (pos, &m) in order.iter().enumerate() {
            ranks[m] = pos + 1;
        }
        out_segments.push(SegmentRanks {
            segment: segment.to_string(),
            n_rows: idx.len(),
            metrics,
            ranks,
        });
    }
    let n_seg = out_segments.len() as f64;
    let summary = (0..k)
        .map(|m| {
            let mut shares = vec![0.0; k];
            let mut total = 0.0;
            for s in &out_segments {
                shares[s.ranks[m] - 1] += 1.0;
                total += s.ranks[m] as f64;
            }
            RankSummary {
                model: predictions[m].name.clone(),
                rank_shares: shares.iter().map(|c| if n_seg > 0.0 { c / n_seg } else { 0.0 }).collect(),
                average_rank: if n_seg > 0.0 { total / n_seg } else { f64::NAN },
            }
        })
        .collect();
    Ok(RankingTable {
        task,
        metric: match task {
            Task::Classification => "auc",
            Task::Regression => "rmse",
        }
        .into(),
        models: predictions.iter().map(|p| p.name.clone()).collect(),
        segments: out_segments,
        skipped,
        summary,
    })
}
