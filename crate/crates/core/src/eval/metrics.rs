use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidInput(format!("{a} scores for {b} labels")));
    }
    if a == 0 {
        return Err(Error::Undefined("no rows to score".into()));
    }
    Ok(())
}

fn class_counts(labels: &[f64]) -> Result<(f64, f64)> {
    let pos = labels.iter().filter(|&&l| l > 0.5).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::Undefined("AUC needs both classes".into()));
    }
    Ok((pos, neg))
}

/// ROC points `(false positive rate, true positive rate)` from (0, 0) to
/// (1, 1), one per distinct score, sweeping the threshold downwards.
pub fn roc_curve(scores: &[f64], labels: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_lengths(scores.len(), labels.len())?;
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] > 0.5 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((fp / neg, tp / pos));
    }
    Ok(points)
}

/// Area under the ROC curve by the trapezoid rule. Tied scores form one
/// diagonal step, which credits tied pairs by one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let pts = roc_curve(scores, labels)?;
    Ok(pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum())
}

/// Mann-Whitney form of the AUC: (concordant + tied / 2) / (P * N),
/// from midranks.
pub fn auc_rank(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum_pos += mid * order[i..j].iter().filter(|&&k| labels[k] > 0.5).count() as f64;
        i = j;
    }
    Ok((rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub mse: f64,
    /// Missing when the observed values are constant.
    pub r2: Option<f64>,
}

pub fn regression_metrics(preds: &[f64], observed: &[f64]) -> Result<RegressionMetrics> {
    check_lengths(preds.len(), observed.len())?;
    let t = observed.len() as f64;
    let sse: f64 = preds.iter().zip(observed).map(|(p, y)| (p - y) * (p - y)).sum();
    let mae = preds.iter().zip(observed).map(|(p, y)| (p - y).abs()).sum::<f64>() / t;
    let rmse = (sse / t).sqrt();
    let mean = observed.iter().sum::<f64>() / t;
    let sst: f64 = observed.iter().map(|y| (y - mean) * (y - mean)).sum();
    Ok(RegressionMetrics {
        rmse,
        mae,
        mse: rmse * rmse,
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
    })
}
