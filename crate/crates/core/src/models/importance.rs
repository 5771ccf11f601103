use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shuffles averaged per column in permutation importance.
pub const PERMUTATION_REPEATS: usize = 5;

/// Importance per column, scaled so the largest score is exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub names: Vec<String>,
    pub scores: Vec<f64>,
    pub raw: Vec<f64>,
    /// No column had positive importance; all scores are zero.
    pub all_zero: bool,
}

/// Divides by the maximum. Negative and non-finite inputs count as zero.
pub fn scale_to_max(raw: &[f64]) -> (Vec<f64>, bool) {
    let clean: Vec<f64> = raw
        .iter()
        .map(|&v| if v.is_finite() && v > 0.0 { v } else { 0.0 })
        .collect();
    let max = clean.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        (clean.iter().map(|v| if *v == max { 1.0 } else { v / max }).collect(), false)
    } else {
        (clean, true)
    }
}

impl Importance {
    pub fn from_raw(names: Vec<String>, raw: Vec<f64>) -> Self {
        let (scores, all_zero) = scale_to_max(&raw);
        if all_zero {
            log::warn!("all variable importances are zero");
        }
        Importance {
            names,
            scores,
            raw,
            all_zero,
        }
    }

    /// `(name, score)` by descending score, ties by name.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.names.iter().cloned().zip(self.scores.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.ranked().iter().position(|(n, _)| n == name).map(|p| p + 1)
    }
}

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len().max(1) as f64
}

/// Mean increase in squared error when one source column is shuffled,
/// over [`PERMUTATION_REPEATS`] shuffles.
///
/// `columns` is the encoded design and `source_of` maps each design column
/// to its source; all design columns of a source move with one row
/// permutation. Source `s` draws from ChaCha stream `s`.
pub fn permutation_importance(
    columns: &[Vec<f64>],
    source_of: &[usize],
    n_sources: usize,
    y: &[f64],
    seed: u64,
    predict: impl Fn(&[Vec<f64>]) -> Vec<f64>,
) -> Vec<f64> {
    let n = y.len();
    let base = mse(&predict(columns), y);
    (0..n_sources)
        .map(|s| {
            let group: Vec<usize> = (0..columns.len()).filter(|&c| source_of[c] == s).collect();
            if group.is_empty() || n < 2 {
                return 0.0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut cols = columns.to_vec();
            let mut total = 0.0;
            for _ in 0..PERMUTATION_REPEATS {
                perm.shuffle(&mut rng);
                for &c in &group {
                    cols[c] = perm.iter().map(|&r| columns[c][r]).collect();
                }
                total += mse(&predict(&cols), y) - base;
            }
            total / PERMUTATION_REPEATS as f64
        })
        .collect()
}
