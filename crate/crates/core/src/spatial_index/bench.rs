use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{neighbors_brute, neighbors_grid_with, Schedule};
use super::projection::ProjectedPoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub grid_seconds: f64,
    pub brute_seconds: f64,
    pub edges: usize,
    pub grid_candidate_pairs: u64,
    pub brute_pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub radius_m: f64,
    pub cell_size_m: f64,
    pub extent_m: f64,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    /// Whether the grid beat brute force at the largest `n`.
    pub fn grid_wins_at_max(&self) -> bool {
        self.rows
            .last()
            .is_some_and(|r| r.grid_seconds < r.brute_seconds)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidInput(format!("{other:?}")),
        })?;
        w.write_record([
            "n",
            "grid_seconds",
            "brute_seconds",
            "edges",
            "grid_candidate_pairs",
            "brute_pairs",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:.6}", r.grid_seconds),
                format!("{:.6}", r.brute_seconds),
                r.edges.to_string(),
                r.grid_candidate_pairs.to_string(),
                r.brute_pairs.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn uniform_points(n: usize, extent_m: f64, seed: u64) -> Vec<ProjectedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|id| ProjectedPoint {
            id,
            x: rng.gen_range(0.0..extent_m),
            y: rng.gen_range(0.0..extent_m),
        })
        .collect()
}

/// Times the sequential grid search against brute force on uniform points
/// in an `extent_m` square, one row per `n`.
pub fn benchmark_index(
    n_values: &[usize],
    d: f64,
    cell_size: f64,
    extent_m: f64,
    seed: u64,
) -> Result<BenchTable> {
    if n_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("n values must be ascending".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let points = uniform_points(n, extent_m, seed ^ n as u64);

        let start = Instant::now();
        let (grid, stats) = neighbors_grid_with(&points, d, cell_size, Schedule::Sequential)?;
        let grid_seconds = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let brute = neighbors_brute(&points, d);
        let brute_seconds = start.elapsed().as_secs_f64();

        if grid.edge_count() != brute.edge_count() {
            return Err(Error::Numerical(format!(
                "grid and brute disagree at n = {n}: {} vs {} edges",
                grid.edge_count(),
                brute.edge_count()
            )));
        }
        log::info!("n={n}: grid {grid_seconds:.3}s, brute {brute_seconds:.3}s");
        rows.push(BenchRow {
            n,
            grid_seconds,
            brute_seconds,
            edges: grid.edge_count(),
            grid_candidate_pairs: stats.candidate_pairs,
            brute_pairs: (n as u64 * n.saturating_sub(1) as u64) / 2,
        });
    }
    Ok(BenchTable {
        radius_m: d,
        cell_size_m: cell_size,
        extent_m,
        rows,
    })
}
