//! Fixed-radius point-neighbor graph.
//!
//! Points are projected to local planar meters, bucketed into square grid
//! partitions, and each partition is searched only against the points inside
//! its convex hull dilated by the radius. [`neighbors_brute`] is the all-pairs
//! reference the grid search must reproduce exactly.

mod bench;
mod graph;
mod grid;
mod hull;
mod projection;

use std::collections::BTreeMap;

pub use bench::{benchmark_index, uniform_points, BenchRow, BenchTable};
pub use graph::{
    neighbors_brute, neighbors_grid, neighbors_grid_with, planar_distance, GridStats,
    KeyedGraph, Neighbor, NeighborGraph, Schedule,
};
pub use grid::{
    build_grid, search_space, search_space_indexed, Grid, GridPartition, SearchSpace,
    CHORD_TOLERANCE_M, MIN_CHORDS_PER_VERTEX,
};
pub use hull::{convex_hull, dilate, distance_to_hull, ConvexPolygon};
pub use projection::{project, LocalProjection, ProjectedPoint, EARTH_RADIUS_M};

use crate::error::Result;
use crate::ingest::{BblKey, PropertyYearRecord};

pub const DEFAULT_RADIUS_M: f64 = 500.0;

/// One location per parcel: the earliest year with valid coordinates.
/// Parcels without coordinates are left out of the graph.
pub fn parcel_locations(panel: &[PropertyYearRecord]) -> BTreeMap<BblKey, (f64, f64)> {
    let mut out: BTreeMap<BblKey, (i32, (f64, f64))> = BTreeMap::new();
    for row in panel {
        if let Some(c) = row.parcel.coordinates() {
            out.entry(row.parcel.bbl)
                .and_modify(|e| {
                    if row.year() < e.0 {
                        *e = (row.year(), c);
                    }
                })
                .or_insert((row.year(), c));
        }
    }
    out.into_iter().map(|(k, (_, c))| (k, c)).collect()
}

/// Builds the keyed graph over the panel's unique parcel locations.
pub fn graph_for_panel(
    panel: &[PropertyYearRecord],
    radius: f64,
    cell_size: f64,
) -> Result<(KeyedGraph, GridStats)> {
    let locations = parcel_locations(panel);
    let keys: Vec<BblKey> = locations.keys().copied().collect();
    let coords: Vec<(f64, f64)> = locations.values().copied().collect();
    let (_, points) = project(&coords);
    if points.is_empty() {
        return Ok((KeyedGraph::empty(radius), GridStats::default()));
    }
    let (graph, stats) = neighbors_grid_with(&points, radius, cell_size, Schedule::Parallel)?;
    Ok((KeyedGraph::from_graph(&graph, &keys), stats))
}
