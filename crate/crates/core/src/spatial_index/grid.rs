use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::hull::{convex_hull, dilate, ConvexPolygon};
use super::projection::ProjectedPoint;
use crate::error::{Error, Result};

/// Maximum outward deviation of the dilated search polygon, in meters.
pub const CHORD_TOLERANCE_M: f64 = 0.01;
pub const MIN_CHORDS_PER_VERTEX: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPartition {
    pub row: i64,
    pub col: i64,
    /// Indices into the point slice the grid was built from.
    pub members: Vec<usize>,
    pub cell_size: f64,
}

/// Square cells anchored at the bounding-box minimum corner.
#[derive(Debug, Clone)]
pub struct Grid {
    origin: (f64, f64),
    cell_size: f64,
    partitions: Vec<GridPartition>,
    lookup: BTreeMap<(i64, i64), usize>,
}

impl Grid {
    pub fn partitions(&self) -> &[GridPartition] {
        &self.partitions
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((y - self.origin.1) / self.cell_size).floor() as i64,
            ((x - self.origin.0) / self.cell_size).floor() as i64,
        )
    }

    /// Point indices in all cells overlapping the axis-aligned box.
    fn for_each_in_box(&self, min: (f64, f64), max: (f64, f64), mut f: impl FnMut(usize)) {
        let (r0, c0) = self.cell_of(min.0, min.1);
        let (r1, c1) = self.cell_of(max.0, max.1);
        let width = (c1 - c0 + 1) as usize;
        let height = (r1 - r0 + 1) as usize;
        if width.saturating_mul(height) > self.partitions.len() {
            // sparse grid: walk occupied cells instead of the box
            for p in &self.partitions {
                if (r0..=r1).contains(&p.row) && (c0..=c1).contains(&p.col) {
                    p.members.iter().for_each(|&i| f(i));
                }
            }
            return;
        }
        for r in r0..=r1 {
            for (_, &idx) in self.lookup.range((r, c0)..=(r, c1)) {
                self.partitions[idx].members.iter().for_each(|&i| f(i));
            }
        }
    }
}

pub fn build_grid(points: &[ProjectedPoint], cell_size: f64) -> Result<Grid> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(Error::InvalidInput(format!(
            "cell size must be positive and finite, got {cell_size}"
        )));
    }
    if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "point {} has non-finite coordinates ({}, {})",
            p.id, p.x, p.y
        )));
    }
    let origin = points.iter().fold((f64::INFINITY, f64::INFINITY), |m, p| {
        (m.0.min(p.x), m.1.min(p.y))
    });
    let mut grid = Grid {
        origin,
        cell_size,
        partitions: Vec::new(),
        lookup: BTreeMap::new(),
    };
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(grid.cell_of(p.x, p.y)).or_default().push(i);
    }
    for (k, ((row, col), members)) in cells.into_iter().enumerate() {
        grid.lookup.insert((row, col), k);
        grid.partitions.push(GridPartition {
            row,
            col,
            members,
            cell_size,
        });
    }
    Ok(grid)
}

/// Search region for one partition: its hull dilated by the radius, and the
/// points falling inside it.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub partition: (i64, i64),
    pub polygon: ConvexPolygon,
    pub candidates: Vec<usize>,
}

fn search_polygon(partition: &GridPartition, points: &[ProjectedPoint], d: f64) -> Result<ConvexPolygon> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {d}")));
    }
    if partition.members.is_empty() {
        return Err(Error::InvalidInput("empty partition".into()));
    }
    let member_xy: Vec<(f64, f64)> = partition
        .members
        .iter()
        .map(|&i| (points[i].x, points[i].y))
        .collect();
    let hull = convex_hull(&member_xy);
    Ok(dilate(&hull, d, CHORD_TOLERANCE_M, MIN_CHORDS_PER_VERTEX))
}

/// Builds the search space by scanning every point.
pub fn search_space(
    partition: &GridPartition,
    points: &[ProjectedPoint],
    d: f64,
) -> Result<SearchSpace> {
    let polygon = search_polygon(partition, points, d)?;
    let candidates = points
        .iter()
        .enumerate()
        .filter(|(_, p)| polygon.contains((p.x, p.y)))
        .map(|(i, _)| i)
        .collect();
    Ok(SearchSpace {
        partition: (partition.row, partition.col),
        polygon,
        candidates,
    })
}

/// Same result as [`search_space`], visiting only the grid cells under the
/// polygon's bounding box.
pub fn search_space_indexed(
    partition: &GridPartition,
    grid: &Grid,
    points: &[ProjectedPoint],
    d: f64,
) -> Result<SearchSpace> {
    let polygon = search_polygon(partition, points, d)?;
    let (min, max) = polygon.bounding_box();
    let mut candidates = Vec::new();
    grid.for_each_in_box(min, max, |i| {
        if polygon.contains((points[i].x, points[i].y)) {
            candidates.push(i);
        }
    });
    candidates.sort_unstable();
    Ok(SearchSpace {
        partition: (partition.row, partition.col),
        polygon,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(xy: &[(f64, f64)]) -> Vec<ProjectedPoint> {
        xy.iter()
            .enumerate()
            .map(|(id, &(x, y))| ProjectedPoint { id, x, y })
            .collect()
    }

    #[test]
    fn single_point_single_partition() {
        let g = build_grid(&pts(&[(5.0, 5.0)]), 1000.0).unwrap();
        assert_eq!(g.partitions().len(), 1);
        assert_eq!(g.partitions()[0].members, vec![0]);
    }

    #[test]
    fn identical_points_single_partition() {
        let g = build_grid(&pts(&[(5.0, 5.0); 7]), 10.0).unwrap();
        assert_eq!(g.partitions().len(), 1);
        assert_eq!(g.partitions()[0].members.len(), 7);
    }

    #[test]
    fn square_corners_four_cells() {
        // corners of a 2 km square, nudged off the cell boundaries
        let p = pts(&[(0.0, 0.0), (1999.0, 0.0), (0.0, 1999.0), (1999.0, 1999.0)]);
        let g = build_grid(&p, 1000.0).unwrap();
        assert_eq!(g.partitions().len(), 4);
        let cells: Vec<_> = g.partitions().iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(cells, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn every_point_in_exactly_one_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xy: Vec<_> = (0..500)
            .map(|_| (rng.gen_range(0.0..5000.0), rng.gen_range(0.0..5000.0)))
            .collect();
        let g = build_grid(&pts(&xy), 700.0).unwrap();
        let mut seen: Vec<usize> = g.partitions().iter().flat_map(|p| p.members.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..500).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_grid(&pts(&[(f64::NAN, 0.0)]), 10.0).is_err());
        assert!(build_grid(&pts(&[(0.0, 0.0)]), 0.0).is_err());
    }

    #[test]
    fn single_point_search_space_is_disc() {
        let p = pts(&[(0.0, 0.0), (499.0, 0.0), (0.0, 500.0), (353.0, 353.0), (355.0, 355.0)]);
        let g = build_grid(&p, 100.0).unwrap();
        let part = g.partitions().iter().find(|q| q.members == vec![0]).unwrap();
        let s = search_space(part, &p, 500.0).unwrap();
        assert_eq!(s.candidates, vec![0, 1, 2, 3]);
    }

    #[test]
    fn isolated_partition_candidates_are_members() {
        let p = pts(&[(0.0, 0.0), (10.0, 10.0), (50_000.0, 0.0)]);
        let g = build_grid(&p, 100.0).unwrap();
        let s = search_space(&g.partitions()[0], &p, 500.0).unwrap();
        assert_eq!(s.candidates, vec![0, 1]);
    }

    #[test]
    fn indexed_search_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xy: Vec<_> = (0..800)
            .map(|_| (rng.gen_range(0.0..6000.0), rng.gen_range(0.0..6000.0)))
            .collect();
        let p = pts(&xy);
        for cell in [250.0, 500.0, 1300.0] {
            let g = build_grid(&p, cell).unwrap();
            for part in g.partitions() {
                let a = search_space(part, &p, 500.0).unwrap();
                let b = search_space_indexed(part, &g, &p, 500.0).unwrap();
                assert_eq!(a.candidates, b.candidates);
            }
        }
    }
}
