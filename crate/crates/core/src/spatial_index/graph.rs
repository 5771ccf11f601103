use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{build_grid, search_space_indexed};
use super::projection::ProjectedPoint;
use crate::error::{Error, Result};
use crate::ingest::BblKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Fixed-radius adjacency over point indices. Lists are sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborGraph {
    pub radius: f64,
    adjacency: Vec<Vec<Neighbor>>,
}

/// Work done by the grid search, for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub partitions: usize,
    pub candidate_pairs: u64,
    pub max_search_space: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    Sequential,
    Parallel,
}

#[inline]
pub fn planar_distance(a: &ProjectedPoint, b: &ProjectedPoint) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

impl NeighborGraph {
    fn from_directed(n: usize, radius: f64, mut edges: Vec<(usize, usize, f64)>) -> Self {
        edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut adjacency = vec![Vec::new(); n];
        for (i, j, distance) in edges {
            adjacency[i].push(Neighbor { index: j, distance });
        }
        NeighborGraph { radius, adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.adjacency[i]
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Directed `(i, j)` pairs.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().map(move |n| (i, n.index)))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let edges = self.edge_set();
        edges.iter().all(|&(i, j)| edges.contains(&(j, i)))
    }

    pub fn is_irreflexive(&self) -> bool {
        self.adjacency
            .iter()
            .enumerate()
            .all(|(i, ns)| ns.iter().all(|n| n.index != i))
    }

    pub fn distances_within_radius(&self) -> bool {
        self.adjacency
            .iter()
            .flatten()
            .all(|n| n.distance <= self.radius)
    }
}

/// All-pairs reference search. Distance exactly `d` counts as a neighbor.
pub fn neighbors_brute(points: &[ProjectedPoint], d: f64) -> NeighborGraph {
    let mut edges = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dist = planar_distance(&points[i], &points[j]);
            if dist <= d {
                edges.push((i, j, dist));
                edges.push((j, i, dist));
            }
        }
    }
    NeighborGraph::from_directed(points.len(), d, edges)
}

pub fn neighbors_grid(points: &[ProjectedPoint], d: f64, cell_size: f64) -> Result<NeighborGraph> {
    neighbors_grid_with(points, d, cell_size, Schedule::Parallel).map(|(g, _)| g)
}

/// Gridded search: each partition only compares its members against the
/// points inside its dilated hull.
pub fn neighbors_grid_with(
    points: &[ProjectedPoint],
    d: f64,
    cell_size: f64,
    schedule: Schedule,
) -> Result<(NeighborGraph, GridStats)> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {d}")));
    }
    let grid = build_grid(points, cell_size)?;
    let work = |part: &super::grid::GridPartition| -> Result<(Vec<(usize, usize, f64)>, u64, usize)> {
        let space = search_space_indexed(part, &grid, points, d)?;
        let mut edges = Vec::new();
        for &i in &part.members {
            for &j in &space.candidates {
                if i == j {
                    continue;
                }
                let dist = planar_distance(&points[i], &points[j]);
                if dist <= d {
                    edges.push((i, j, dist));
                }
            }
        }
        let pairs = (part.members.len() * space.candidates.len()) as u64;
        Ok((edges, pairs, space.candidates.len()))
    };
    let results: Vec<_> = match schedule {
        Schedule::Sequential => grid.partitions().iter().map(work).collect::<Result<_>>()?,
        Schedule::Parallel => grid.partitions().par_iter().map(work).collect::<Result<_>>()?,
    };
    let mut stats = GridStats {
        partitions: grid.partitions().len(),
        ..Default::default()
    };
    let mut edges = Vec::new();
    for (e, pairs, space) in results {
        stats.candidate_pairs += pairs;
        stats.max_search_space = stats.max_search_space.max(space);
        edges.extend(e);
    }
    Ok((NeighborGraph::from_directed(points.len(), d, edges), stats))
}

/// Neighbor graph addressed by parcel key, as persisted between stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyedGraph {
    pub radius_m: f64,
    neighbors: BTreeMap<BblKey, Vec<(BblKey, f64)>>,
}

impl KeyedGraph {
    pub fn empty(radius_m: f64) -> Self {
        KeyedGraph {
            radius_m,
            neighbors: BTreeMap::new(),
        }
    }

    pub fn from_graph(graph: &NeighborGraph, keys: &[BblKey]) -> Self {
        let mut neighbors = BTreeMap::new();
        for (i, key) in keys.iter().enumerate() {
            let mut list: Vec<(BblKey, f64)> = graph
                .neighbors(i)
                .iter()
                .map(|n| (keys[n.index], n.distance))
                .collect();
            list.sort_by(|a, b| a.0.cmp(&b.0));
            neighbors.insert(*key, list);
        }
        KeyedGraph {
            radius_m: graph.radius,
            neighbors,
        }
    }

    /// Graph from undirected edges; each edge is stored in both directions.
    pub fn from_edges(radius_m: f64, edges: &[(BblKey, BblKey, f64)]) -> Self {
        let mut neighbors: BTreeMap<BblKey, Vec<(BblKey, f64)>> = BTreeMap::new();
        for &(a, b, d) in edges {
            neighbors.entry(a).or_default().push((b, d));
            neighbors.entry(b).or_default().push((a, d));
        }
        for list in neighbors.values_mut() {
            list.sort_by(|x, y| x.0.cmp(&y.0));
        }
        KeyedGraph {
            radius_m,
            neighbors,
        }
    }

    pub fn neighbors(&self, key: &BblKey) -> &[(BblKey, f64)] {
        self.neighbors.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, key: &BblKey) -> bool {
        self.neighbors.contains_key(key)
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.values().map(Vec::len).sum::<usize>() / 2
    }

    /// Writes `src_bbl,dst_bbl,distance_m` rows sorted by source then
    /// destination key. Isolated points produce no rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["src_bbl", "dst_bbl", "distance_m"])?;
        for (src, list) in &self.neighbors {
            for (dst, dist) in list {
                w.write_record([src.to_string(), dst.to_string(), dist.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, radius_m: f64) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(BufReader::new(file));
        let mut neighbors: BTreeMap<BblKey, Vec<(BblKey, f64)>> = BTreeMap::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| {
                rec.get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("edge row {rec:?} too short")))
            };
            let src: BblKey = field(0)?.parse()?;
            let dst: BblKey = field(1)?.parse()?;
            let dist: f64 = field(2)?
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad distance in {rec:?}")))?;
            neighbors.entry(src).or_default().push((dst, dist));
        }
        for list in neighbors.values_mut() {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        Ok(KeyedGraph {
            radius_m,
            neighbors,
        })
    }
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

    fn uniform(n: usize, side: f64, seed: u64) -> Vec<ProjectedPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xy: Vec<_> = (0..n)
            .map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect();
        pts(&xy)
    }

    #[test]
    fn boundary_inclusive() {
        let near = pts(&[(0.0, 0.0), (499.9, 0.0)]);
        assert_eq!(neighbors_grid(&near, 500.0, 500.0).unwrap().edge_count(), 1);
        let far = pts(&[(0.0, 0.0), (500.1, 0.0)]);
        assert_eq!(neighbors_grid(&far, 500.0, 500.0).unwrap().edge_count(), 0);
        let exact = pts(&[(0.0, 0.0), (500.0, 0.0)]);
        assert_eq!(neighbors_brute(&exact, 500.0).edge_count(), 1);
        assert_eq!(neighbors_grid(&exact, 500.0, 500.0).unwrap().edge_count(), 1);
    }

    #[test]
    fn brute_empty_and_collinear() {
        assert!(neighbors_brute(&[], 500.0).is_empty());
        let g = neighbors_brute(&pts(&[(0.0, 0.0), (400.0, 0.0), (800.0, 0.0)]), 500.0);
        let edges: Vec<_> = g.edge_set().into_iter().filter(|(i, j)| i < j).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn colocated_points_are_neighbors() {
        let g = neighbors_grid(&pts(&[(3.0, 3.0), (3.0, 3.0)]), 500.0, 500.0).unwrap();
        assert_eq!(g.neighbors(0)[0], Neighbor { index: 1, distance: 0.0 });
    }

    #[test]
    fn grid_matches_brute_on_1000_uniform_points() {
        let p = uniform(1000, 8000.0, 42);
        let brute = neighbors_brute(&p, 500.0);
        let grid = neighbors_grid(&p, 500.0, 500.0).unwrap();
        assert_eq!(grid.edge_set(), brute.edge_set());
        assert_eq!(grid, brute);
        assert!(grid.is_symmetric() && grid.is_irreflexive() && grid.distances_within_radius());
    }

    #[test]
    fn cell_size_does_not_change_edges() {
        let p = uniform(600, 4000.0, 5);
        let reference = neighbors_brute(&p, 500.0).edge_set();
        for cell in [37.0, 250.0, 500.0, 999.0, 4000.0, 1e6] {
            let g = neighbors_grid(&p, 500.0, cell).unwrap();
            assert_eq!(g.edge_set(), reference, "cell {cell}");
        }
    }

    #[test]
    fn schedules_agree() {
        let p = uniform(2000, 10_000.0, 8);
        let (a, sa) = neighbors_grid_with(&p, 500.0, 500.0, Schedule::Sequential).unwrap();
        let (b, sb) = neighbors_grid_with(&p, 500.0, 500.0, Schedule::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert!(sa.candidate_pairs < (2000 * 1999) as u64);
    }

    #[test]
    fn keyed_graph_csv_round_trip() {
        let p = uniform(200, 3000.0, 11);
        let g = neighbors_brute(&p, 500.0);
        let keys: Vec<BblKey> = (0..200).map(|i| BblKey::new(1, i / 10, i % 10).unwrap()).collect();
        let keyed = KeyedGraph::from_graph(&g, &keys);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.csv");
        keyed.write_csv(&path).unwrap();
        let back = KeyedGraph::read_csv(&path, 500.0).unwrap();
        for k in &keys {
            assert_eq!(keyed.neighbors(k), back.neighbors(k));
        }
        assert_eq!(keyed.edge_count(), back.edge_count());
    }
}
