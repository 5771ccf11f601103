use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest number of value bins per column; one more code marks missing.
pub const MAX_BINS: usize = 255;
const MISSING_BIN: u8 = u8::MAX;
/// Below this many row-column visits a node is searched sequentially.
const PARALLEL_WORK: usize = 1 << 16;

/// Columns quantized to at most [`MAX_BINS`] value bins.
///
/// Bin `b < cuts.len()` holds values `v <= cuts[b]` above the previous cut,
/// so `v <= cuts[b]` exactly when `bin(v) <= b`.
#[derive(Debug, Clone)]
pub struct BinnedData {
    pub bins: Vec<Vec<u8>>,
    pub cuts: Vec<Vec<f64>>,
    pub n_rows: usize,
}

fn cut_points(col: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = col.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    if v.len() <= 1 {
        return Vec::new();
    }
    let uniques = if v.len() <= MAX_BINS {
        v
    } else {
        // evenly spaced order statistics of the distinct values
        (0..MAX_BINS)
            .map(|k| v[k * (v.len() - 1) / (MAX_BINS - 1)])
            .collect()
    };
    uniques.windows(2).map(|w| w[0] + 0.5 * (w[1] - w[0])).collect()
}

impl BinnedData {
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let n_rows = columns.first().map_or(0, Vec::len);
        let (bins, cuts) = columns
            .par_iter()
            .map(|col| {
                let cuts = cut_points(col);
                let bins = col
                    .iter()
                    .map(|v| {
                        if v.is_nan() {
                            MISSING_BIN
                        } else {
                            cuts.partition_point(|c| c < v) as u8
                        }
                    })
                    .collect();
                (bins, cuts)
            })
            .unzip();
        BinnedData { bins, cuts, n_rows }
    }

    pub fn n_cols(&self) -> usize {
        self.bins.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Minimum number of training rows in each child.
    pub min_node: usize,
    pub max_depth: usize,
    /// Columns tried per split; `None` tries all.
    pub m_try: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        missing_left: bool,
        left: usize,
        right: usize,
        /// Squared-error reduction of this split on the training targets.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

/// Binary regression tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    bin: usize,
    missing_left: bool,
    gain: f64,
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => {
            if y.gain > x.gain || (y.gain == x.gain && y.feature < x.feature) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    }
}

fn split_gain(sl: f64, nl: f64, sr: f64, nr: f64) -> f64 {
    let d = sl / nl - sr / nr;
    nl * nr / (nl + nr) * d * d
}

fn best_split_for(
    data: &BinnedData,
    feature: usize,
    rows: &[u32],
    targets: &[f64],
    min_node: usize,
) -> Option<Candidate> {
    let n_cuts = data.cuts[feature].len();
    if n_cuts == 0 {
        return None;
    }
    let bins = &data.bins[feature];
    let mut sum = [0.0f64; 256];
    let mut cnt = [0usize; 256];
    for &r in rows {
        let b = bins[r as usize] as usize;
        sum[b] += targets[r as usize];
        cnt[b] += 1;
    }
    let (ms, mc) = (sum[MISSING_BIN as usize], cnt[MISSING_BIN as usize]);
    let total_s: f64 = sum[..=n_cuts].iter().sum::<f64>();
    let total_c: usize = cnt[..=n_cuts].iter().sum();
    let mut best: Option<Candidate> = None;
    let (mut ls, mut lc) = (0.0, 0usize);
    for b in 0..n_cuts {
        ls += sum[b];
        lc += cnt[b];
        if cnt[b] == 0 {
            continue;
        }
        let (rs, rc) = (total_s - ls, total_c - lc);
        if rc == 0 {
            break;
        }
        for missing_left in [false, true] {
            if missing_left && mc == 0 {
                continue;
            }
            let (l_s, l_c, r_s, r_c) = if missing_left {
                (ls + ms, lc + mc, rs, rc)
            } else {
                (ls, lc, rs + ms, rc + mc)
            };
            if l_c < min_node || r_c < min_node {
                continue;
            }
            let gain = split_gain(l_s, l_c as f64, r_s, r_c as f64);
            if gain > 0.0 && best.is_none_or(|c| gain > c.gain) {
                best = Some(Candidate {
                    feature,
                    bin: b,
                    missing_left: if mc > 0 { missing_left } else { lc >= rc },
                    gain,
                });
            }
        }
    }
    best
}

impl RegressionTree {
    /// Greedy squared-error tree over the multiset `rows`. Leaves store the
    /// mean target of their rows.
    pub fn fit_binned<R: Rng>(
        data: &BinnedData,
        rows: &[u32],
        targets: &[f64],
        params: &TreeParams,
        rng: &mut R,
    ) -> RegressionTree {
        let mut tree = RegressionTree { nodes: Vec::new() };
        let min_node = params.min_node.max(1);
        let mut stack: Vec<(usize, Vec<u32>, usize)> = Vec::new();
        tree.nodes.push(Node::Leaf { value: 0.0 });
        stack.push((0, rows.to_vec(), 0));
        while let Some((id, node_rows, depth)) = stack.pop() {
            let n = node_rows.len();
            let mean = node_rows.iter().map(|&r| targets[r as usize]).sum::<f64>() / n.max(1) as f64;
            tree.nodes[id] = Node::Leaf { value: mean };
            if depth >= params.max_depth || n < 2 * min_node {
                continue;
            }
            let first = targets[node_rows[0] as usize];
            if node_rows.iter().all(|&r| targets[r as usize] == first) {
                continue;
            }
            let p = data.n_cols();
            let features: Vec<usize> = match params.m_try {
                Some(m) if m < p => {
                    let mut f = sample(rng, p, m.max(1)).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..p).collect(),
            };
            let found = if n * features.len() >= PARALLEL_WORK {
                features
                    .par_iter()
                    .map(|&f| best_split_for(data, f, &node_rows, targets, min_node))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .fold(None, better)
            } else {
                features
                    .iter()
                    .map(|&f| best_split_for(data, f, &node_rows, targets, min_node))
                    .fold(None, better)
            };
            let Some(c) = found else { continue };
            let bins = &data.bins[c.feature];
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                node_rows.into_iter().partition(|&r| {
                    let b = bins[r as usize];
                    if b == MISSING_BIN {
                        c.missing_left
                    } else {
                        (b as usize) <= c.bin
                    }
                });
            let left = tree.nodes.len();
            tree.nodes.push(Node::Leaf { value: 0.0 });
            tree.nodes.push(Node::Leaf { value: 0.0 });
            tree.nodes[id] = Node::Split {
                feature: c.feature,
                threshold: data.cuts[c.feature][c.bin],
                missing_left: c.missing_left,
                left,
                right: left + 1,
                gain: c.gain,
            };
            stack.push((left + 1, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }
        tree
    }

    /// Convenience fit on raw column-major data using every row once.
    pub fn fit<R: Rng>(
        columns: &[Vec<f64>],
        targets: &[f64],
        params: &TreeParams,
        rng: &mut R,
    ) -> RegressionTree {
        let data = BinnedData::from_columns(columns);
        let rows: Vec<u32> = (0..targets.len() as u32).collect();
        Self::fit_binned(&data, &rows, targets, params, rng)
    }

    /// Index of the leaf reached by a row whose value in column `c` is `x(c)`.
    pub fn leaf_index(&self, x: impl Fn(usize) -> f64) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    let v = x(*feature);
                    let go_left = if v.is_nan() { *missing_left } else { v <= *threshold };
                    id = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_row(&self, x: impl Fn(usize) -> f64) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn predict(&self, columns: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
        (0..n_rows)
            .map(|r| self.predict_row(|c| columns[c][r]))
            .collect()
    }

    pub fn set_leaf_value(&mut self, id: usize, value: f64) {
        if let Node::Leaf { value: v } = &mut self.nodes[id] {
            *v = value;
        }
    }

    /// Split gains summed per column.
    pub fn add_gains(&self, into: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                into[*feature] += gain;
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(min_node: usize) -> TreeParams {
        TreeParams {
            min_node,
            max_depth: 32,
            m_try: None,
        }
    }

    #[test]
    fn constant_targets_make_one_leaf() {
        let x = vec![vec![1.0, 2.0, 3.0, 4.0]];
        let y = vec![7.5; 4];
        let t = RegressionTree::fit(&x, &y, &params(1), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes, vec![Node::Leaf { value: 7.5 }]);
    }

    #[test]
    fn step_function_single_split() {
        let xs: Vec<f64> = (-5..5).map(|i| i as f64 + 0.5).collect();
        let y: Vec<f64> = xs.iter().map(|&x| f64::from(u8::from(x > 0.0))).collect();
        let t = RegressionTree::fit(&[xs.clone()], &y, &params(1), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.n_leaves(), 2);
        match t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 0.0),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.predict(&[xs], 10), y);
    }

    #[test]
    fn missing_values_follow_learned_direction() {
        let x = vec![vec![1.0, 2.0, f64::NAN, f64::NAN, 10.0, 11.0]];
        let y = vec![0.0, 0.0, 5.0, 5.0, 5.0, 5.0];
        let t = RegressionTree::fit(&x, &y, &params(1), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.predict_row(|_| f64::NAN), 5.0);
        assert_eq!(t.predict_row(|_| 1.5), 0.0);
    }

    #[test]
    fn min_node_bounds_leaf_size() {
        let x = vec![(0..20).map(f64::from).collect::<Vec<_>>()];
        let y: Vec<f64> = (0..20).map(|i| f64::from(i * i % 7)).collect();
        let t = RegressionTree::fit(&x, &y, &params(4), &mut ChaCha8Rng::seed_from_u64(0));
        let mut counts = vec![0; t.nodes.len()];
        for r in 0..20 {
            counts[t.leaf_index(|_| x[0][r])] += 1;
        }
        assert!(counts.iter().all(|&c| c == 0 || c >= 4));
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..200).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let y: Vec<f64> = (0..200).map(|r| x[0][r] * 3.0 + x[3][r]).collect();
        let p = TreeParams {
            m_try: Some(2),
            ..params(3)
        };
        let a = RegressionTree::fit(&x, &y, &p, &mut ChaCha8Rng::seed_from_u64(9));
        let b = RegressionTree::fit(&x, &y, &p, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn gain_equals_sse_reduction() {
        let x = vec![vec![0.0, 1.0, 2.0, 3.0]];
        let y = vec![1.0, 2.0, 6.0, 7.0];
        let t = RegressionTree::fit(&x, &y, &TreeParams { max_depth: 1, ..params(1) }, &mut ChaCha8Rng::seed_from_u64(0));
        let mut g = vec![0.0];
        t.add_gains(&mut g);
        // SSE 26 about the mean 4, 0.5 + 0.5 after the split
        assert!((g[0] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn many_distinct_values_are_capped() {
        let col: Vec<f64> = (0..10_000).map(|i| f64::from(i) * 0.37).collect();
        let d = BinnedData::from_columns(&[col.clone()]);
        assert!(d.cuts[0].len() < MAX_BINS);
        for (r, v) in col.iter().enumerate() {
            let b = d.bins[0][r] as usize;
            if b < d.cuts[0].len() {
                assert!(*v <= d.cuts[0][b]);
            }
            if b > 0 {
                assert!(*v > d.cuts[0][b - 1]);
            }
        }
    }
}
