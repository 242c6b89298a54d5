//! Exact k-nearest-neighbor search in `R^D` and on the temporal grid.
//!
//! Neighbors are ordered by Euclidean distance with ties broken by ascending
//! index. Indices are 0-based.

mod kdtree;

use std::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::grid::TemporalGrid;

pub use kdtree::KdTree;

/// Above this dimension [`SearchStrategy::Auto`] scans instead of building a tree.
pub const DEFAULT_TREE_MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborResult {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborResult {
    fn from_candidates(cands: Vec<Candidate>) -> Self {
        let (distances, indices) = cands.into_iter().map(|c| (c.d2.sqrt(), c.index)).unzip();
        NeighborResult { indices, distances }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStrategy {
    /// Tree for `D <= DEFAULT_TREE_MAX_DIM`, brute force above.
    #[default]
    Auto,
    BruteForce,
    Tree,
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub d2: f64,
    pub index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

fn check_query(query: &[f64], points: &[f64], dim: usize, k: usize) -> Result<usize> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(invalid(format!("{} coordinates do not form points of dimension {dim}", points.len())));
    }
    if query.len() != dim {
        return Err(invalid(format!("query has dimension {}, points have {dim}", query.len())));
    }
    let len = points.len() / dim;
    if k == 0 || k > len {
        return Err(invalid(format!("k = {k} must lie in 1..={len}")));
    }
    Ok(len)
}

fn brute_sq(query: &[f64], points: &[f64], dim: usize, k: usize) -> Vec<Candidate> {
    let mut all: Vec<Candidate> = points
        .chunks_exact(dim)
        .enumerate()
        .map(|(index, p)| Candidate { d2: sq_dist(query, p), index })
        .collect();
    if k < all.len() {
        all.select_nth_unstable(k);
        all.truncate(k);
    }
    all.sort_unstable();
    all
}

/// Reference scan over a flat `len x dim` point array.
pub fn brute_force_knn(query: &[f64], points: &[f64], dim: usize, k: usize) -> Result<NeighborResult> {
    check_query(query, points, dim, k)?;
    Ok(NeighborResult::from_candidates(brute_sq(query, points, dim, k)))
}

/// k nearest of `points` to `query` through an accelerated index.
pub fn knn_points(query: &[f64], points: &[Vec<f64>], k: usize) -> Result<NeighborResult> {
    let dim = query.len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(invalid(format!("point of dimension {} among queries of dimension {dim}", p.len())));
    }
    let flat: Vec<f64> = points.concat();
    KnnIndex::build(flat, dim)?.knn(query, k)
}

/// An immutable point set answering exact k-NN queries.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    dim: usize,
    points: Vec<f64>,
    tree: Option<KdTree>,
}

impl KnnIndex {
    pub fn build(points: Vec<f64>, dim: usize) -> Result<Self> {
        Self::with_strategy(points, dim, SearchStrategy::Auto)
    }

    pub fn with_strategy(points: Vec<f64>, dim: usize, strategy: SearchStrategy) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(invalid(format!("{} coordinates do not form points of dimension {dim}", points.len())));
        }
        let use_tree = match strategy {
            SearchStrategy::Auto => dim <= DEFAULT_TREE_MAX_DIM,
            SearchStrategy::Tree => true,
            SearchStrategy::BruteForce => false,
        };
        let tree = use_tree.then(|| KdTree::build(&points, dim));
        Ok(KnnIndex { dim, points, tree })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn uses_tree(&self) -> bool {
        self.tree.is_some()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn knn(&self, query: &[f64], k: usize) -> Result<NeighborResult> {
        check_query(query, &self.points, self.dim, k)?;
        Ok(NeighborResult::from_candidates(self.knn_sq(query, k)))
    }

    /// Partitions the points into consecutive groups of `group_size` and
    /// returns, for the `r` groups nearest to `query`, each group's closest
    /// point. Sorted by distance then index; within a group, ties go to the
    /// lower index. Returns fewer than `r` when there are fewer groups.
    pub(crate) fn nearest_groups(&self, query: &[f64], group_size: usize, r: usize) -> Vec<Candidate> {
        match &self.tree {
            Some(tree) => tree.nearest_groups(&self.points, query, group_size, r),
            None => {
                let mut best: Vec<Candidate> = self
                    .points
                    .chunks_exact(group_size * self.dim)
                    .enumerate()
                    .map(|(g, block)| {
                        let mut arg = Candidate { d2: f64::INFINITY, index: g * group_size };
                        for (offset, p) in block.chunks_exact(self.dim).enumerate() {
                            let d2 = sq_dist(query, p);
                            if d2 < arg.d2 {
                                arg = Candidate { d2, index: g * group_size + offset };
                            }
                        }
                        arg
                    })
                    .collect();
                if r < best.len() {
                    best.select_nth_unstable(r);
                    best.truncate(r);
                }
                best.sort_unstable();
                best
            }
        }
    }

    /// Unchecked core of [`knn`](Self::knn); `1 <= k <= len`.
    pub(crate) fn knn_sq(&self, query: &[f64], k: usize) -> Vec<Candidate> {
        match &self.tree {
            Some(tree) => tree.knn_sq(&self.points, query, k),
            None => brute_sq(query, &self.points, self.dim, k),
        }
    }
}

/// The `k2` grid indices closest to `t`, ties going to the earlier time.
pub fn knn_times(t: f64, grid: &TemporalGrid, k2: usize) -> Result<NeighborResult> {
    let times = grid.times();
    let m = times.len();
    if k2 == 0 || k2 > m {
        return Err(invalid(format!("k2 = {k2} must lie in 1..={m}")));
    }
    if !t.is_finite() {
        return Err(invalid(format!("query time must be finite, got {t}")));
    }
    // Two-pointer merge outward from the insertion point of t.
    let mut right = times.partition_point(|&s| s < t);
    let mut left = right;
    let mut out = NeighborResult { indices: Vec::with_capacity(k2), distances: Vec::with_capacity(k2) };
    while out.indices.len() < k2 {
        let dl = (left > 0).then(|| (t - times[left - 1]).abs());
        let dr = (right < m).then(|| (times[right] - t).abs());
        let take_left = match (dl, dr) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if take_left {
            left -= 1;
            out.indices.push(left);
            out.distances.push(dl.unwrap());
        } else {
            out.indices.push(right);
            out.distances.push(dr.unwrap());
            right += 1;
        }
    }
    Ok(out)
}
