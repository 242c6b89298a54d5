use std::collections::BinaryHeap;

use super::{sq_dist, Candidate};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static kd-tree over a flat point array.
///
/// Query results are the `k` smallest `(squared distance, index)` pairs, the
/// same total order the brute-force scan uses, so both paths agree exactly,
/// ties included.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(points: &[f64], dim: usize) -> Self {
        let len = points.len() / dim;
        let mut tree = KdTree { dim, perm: (0..len).collect(), nodes: Vec::new() };
        if len > 0 {
            tree.build_node(points, 0, len);
        }
        tree
    }

    fn build_node(&mut self, points: &[f64], start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.dim;
        let slice = &mut self.perm[start..end];
        let axis = (0..dim)
            .map(|a| {
                let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = points[i * dim + a];
                    (lo.min(v), hi.max(v))
                });
                (a, hi - lo)
            })
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0;
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            points[a * dim + axis].total_cmp(&points[b * dim + axis]).then(a.cmp(&b))
        });
        let value = points[slice[mid] * dim + axis];
        // Placeholder, patched once the children exist.
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(points, start, start + mid);
        let right = self.build_node(points, start + mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// The `k` nearest `(squared distance, index)` pairs, sorted.
    pub(crate) fn knn_sq(&self, points: &[f64], query: &[f64], k: usize) -> Vec<Candidate> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if !self.nodes.is_empty() && k > 0 {
            self.search(points, 0, query, k, &mut heap);
        }
        heap.into_sorted_vec()
    }

    /// For the `r` groups (`index / group_size`) whose closest member is
    /// nearest to `query`, that closest member; sorted by distance, then
    /// index. Within a group, ties go to the lower index.
    pub(crate) fn nearest_groups(&self, points: &[f64], query: &[f64], group_size: usize, r: usize) -> Vec<Candidate> {
        let mut top = Vec::with_capacity(r + 1);
        if !self.nodes.is_empty() && r > 0 {
            self.search_groups(points, 0, query, group_size, r, &mut top);
        }
        top
    }

    fn search_groups(
        &self,
        points: &[f64],
        node: usize,
        query: &[f64],
        group_size: usize,
        r: usize,
        top: &mut Vec<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    let cand = Candidate {
                        d2: sq_dist(query, &points[i * self.dim..(i + 1) * self.dim]),
                        index: i,
                    };
                    if top.len() == r && cand >= top[r - 1] {
                        continue;
                    }
                    let group = i / group_size;
                    if let Some(p) = top.iter().position(|c| c.index / group_size == group) {
                        if cand >= top[p] {
                            continue;
                        }
                        top.remove(p);
                    }
                    let at = top.partition_point(|c| *c < cand);
                    top.insert(at, cand);
                    top.truncate(r);
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search_groups(points, near, query, group_size, r, top);
                if top.len() < r || diff * diff <= top[r - 1].d2 {
                    self.search_groups(points, far, query, group_size, r, top);
                }
            }
        }
    }

    fn search(
        &self,
        points: &[f64],
        node: usize,
        query: &[f64],
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    let cand = Candidate {
                        d2: sq_dist(query, &points[i * self.dim..(i + 1) * self.dim]),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(points, near, query, k, heap);
                // Ties at the worst distance may still win on index.
                let plane = diff * diff;
                if heap.len() < k || plane <= heap.peek().expect("heap is nonempty").d2 {
                    self.search(points, far, query, k, heap);
                }
            }
        }
    }
}
