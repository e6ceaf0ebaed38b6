//! k-d tree over embedded states with Theiler-window exclusion.
//!
//! All queries order results by `(distance, row)`, so ties always resolve to the
//! lower row index and results match an exhaustive scan exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{sq_dist, DelayEmbedding};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub row: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    emb: &'a DelayEmbedding,
    theiler: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    sq: f64,
    row: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sq.total_cmp(&other.sq).then(self.row.cmp(&other.row))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> NeighborIndex<'a> {
    /// Builds the index with the embedding's default Theiler window.
    pub fn new(emb: &'a DelayEmbedding) -> Self {
        Self::with_theiler(emb, emb.default_theiler())
    }

    pub fn with_theiler(emb: &'a DelayEmbedding, theiler: usize) -> Self {
        let mut index = Self { emb, theiler, order: (0..emb.len()).collect(), nodes: Vec::new() };
        let n = index.order.len();
        index.build(0, n);
        index
    }

    pub fn embedding(&self) -> &'a DelayEmbedding {
        self.emb
    }

    pub fn theiler(&self) -> usize {
        self.theiler
    }

    /// True when `other` may serve as a neighbor of `row`.
    #[inline]
    pub fn admissible(&self, row: usize, other: usize) -> bool {
        row.abs_diff(other) > self.theiler
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let width = self.emb.width();
        let mut best_dim = 0;
        let mut best_spread = -1.0;
        for d in 0..width {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in &self.order[start..end] {
                let v = self.emb.row(r)[d];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if best_spread <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let emb = self.emb;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            emb.row(a)[best_dim].total_cmp(&emb.row(b)[best_dim])
        });
        let value = emb.row(self.order[mid])[best_dim];
        self.nodes.push(Node::Split { dim: best_dim, value, left: 0, right: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { dim: best_dim, value, left, right };
        id
    }

    /// `k` nearest admissible neighbors of `row`, ascending by distance.
    pub fn knn_query(&self, row: usize, k: usize) -> Result<Vec<Neighbor>> {
        self.knn_where(row, k, |_| true)
    }

    /// Like [`knn_query`](Self::knn_query) with an extra admissibility filter on candidate rows.
    pub fn knn_where(&self, row: usize, k: usize, filter: impl Fn(usize) -> bool) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if row >= self.emb.len() {
            return Err(Error::invalid(format!("row {row} out of range")));
        }
        let found = self.knn_point(self.emb.row(row), k, |r| self.admissible(row, r) && filter(r));
        if found.len() < k {
            return Err(Error::InsufficientNeighbors { requested: k, available: found.len() });
        }
        Ok(found)
    }

    /// Up to `k` nearest rows to an arbitrary point that pass `filter`.
    pub fn knn_point(&self, point: &[f64], k: usize, filter: impl Fn(usize) -> bool) -> Vec<Neighbor> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, point, k, &filter, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| Neighbor { row: c.row, distance: c.sq.sqrt() }).collect()
    }

    fn knn_rec(
        &self,
        node: usize,
        point: &[f64],
        k: usize,
        filter: &impl Fn(usize) -> bool,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &r in &self.order[start..end] {
                    if !filter(r) {
                        continue;
                    }
                    let cand = Candidate { sq: sq_dist(point, self.emb.row(r)), row: r };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = point[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, point, k, filter, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().sq {
                    self.knn_rec(far, point, k, filter, heap);
                }
            }
        }
    }

    /// All admissible rows within `radius` (inclusive) of `row`, ascending by distance.
    pub fn radius_query(&self, row: usize, radius: f64) -> Vec<Neighbor> {
        self.radius_where(row, radius, |_| true)
    }

    pub fn radius_where(&self, row: usize, radius: f64, filter: impl Fn(usize) -> bool) -> Vec<Neighbor> {
        self.radius_point(self.emb.row(row), radius, |r| self.admissible(row, r) && filter(r))
    }

    pub fn radius_point(&self, point: &[f64], radius: f64, filter: impl Fn(usize) -> bool) -> Vec<Neighbor> {
        let mut out: Vec<Candidate> = Vec::new();
        if self.nodes.is_empty() || radius < 0.0 {
            return Vec::new();
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &r in &self.order[start..end] {
                        if !filter(r) {
                            continue;
                        }
                        let sq = sq_dist(point, self.emb.row(r));
                        if sq <= r2 {
                            out.push(Candidate { sq, row: r });
                        }
                    }
                }
                Node::Split { dim, value, left, right } => {
                    let diff = point[dim] - value;
                    if diff < 0.0 {
                        stack.push(left);
                        if diff * diff <= r2 {
                            stack.push(right);
                        }
                    } else {
                        stack.push(right);
                        if diff * diff <= r2 {
                            stack.push(left);
                        }
                    }
                }
            }
        }
        out.sort();
        out.into_iter().map(|c| Neighbor { row: c.row, distance: c.sq.sqrt() }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DelayEmbedding {
        DelayEmbedding::from_points(1, points.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn nearest_on_a_line() {
        let e = line(&[0.0, 1.0, 3.0]);
        let idx = NeighborIndex::with_theiler(&e, 0);
        let nn = idx.knn_query(0, 1).unwrap();
        assert_eq!(nn, vec![Neighbor { row: 1, distance: 1.0 }]);
        let nn = idx.knn_query(1, 2).unwrap();
        assert_eq!(
            nn,
            vec![Neighbor { row: 0, distance: 1.0 }, Neighbor { row: 2, distance: 2.0 }]
        );
    }

    #[test]
    fn theiler_excludes_temporal_neighbors() {
        let e = line(&[0.0, 0.1, 0.2, 5.0, 0.05]);
        let idx = NeighborIndex::with_theiler(&e, 1);
        let nn = idx.knn_query(1, 1).unwrap();
        // rows 0 and 2 are within one sample of row 1
        assert_eq!(nn[0].row, 4);
    }

    #[test]
    fn ties_prefer_lower_row() {
        let e = line(&[1.0, 0.0, 2.0, -1.0]);
        let idx = NeighborIndex::with_theiler(&e, 0);
        let nn = idx.knn_query(1, 2).unwrap();
        assert_eq!(nn.iter().map(|n| n.row).collect::<Vec<_>>(), vec![0, 3]);
    }

    #[test]
    fn insufficient_neighbors() {
        let e = line(&[0.0, 1.0, 2.0]);
        let idx = NeighborIndex::with_theiler(&e, 1);
        assert!(matches!(
            idx.knn_query(1, 1),
            Err(Error::InsufficientNeighbors { requested: 1, available: 0 })
        ));
    }

    #[test]
    fn radius_inclusive() {
        let e = line(&[0.0, 1.0, 2.0, 0.5]);
        let idx = NeighborIndex::with_theiler(&e, 0);
        let rows: Vec<usize> = idx.radius_query(0, 1.0).iter().map(|n| n.row).collect();
        assert_eq!(rows, vec![3, 1]);
    }
}
