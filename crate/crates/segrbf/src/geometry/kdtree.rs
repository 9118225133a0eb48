//! Exact k-nearest-neighbor search tree over a fixed point cloud.
//!
//! Correctness contract: results are identical to a brute-force scan sorted
//! by `(squared distance, id)`, including tie handling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Point;
use crate::scalar::Real;

const NONE: u32 = u32::MAX;

#[derive(Debug)]
struct Node {
    point: u32,
    left: u32,
    right: u32,
}

#[derive(Debug)]
pub(crate) struct KdTree {
    nodes: Vec<Node>,
    root: u32,
}

/// Heap entry ordered by `(d2, index)` so the max-heap top is the current
/// worst candidate and equal distances prefer the smaller point index.
struct Candidate<T> {
    d2: T,
    index: usize,
}

impl<T: Real> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.d2 == other.d2 && self.index == other.index
    }
}
impl<T: Real> Eq for Candidate<T> {}
impl<T: Real> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .partial_cmp(&other.d2)
            .expect("finite distances")
            .then(self.index.cmp(&other.index))
    }
}

impl KdTree {
    pub fn build<T: Real, const D: usize>(points: &[Point<T, D>]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = KdTree {
            nodes: Vec::with_capacity(points.len()),
            root: NONE,
        };
        tree.root = tree.build_rec(points, &mut order, 0);
        tree
    }

    fn build_rec<T: Real, const D: usize>(
        &mut self,
        points: &[Point<T, D>],
        order: &mut [u32],
        depth: usize,
    ) -> u32 {
        if order.is_empty() {
            return NONE;
        }
        let axis = depth % D;
        let mid = order.len() / 2;
        // Ties split by point index so the build is deterministic.
        order.select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize].coords[axis]
                .partial_cmp(&points[b as usize].coords[axis])
                .expect("finite coordinates")
                .then(a.cmp(&b))
        });
        let point = order[mid];
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            point,
            left: NONE,
            right: NONE,
        });
        let (lo, rest) = order.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_rec(points, lo, depth + 1);
        let right = self.build_rec(points, hi, depth + 1);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        id
    }

    /// The `k` nearest points to `query`, ascending by `(distance, index)`.
    /// Requires `1 <= k <= len`; returns 0-based point indices with squared
    /// distances.
    pub fn k_nearest<T: Real, const D: usize>(
        &self,
        points: &[Point<T, D>],
        query: &Point<T, D>,
        k: usize,
    ) -> Vec<(usize, T)> {
        debug_assert!(k >= 1 && k <= points.len());
        let mut heap: BinaryHeap<Candidate<T>> = BinaryHeap::with_capacity(k + 1);
        self.search(points, query, k, self.root, 0, &mut heap);
        let mut out: Vec<(usize, T)> = heap.into_iter().map(|c| (c.index, c.d2)).collect();
        out.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("finite distances")
                .then(a.0.cmp(&b.0))
        });
        out
    }

    fn search<T: Real, const D: usize>(
        &self,
        points: &[Point<T, D>],
        query: &Point<T, D>,
        k: usize,
        node: u32,
        depth: usize,
        heap: &mut BinaryHeap<Candidate<T>>,
    ) {
        if node == NONE {
            return;
        }
        let n = &self.nodes[node as usize];
        let index = n.point as usize;
        let d2 = query.dist2(&points[index]);
        let cand = Candidate { d2, index };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("nonempty heap") {
            heap.pop();
            heap.push(cand);
        }

        let axis = depth % D;
        let diff = query.coords[axis] - points[index].coords[axis];
        let (near, far) = if diff < T::zero() {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(points, query, k, near, depth + 1, heap);
        // Descend into the far half iff it can still contain a candidate;
        // on exact ties a smaller index there must be allowed to win.
        let plane_d2 = diff * diff;
        if heap.len() < k || plane_d2 <= heap.peek().expect("nonempty heap").d2 {
            self.search(points, query, k, far, depth + 1, heap);
        }
    }
}
