//! Phase 1b: split the good points into connected seed classes.
//!
//! Edges of the neighbor graph with a bad endpoint are removed; a
//! Kruskal-style union-find pass over the remaining edges then yields the
//! connected components of the filtered graph. Components below a minimum
//! size are dissolved into the unsure pool so the later phases can re-place
//! their points.

use crate::error::{Error, Result};
use crate::geometry::{Edge, PointId};
use crate::scalar::Real;

/// Component labels over the good points; classes are numbered `1..=j`.
#[derive(Clone, Debug)]
pub struct ComponentLabeling {
    /// Per site (by index): `Some(class)` for good points, `None` otherwise.
    pub label: Vec<Option<usize>>,
    /// Number of components.
    pub j: usize,
    /// Member count per component, indexed by `class - 1`.
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn members(&self, class: usize) -> Vec<PointId> {
        self.label
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(class))
            .map(|(i, _)| PointId::from_idx(i))
            .collect()
    }
}

/// Keeps only edges whose both endpoints are good, preserving order.
pub fn filter_edges<T: Real>(edges: &[Edge<T>], good: &[bool]) -> Vec<Edge<T>> {
    edges
        .iter()
        .filter(|e| good[e.a.idx()] && good[e.b.idx()])
        .cloned()
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, x: usize, y: usize) {
        let (mut a, mut b) = (self.find(x), self.find(y));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Connected components of the filtered neighbor graph over `good_ids`
/// (ascending by id).
///
/// Edges are processed in the given (ascending-length) order as in Kruskal's
/// algorithm; the components do not depend on that order. Isolated good
/// points become singleton components. Classes are numbered by their
/// smallest member id, `n_total` is the full site count.
pub fn spanning_forest<T: Real>(
    edges: &[Edge<T>],
    good_ids: &[PointId],
    n_total: usize,
) -> ComponentLabeling {
    assert!(!good_ids.is_empty(), "good set must be nonempty");
    let mut uf = UnionFind::new(n_total);
    for e in edges {
        debug_assert!(
            good_ids.binary_search(&e.a).is_ok() && good_ids.binary_search(&e.b).is_ok(),
            "edges must connect good points"
        );
        uf.union(e.a.idx(), e.b.idx());
    }
    let mut label = vec![None; n_total];
    let mut class_of_root: Vec<Option<usize>> = vec![None; n_total];
    let mut sizes = Vec::new();
    let mut j = 0;
    for &id in good_ids {
        let root = uf.find(id.idx());
        let class = *class_of_root[root].get_or_insert_with(|| {
            j += 1;
            sizes.push(0);
            j
        });
        label[id.idx()] = Some(class);
        sizes[class - 1] += 1;
    }
    ComponentLabeling { label, j, sizes }
}

/// Dissolves components smaller than `min_size`, demoting their members to
/// the unsure pool. Surviving classes are renumbered `1..=j` preserving
/// their relative order. Errors if nothing survives.
pub fn select_major_components(
    cl: &ComponentLabeling,
    min_size: usize,
) -> Result<(ComponentLabeling, Vec<PointId>)> {
    assert!(min_size >= 1);
    let keep: Vec<bool> = cl.sizes.iter().map(|&s| s >= min_size).collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::NoComponentSurvived { min_size });
    }
    let mut renumber = vec![0usize; cl.j];
    let mut next = 0;
    for (c, &k) in keep.iter().enumerate() {
        if k {
            next += 1;
            renumber[c] = next;
        }
    }
    let mut label = vec![None; cl.label.len()];
    let mut demoted = Vec::new();
    for (i, l) in cl.label.iter().enumerate() {
        if let Some(class) = l {
            if keep[class - 1] {
                label[i] = Some(renumber[class - 1]);
            } else {
                demoted.push(PointId::from_idx(i));
            }
        }
    }
    let sizes: Vec<usize> = cl
        .sizes
        .iter()
        .zip(keep.iter())
        .filter(|(_, k)| **k)
        .map(|(s, _)| *s)
        .collect();
    Ok((
        ComponentLabeling {
            label,
            j: next,
            sizes,
        },
        demoted,
    ))
}
