//! Point sets, nearest-neighbor queries, fill/separation distances, and the
//! neighbor-graph edge list feeding the splitting phase.

mod kdtree;

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};
use kdtree::KdTree;

/// A site in `R^D`. All library routines require finite coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T, const D: usize = 2> {
    pub coords: [T; D],
}

impl<T: Real, const D: usize> Point<T, D> {
    pub fn new(coords: [T; D]) -> Self {
        Point { coords }
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Squared Euclidean distance.
    #[inline]
    pub fn dist2(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..D {
            let d = self.coords[i] - other.coords[i];
            acc += d * d;
        }
        acc
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        self.dist2(other).sqrt()
    }
}

impl<T: Real> Point<T, 2> {
    pub fn xy(x: T, y: T) -> Self {
        Point { coords: [x, y] }
    }

    #[inline]
    pub fn x(&self) -> T {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.coords[1]
    }
}

/// Stable 1-based identifier of a site, assigned in input order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub usize);

impl PointId {
    /// 0-based position in the owning `PointSet`.
    #[inline]
    pub fn idx(self) -> usize {
        self.0 - 1
    }

    #[inline]
    pub fn from_idx(i: usize) -> Self {
        PointId(i + 1)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected neighbor-graph edge in canonical order `a < b`.
#[derive(Clone, Copy, Debug)]
pub struct Edge<T> {
    pub a: PointId,
    pub b: PointId,
    pub length: T,
}

/// Axis-aligned box, used as the probe domain for the fill distance.
#[derive(Clone, Copy, Debug)]
pub struct Rect<T, const D: usize = 2> {
    pub min: [T; D],
    pub max: [T; D],
}

impl<T: Real, const D: usize> Rect<T, D> {
    pub fn new(min: [T; D], max: [T; D]) -> Self {
        Rect { min, max }
    }

    fn validate(&self) -> Result<()> {
        for axis in 0..D {
            if !self.min[axis].is_finite()
                || !self.max[axis].is_finite()
                || self.min[axis] > self.max[axis]
            {
                return Err(Error::EmptyDomain { axis });
            }
        }
        Ok(())
    }
}

impl<T: Real> Rect<T, 2> {
    /// The unit square `[0,1]^2`.
    pub fn unit() -> Self {
        Rect {
            min: [T::zero(), T::zero()],
            max: [T::one(), T::one()],
        }
    }
}

/// Immutable scattered-data site set with a spatial index.
///
/// Sites keep stable ids `1..=N` in construction order; all queries are
/// exact and safe to run concurrently.
#[derive(Debug)]
pub struct PointSet<T, const D: usize = 2> {
    points: Vec<Point<T, D>>,
    tree: KdTree,
}

impl<T: Real, const D: usize> PointSet<T, D> {
    /// Builds the set and its index. Rejects non-finite coordinates and
    /// duplicate sites, naming the offending pair.
    pub fn new(points: Vec<Point<T, D>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinitePoint { id: i + 1 });
            }
        }
        // Duplicate check via a lexicographic sort of indices.
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .coords
                .iter()
                .zip(points[b].coords.iter())
                .map(|(x, y)| x.partial_cmp(y).expect("finite coordinates"))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if points[w[0]].coords == points[w[1]].coords {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DuplicatePoints { a: a + 1, b: b + 1 });
            }
        }
        let tree = KdTree::build(&points);
        Ok(PointSet { points, tree })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> {
        (0..self.points.len()).map(PointId::from_idx)
    }

    pub fn point(&self, id: PointId) -> &Point<T, D> {
        &self.points[id.idx()]
    }

    pub fn points(&self) -> &[Point<T, D>] {
        &self.points
    }

    /// The `k` nearest sites to `query`, ascending by distance with ties
    /// broken by smaller id. Requires `1 <= k <= N`.
    pub fn k_nearest(&self, query: &Point<T, D>, k: usize) -> Result<Vec<(PointId, T)>> {
        if k < 1 || k > self.len() {
            return Err(Error::BadNeighborCount {
                k,
                min: 1,
                n: self.len(),
            });
        }
        Ok(self
            .tree
            .k_nearest(&self.points, query, k)
            .into_iter()
            .map(|(i, d2)| (PointId::from_idx(i), d2.sqrt()))
            .collect())
    }

    /// Nearest site and its distance (index-backed 1-NN).
    pub fn nearest(&self, query: &Point<T, D>) -> (PointId, T) {
        let hit = self.tree.k_nearest(&self.points, query, 1);
        (PointId::from_idx(hit[0].0), hit[0].1.sqrt())
    }

    /// The up-to-`k` nearest sites to `query` among `ids`, via a linear scan.
    /// Same ordering contract as [`PointSet::k_nearest`].
    pub fn k_nearest_in(&self, ids: &[PointId], query: &Point<T, D>, k: usize) -> Vec<(PointId, T)> {
        let mut cands: Vec<(PointId, T)> = ids
            .iter()
            .map(|&id| (id, self.point(id).dist2(query)))
            .collect();
        cands.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("finite distances")
                .then(a.0.cmp(&b.0))
        });
        cands.truncate(k);
        for c in &mut cands {
            c.1 = c.1.sqrt();
        }
        cands
    }

    /// Distance from `query` to the subset `ids` (minimum over members).
    pub fn dist_to_subset(&self, ids: &[PointId], query: &Point<T, D>) -> T {
        let mut best = T::infinity();
        for &id in ids {
            let d2 = self.point(id).dist2(query);
            if d2 < best {
                best = d2;
            }
        }
        best.sqrt()
    }
}

/// Approximates the fill distance `h(X, domain) = sup_y min_k |y - x_k|` by
/// maximizing the nearest-site distance over a probe grid of the given step.
/// The result never exceeds the true value; the gap is bounded by
/// `probe_step * sqrt(D) / 2`.
pub fn fill_distance<T: Real, const D: usize>(
    ps: &PointSet<T, D>,
    domain: &Rect<T, D>,
    probe_step: T,
) -> Result<T> {
    domain.validate()?;
    if !probe_step.is_finite() || probe_step <= T::zero() {
        return Err(Error::BadProbeStep(to_f64(probe_step)));
    }
    let ticks: Vec<Vec<T>> = (0..D)
        .map(|axis| axis_ticks(domain.min[axis], domain.max[axis], probe_step))
        .collect();
    let mut idx = [0usize; D];
    let mut worst = T::zero();
    loop {
        let mut coords = [T::zero(); D];
        for axis in 0..D {
            coords[axis] = ticks[axis][idx[axis]];
        }
        let (_, d) = ps.nearest(&Point::new(coords));
        if d > worst {
            worst = d;
        }
        // Mixed-radix increment over the probe lattice.
        let mut axis = 0;
        loop {
            if axis == D {
                return Ok(worst);
            }
            idx[axis] += 1;
            if idx[axis] < ticks[axis].len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

fn axis_ticks<T: Real>(min: T, max: T, step: T) -> Vec<T> {
    let mut ticks = Vec::new();
    let mut i = 0usize;
    loop {
        let x = min + T::from_usize(i).expect("tick index") * step;
        if x >= max {
            break;
        }
        ticks.push(x);
        i += 1;
    }
    ticks.push(max);
    ticks
}

/// Exact separation distance `q = min_{i<j} |x_i - x_j|`. Requires `N >= 2`.
pub fn separation_distance<T: Real, const D: usize>(ps: &PointSet<T, D>) -> Result<T> {
    if ps.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: ps.len(),
        });
    }
    let mut q = T::infinity();
    for id in ps.ids() {
        // Each site's own entry comes back at distance zero; the second
        // entry is its nearest other site.
        let hits = ps.k_nearest(ps.point(id), 2)?;
        let d = hits[1].1;
        if d < q {
            q = d;
        }
    }
    Ok(q)
}

/// Edge list of the `n`-neighbor graph: `(i, j)` is present iff `j` is among
/// the `n-1` nearest neighbors of `i` or vice versa. Edges are canonical
/// (`a < b`), deduplicated, and sorted ascending by `(length, a, b)`.
pub fn neighbor_edge_list<T: Real, const D: usize>(
    ps: &PointSet<T, D>,
    n: usize,
) -> Result<Vec<Edge<T>>> {
    if n < 2 || n > ps.len() {
        return Err(Error::BadNeighborCount {
            k: n,
            min: 2,
            n: ps.len(),
        });
    }
    let mut pairs: Vec<(PointId, PointId)> = Vec::with_capacity(ps.len() * (n - 1));
    for id in ps.ids() {
        for &(other, _) in ps.k_nearest(ps.point(id), n)?.iter() {
            if other != id {
                let (a, b) = if other < id { (other, id) } else { (id, other) };
                pairs.push((a, b));
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    let mut edges: Vec<Edge<T>> = pairs
        .into_iter()
        .map(|(a, b)| Edge {
            a,
            b,
            length: ps.point(a).dist(ps.point(b)),
        })
        .collect();
    edges.sort_by(|e, f| {
        e.length
            .partial_cmp(&f.length)
            .expect("finite lengths")
            .then(e.a.cmp(&f.a))
            .then(e.b.cmp(&f.b))
    });
    Ok(edges)
}
