//! Piecewise approximant, global baseline, safe-zone construction, and the
//! error report.
//!
//! Errors are measured on a uniform grid over `[0,1]^2`, both globally and
//! restricted to the safe zone: the union of radius-`q` disks around data
//! points whose `2q`-neighborhood contains no other-class points (`q` is the
//! separation distance). The safe zone excludes the discontinuity band, where
//! no reasonable approximant can do well, so the comparison against the
//! global interpolant measures the smooth-region gain.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointId, PointSet};
use crate::kernel::{fit_interpolant, Interpolant, Kernel};
use crate::scalar::{real, to_f64, Real};

/// Uniform evaluation grid over the unit square, endpoints included.
#[derive(Clone, Debug)]
pub struct EvalGrid<T> {
    pub xs: Vec<T>,
    pub ys: Vec<T>,
}

impl<T: Real> EvalGrid<T> {
    pub fn unit_square(step: T) -> Result<Self> {
        if !(step > T::zero() && step <= T::one()) || !step.is_finite() {
            return Err(Error::BadGridStep(to_f64(step)));
        }
        let mut ticks = Vec::new();
        let mut i = 0usize;
        loop {
            let x = T::from_usize(i).expect("tick index") * step;
            if x >= T::one() - step / real::<T>(2.0) {
                break;
            }
            ticks.push(x);
            i += 1;
        }
        ticks.push(T::one());
        Ok(EvalGrid {
            xs: ticks.clone(),
            ys: ticks,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid point at flat index `iy * xs.len() + ix`.
    pub fn point(&self, idx: usize) -> Point<T, 2> {
        let nx = self.xs.len();
        Point::xy(self.xs[idx % nx], self.ys[idx / nx])
    }
}

/// Safe-zone mask over an evaluation grid.
#[derive(Clone, Debug)]
pub struct SafeZone<T> {
    /// Separation distance of the full data set.
    pub q: T,
    /// One flag per grid point (same flat indexing as [`EvalGrid::point`]).
    pub mask: Vec<bool>,
    /// Number of data points whose disk contributes to the zone.
    pub n_pure: usize,
}

impl<T> SafeZone<T> {
    pub fn covered(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Builds the safe zone from per-point class labels (unlabeled points
/// neither contribute disks nor break purity).
///
/// A grid point is safe iff it lies within `q` of some labeled point whose
/// closed `2q`-ball contains no point labeled with a different class.
pub fn safe_zone<T: Real>(
    ps: &PointSet<T, 2>,
    labels: &[Option<usize>],
    q: T,
    grid: &EvalGrid<T>,
) -> SafeZone<T> {
    let four_q2 = real::<T>(4.0) * q * q;
    let q2 = q * q;
    let pure: Vec<usize> = (0..ps.len())
        .filter(|&i| {
            let Some(class) = labels[i] else {
                return false;
            };
            let p = ps.point(PointId::from_idx(i));
            (0..ps.len()).all(|k| {
                labels[k].is_none()
                    || labels[k] == Some(class)
                    || ps.point(PointId::from_idx(k)).dist2(p) > four_q2
            })
        })
        .collect();
    let mask: Vec<bool> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let g = grid.point(idx);
            pure.iter()
                .any(|&i| ps.point(PointId::from_idx(i)).dist2(&g) <= q2)
        })
        .collect();
    SafeZone {
        q,
        mask,
        n_pure: pure.len(),
    }
}

/// Piecewise approximant: per-class interpolants fitted on the final sets,
/// with grid-point class membership decided by the nearest labeled site.
pub struct Piecewise<T: Real, const D: usize = 2> {
    interpolants: Vec<Interpolant<T, D>>,
    sites: Vec<Point<T, D>>,
    site_classes: Vec<usize>,
}

impl<T: Real, const D: usize> Piecewise<T, D> {
    /// Fits one interpolant per class on the labeled sites.
    pub fn build(
        ps: &PointSet<T, D>,
        values: &[T],
        class_of: &[Option<usize>],
        j: usize,
        kernel: &Kernel<T>,
    ) -> Result<Self> {
        let mut interpolants = Vec::with_capacity(j);
        for c in 1..=j {
            let ids: Vec<usize> = (0..ps.len()).filter(|&i| class_of[i] == Some(c)).collect();
            let pts: Vec<_> = ids.iter().map(|&i| *ps.point(PointId::from_idx(i))).collect();
            let vals: Vec<T> = ids.iter().map(|&i| values[i]).collect();
            interpolants.push(fit_interpolant(kernel, &pts, &vals)?);
        }
        let mut sites = Vec::new();
        let mut site_classes = Vec::new();
        for (i, c) in class_of.iter().enumerate() {
            if let Some(c) = c {
                sites.push(*ps.point(PointId::from_idx(i)));
                site_classes.push(*c);
            }
        }
        Ok(Piecewise {
            interpolants,
            sites,
            site_classes,
        })
    }

    pub fn j(&self) -> usize {
        self.interpolants.len()
    }

    pub fn interpolant(&self, class: usize) -> &Interpolant<T, D> {
        &self.interpolants[class - 1]
    }

    /// Class of an arbitrary point: the class of its nearest labeled site
    /// (ties prefer the smaller site id).
    pub fn classify(&self, p: &Point<T, D>) -> usize {
        let mut best = T::infinity();
        let mut class = 1;
        for (site, &c) in self.sites.iter().zip(self.site_classes.iter()) {
            let d2 = site.dist2(p);
            if d2 < best {
                best = d2;
                class = c;
            }
        }
        class
    }

    /// `(class, u_class(p))`.
    pub fn eval(&self, p: &Point<T, D>) -> (usize, T) {
        let class = self.classify(p);
        (class, self.interpolants[class - 1].eval(p))
    }
}

/// Single kernel interpolant on the full data set (the baseline `u*`).
pub fn global_interpolant<T: Real, const D: usize>(
    ps: &PointSet<T, D>,
    values: &[T],
    kernel: &Kernel<T>,
) -> Result<Interpolant<T, D>> {
    fit_interpolant(kernel, ps.points(), values)
}

/// Sup-norm errors of one approximant over the grid and the safe subset.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorSummary<T> {
    pub linf: T,
    /// `None` when the safe mask is empty.
    pub linf_safe: Option<T>,
}

/// Errors of the segmented approximant and the global baseline.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ApproxErrors<T> {
    pub segmented: ErrorSummary<T>,
    pub global: ErrorSummary<T>,
}

/// Maximum absolute errors of both approximants over the full grid and the
/// safe-masked grid.
pub fn error_report<T: Real>(
    u_piecewise: impl Fn(&Point<T, 2>) -> T + Sync,
    u_global: impl Fn(&Point<T, 2>) -> T + Sync,
    f_true: impl Fn(&Point<T, 2>) -> T + Sync,
    safe: &SafeZone<T>,
    grid: &EvalGrid<T>,
) -> ApproxErrors<T> {
    assert_eq!(safe.mask.len(), grid.len(), "mask must match the grid");
    let acc = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid.point(idx);
            let f = f_true(&p);
            let es = (u_piecewise(&p) - f).abs();
            let eg = (u_global(&p) - f).abs();
            let is_safe = safe.mask[idx];
            ErrAcc {
                seg: es,
                seg_safe: if is_safe { es } else { T::neg_infinity() },
                glob: eg,
                glob_safe: if is_safe { eg } else { T::neg_infinity() },
            }
        })
        .reduce(ErrAcc::empty, ErrAcc::merge);
    let lift = |v: T| if v.is_finite() { Some(v) } else { None };
    ApproxErrors {
        segmented: ErrorSummary {
            linf: acc.seg,
            linf_safe: lift(acc.seg_safe),
        },
        global: ErrorSummary {
            linf: acc.glob,
            linf_safe: lift(acc.glob_safe),
        },
    }
}

struct ErrAcc<T> {
    seg: T,
    seg_safe: T,
    glob: T,
    glob_safe: T,
}

impl<T: Real> ErrAcc<T> {
    fn empty() -> Self {
        ErrAcc {
            seg: T::zero(),
            seg_safe: T::neg_infinity(),
            glob: T::zero(),
            glob_safe: T::neg_infinity(),
        }
    }

    fn merge(self, other: Self) -> Self {
        ErrAcc {
            seg: self.seg.max(other.seg),
            seg_safe: self.seg_safe.max(other.seg_safe),
            glob: self.glob.max(other.glob),
            glob_safe: self.glob_safe.max(other.glob_safe),
        }
    }
}

/// One evaluation-grid sample of the segmented approximant, for the grid
/// error dump.
#[derive(Clone, Debug)]
pub struct GridRow<T> {
    pub x: T,
    pub y: T,
    pub class: usize,
    pub u: T,
    pub f: T,
    pub abs_err: T,
    pub safe: bool,
}

pub fn grid_rows<T: Real>(
    piecewise: &Piecewise<T, 2>,
    f_true: impl Fn(&Point<T, 2>) -> T + Sync,
    safe: &SafeZone<T>,
    grid: &EvalGrid<T>,
) -> Vec<GridRow<T>> {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid.point(idx);
            let (class, u) = piecewise.eval(&p);
            let f = f_true(&p);
            GridRow {
                x: p.x(),
                y: p.y(),
                class,
                u,
                f,
                abs_err: (u - f).abs(),
                safe: safe.mask[idx],
            }
        })
        .collect()
}

/// Classified-point counts after each phase.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhaseCounts {
    /// Seed points after the splitting phase.
    pub seeds: usize,
    /// Classified points after the blow-up phase.
    pub after_blowup: usize,
    /// Labeled points after the final assignment (equals the site count
    /// unless the phase was skipped).
    pub labeled_final: usize,
    /// Points left unlabeled.
    pub unsure_final: usize,
}

/// Error report of one pipeline run. The error fields are absent when no
/// ground truth is available (user-supplied data).
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport<T> {
    pub linf_safe_segmented: Option<T>,
    pub linf_segmented: Option<T>,
    pub linf_safe_global: Option<T>,
    pub linf_global: Option<T>,
    pub n_misclassified: Option<usize>,
    pub counts: PhaseCounts,
}

/// Number of sites whose label disagrees with the ground truth, after
/// aligning each predicted class with its majority true class (class
/// numbering is arbitrary). Unlabeled sites count as misclassified.
pub fn count_misclassified<T: Real, const D: usize>(
    ps: &PointSet<T, D>,
    class_of: &[Option<usize>],
    j: usize,
    truth: impl Fn(&Point<T, D>) -> usize,
) -> usize {
    let true_labels: Vec<usize> = ps.points().iter().map(&truth).collect();
    let n_true = true_labels.iter().max().copied().unwrap_or(1);
    let mut matches = vec![vec![0usize; n_true + 1]; j];
    for (i, c) in class_of.iter().enumerate() {
        if let Some(c) = c {
            matches[c - 1][true_labels[i]] += 1;
        }
    }
    let correct: usize = matches
        .iter()
        .map(|row| row.iter().max().copied().unwrap_or(0))
        .sum();
    ps.len() - correct
}
