//! Phase 1a: per-point locality indicators and the median-based good/bad
//! split.
//!
//! For each site `x_i` the indicator `sigma_i` is the native-space norm of
//! the kernel interpolant fitted on the `n` nearest neighbors of `x_i`
//! (including `x_i` itself by default). Large norms flag neighborhoods whose
//! data do not admit a smooth local model, i.e. neighborhoods straddling a
//! discontinuity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PointId, PointSet};
use crate::kernel::{fit_interpolant, Kernel};
use crate::scalar::Real;

/// Which per-point indicator to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Indicator {
    /// Native-space norm of the neighborhood interpolant (default).
    NativeNorm,
    /// Absolute error when predicting `f(x_i)` from the `n` nearest other
    /// points.
    PredictionError,
}

/// Indicator vector with its median threshold and good-point mask.
#[derive(Clone, Debug)]
pub struct LocalityScores<T> {
    /// `sigma_i`, indexed by site position (id 1 at index 0).
    pub sigma: Vec<T>,
    /// Lower median of all `sigma_i`.
    pub median: T,
    /// Threshold actually applied (`factor * median`).
    pub threshold: T,
    /// `good[i] == true` iff `sigma_i < threshold` (see
    /// [`good_point_mask`] for the degenerate-median rule).
    pub good: Vec<bool>,
    /// Neighborhood size the indicator was computed with.
    pub n_neighbors: usize,
}

impl<T> LocalityScores<T> {
    pub fn is_good(&self, id: PointId) -> bool {
        self.good[id.idx()]
    }

    pub fn good_ids(&self) -> Vec<PointId> {
        self.good
            .iter()
            .enumerate()
            .filter(|(_, g)| **g)
            .map(|(i, _)| PointId::from_idx(i))
            .collect()
    }
}

/// Computes `sigma_i` for every site. The per-point loop runs in parallel;
/// fit failures are reported with the offending point id.
///
/// With `include_self` the neighborhood is `x_i` plus its `n - 1` nearest
/// other sites (`n` points total); without it, the up-to-`n` nearest other
/// sites. The prediction-error indicator always excludes `x_i`.
pub fn locality_indicator<T: Real, const D: usize>(
    ps: &PointSet<T, D>,
    values: &[T],
    n: usize,
    kernel: &Kernel<T>,
    indicator: Indicator,
    include_self: bool,
) -> Result<Vec<T>> {
    assert_eq!(ps.len(), values.len(), "one value per site");
    if n < 1 || n > ps.len() {
        return Err(Error::BadNeighborCount {
            k: n,
            min: 1,
            n: ps.len(),
        });
    }
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let id = PointId::from_idx(i);
            sigma_at(ps, values, n, kernel, indicator, include_self, id).map_err(|e| {
                Error::LocalityFit {
                    id: id.0,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}

fn sigma_at<T: Real, const D: usize>(
    ps: &PointSet<T, D>,
    values: &[T],
    n: usize,
    kernel: &Kernel<T>,
    indicator: Indicator,
    include_self: bool,
    id: PointId,
) -> Result<T> {
    let site = ps.point(id);
    let with_self = matches!(indicator, Indicator::NativeNorm) && include_self;
    let neighborhood: Vec<PointId> = if with_self {
        ps.k_nearest(site, n)?.into_iter().map(|(j, _)| j).collect()
    } else {
        let k = (n + 1).min(ps.len());
        ps.k_nearest(site, k)?
            .into_iter()
            .filter(|&(j, _)| j != id)
            .take(n)
            .map(|(j, _)| j)
            .collect()
    };
    let pts: Vec<_> = neighborhood.iter().map(|&j| *ps.point(j)).collect();
    let vals: Vec<T> = neighborhood.iter().map(|&j| values[j.idx()]).collect();
    let s = fit_interpolant(kernel, &pts, &vals)?;
    Ok(match indicator {
        Indicator::NativeNorm => s.native_norm(),
        Indicator::PredictionError => (s.eval(site) - values[id.idx()]).abs(),
    })
}

/// Thresholds the indicator at `factor` times its lower median.
///
/// For an even count the lower of the two middle values is used. If the
/// median is zero the strict inequality would mark every point bad, so the
/// rule degenerates to `good <=> sigma_i == 0`.
pub fn good_point_mask<T: Real>(
    sigma: &[T],
    threshold_factor: T,
    n_neighbors: usize,
) -> LocalityScores<T> {
    assert!(!sigma.is_empty(), "indicator vector must be nonempty");
    let mut sorted = sigma.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite indicators"));
    let median = sorted[(sorted.len() - 1) / 2];
    let threshold = threshold_factor * median;
    let good: Vec<bool> = if median == T::zero() {
        sigma.iter().map(|&s| s == T::zero()).collect()
    } else {
        sigma.iter().map(|&s| s < threshold).collect()
    };
    debug_assert!(
        good.iter().filter(|g| **g).count() * 2 >= sigma.len(),
        "median property: at least half the points are good"
    );
    LocalityScores {
        sigma: sigma.to_vec(),
        median,
        threshold,
        good,
        n_neighbors,
    }
}
