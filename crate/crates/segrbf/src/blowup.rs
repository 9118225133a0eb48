//! Phase 2: grow each class by absorbing unsure points.
//!
//! Unsure points are visited in order of decreasing locality quality
//! (ascending indicator). For each point the few nearest classes are tried;
//! the point joins the nearest class only if doing so degrades that class's
//! local interpolation quality strictly less than it would degrade the other
//! candidates. Quality is measured by the quotient of native norms with and
//! without the point, computed on small neighborhood sets around the contact
//! zone: the frozen seed sets provide the baseline so the growth never
//! drifts on its own additions.

use crate::error::Result;
use crate::geometry::{PointId, PointSet};
use crate::kernel::{fit_interpolant, Kernel};
use crate::scalar::Real;
use crate::splitting::ComponentLabeling;

/// Shared read-only inputs of the classification phases.
pub struct PhaseContext<'a, T, const D: usize = 2> {
    pub ps: &'a PointSet<T, D>,
    pub values: &'a [T],
    pub kernel: &'a Kernel<T>,
    /// Neighborhood size for the local fits.
    pub n: usize,
    /// Number of nearby classes examined per unsure point.
    pub m: usize,
}

/// Evolving partition: frozen seed sets, growing class sets, and the unsure
/// pool ordered ascending by the locality indicator.
#[derive(Clone, Debug)]
pub struct ClassState {
    pub seeds: Vec<Vec<PointId>>,
    pub grown: Vec<Vec<PointId>>,
    pub unsure: Vec<PointId>,
}

impl ClassState {
    /// Builds the state from the seed labeling; every unlabeled point goes
    /// to the unsure pool, sorted ascending by `(sigma, id)`.
    pub fn from_labeling<T: Real>(labeling: &ComponentLabeling, sigma: &[T]) -> Self {
        let seeds: Vec<Vec<PointId>> = (1..=labeling.j).map(|c| labeling.members(c)).collect();
        let mut unsure: Vec<PointId> = labeling
            .label
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| PointId::from_idx(i))
            .collect();
        unsure.sort_by(|a, b| {
            sigma[a.idx()]
                .partial_cmp(&sigma[b.idx()])
                .expect("finite indicators")
                .then(a.cmp(b))
        });
        ClassState {
            grown: seeds.clone(),
            seeds,
            unsure,
        }
    }

    pub fn j(&self) -> usize {
        self.seeds.len()
    }

    pub fn classified(&self) -> usize {
        self.grown.iter().map(|g| g.len()).sum()
    }

    /// Panics unless the state is a disjoint cover with `seed <= grown`.
    pub fn assert_invariants(&self, n_total: usize) {
        let mut seen = vec![false; n_total];
        for (seeds, grown) in self.seeds.iter().zip(self.grown.iter()) {
            for id in seeds {
                assert!(grown.contains(id), "seed sets must stay inside grown sets");
            }
            for id in grown {
                assert!(!seen[id.idx()], "point {id} in two classes");
                seen[id.idx()] = true;
            }
        }
        for id in &self.unsure {
            assert!(!seen[id.idx()], "point {id} both classified and unsure");
            seen[id.idx()] = true;
        }
        assert!(seen.iter().all(|&s| s), "classified + unsure must cover X");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupMode {
    /// Repeat sweeps until no point moves (default).
    Fixpoint,
    /// Single sweep over the unsure pool.
    SinglePass,
}

/// One examined unsure point, for the blow-up trace dump.
#[derive(Clone, Debug)]
pub struct TraceEvent<T> {
    pub sweep: usize,
    pub point: PointId,
    /// Class the point moved into, if any.
    pub chosen: Option<usize>,
    /// `(class, quotient)` for each examined candidate, nearest first.
    pub quotients: Vec<(usize, T)>,
}

#[derive(Clone, Debug)]
pub struct BlowupOutcome<T> {
    pub sweeps: usize,
    pub trace: Vec<TraceEvent<T>>,
}

/// Norm-degradation quotient for absorbing unsure point `i` into `class`.
///
/// The baseline set is built inside the frozen seed class: the seed point
/// `y` nearest to `x_i` and the `n` nearest seed points around it. The test
/// set is `x_i` plus its up-to-`n-1` nearest points from the grown class.
/// The quotient of the two interpolant norms measures how much the local
/// model degrades; a zero baseline norm yields `1` when the test norm is
/// also zero and `+inf` otherwise.
pub fn candidate_quotient<T: Real, const D: usize>(
    ctx: &PhaseContext<'_, T, D>,
    state: &ClassState,
    i: PointId,
    class: usize,
) -> Result<T> {
    let seeds = &state.seeds[class - 1];
    let grown = &state.grown[class - 1];
    assert!(!seeds.is_empty(), "class {class} has no seeds");
    let site = ctx.ps.point(i);

    let y = ctx.ps.k_nearest_in(seeds, site, 1)[0].0;
    let baseline: Vec<PointId> = ctx
        .ps
        .k_nearest_in(seeds, ctx.ps.point(y), ctx.n.min(seeds.len()))
        .into_iter()
        .map(|(id, _)| id)
        .collect();
    let sigma_g = fit_norm(ctx, &baseline, None)?;

    let test: Vec<PointId> = ctx
        .ps
        .k_nearest_in(grown, site, (ctx.n - 1).min(grown.len()))
        .into_iter()
        .map(|(id, _)| id)
        .collect();
    let sigma_u = fit_norm(ctx, &test, Some(i))?;

    Ok(if sigma_g == T::zero() {
        if sigma_u > T::zero() {
            T::infinity()
        } else {
            T::one()
        }
    } else {
        sigma_u / sigma_g
    })
}

fn fit_norm<T: Real, const D: usize>(
    ctx: &PhaseContext<'_, T, D>,
    ids: &[PointId],
    extra: Option<PointId>,
) -> Result<T> {
    let mut pts = Vec::with_capacity(ids.len() + 1);
    let mut vals = Vec::with_capacity(ids.len() + 1);
    if let Some(id) = extra {
        pts.push(*ctx.ps.point(id));
        vals.push(ctx.values[id.idx()]);
    }
    for &id in ids {
        pts.push(*ctx.ps.point(id));
        vals.push(ctx.values[id.idx()]);
    }
    Ok(fit_interpolant(ctx.kernel, &pts, &vals)?.native_norm())
}

/// Runs the blow-up sweeps, moving unsure points into classes in place.
///
/// Within a sweep, distances to the grown sets reflect the points moved
/// earlier in that sweep. In fixpoint mode sweeps repeat until none moves a
/// point; each productive sweep moves at least one, so the sweep count is
/// bounded by the unsure count plus one.
pub fn blow_up<T: Real, const D: usize>(
    ctx: &PhaseContext<'_, T, D>,
    state: &mut ClassState,
    mode: BlowupMode,
) -> Result<BlowupOutcome<T>> {
    let j = state.j();
    let m = ctx.m.min(j);
    let mut trace = Vec::new();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut moved = false;
        let mut still_unsure = Vec::with_capacity(state.unsure.len());
        let pending = std::mem::take(&mut state.unsure);
        for i in pending {
            let site = ctx.ps.point(i);
            // The m nearest classes by distance to the grown sets.
            let mut by_dist: Vec<(usize, T)> = (1..=j)
                .map(|c| (c, ctx.ps.dist_to_subset(&state.grown[c - 1], site)))
                .collect();
            by_dist.sort_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .expect("finite distances")
                    .then(a.0.cmp(&b.0))
            });
            by_dist.truncate(m);

            let mut quotients = Vec::with_capacity(m);
            for &(c, _) in &by_dist {
                quotients.push((c, candidate_quotient(ctx, state, i, c)?));
            }
            let nearest = quotients[0];
            let accept = quotients[1..].iter().all(|&(_, q)| nearest.1 < q);
            if accept {
                state.grown[nearest.0 - 1].push(i);
                moved = true;
            } else {
                still_unsure.push(i);
            }
            trace.push(TraceEvent {
                sweep: sweeps,
                point: i,
                chosen: accept.then_some(nearest.0),
                quotients,
            });
        }
        state.unsure = still_unsure;
        if matches!(mode, BlowupMode::SinglePass) || !moved || state.unsure.is_empty() {
            break;
        }
    }
    Ok(BlowupOutcome { sweeps, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::kernel::gram_matrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64) -> Point<f64, 2> {
        Point::xy(x, y)
    }

    fn imq35() -> Kernel<f64> {
        Kernel::inverse_multiquadric(0.35).unwrap()
    }

    /// Independent native-norm oracle: sqrt(f^T A^{-1} f) via Gaussian
    /// elimination on the explicit kernel matrix.
    #[allow(clippy::needless_range_loop)]
    fn norm_oracle(kernel: &Kernel<f64>, pts: &[Point<f64, 2>], vals: &[f64]) -> f64 {
        let n = pts.len();
        let mut a = gram_matrix(kernel, pts);
        let mut f = vals.to_vec();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            f.swap(col, piv);
            for row in col + 1..n {
                let factor = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                f[row] -= factor * f[col];
            }
        }
        let mut c = vec![0.0; n];
        for row in (0..n).rev() {
            let mut s = f[row];
            for k in row + 1..n {
                s -= a[row][k] * c[k];
            }
            c[row] = s / a[row][row];
        }
        // Row swaps leave the solution in original order, so the quadratic
        // form f^T A^{-1} f is just vals . c.
        vals.iter()
            .zip(c.iter())
            .map(|(v, ci)| v * ci)
            .sum::<f64>()
            .sqrt()
    }

    /// Two horizontal runs of sites with a value jump between them. The
    /// extra point (id 11) sits one spacing left of the right run and
    /// carries the right run's value: consistent with class 2, a jump for
    /// class 1.
    fn two_cluster_state() -> (Vec<Point<f64, 2>>, Vec<f64>, ClassState) {
        let mut pts = Vec::new();
        // Class 1 seeds: ids 1..=5 at x = 0..0.2, value 1. Class 2 seeds:
        // ids 6..=10 at x = 0.6..0.8, value 2.
        for i in 0..5 {
            pts.push(pt(0.05 * i as f64, 0.0));
        }
        for i in 0..5 {
            pts.push(pt(0.6 + 0.05 * i as f64, 0.0));
        }
        pts.push(pt(0.55, 0.0));
        let vals: Vec<f64> = pts
            .iter()
            .map(|p| if p.x() >= 0.55 { 2.0 } else { 1.0 })
            .collect();
        let state = ClassState {
            seeds: vec![
                (1..=5).map(PointId).collect(),
                (6..=10).map(PointId).collect(),
            ],
            grown: vec![
                (1..=5).map(PointId).collect(),
                (6..=10).map(PointId).collect(),
            ],
            unsure: vec![PointId(11)],
        };
        (pts, vals, state)
    }

    #[test]
    fn quotient_near_one_for_consistent_point() {
        let (pts, vals, state) = two_cluster_state();
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 4,
            m: 2,
        };
        let q1 = candidate_quotient(&ctx, &state, PointId(11), 1).unwrap();
        let q2 = candidate_quotient(&ctx, &state, PointId(11), 2).unwrap();
        assert!(q2 < 1.2, "consistent quotient {q2}");
        assert!(q1 > 1.5, "inconsistent quotient {q1}");
    }

    #[test]
    fn quotient_matches_explicit_norm_computation() {
        let (pts, vals, state) = two_cluster_state();
        let ps = PointSet::new(pts.clone()).unwrap();
        let kernel = imq35();
        let n = 4;
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n,
            m: 2,
        };
        let got = candidate_quotient(&ctx, &state, PointId(11), 2).unwrap();

        // Oracle: the class-2 seed nearest to x_11 is id 6 (x = 0.6); its 4
        // nearest seeds are ids 6..=9. Test set: x_11 plus its 3 nearest
        // grown class-2 points, ids 6..=8. Norms recomputed from scratch.
        let baseline: Vec<usize> = vec![5, 6, 7, 8];
        let test: Vec<usize> = vec![10, 5, 6, 7];
        let b_pts: Vec<_> = baseline.iter().map(|&i| pts[i]).collect();
        let b_vals: Vec<f64> = baseline.iter().map(|&i| vals[i]).collect();
        let t_pts: Vec<_> = test.iter().map(|&i| pts[i]).collect();
        let t_vals: Vec<f64> = test.iter().map(|&i| vals[i]).collect();
        let expect = norm_oracle(&kernel, &t_pts, &t_vals) / norm_oracle(&kernel, &b_pts, &b_vals);
        assert!(
            (got - expect).abs() <= 1e-9 * (1.0 + expect),
            "got {got} expect {expect}"
        );
    }

    #[test]
    fn single_seed_class_quotient_stays_moderate() {
        // One seed with datum 2.0 and a nearby unsure point with the same
        // value: norm ratio sqrt(2 / (1 + phi)) stays within [1, 1.5].
        let pts = vec![pt(0.5, 0.5), pt(0.52, 0.5)];
        let vals = vec![2.0, 2.0];
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 4,
            m: 1,
        };
        let state = ClassState {
            seeds: vec![vec![PointId(1)]],
            grown: vec![vec![PointId(1)]],
            unsure: vec![PointId(2)],
        };
        let q = candidate_quotient(&ctx, &state, PointId(2), 1).unwrap();
        assert!((1.0..=1.5).contains(&q), "quotient {q}");

        // Closed form against the explicit 2-point fit.
        let phi = kernel.value(0.02).unwrap();
        let expect = (2.0 / (1.0 + phi)).sqrt();
        assert!((q - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_unsure_pool_is_identity() {
        let (pts, vals, mut state) = two_cluster_state();
        state.unsure.clear();
        let before = state.grown.clone();
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 4,
            m: 2,
        };
        let out = blow_up(&ctx, &mut state, BlowupMode::Fixpoint).unwrap();
        assert_eq!(state.grown, before);
        assert_eq!(out.sweeps, 1);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn gap_point_joins_the_consistent_class() {
        let (pts, vals, mut state) = two_cluster_state();
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 4,
            m: 2,
        };
        blow_up(&ctx, &mut state, BlowupMode::Fixpoint).unwrap();
        state.assert_invariants(11);
        assert!(
            state.grown[1].contains(&PointId(11)),
            "grown: {:?}",
            state.grown
        );
        assert!(state.unsure.is_empty());
    }

    #[test]
    fn near_equidistant_point_joins_the_consistent_nearer_class() {
        // Slightly nearer to class 1 and carrying class 1's value: the
        // strict-minimum rule accepts it there.
        let (mut pts, mut vals, mut state) = two_cluster_state();
        pts[10] = pt(0.39, 0.0);
        vals[10] = 1.0;
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 4,
            m: 2,
        };
        let out = blow_up(&ctx, &mut state, BlowupMode::Fixpoint).unwrap();
        assert!(state.grown[0].contains(&PointId(11)));
        // Every move targeted the nearest candidate class.
        for event in &out.trace {
            if let Some(chosen) = event.chosen {
                assert_eq!(chosen, event.quotients[0].0);
            }
        }
    }

    #[test]
    fn point_nearest_to_inconsistent_class_stays_unsure() {
        // Nearest class is the one across the jump: the strict-minimum rule
        // rejects the move and the point remains unsure.
        let (mut pts, mut vals, mut state) = two_cluster_state();
        pts[10] = pt(0.45, 0.0);
        vals[10] = 1.0; // left value, but the right class is nearer
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 4,
            m: 2,
        };
        blow_up(&ctx, &mut state, BlowupMode::Fixpoint).unwrap();
        assert_eq!(state.unsure, vec![PointId(11)]);
        state.assert_invariants(11);
    }

    #[test]
    fn sweeps_stay_within_termination_bound() {
        // A chain of unsure points that only become absorbable one at a
        // time, forcing multiple sweeps.
        let mut pts = Vec::new();
        for i in 0..6 {
            pts.push(pt(0.05 * i as f64, 0.0));
        }
        for i in 0..4 {
            pts.push(pt(0.4 + 0.08 * i as f64, 0.0));
        }
        let vals: Vec<f64> = pts.iter().map(|p| p.x()).collect();
        let n_unsure = 4;
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 4,
            m: 2,
        };
        let mut state = ClassState {
            seeds: vec![(1..=6).map(PointId).collect()],
            grown: vec![(1..=6).map(PointId).collect()],
            unsure: (7..=10).map(PointId).collect(),
        };
        let out = blow_up(&ctx, &mut state, BlowupMode::Fixpoint).unwrap();
        assert!(out.sweeps <= n_unsure + 1, "sweeps {}", out.sweeps);
        state.assert_invariants(10);
    }

    #[test]
    fn seeds_never_change_and_growth_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let mut pts = Vec::new();
        for _ in 0..30 {
            pts.push(pt(rng.random_range(0.0..0.4), rng.random_range(0.0..1.0)));
        }
        for _ in 0..30 {
            pts.push(pt(rng.random_range(0.6..1.0), rng.random_range(0.0..1.0)));
        }
        for _ in 0..10 {
            pts.push(pt(rng.random_range(0.4..0.6), rng.random_range(0.0..1.0)));
        }
        let vals: Vec<f64> = pts
            .iter()
            .map(|p| if p.x() >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        let ps = PointSet::new(pts).unwrap();
        let kernel = imq35();
        let ctx = PhaseContext {
            ps: &ps,
            values: &vals,
            kernel: &kernel,
            n: 6,
            m: 2,
        };
        let mut state = ClassState {
            seeds: vec![
                (1..=30).map(PointId).collect(),
                (31..=60).map(PointId).collect(),
            ],
            grown: vec![
                (1..=30).map(PointId).collect(),
                (31..=60).map(PointId).collect(),
            ],
            unsure: (61..=70).map(PointId).collect(),
        };
        let seeds_before = state.seeds.clone();
        let unsure_before = state.unsure.len();
        blow_up(&ctx, &mut state, BlowupMode::Fixpoint).unwrap();
        assert_eq!(state.seeds, seeds_before);
        assert!(state.unsure.len() <= unsure_before);
        for (seeds, grown) in state.seeds.iter().zip(state.grown.iter()) {
            assert!(grown.len() >= seeds.len());
        }
        state.assert_invariants(70);
    }
}
