//! Phase 3: final assignment of remaining unsure points by normalized
//! prediction error.
//!
//! Each class gets an interpolant fitted on its grown set. For every unsure
//! point the absolute prediction errors are normalized per class over the
//! unsure pool, and the point joins whichever of its two nearest classes
//! predicts it better, ties favoring the nearer one.

use serde::Serialize;

use crate::blowup::{ClassState, PhaseContext};
use crate::error::Result;
use crate::geometry::PointId;
use crate::kernel::{fit_interpolant, Interpolant};
use crate::scalar::Real;

/// Which phase placed a point into its class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Seed,
    Blowup,
    Final,
    /// Only present when the final phase is skipped.
    Unsure,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Seed => "seed",
            Provenance::Blowup => "blowup",
            Provenance::Final => "final",
            Provenance::Unsure => "unsure",
        })
    }
}

/// Final per-point classification with provenance.
#[derive(Clone, Debug)]
pub struct FinalPartition {
    /// Class per site (by index); `None` only when phase 3 was skipped.
    pub class_of: Vec<Option<usize>>,
    pub provenance: Vec<Provenance>,
    pub j: usize,
}

impl FinalPartition {
    pub fn members(&self, class: usize) -> Vec<PointId> {
        self.class_of
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Some(class))
            .map(|(i, _)| PointId::from_idx(i))
            .collect()
    }

    pub fn labeled(&self) -> usize {
        self.class_of.iter().filter(|c| c.is_some()).count()
    }

    /// Panics unless classes are disjoint supersets of the grown sets and,
    /// together with the unsure leftovers, cover all sites.
    pub fn assert_invariants(&self, state: &ClassState) {
        for (class, grown) in state.grown.iter().enumerate() {
            for id in grown {
                assert_eq!(
                    self.class_of[id.idx()],
                    Some(class + 1),
                    "final sets must extend grown sets"
                );
            }
        }
        for (c, p) in self.class_of.iter().zip(self.provenance.iter()) {
            assert_eq!(c.is_none(), matches!(p, Provenance::Unsure));
        }
    }
}

/// Per-class raw and normalized prediction errors over the unsure pool.
#[derive(Clone, Debug)]
pub struct NormalizedErrors<T> {
    /// `raw[u][c]`: `|f(x_u) - u_c(x_u)|` for unsure index `u`, class `c+1`.
    pub raw: Vec<Vec<T>>,
    /// `D_c(x_u) = (raw - mu_c) / (M_c - mu_c)`; all zero for degenerate
    /// classes.
    pub normalized: Vec<Vec<T>>,
    /// Classes whose error range over the unsure pool is empty
    /// (`M_c == mu_c`), making the normalization undefined.
    pub degenerate: Vec<bool>,
}

/// Fits `u_c` on each grown set and computes the error matrices. Classes
/// whose fit fails are treated as infinitely bad candidates.
pub fn normalized_errors<T: Real, const D: usize>(
    ctx: &PhaseContext<'_, T, D>,
    state: &ClassState,
) -> NormalizedErrors<T> {
    let interpolants: Vec<Option<Interpolant<T, D>>> = state
        .grown
        .iter()
        .map(|ids| {
            let pts: Vec<_> = ids.iter().map(|&id| *ctx.ps.point(id)).collect();
            let vals: Vec<T> = ids.iter().map(|&id| ctx.values[id.idx()]).collect();
            fit_interpolant(ctx.kernel, &pts, &vals).ok()
        })
        .collect();

    let raw: Vec<Vec<T>> = state
        .unsure
        .iter()
        .map(|&id| {
            interpolants
                .iter()
                .map(|u| match u {
                    Some(u) => (ctx.values[id.idx()] - u.eval(ctx.ps.point(id))).abs(),
                    None => T::infinity(),
                })
                .collect()
        })
        .collect();

    let j = state.j();
    let mut normalized = vec![vec![T::zero(); j]; state.unsure.len()];
    let mut degenerate = vec![false; j];
    for c in 0..j {
        let column = raw.iter().map(|row| row[c]);
        let mu = column.clone().fold(T::infinity(), T::min);
        let max = raw
            .iter()
            .map(|row| row[c])
            .fold(T::neg_infinity(), T::max);
        if max == mu || !mu.is_finite() {
            degenerate[c] = true;
            continue;
        }
        for (u, row) in raw.iter().enumerate() {
            normalized[u][c] = (row[c] - mu) / (max - mu);
        }
    }
    NormalizedErrors {
        raw,
        normalized,
        degenerate,
    }
}

/// Assigns every unsure point to one of its two nearest classes by
/// normalized error (`D_j <= D_k` favors the nearer class `j`); falls back
/// to raw errors when both normalizations are degenerate.
pub fn final_assign<T: Real, const D: usize>(
    ctx: &PhaseContext<'_, T, D>,
    state: &ClassState,
) -> Result<FinalPartition> {
    let mut partition = partition_without_final(state);
    if state.unsure.is_empty() {
        return Ok(partition);
    }
    let errors = normalized_errors(ctx, state);
    let j = state.j();
    for (u, &id) in state.unsure.iter().enumerate() {
        let class = if j == 1 {
            1
        } else {
            let site = ctx.ps.point(id);
            let mut by_dist: Vec<(usize, T)> = (1..=j)
                .map(|c| (c, ctx.ps.dist_to_subset(&state.grown[c - 1], site)))
                .collect();
            by_dist.sort_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .expect("finite distances")
                    .then(a.0.cmp(&b.0))
            });
            let (near, next) = (by_dist[0].0, by_dist[1].0);
            if errors.degenerate[near - 1] && errors.degenerate[next - 1] {
                if errors.raw[u][near - 1] <= errors.raw[u][next - 1] {
                    near
                } else {
                    next
                }
            } else if errors.normalized[u][near - 1] <= errors.normalized[u][next - 1] {
                near
            } else {
                next
            }
        };
        partition.class_of[id.idx()] = Some(class);
        partition.provenance[id.idx()] = Provenance::Final;
    }
    Ok(partition)
}

/// Partition as it stands after the blow-up phase; unsure points stay
/// unlabeled. Used directly when the final phase is disabled.
pub fn partition_without_final(state: &ClassState) -> FinalPartition {
    let n = state.grown.iter().map(|g| g.len()).sum::<usize>() + state.unsure.len();
    let mut class_of = vec![None; n];
    let mut provenance = vec![Provenance::Unsure; n];
    for (c, (grown, seeds)) in state.grown.iter().zip(state.seeds.iter()).enumerate() {
        for id in grown {
            class_of[id.idx()] = Some(c + 1);
            provenance[id.idx()] = if seeds.contains(id) {
                Provenance::Seed
            } else {
                Provenance::Blowup
            };
        }
    }
    FinalPartition {
        class_of,
        provenance,
        j: state.j(),
    }
}
