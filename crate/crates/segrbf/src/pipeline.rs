//! End-to-end pipeline: locality -> splitting -> blow-up -> assignment ->
//! evaluation, behind a single config.

use serde::{Deserialize, Serialize};

use crate::benchfuncs::{synthesize_sites, BenchCase, SynthesizedSites};
use crate::blowup::{blow_up, BlowupMode, BlowupOutcome, ClassState, PhaseContext};
use crate::error::{Error, Result};
use crate::evaluation::{
    count_misclassified, error_report, global_interpolant, grid_rows, safe_zone, ErrorReport,
    EvalGrid, GridRow, PhaseCounts, Piecewise, SafeZone,
};
use crate::geometry::{neighbor_edge_list, separation_distance, PointSet};
use crate::kernel::{Interpolant, Kernel, KernelFamily};
use crate::locality::{good_point_mask, locality_indicator, Indicator, LocalityScores};
use crate::scalar::{real, Real};
use crate::assignment;
use crate::splitting::{filter_edges, select_major_components, spanning_forest, ComponentLabeling};

/// Which class sets define the safe zone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SafeZoneSource {
    Seed,
    Grown,
    Final,
}

/// Pipeline parameters. The defaults reproduce the benchmark setup:
/// inverse multiquadric with `delta = 0.35`, `n = 12` neighbors, `m = 2`
/// candidate classes, threshold factor 2, evaluation grid step 0.01,
/// `N = 900` sites with target separation 0.04.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub kernel: KernelFamily,
    pub delta: f64,
    pub n_neighbors: usize,
    pub m_candidates: usize,
    pub threshold_factor: f64,
    /// Components below this size dissolve into the unsure pool;
    /// `None` means `max(5, n_neighbors)`.
    pub min_component_size: Option<usize>,
    pub blowup_mode: BlowupMode,
    pub skip_phase3: bool,
    pub grid_step: f64,
    pub seed: u64,
    pub n_points: usize,
    pub margin: f64,
    pub target_q: f64,
    /// Jitter amplitude as a fraction of the grid cell.
    pub jitter: f64,
    pub indicator: Indicator,
    /// Whether the locality neighborhood contains the point itself.
    pub include_self: bool,
    /// Threshold factor retried once when the splitting yields a single
    /// component; `None` disables the retry.
    pub retry_threshold_factor: Option<f64>,
    pub safe_zone_source: SafeZoneSource,
    /// Worker threads for the parallel loops; 0 means machine parallelism.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kernel: KernelFamily::InverseMultiquadric,
            delta: 0.35,
            n_neighbors: 12,
            m_candidates: 2,
            threshold_factor: 2.0,
            min_component_size: None,
            blowup_mode: BlowupMode::Fixpoint,
            skip_phase3: false,
            grid_step: 0.01,
            seed: 1,
            n_points: 900,
            margin: 0.05,
            target_q: 0.04,
            jitter: 0.3,
            indicator: Indicator::NativeNorm,
            include_self: true,
            retry_threshold_factor: Some(1.5),
            safe_zone_source: SafeZoneSource::Final,
            workers: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        }
        positive("delta", self.delta)?;
        positive("threshold_factor", self.threshold_factor)?;
        positive("target_q", self.target_q)?;
        if self.n_neighbors < 2 {
            return Err(Error::Config(format!(
                "n_neighbors must be at least 2, got {}",
                self.n_neighbors
            )));
        }
        if self.m_candidates < 1 {
            return Err(Error::Config("m_candidates must be at least 1".into()));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return Err(Error::Config(format!(
                "grid_step must lie in (0, 1], got {}",
                self.grid_step
            )));
        }
        if self.margin < 0.0 || !self.margin.is_finite() {
            return Err(Error::Config(format!(
                "margin must be nonnegative, got {}",
                self.margin
            )));
        }
        if self.jitter < 0.0 || !self.jitter.is_finite() {
            return Err(Error::Config(format!(
                "jitter must be nonnegative, got {}",
                self.jitter
            )));
        }
        if let Some(f) = self.retry_threshold_factor {
            positive("retry_threshold_factor", f)?;
        }
        Ok(())
    }

    pub fn kernel<T: Real>(&self) -> Result<Kernel<T>> {
        Kernel::new(self.kernel, real(self.delta))
    }

    pub fn min_component_size(&self) -> usize {
        self.min_component_size.unwrap_or(self.n_neighbors.max(5))
    }
}

/// Everything a run produces, for reports, dumps, and tests.
pub struct RunArtifacts<T: Real> {
    pub scores: LocalityScores<T>,
    /// Seed classes after splitting (post component selection).
    pub seed_labeling: ComponentLabeling,
    /// Class state after the blow-up phase.
    pub state: ClassState,
    pub blowup: BlowupOutcome<T>,
    pub partition: assignment::FinalPartition,
    /// Separation distance of the data sites.
    pub q: T,
    pub zone: SafeZone<T>,
    pub piecewise: Piecewise<T, 2>,
    pub global: Interpolant<T, 2>,
    pub report: ErrorReport<T>,
    /// Per-grid-point rows; present only with ground truth.
    pub grid: Option<Vec<GridRow<T>>>,
    /// Whether the splitting retry with the fallback threshold fired.
    pub retried_threshold: bool,
}

fn in_phase<T>(phase: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Phase {
        phase,
        source: Box::new(e),
    })
}

/// Runs all phases on the given data. `case` supplies ground truth for the
/// error grid and the misclassification count; without it the report
/// carries classification counts only.
pub fn run_pipeline<T: Real>(
    cfg: &PipelineConfig,
    ps: &PointSet<T, 2>,
    values: &[T],
    case: Option<BenchCase>,
) -> Result<RunArtifacts<T>> {
    cfg.validate()?;
    let kernel: Kernel<T> = cfg.kernel()?;
    let n = cfg.n_neighbors.min(ps.len());

    // Phase 1a: locality indicator and good/bad threshold.
    let sigma = in_phase(
        "locality",
        locality_indicator(ps, values, n, &kernel, cfg.indicator, cfg.include_self),
    )?;
    let mut scores = good_point_mask(&sigma, real(cfg.threshold_factor), n);

    // Phase 1b: split the good points into connected seed components.
    let edges = in_phase("splitting", neighbor_edge_list(ps, n))?;
    let split = |scores: &LocalityScores<T>| -> Result<(ComponentLabeling, Vec<_>)> {
        let filtered = filter_edges(&edges, &scores.good);
        let forest = spanning_forest(&filtered, &scores.good_ids(), ps.len());
        select_major_components(&forest, cfg.min_component_size())
    };
    let mut labeling = in_phase("splitting", split(&scores))?.0;
    let mut retried_threshold = false;
    if labeling.j == 1 {
        if let Some(factor) = cfg.retry_threshold_factor {
            let retry_scores = good_point_mask(&sigma, real(factor), n);
            if let Ok((retry_labeling, _)) = split(&retry_scores) {
                if retry_labeling.j > 1 {
                    scores = retry_scores;
                    labeling = retry_labeling;
                    retried_threshold = true;
                }
            }
        }
    }

    // Phase 2: blow-up.
    let ctx = PhaseContext {
        ps,
        values,
        kernel: &kernel,
        n,
        m: cfg.m_candidates,
    };
    let mut state = ClassState::from_labeling(&labeling, &sigma);
    let blowup = in_phase("blowup", blow_up(&ctx, &mut state, cfg.blowup_mode))?;

    // Phase 3: final assignment (optional).
    let partition = if cfg.skip_phase3 {
        assignment::partition_without_final(&state)
    } else {
        in_phase("assignment", assignment::final_assign(&ctx, &state))?
    };

    // Evaluation.
    let q = in_phase("evaluation", separation_distance(ps))?;
    let grid = in_phase("evaluation", EvalGrid::unit_square(real(cfg.grid_step)))?;
    let zone_labels: Vec<Option<usize>> = match cfg.safe_zone_source {
        SafeZoneSource::Final => partition.class_of.clone(),
        SafeZoneSource::Grown => labels_of_sets(&state.grown, ps.len()),
        SafeZoneSource::Seed => labels_of_sets(&state.seeds, ps.len()),
    };
    let zone = safe_zone(ps, &zone_labels, q, &grid);
    let piecewise = in_phase(
        "evaluation",
        Piecewise::build(ps, values, &partition.class_of, partition.j, &kernel),
    )?;
    let global = in_phase("evaluation", global_interpolant(ps, values, &kernel))?;

    let counts = PhaseCounts {
        seeds: state.seeds.iter().map(|s| s.len()).sum(),
        after_blowup: state.classified(),
        labeled_final: partition.labeled(),
        unsure_final: ps.len() - partition.labeled(),
    };
    let (report, rows) = match case {
        Some(case) => {
            let f_true = |p: &crate::geometry::Point<T, 2>| case.eval(p);
            let errors = error_report(
                |p| piecewise.eval(p).1,
                |p| global.eval(p),
                f_true,
                &zone,
                &grid,
            );
            let misclassified =
                count_misclassified(ps, &partition.class_of, partition.j, |p| case.true_class(p));
            let rows = grid_rows(&piecewise, f_true, &zone, &grid);
            (
                ErrorReport {
                    linf_safe_segmented: errors.segmented.linf_safe,
                    linf_segmented: Some(errors.segmented.linf),
                    linf_safe_global: errors.global.linf_safe,
                    linf_global: Some(errors.global.linf),
                    n_misclassified: Some(misclassified),
                    counts,
                },
                Some(rows),
            )
        }
        None => (
            ErrorReport {
                linf_safe_segmented: None,
                linf_segmented: None,
                linf_safe_global: None,
                linf_global: None,
                n_misclassified: None,
                counts,
            },
            None,
        ),
    };

    Ok(RunArtifacts {
        scores,
        seed_labeling: labeling,
        state,
        blowup,
        partition,
        q,
        zone,
        piecewise,
        global,
        report,
        grid: rows,
        retried_threshold,
    })
}

fn labels_of_sets(sets: &[Vec<crate::geometry::PointId>], n: usize) -> Vec<Option<usize>> {
    let mut labels = vec![None; n];
    for (c, set) in sets.iter().enumerate() {
        for id in set {
            labels[id.idx()] = Some(c + 1);
        }
    }
    labels
}

/// Synthesizes the benchmark sites for `case` under `cfg` and runs the
/// pipeline on them.
pub fn run_case<T: Real>(
    cfg: &PipelineConfig,
    case: BenchCase,
) -> Result<(SynthesizedSites<T, 2>, Vec<T>, RunArtifacts<T>)> {
    cfg.validate()?;
    let sites = synthesize_sites::<T>(
        cfg.n_points,
        real(cfg.margin),
        real(cfg.target_q),
        real(cfg.jitter),
        cfg.seed,
    )?;
    let values: Vec<T> = sites.points.points().iter().map(|p| case.eval(p)).collect();
    let artifacts = run_pipeline(cfg, &sites.points, &values, Some(case))?;
    Ok((sites, values, artifacts))
}

/// Serializable summary written as `report.json`.
#[derive(Serialize)]
pub struct RunReport<'a, T: Real + Serialize> {
    pub case: Option<String>,
    pub n_points: usize,
    pub j: usize,
    pub separation_distance: T,
    pub sweeps: usize,
    pub retried_threshold: bool,
    pub report: &'a ErrorReport<T>,
    pub config: &'a PipelineConfig,
}

impl<'a, T: Real + Serialize> RunReport<'a, T> {
    pub fn new(
        cfg: &'a PipelineConfig,
        case: Option<BenchCase>,
        n_points: usize,
        artifacts: &'a RunArtifacts<T>,
    ) -> Self {
        RunReport {
            case: case.map(|c| c.to_string()),
            n_points,
            j: artifacts.partition.j,
            separation_distance: artifacts.q,
            sweeps: artifacts.blowup.sweeps,
            retried_threshold: artifacts.retried_threshold,
            report: &artifacts.report,
            config: cfg,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn default_config_matches_benchmark_setup() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.kernel, KernelFamily::InverseMultiquadric);
        assert_eq!(cfg.delta, 0.35);
        assert_eq!(cfg.m_candidates, 2);
        assert_eq!(cfg.threshold_factor, 2.0);
        assert_eq!(cfg.grid_step, 0.01);
        assert_eq!(cfg.n_points, 900);
        assert_eq!(cfg.min_component_size(), 12);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let bad = [
            PipelineConfig {
                delta: 0.0,
                ..Default::default()
            },
            PipelineConfig {
                grid_step: 1.5,
                ..Default::default()
            },
            PipelineConfig {
                n_neighbors: 1,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.delta, cfg.delta);
        assert_eq!(back.kernel, cfg.kernel);
        assert_eq!(back.blowup_mode, cfg.blowup_mode);

        // Partial files fall back to defaults; unknown keys are rejected.
        let partial: PipelineConfig = toml::from_str("n_neighbors = 8\n").unwrap();
        assert_eq!(partial.n_neighbors, 8);
        assert_eq!(partial.delta, 0.35);
        assert!(toml::from_str::<PipelineConfig>("no_such_key = 1\n").is_err());
    }

    #[test]
    fn small_two_sided_instance_runs_end_to_end() {
        // A 10x10 grid with a value jump along x = 0.5.
        let cfg = PipelineConfig {
            n_points: 100,
            n_neighbors: 6,
            target_q: 0.05,
            grid_step: 0.05,
            ..Default::default()
        };
        let sites = synthesize_sites::<f64>(100, 0.0, 0.05, 0.2, 3).unwrap();
        let values: Vec<f64> = sites
            .points
            .points()
            .iter()
            .map(|p| if p.x() > 0.5 { 1.0 } else { 0.0 })
            .collect();
        let artifacts = run_pipeline(&cfg, &sites.points, &values, None).unwrap();
        artifacts.state.assert_invariants(100);
        artifacts.partition.assert_invariants(&artifacts.state);
        assert_eq!(artifacts.partition.j, 2, "two sides, two classes");
        assert_eq!(artifacts.report.counts.labeled_final, 100);
        assert!(artifacts.report.linf_segmented.is_none(), "no ground truth");

        // The two classes sit on the two sides of the jump.
        let side = |p: &Point<f64, 2>| usize::from(p.x() > 0.5) + 1;
        let wrong = count_misclassified(&sites.points, &artifacts.partition.class_of, 2, side);
        assert_eq!(wrong, 0, "clean jump should classify perfectly");
    }
}
