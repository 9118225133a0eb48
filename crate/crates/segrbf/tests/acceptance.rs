//! Acceptance suite: benchmark reproduction bounds and the always-runnable
//! property checks, one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use segrbf::benchfuncs::BenchCase;
use segrbf::evaluation::count_misclassified;
use segrbf::geometry::{
    fill_distance, neighbor_edge_list, separation_distance, Point, PointSet, Rect,
};
use segrbf::kernel::{fit_interpolant, gram_matrix, Kernel};
use segrbf::pipeline::{run_case, PipelineConfig, RunArtifacts};
use segrbf::splitting::{filter_edges, spanning_forest};

struct CaseRun {
    case: BenchCase,
    ps: PointSet<f64, 2>,
    artifacts: RunArtifacts<f64>,
    wall: Duration,
}

fn run(case: BenchCase, skip_phase3: bool) -> CaseRun {
    let cfg = PipelineConfig {
        skip_phase3,
        ..Default::default()
    };
    let started = Instant::now();
    let (sites, _, artifacts) = run_case::<f64>(&cfg, case).expect("pipeline run");
    let wall = started.elapsed();
    // Partition invariants hold after every phase of every benchmark run.
    artifacts.state.assert_invariants(sites.points.len());
    artifacts.partition.assert_invariants(&artifacts.state);
    CaseRun {
        case,
        ps: sites.points,
        artifacts,
        wall,
    }
}

static F1: LazyLock<CaseRun> = LazyLock::new(|| run(BenchCase::F1, false));
static F2: LazyLock<CaseRun> = LazyLock::new(|| run(BenchCase::F2, false));
static F3: LazyLock<CaseRun> = LazyLock::new(|| run(BenchCase::F3, false));
static F4: LazyLock<CaseRun> = LazyLock::new(|| run(BenchCase::F4, false));
static F1_SKIP: LazyLock<CaseRun> = LazyLock::new(|| run(BenchCase::F1, true));

fn criterion(name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {name}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {name} failed: {detail}");
}

fn accuracy(run: &CaseRun) -> f64 {
    let wrong = count_misclassified(&run.ps, &run.artifacts.partition.class_of, run.artifacts.partition.j, |p| {
        run.case.true_class(p)
    });
    1.0 - wrong as f64 / run.ps.len() as f64
}

#[test]
fn criterion_1_example1_errors() {
    let r = &F1.artifacts.report;
    let seg = r.linf_safe_segmented.expect("nonempty safe zone");
    let glob = r.linf_safe_global.expect("nonempty safe zone");
    let ratio = seg / glob;
    let ok = seg <= 1e-3 && glob >= 1e-2 && ratio <= 0.1 && F1.wall <= Duration::from_secs(60);
    criterion(
        "1",
        ok,
        &format!(
            "f1 safe errors: segmented {seg:.3e} (<= 1e-3), global {glob:.3e} (>= 1e-2), \
             ratio {ratio:.3} (<= 0.1), runtime {:.1}s (<= 60s)",
            F1.wall.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_classification_counts() {
    let mut ok = true;
    let mut details = Vec::new();
    for run in [&*F1, &*F2] {
        let n = run.ps.len() as f64;
        let phase2 = run.artifacts.report.counts.after_blowup as f64 / n;
        let acc = accuracy(run);
        ok &= phase2 >= 0.98 && acc >= 0.995;
        details.push(format!(
            "{}: phase-2 classified {:.1}% (>= 98%), final accuracy {:.2}% (>= 99.5%)",
            run.case,
            100.0 * phase2,
            100.0 * acc
        ));
    }
    criterion("2", ok, &details.join("; "));
}

#[test]
fn criterion_3_example4() {
    let r = &F4.artifacts.report;
    let wrong = r.n_misclassified.expect("ground truth available");
    // Any misclassified point must lie within 2q of the derivative
    // singularity at (0.5, 0.5).
    let q = F4.artifacts.q;
    let singularity = Point::xy(0.5, 0.5);
    let mut strays = 0;
    if wrong > 0 {
        // Identify disagreeing points under the best label alignment.
        let class_of = &F4.artifacts.partition.class_of;
        let agree: usize = F4
            .ps
            .ids()
            .filter(|&id| class_of[id.idx()] == Some(BenchCase::F4.true_class(F4.ps.point(id))))
            .count();
        let swap = agree * 2 < F4.ps.len();
        for id in F4.ps.ids() {
            let got = class_of[id.idx()].unwrap();
            let got = if swap { 3 - got } else { got };
            if got != BenchCase::F4.true_class(F4.ps.point(id))
                && F4.ps.point(id).dist(&singularity) > 2.0 * q
            {
                strays += 1;
            }
        }
    }
    let seg = r.linf_safe_segmented.expect("nonempty safe zone");
    let glob = r.linf_safe_global.expect("nonempty safe zone");
    let ok = wrong <= 3 && strays == 0 && seg <= 1e-2 && glob >= 5e-3;
    criterion(
        "3",
        ok,
        &format!(
            "f4: {wrong} misclassified (<= 3, {strays} beyond 2q of the singularity), \
             segmented safe {seg:.3e} (<= 1e-2), global safe {glob:.3e} (>= 5e-3)"
        ),
    );
}

#[test]
fn criterion_4_example3() {
    let r = &F3.artifacts.report;
    let seg = r.linf_safe_segmented.expect("nonempty safe zone");
    let glob = r.linf_safe_global.expect("nonempty safe zone");
    let acc = accuracy(&F3);
    let ok = seg <= 0.5 && seg < glob && acc >= 0.99;
    criterion(
        "4",
        ok,
        &format!(
            "f3: segmented safe {seg:.3e} (<= 0.5 and < global safe {glob:.3e}), \
             sign-split agreement {:.2}% (>= 99%)",
            100.0 * acc
        ),
    );
}

#[test]
fn criterion_5_phase3_skip_robustness() {
    let with = F1.artifacts.report.linf_segmented.unwrap();
    let without = F1_SKIP.artifacts.report.linf_segmented.unwrap();
    let ratio = (with / without).max(without / with);
    let ok = ratio <= 2.0;
    criterion(
        "5",
        ok,
        &format!(
            "f1 full-grid error {with:.3e} with phase 3 vs {without:.3e} without \
             (change {ratio:.2}x <= 2x)"
        ),
    );
}

#[test]
fn criterion_6_kernel_properties() {
    let kernel = Kernel::inverse_multiquadric(0.35).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let random_pts = |n: usize, rng: &mut ChaCha8Rng| -> Vec<Point<f64, 2>> {
        (0..n)
            .map(|_| Point::xy(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect()
    };

    // Interpolation residuals on 100 random instances.
    let mut worst_residual_excess: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=50);
        let pts = random_pts(n, &mut rng);
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = fit_interpolant(&kernel, &pts, &vals).unwrap();
        worst_residual_excess = worst_residual_excess.max(s.max_residual() / s.residual_tol());
    }

    // Newton norm against the explicit quadratic form c^T A c.
    let mut worst_norm_gap: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=30);
        let pts = random_pts(n, &mut rng);
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = fit_interpolant(&kernel, &pts, &vals).unwrap();
        if s.rank() < n {
            continue; // quadratic form only matches on full-rank fits
        }
        let a = gram_matrix(&kernel, &pts);
        let mut c = vec![0.0; n];
        for (j, &cj) in s.standard_coeffs().iter().enumerate() {
            c[s.pivot_order()[j]] = cj;
        }
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += c[i] * a[i][j] * c[j];
            }
        }
        let norm = s.native_norm();
        worst_norm_gap = worst_norm_gap.max((quad.sqrt() - norm).abs() / (1.0 + norm));
    }

    // Norm monotonicity on 50 random nestings.
    let mut monotone = true;
    for _ in 0..50 {
        let n = rng.random_range(4..=30);
        let pts = random_pts(n, &mut rng);
        let vals: Vec<f64> = pts.iter().map(|p| (3.0 * p.x()).sin() - p.y()).collect();
        let m = rng.random_range(2..n);
        let sub = fit_interpolant(&kernel, &pts[..m], &vals[..m]).unwrap();
        let full = fit_interpolant(&kernel, &pts, &vals).unwrap();
        monotone &=
            full.native_norm() >= sub.native_norm() - 1e-9 * (1.0 + sub.native_norm());
    }

    let ok = worst_residual_excess <= 1.0 && worst_norm_gap <= 1e-8 && monotone;
    criterion(
        "6",
        ok,
        &format!(
            "kernel: residual/tol max {worst_residual_excess:.3}, norm-equivalence gap \
             {worst_norm_gap:.2e} (<= 1e-8), nested-norm monotonicity {}",
            if monotone { "holds" } else { "violated" }
        ),
    );
}

#[test]
fn criterion_7_geometry_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut knn_ok = true;
    for _ in 0..100 {
        let n = rng.random_range(2..=400);
        let pts: Vec<Point<f64, 2>> = (0..n)
            .map(|_| Point::xy(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let ps = PointSet::new(pts.clone()).unwrap();
        let k = rng.random_range(1..=n.min(20));
        let q = Point::xy(rng.random_range(-0.2..1.2), rng.random_range(-0.2..1.2));
        let got = ps.k_nearest(&q, k).unwrap();
        // Brute-force oracle.
        let mut all: Vec<(usize, f64)> = pts.iter().map(|p| p.dist2(&q)).enumerate().collect();
        all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let expect: Vec<(usize, f64)> =
            all[..k].iter().map(|&(i, d2)| (i + 1, d2.sqrt())).collect();
        knn_ok &= got.iter().map(|(id, d)| (id.0, *d)).collect::<Vec<_>>() == expect;
    }

    // Separation distance against the quadratic scan on the benchmark set.
    let pts = F1.ps.points();
    let mut brute = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            brute = brute.min(pts[i].dist(&pts[j]));
        }
    }
    let sep_ok = separation_distance(&F1.ps).unwrap() == brute;

    // Fill distance bracketed by a finer probe.
    let coarse = fill_distance(&F1.ps, &Rect::unit(), 0.005).unwrap();
    let fine = fill_distance(&F1.ps, &Rect::unit(), 0.001).unwrap();
    let fill_ok = coarse <= fine && fine - coarse <= 0.005 * 2.0f64.sqrt() / 2.0 + 1e-12;

    let ok = knn_ok && sep_ok && fill_ok;
    criterion(
        "7",
        ok,
        &format!(
            "geometry: k-nearest == brute force on 100 instances ({knn_ok}), separation \
             exact ({sep_ok}), fill distance within probe bound ({fill_ok})"
        ),
    );
}

#[test]
fn criterion_8_splitting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut ok = true;
    for _ in 0..100 {
        let n = rng.random_range(5..=300);
        let pts: Vec<Point<f64, 2>> = (0..n)
            .map(|_| Point::xy(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let ps = PointSet::new(pts).unwrap();
        let nn = rng.random_range(2..=6.min(n));
        let edges = neighbor_edge_list(&ps, nn).unwrap();
        let good: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
        let good_ids: Vec<_> = ps.ids().filter(|id| good[id.idx()]).collect();
        if good_ids.is_empty() {
            continue;
        }
        let filtered = filter_edges(&edges, &good);
        let forest = spanning_forest(&filtered, &good_ids, n);

        // BFS oracle over the filtered graph.
        let mut adj = vec![Vec::new(); n];
        for e in &filtered {
            adj[e.a.idx()].push(e.b.idx());
            adj[e.b.idx()].push(e.a.idx());
        }
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for start in good_ids.iter().map(|id| id.idx()) {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut queue = std::collections::VecDeque::from([start]);
            comp[start] = next;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        // Same partition: two good points share a forest label iff they
        // share a BFS component.
        for &a in &good_ids {
            for &b in &good_ids {
                let same_forest = forest.label[a.idx()] == forest.label[b.idx()];
                let same_bfs = comp[a.idx()] == comp[b.idx()];
                ok &= same_forest == same_bfs;
            }
        }
        ok &= forest.j == next;
    }
    // Partition invariants after every phase are asserted inside `run` for
    // every benchmark case; touching the runs here makes that explicit.
    for r in [&*F1, &*F2, &*F3, &*F4] {
        ok &= r.artifacts.partition.labeled() == r.ps.len();
    }
    criterion(
        "8",
        ok,
        "spanning forest == BFS components on 100 random graphs; partition invariants \
         asserted on every benchmark run",
    );
}

#[test]
fn safe_errors_never_exceed_full_grid_errors() {
    for run in [&*F1, &*F2, &*F3, &*F4, &*F1_SKIP] {
        let r = &run.artifacts.report;
        assert!(r.linf_safe_segmented.unwrap() <= r.linf_segmented.unwrap());
        assert!(r.linf_safe_global.unwrap() <= r.linf_global.unwrap());
    }
}

#[test]
fn global_baseline_error_matches_published_scale() {
    // Supporting check, not a numbered criterion: the global interpolant's
    // safe error on the second surface sits at the published order of
    // magnitude (1.3e-1 there).
    let glob = F2.artifacts.report.linf_safe_global.unwrap();
    assert!(
        (1e-2..=1.0).contains(&glob),
        "f2 global safe error {glob:.3e} out of scale"
    );
}

#[test]
fn criterion_9_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_segrbf");
    let dir = tempfile::tempdir().unwrap();
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out_a, &out_b] {
        let result = Command::new(bin)
            .args(["run", "--case", "f1", "--seed", "7"])
            .args(["--points", "400", "--out-dir", out.to_str().unwrap()])
            .output()
            .expect("run binary");
        assert!(result.status.success());
    }
    let mut ok = true;
    for name in ["classes.csv", "report.json", "sigma.csv", "grid_errors.csv"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        ok &= a == b;
    }
    criterion(
        "9",
        ok,
        "two runs with identical config+seed produce byte-identical artifacts",
    );
}
