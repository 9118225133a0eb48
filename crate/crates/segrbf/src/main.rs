//! Command-line pipeline runner.

use std::fs;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use segrbf::benchfuncs::{synthesize_sites, BenchCase};
use segrbf::blowup::BlowupMode;
use segrbf::error::{Error, Result};
use segrbf::io;
use segrbf::kernel::KernelFamily;
use segrbf::locality::Indicator;
use segrbf::pipeline::{run_pipeline, PipelineConfig, RunArtifacts, RunReport, SafeZoneSource};
use segrbf::PointSet2;

#[derive(Parser)]
#[command(
    name = "segrbf",
    about = "Classify scattered data into smooth classes and interpolate piecewise",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write report + artifacts.
    Run(RunArgs),
    /// Run the pipeline and dump one phase artifact to stdout or a file.
    Dump(DumpArgs),
    /// Write `x,y,f,true_class` samples of a benchmark case.
    DumpCase(DumpCaseArgs),
    /// Run a parameter grid over n, delta, and threshold factor.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Benchmark case (f1, f2, f3, f4) with synthesized sites.
    #[arg(long, conflicts_with = "data")]
    case: Option<String>,
    /// CSV file `x,y,f` with user data.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    n_neighbors: Option<usize>,
    #[arg(long)]
    m_candidates: Option<usize>,
    #[arg(long)]
    threshold_factor: Option<f64>,
    #[arg(long)]
    min_component_size: Option<usize>,
    /// fixpoint | single-pass
    #[arg(long)]
    blowup_mode: Option<String>,
    #[arg(long)]
    skip_phase3: bool,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of synthesized sites (perfect square).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    target_q: Option<f64>,
    #[arg(long)]
    jitter: Option<f64>,
    /// native-norm | prediction-error
    #[arg(long)]
    indicator: Option<String>,
    /// seed | grown | final
    #[arg(long)]
    safe_zone_source: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for report.json, classes.csv, sigma.csv,
    /// grid_errors.csv.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DumpArgs {
    /// sigma | seeds | classes | blowup-trace
    phase: String,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpCaseArgs {
    /// Benchmark case (f1, f2, f3, f4).
    #[arg(long)]
    case: String,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated neighbor counts.
    #[arg(long, value_delimiter = ',', default_value = "12")]
    n: Vec<usize>,
    /// Comma-separated shape parameters.
    #[arg(long = "deltas", value_delimiter = ',', default_value = "0.35")]
    deltas: Vec<f64>,
    /// Comma-separated threshold factors.
    #[arg(long, value_delimiter = ',', default_value = "2.0")]
    threshold_factors: Vec<f64>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        // A closed stdout (e.g. piping into `head`) is not an error.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Dump(args) => cmd_dump(args),
        Command::DumpCase(args) => cmd_dump_case(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn build_config(args: &ConfigArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(kernel) = &args.kernel {
        cfg.kernel = match kernel.to_ascii_lowercase().as_str() {
            "imq" | "inverse-multiquadric" => KernelFamily::InverseMultiquadric,
            "gaussian" => KernelFamily::Gaussian,
            other => {
                return Err(Error::Config(format!(
                    "unknown kernel '{other}' (expected imq or gaussian)"
                )))
            }
        };
    }
    if let Some(mode) = &args.blowup_mode {
        cfg.blowup_mode = match mode.to_ascii_lowercase().as_str() {
            "fixpoint" => BlowupMode::Fixpoint,
            "single-pass" => BlowupMode::SinglePass,
            other => {
                return Err(Error::Config(format!(
                    "unknown blowup mode '{other}' (expected fixpoint or single-pass)"
                )))
            }
        };
    }
    if let Some(ind) = &args.indicator {
        cfg.indicator = match ind.to_ascii_lowercase().as_str() {
            "native-norm" => Indicator::NativeNorm,
            "prediction-error" => Indicator::PredictionError,
            other => {
                return Err(Error::Config(format!(
                    "unknown indicator '{other}' (expected native-norm or prediction-error)"
                )))
            }
        };
    }
    if let Some(src) = &args.safe_zone_source {
        cfg.safe_zone_source = match src.to_ascii_lowercase().as_str() {
            "seed" => SafeZoneSource::Seed,
            "grown" => SafeZoneSource::Grown,
            "final" => SafeZoneSource::Final,
            other => {
                return Err(Error::Config(format!(
                    "unknown safe zone source '{other}' (expected seed, grown, or final)"
                )))
            }
        };
    }
    macro_rules! override_field {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = args.$flag {
                cfg.$field = v;
            })*
        };
    }
    override_field! {
        delta => delta,
        n_neighbors => n_neighbors,
        m_candidates => m_candidates,
        threshold_factor => threshold_factor,
        grid_step => grid_step,
        seed => seed,
        points => n_points,
        margin => margin,
        target_q => target_q,
        jitter => jitter,
        workers => workers,
    }
    if let Some(v) = args.min_component_size {
        cfg.min_component_size = Some(v);
    }
    if args.skip_phase3 {
        cfg.skip_phase3 = true;
    }
    cfg.validate()?;
    if cfg.workers > 0 {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }
    Ok(cfg)
}

/// Resolves the data source into sites, values, and an optional case.
fn load_data(
    data: &DataArgs,
    cfg: &PipelineConfig,
) -> Result<(PointSet2, Vec<f64>, Option<BenchCase>)> {
    match (&data.case, &data.data) {
        (Some(case), None) => {
            let case: BenchCase = case.parse()?;
            let sites = synthesize_sites::<f64>(
                cfg.n_points,
                cfg.margin,
                cfg.target_q,
                cfg.jitter,
                cfg.seed,
            )?;
            let values: Vec<f64> = sites.points.points().iter().map(|p| case.eval(p)).collect();
            Ok((sites.points, values, Some(case)))
        }
        (None, Some(path)) => {
            let (ps, values) = io::read_points_csv(path)?;
            let values = values.ok_or_else(|| {
                Error::CsvInput("pipeline input needs an f column".to_string())
            })?;
            Ok((ps, values, None))
        }
        _ => Err(Error::Config(
            "exactly one of --case or --data is required".to_string(),
        )),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = build_config(&args.config)?;
    let (ps, values, case) = load_data(&args.data, &cfg)?;
    let started = Instant::now();
    let artifacts = run_pipeline(&cfg, &ps, &values, case)?;
    let elapsed = started.elapsed();

    fs::create_dir_all(&args.out_dir)?;
    let report = RunReport::new(&cfg, case, ps.len(), &artifacts);
    io::write_report_json(writer(&args.out_dir.join("report.json"))?, &report)?;
    io::write_classes_csv(
        writer(&args.out_dir.join("classes.csv"))?,
        &ps,
        &artifacts.partition,
    )?;
    io::write_sigma_csv(writer(&args.out_dir.join("sigma.csv"))?, &artifacts.scores)?;
    if let Some(rows) = &artifacts.grid {
        io::write_grid_errors_csv(writer(&args.out_dir.join("grid_errors.csv"))?, rows)?;
    }

    println!(
        "{}: J={} classified {}/{} (phase2 {}), sweeps={}, q={:.4}, {:.1}s",
        case.map(|c| c.to_string()).unwrap_or_else(|| "data".into()),
        artifacts.partition.j,
        artifacts.report.counts.labeled_final,
        ps.len(),
        artifacts.report.counts.after_blowup,
        artifacts.blowup.sweeps,
        artifacts.q,
        elapsed.as_secs_f64()
    );
    if let Some(linf_safe) = artifacts.report.linf_safe_segmented {
        println!(
            "  segmented: linf_safe={linf_safe:.3e} linf={:.3e}",
            artifacts.report.linf_segmented.unwrap_or(f64::NAN)
        );
        println!(
            "  global:    linf_safe={:.3e} linf={:.3e}",
            artifacts.report.linf_safe_global.unwrap_or(f64::NAN),
            artifacts.report.linf_global.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn cmd_dump(args: DumpArgs) -> Result<()> {
    let cfg = build_config(&args.config)?;
    // Validate the phase name before paying for the run.
    let phase = args.phase.to_ascii_lowercase();
    if !matches!(phase.as_str(), "sigma" | "seeds" | "classes" | "blowup-trace") {
        return Err(Error::UnknownPhase(args.phase));
    }
    let (ps, values, case) = load_data(&args.data, &cfg)?;
    let artifacts = run_pipeline(&cfg, &ps, &values, case)?;
    let out = out_writer(args.out.as_deref())?;
    dump_phase(&phase, out, &ps, &artifacts)
}

fn dump_phase(
    phase: &str,
    out: Box<dyn std::io::Write>,
    ps: &PointSet2,
    artifacts: &RunArtifacts<f64>,
) -> Result<()> {
    match phase {
        "sigma" => io::write_sigma_csv(out, &artifacts.scores),
        "seeds" => io::write_seeds_csv(out, &artifacts.seed_labeling),
        "classes" => io::write_classes_csv(out, ps, &artifacts.partition),
        "blowup-trace" => io::write_blowup_trace(out, &artifacts.blowup.trace),
        other => Err(Error::UnknownPhase(other.to_string())),
    }
}

fn cmd_dump_case(args: DumpCaseArgs) -> Result<()> {
    let cfg = build_config(&args.config)?;
    let case: BenchCase = args.case.parse()?;
    let sites = synthesize_sites::<f64>(
        cfg.n_points,
        cfg.margin,
        cfg.target_q,
        cfg.jitter,
        cfg.seed,
    )?;
    io::write_case_csv(out_writer(args.out.as_deref())?, &sites.points, case)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let base = build_config(&args.config)?;
    let mut out = out_writer(args.out.as_deref())?;
    writeln!(
        out,
        "n_neighbors,delta,threshold_factor,j,classified_phase2,unsure_final,\
         n_misclassified,linf_safe_segmented,linf_segmented,linf_safe_global,linf_global"
    )?;
    for &n in &args.n {
        for &delta in &args.deltas {
            for &threshold in &args.threshold_factors {
                let mut cfg = base.clone();
                cfg.n_neighbors = n;
                cfg.delta = delta;
                cfg.threshold_factor = threshold;
                cfg.validate()?;
                let (ps, values, case) = load_data(&args.data, &cfg)?;
                let artifacts = run_pipeline(&cfg, &ps, &values, case)?;
                let r = &artifacts.report;
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let opt_n = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{n},{delta},{threshold},{},{},{},{},{},{},{},{}",
                    artifacts.partition.j,
                    r.counts.after_blowup,
                    r.counts.unsure_final,
                    opt_n(r.n_misclassified),
                    opt(r.linf_safe_segmented),
                    opt(r.linf_segmented),
                    opt(r.linf_safe_global),
                    opt(r.linf_global),
                )?;
            }
        }
    }
    Ok(())
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn out_writer(path: Option<&Path>) -> Result<Box<dyn std::io::Write>> {
    Ok(match path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            Box::new(BufWriter::new(File::create(path)?))
        }
        None => Box::new(std::io::stdout().lock()),
    })
}
