//! `cmplq`: design, sweep, evaluate, and benchmark comparison-limited
//! vector quantizers from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmplq::{
    estimate_mse, evaluate_codebook_mse, generalized_lloyd_vector, load_design,
    matched_comparator_baseline, multi_restart, parse_k_list, read_file_config,
    region_count_upper_bound, run_experiment, save_design, Error, EstimationParams,
    ExperimentSpec, FileConfig, OptimizerParams, Result, RngStream, SourceKind, SourceModel,
};

#[derive(Parser)]
#[command(
    name = "cmplq",
    version,
    about = "Design and evaluate comparison-limited vector quantizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one quantizer and write it as JSON.
    Design(DesignArgs),
    /// Sweep comparator counts; write results.csv and per-k design files.
    Sweep(SweepArgs),
    /// Re-estimate the distortion of a saved design.
    Eval(EvalArgs),
    /// Print Lloyd-Max baselines for a comparator budget.
    Baseline(BaselineArgs),
}

/// Optimizer and estimation knobs shared by `design` and `sweep`; unset
/// values fall back to the config file, then to the defaults.
#[derive(Args)]
struct TuningArgs {
    /// Optimizer iterations per restart.
    #[arg(long)]
    iterations: Option<usize>,
    /// Candidate configurations proposed per iteration.
    #[arg(long)]
    candidates: Option<usize>,
    /// Independent random restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Scale of the first global perturbation.
    #[arg(long)]
    initial_step: Option<f64>,
    /// Geometric decay of the perturbation scale per iteration.
    #[arg(long)]
    step_decay: Option<f64>,
    /// Decay rate of the global-update probability exp(-decay * i).
    #[arg(long)]
    global_prob_decay: Option<f64>,
    /// Sample points per centroid-estimation pass.
    #[arg(long)]
    points_centroids: Option<usize>,
    /// Sample points per distortion estimate.
    #[arg(long)]
    points_mse: Option<usize>,
    /// Occupied regions with fewer points trigger a top-up pass.
    #[arg(long)]
    min_region_points: Option<usize>,
    /// Maximum extra centroid passes for under-sampled regions.
    #[arg(long)]
    max_topup_rounds: Option<usize>,
}

#[derive(Args)]
struct DesignArgs {
    /// Source distribution: gaussian | uniform.
    #[arg(long)]
    source: Option<String>,
    /// Source dimension d.
    #[arg(long)]
    dim: Option<usize>,
    /// Comparator budget k.
    #[arg(long)]
    comparators: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Source distribution: gaussian | uniform.
    #[arg(long)]
    source: Option<String>,
    /// Source dimension d.
    #[arg(long)]
    dim: Option<usize>,
    /// Comparator counts: `5`, `1..6` (inclusive), or `1..3,5`.
    #[arg(long)]
    k: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for results.csv and design_k<k>.json files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Design JSON file to evaluate.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Sample points for the distortion estimate.
    #[arg(long)]
    points_mse: Option<usize>,
    /// Seed of the evaluation stream.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; explicit flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Source distribution: gaussian | uniform.
    #[arg(long)]
    source: Option<String>,
    /// Source dimension d.
    #[arg(long)]
    dim: Option<usize>,
    /// Comparator budget k.
    #[arg(long)]
    comparators: Option<usize>,
    /// Which baseline to print: points | comparators | both.
    #[arg(long)]
    baseline: Option<String>,
    /// Reconstruction points for the matched-points baseline; defaults to
    /// the maximum region count r(d, k).
    #[arg(long)]
    regions: Option<usize>,
    /// Seed for codebook training and evaluation.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample points for the Monte Carlo distortion estimates.
    #[arg(long)]
    points_mse: Option<usize>,
    /// JSON config file; explicit flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design(args) => run_design(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Eval(args) => run_eval(args),
        Command::Baseline(args) => run_baseline(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => read_file_config(p),
        None => Ok(FileConfig::default()),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| {
        Error::InvalidSpec(format!("missing required option `{flag}` (flag or config file)"))
    })
}

fn resolve_source(flag: Option<String>, cfg: &FileConfig) -> Result<SourceKind> {
    require(flag.or_else(|| cfg.source.clone()), "--source")?.parse()
}

fn build_optimizer(t: &TuningArgs, cfg: &FileConfig) -> OptimizerParams {
    let mut p = OptimizerParams::default();
    if let Some(v) = t.iterations.or(cfg.iterations) {
        p.total_iterations = v;
    }
    if let Some(v) = t.candidates.or(cfg.candidates) {
        p.candidates_per_iteration = v;
    }
    if let Some(v) = t.restarts.or(cfg.restarts) {
        p.restarts = v;
    }
    if let Some(v) = t.initial_step.or(cfg.initial_step) {
        p.initial_step = v;
    }
    if let Some(v) = t.step_decay.or(cfg.step_decay) {
        p.step_decay = v;
    }
    if let Some(v) = t.global_prob_decay.or(cfg.global_prob_decay) {
        p.global_prob_decay = v;
    }
    if let Some(v) = t.points_centroids.or(cfg.points_centroids) {
        p.estimation.n_points_centroids = v;
    }
    if let Some(v) = t.points_mse.or(cfg.points_mse) {
        p.estimation.n_points_mse = v;
    }
    if let Some(v) = t.min_region_points.or(cfg.min_region_points) {
        p.estimation.min_points_per_region = v;
    }
    if let Some(v) = t.max_topup_rounds.or(cfg.max_topup_rounds) {
        p.estimation.max_topup_rounds = v;
    }
    p
}

fn run_design(args: DesignArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let kind = resolve_source(args.source, &cfg)?;
    let dim = args.dim.or(cfg.dim).unwrap_or(1);
    let k = require(args.comparators.or(cfg.comparators), "--comparators")?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out = require(args.out.or_else(|| cfg.out.clone()), "--out")?;
    let params = build_optimizer(&args.tuning, &cfg);

    let source = SourceModel::new(kind, dim)?;
    let outcome = multi_restart(&source, k, &params, &RngStream::new(seed, 0))?;
    for r in &outcome.restarts {
        println!(
            "restart {}: mse={:.8e} regions={}",
            r.restart, r.mse_estimate, r.occupied_regions
        );
    }
    save_design(&outcome.best, &out)?;
    println!(
        "wrote {}: source={kind} d={dim} k={k} regions={} mse={:.8e}",
        out.display(),
        outcome.best.codebook().len(),
        outcome.best.mse_estimate()
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let kind = resolve_source(args.source, &cfg)?;
    let dim = args.dim.or(cfg.dim).unwrap_or(1);
    let k_text = require(args.k.or_else(|| cfg.k.clone()), "--k")?;
    let k_list = parse_k_list(&k_text)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out_dir = require(args.out.or_else(|| cfg.out.clone()), "--out")?;
    let optimizer = build_optimizer(&args.tuning, &cfg);

    let spec = ExperimentSpec {
        source: kind,
        dim,
        k_list,
        optimizer,
        seed,
        out_dir,
    };
    let result = run_experiment(&spec)?;
    for r in &result.records {
        println!(
            "k={}: mse_ours={:.8e} regions={} lloyd_points={:.8e} lloyd_comparators={:.8e} ratio={:.4}",
            r.k, r.mse_ours, r.regions, r.mse_lloyd_points, r.mse_lloyd_comparators, r.ratio
        );
    }
    println!("wrote {}", spec.out_dir.join("results.csv").display());
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let path = require(args.design.or_else(|| cfg.design.clone()), "--design")?;
    let n_points = args
        .points_mse
        .or(cfg.points_mse)
        .unwrap_or_else(|| EstimationParams::default().n_points_mse);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);

    let design = load_design(&path)?;
    let params = EstimationParams {
        n_points_mse: n_points,
        ..EstimationParams::default()
    };
    let estimate = estimate_mse(&design, &params, &mut RngStream::new(seed, 0))?;
    println!(
        "design {}: source={} d={} k={} regions={} stored_mse={:.8e}",
        path.display(),
        design.source().kind(),
        design.dim(),
        design.k(),
        design.codebook().len(),
        design.mse_estimate()
    );
    println!(
        "mse={:.8e} stderr={:.8e} points={}",
        estimate.value, estimate.std_error, estimate.n_points
    );
    Ok(())
}

fn run_baseline(args: BaselineArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let kind = resolve_source(args.source, &cfg)?;
    let dim = args.dim.or(cfg.dim).unwrap_or(1);
    let k = require(args.comparators.or(cfg.comparators), "--comparators")?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let choice = args
        .baseline
        .or_else(|| cfg.baseline.clone())
        .unwrap_or_else(|| "both".into());
    let (points, comparators) = match choice.as_str() {
        "points" => (true, false),
        "comparators" => (false, true),
        "both" => (true, true),
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown baseline `{other}`: expected `points`, `comparators`, or `both`"
            )))
        }
    };

    let source = SourceModel::new(kind, dim)?;
    let est = EstimationParams {
        n_points_mse: args
            .points_mse
            .or(cfg.points_mse)
            .unwrap_or_else(|| EstimationParams::default().n_points_mse),
        ..EstimationParams::default()
    };

    if comparators {
        let product = matched_comparator_baseline(&source, k)?;
        let mc = evaluate_codebook_mse(
            &product.codebook,
            &source,
            &est,
            &mut RngStream::new(seed, 1),
        )?;
        println!(
            "matched-comparators: split={:?} points={} analytic_mse={:.8e} mc_mse={:.8e} stderr={:.8e}",
            product.split,
            product.codebook.len(),
            product.analytic_mse,
            mc.value,
            mc.std_error
        );
    }
    if points {
        let n = match args.regions.or(cfg.regions) {
            Some(n) => n,
            None => {
                let bound = region_count_upper_bound(dim, k);
                usize::try_from(bound)
                    .ok()
                    .filter(|&n| n <= 100_000)
                    .ok_or_else(|| {
                        Error::InvalidSpec(format!(
                            "matched-points budget r({dim},{k}) = {bound} is too large; pass --regions"
                        ))
                    })?
            }
        };
        let samples = (100 * n).max(est.n_points_centroids);
        let codebook =
            generalized_lloyd_vector(&source, n, samples, 100, &mut RngStream::new(seed, 2))?;
        let mc = evaluate_codebook_mse(&codebook, &source, &est, &mut RngStream::new(seed, 3))?;
        println!(
            "matched-points: points={} mse={:.8e} stderr={:.8e}",
            codebook.len(),
            mc.value,
            mc.std_error
        );
    }
    Ok(())
}
