use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use sqsolve_cli::experiment::{save_report, write_report, ExperimentSpec, ReportFormat};
use sqsolve_cli::gen::{GeneratorSpec, SpectrumProfile};
use sqsolve_cli::solve::{effective_schedule, run_solver, DescriptionFile, SolverId};
use sqsolve_cli::{mtx, resolve_seed};
use sqsolve_core::{oracle, OversampledAccess, SolverConfig};

/// Randomized linear-system solving with sampling-and-query access.
#[derive(Parser)]
#[command(name = "sqsolve", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance with a controlled spectrum.
    Gen(GenArgs),
    /// Solve a linear system and write a solution description.
    Solve(SolveArgs),
    /// Draw indices from the solution's squared-magnitude distribution.
    Sample(SampleArgs),
    /// Query entries of a described solution.
    Query(QueryArgs),
    /// Estimate the norm of a described solution.
    Norm(NormArgs),
    /// Run a multi-trial experiment from a JSON spec.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Condition number target of the spectrum profile.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Profile shape: equal, linear or geometric.
    #[arg(long, default_value = "linear")]
    profile: String,
    /// Maximum nonzeros per row (sparse output).
    #[arg(long)]
    sparsity: Option<usize>,
    /// Generate a symmetric positive definite matrix.
    #[arg(long)]
    spd: bool,
    /// Add an orthogonal residual of this norm (inconsistent system).
    #[arg(long, default_value_t = 0.0)]
    residual: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output matrix path (.mtx).
    #[arg(long)]
    out: PathBuf,
    /// Optional right-hand-side output path.
    #[arg(long)]
    rhs_out: Option<PathBuf>,
    /// Optional planted-solution output path.
    #[arg(long)]
    solution_out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    /// kaczmarz|dual|dual-sampled|averaged|averaged-exact|cd|cd-averaged
    #[arg(long)]
    solver: SolverId,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the iteration schedule.
    #[arg(long)]
    iters: Option<usize>,
    /// Override the inner-product sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the batch size of averaged variants.
    #[arg(long)]
    batch: Option<usize>,
    /// Stop early once the residual drops below this norm.
    #[arg(long)]
    stop_residual: Option<f64>,
    /// Where to write the solution description JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the per-step trace JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Solution description JSON produced by `solve`.
    #[arg(long)]
    description: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    description: PathBuf,
    /// Entry index; repeatable.
    #[arg(long = "index", required = true)]
    indices: Vec<usize>,
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    description: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Report output path; falls back to the spec's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; falls back to the spec's `format`, else csv.
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Concurrent trials.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override the spec's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec's trial count.
    #[arg(long)]
    trials: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Query(args) => cmd_query(args),
        Command::Norm(args) => cmd_norm(args),
        Command::Bench(args) => cmd_bench(args),
    };
    if let Err(err) = result {
        eprintln!("{}", json!({ "error": { "message": format!("{err:#}") } }));
        std::process::exit(1);
    }
}

fn parse_profile(name: &str, kappa: f64) -> anyhow::Result<SpectrumProfile> {
    Ok(match name {
        "equal" => SpectrumProfile::Equal,
        "linear" => SpectrumProfile::Linear { kappa },
        "geometric" => SpectrumProfile::Geometric { kappa },
        other => bail!("unknown profile '{other}', expected equal|linear|geometric"),
    })
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let spec = GeneratorSpec {
        rows: args.rows,
        cols: args.cols,
        profile: parse_profile(&args.profile, args.kappa)?,
        sparsity: args.sparsity,
        spd: args.spd,
        consistent: args.residual == 0.0,
        residual: args.residual,
        seed: resolve_seed(args.seed),
    };
    let inst = sqsolve_cli::generate(&spec)?;
    mtx::save_matrix_market(&args.out, &inst.matrix)?;
    if let Some(path) = &args.rhs_out {
        mtx::save_vector(path, &inst.b)?;
    }
    if let Some(path) = &args.solution_out {
        mtx::save_vector(path, &inst.x_planted)?;
    }
    println!(
        "{}",
        json!({
            "matrix": args.out,
            "rows": args.rows,
            "cols": args.cols,
            "sparsity": args.sparsity,
            "kappa": inst.summary.kappa,
            "kappa_f": inst.summary.kappa_f,
            "frobenius": inst.summary.frobenius,
            "seed": spec.seed,
        })
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<()> {
    let data = mtx::load_matrix_market(&args.matrix)?;
    let b = mtx::load_vector(&args.rhs)?;
    let dense = data.to_dense();
    let summary = oracle::spectral_summary(&dense);
    let x_star = oracle::min_norm_least_squares(&dense, &b)
        .with_context(|| "right-hand side does not match the matrix")?;
    let msq = Arc::new(data.to_matrix_sq()?);

    let cfg = SolverConfig {
        epsilon: args.eps,
        delta: args.delta,
        kappa: summary.kappa.max(1.0),
        kappa_f: summary.kappa_f.max(summary.kappa.max(1.0)),
        sample_count: args.samples,
        iterations: args.iters,
        batch: args.batch,
        seed: resolve_seed(args.seed),
        track_trace: args.trace.is_some(),
        early_stop: args.stop_residual,
    };
    let (d, t, q) = effective_schedule(args.solver, &cfg, &msq)?;
    let outcome = run_solver(args.solver, &msq, &b, &cfg, Some(&x_star))?;

    if let Some(path) = &args.out {
        DescriptionFile::new(&outcome.description, &args.matrix).save(path)?;
    }
    if let Some(path) = &args.trace {
        sqsolve_cli::solve::save_trace(&outcome.trace, path)?;
    }

    let x_norm = outcome.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let err: f64 = outcome
        .x
        .iter()
        .zip(&x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let x_star_norm = x_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = msq.residual_norm(&outcome.x, &b)?;
    println!(
        "{}",
        json!({
            "solver": args.solver.to_string(),
            "seed": cfg.seed,
            "d": d,
            "t": t,
            "q": q,
            "iterations": outcome.trace.iterations,
            "support": outcome.description.support_len(),
            "residual": residual,
            "relative_error": if x_star_norm > 0.0 { err / x_star_norm } else { f64::NAN },
            "solution_norm": x_norm,
            "kappa": summary.kappa,
            "kappa_f": summary.kappa_f,
            "out": args.out,
        })
    );
    Ok(())
}

fn load_access(path: &std::path::Path) -> anyhow::Result<OversampledAccess> {
    let file = DescriptionFile::load(path)?;
    let base = path.parent().unwrap_or_else(|| std::path::Path::new("."));
    let desc = file.into_description(base)?;
    Ok(OversampledAccess::build(&desc)?)
}

fn cmd_sample(args: SampleArgs) -> anyhow::Result<()> {
    let mut access = load_access(&args.description)?;
    let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(args.seed));
    access.bootstrap_phi_hat(&mut rng)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for _ in 0..args.count {
        let (index, attempts) = access.rejection_sample_with_attempts(&mut rng)?;
        use std::io::Write;
        writeln!(out, "{}", json!({ "index": index, "attempts": attempts }))?;
    }
    Ok(())
}

fn cmd_query(args: QueryArgs) -> anyhow::Result<()> {
    let file = DescriptionFile::load(&args.description)?;
    let base = args
        .description
        .parent()
        .unwrap_or_else(|| std::path::Path::new("."));
    let desc = file.into_description(base)?;
    for &j in &args.indices {
        let value = desc.query_entry(j)?;
        println!("{}", json!({ "index": j, "value": value }));
    }
    Ok(())
}

fn cmd_norm(args: NormArgs) -> anyhow::Result<()> {
    let mut access = load_access(&args.description)?;
    let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(args.seed));
    access.bootstrap_phi_hat(&mut rng)?;
    let est = access.estimate_norm(args.eps, args.delta, &mut rng)?;
    println!(
        "{}",
        json!({
            "estimate": est.value,
            "degenerate": est.degenerate,
            "groups": est.groups,
            "samples_per_group": est.samples_per_group,
            "phi_hat": access.phi_hat(),
        })
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let file = std::fs::File::open(&args.spec)
        .with_context(|| format!("cannot open spec {}", args.spec.display()))?;
    let mut spec: ExperimentSpec = serde_json::from_reader(std::io::BufReader::new(file))?;
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    let report = sqsolve_cli::run_experiment(&spec, args.jobs.max(1))?;
    let format = args.format.or(spec.format).unwrap_or(ReportFormat::Csv);
    match args.out.as_ref().or(spec.output.as_ref()) {
        Some(path) => save_report(&report, path, format)?,
        None => write_report(&report, format, std::io::stdout().lock())?,
    }
    eprintln!("{}", serde_json::to_string(&report.summary)?);
    Ok(())
}
