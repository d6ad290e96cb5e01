#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use steklov::bench::{self, ProblemSpec, ReportFormat};
use steklov::convexify::{self, SamplingConfig, DEFAULT_MARGIN};
use steklov::poly::{parse_poly, Polynomial};
use steklov::solve::{self, SolverConfig, T0Mode};

/// Global minimization of quartic polynomials by Steklov convexification
/// and trajectory tracking.
#[derive(Parser, Debug)]
#[command(name = "steklov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize a polynomial read from a file.
    Solve(SolveArgs),
    /// Print the convexification analysis of a polynomial.
    Info(InfoArgs),
    /// Solve a built-in problem.
    Bench(BenchArgs),
    /// Solve a batch of random normal quartics and report failure counts.
    Batch(BatchArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Polynomial file (`mqp` or `normal` format).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in problem name, e.g. `f1`, `qing:5`, `rosenbrock:4`.
    #[arg(long)]
    problem: Option<String>,
    /// Seed of a random batch instance (needs --n and --ib).
    #[arg(long = "seed-instance", requires_all = ["n", "ib"])]
    seed_instance: Option<u64>,
}

#[derive(Args, Debug)]
struct SolverFlags {
    /// `auto`, `ball` or an explicit positive value.
    #[arg(long, default_value = "auto")]
    t0: String,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    /// ℓ₂ radius for `--t0 ball`.
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Up to five Newton steps on ∇f at the endpoint.
    #[arg(long)]
    polish: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<usize>,
    /// Off-diagonal interval `LO,HI` of a random instance.
    #[arg(long, allow_hyphen_values = true)]
    ib: Option<String>,
    /// Write the trajectory as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
    input: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    problem: String,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    ib: String,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// Worker threads; defaults to $STEKLOV_JOBS, else 1.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

enum Failure {
    Usage(String),
    Solver,
}

impl From<&str> for Failure {
    fn from(s: &str) -> Self {
        Failure::Usage(s.to_string())
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Usage(s)
    }
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("--ib expects LO,HI, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("--ib: `{v}` is not a number"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if !(lo <= hi) {
        return Err(format!("--ib needs LO <= HI, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn read_poly(path: &Path) -> Result<Polynomial, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_poly(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn problem(name: &str) -> Result<ProblemSpec, String> {
    bench::builtin_problem(name).map_err(|e| format!("{e} (known: {})", bench::BUILTIN_NAMES.join(", ")))
}

fn solver_config(flags: &SolverFlags, base: SolverConfig) -> Result<SolverConfig, String> {
    let t0_mode = match flags.t0.as_str() {
        "auto" => T0Mode::AutoNormal,
        "ball" => T0Mode::Ball { l: flags.l },
        v => {
            let t0: f64 = v
                .parse()
                .map_err(|_| format!("--t0 expects auto, ball or a number, got `{v}`"))?;
            if !(t0 > 0.0) || !t0.is_finite() {
                return Err(format!("--t0 must be positive, got {t0}"));
            }
            T0Mode::User(t0)
        }
    };
    if flags.l.is_some_and(|l| !(l > 0.0)) {
        return Err("--L must be positive".into());
    }
    let mut cfg = SolverConfig {
        t0_mode,
        margin: flags.margin,
        polish: flags.polish,
        ..base
    };
    if let Some(r) = flags.rtol {
        cfg.ode_rtol = r;
    }
    if let Some(a) = flags.atol {
        cfg.ode_atol = a;
    }
    if !(cfg.ode_rtol > 0.0 && cfg.ode_atol > 0.0) {
        return Err("tolerances must be positive".into());
    }
    Ok(cfg)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let (f, base) = match (&args.source.input, &args.source.problem, args.source.seed_instance) {
        (Some(path), _, _) => (read_poly(path)?, SolverConfig::default()),
        (_, Some(name), _) => (problem(name)?.polynomial, SolverConfig::default()),
        (_, _, Some(seed)) => {
            let n = args.n.ok_or("--seed-instance needs --n")?;
            if n < 2 {
                return Err(Failure::Usage("--n must be at least 2".into()));
            }
            let ib = parse_interval(args.ib.as_deref().ok_or("--seed-instance needs --ib")?)?;
            (bench::random_normal(n, ib, seed).into(), SolverConfig::batch())
        }
        _ => unreachable!("clap enforces one source"),
    };
    let cfg = solver_config(&args.solver, base)?;
    let cfg = SolverConfig {
        trace_every: args.trace.as_ref().map(|_| 1),
        ..cfg
    };
    let out = solve::solve(&f, &cfg);
    if let (Some(path), Some(traj)) = (&args.trace, &out.trajectory) {
        std::fs::write(path, solve::trace_csv(traj)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if args.json {
        println!("{}", to_json(&out.report));
    } else {
        print!("{}", out.report.summary());
    }
    if out.report.status.is_success() {
        Ok(())
    } else {
        Err(Failure::Solver)
    }
}

fn cmd_info(args: InfoArgs) -> Result<(), Failure> {
    let f = match (&args.input, &args.problem) {
        (Some(path), _) => read_poly(path)?,
        (_, Some(name)) => problem(name)?.polynomial,
        _ => unreachable!("clap enforces one source"),
    };
    let cfg = SamplingConfig {
        samples: args.samples.max(1),
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let d = convexify::dossier(&f, args.l, args.margin, &cfg, &mut rng).map_err(|e| e.to_string())?;
    if args.json {
        println!("{}", to_json(&d));
        return Ok(());
    }
    println!("dimension        {}", d.dim);
    println!("degree           {}", d.degree);
    println!("normal form      {}", d.normal_form);
    println!("kappa            {}", d.kappa);
    println!(
        "C spectrum       [{:.12}, {:.12}]  {:?}  (null dim {})",
        d.spectrum.lambda_min_c, d.spectrum.lambda_max_c, d.spectrum.classification, d.spectrum.null_dim_estimate
    );
    if let Some(p) = &d.t0_normal {
        println!("t0 (normal)      bound {:.6}  t0 {:.6}", p.bound, p.t0);
    }
    if let Some(r) = &d.ball_radius {
        println!("minimizer ball   L_inf {:.6}  eps_hat {:.6e}  L2 {:.6}", r.l_inf, r.eps_hat, r.l2);
    }
    if let Some(l) = d.l {
        println!("radius L         {l:.6}");
    }
    if let Some(t) = &d.theta_l {
        let kind = if t.guaranteed { "guaranteed" } else { "sampled" };
        println!("theta_L          {:.12} ({kind})", t.value);
    }
    if let Some(p) = &d.t0_ball {
        println!("t0 (ball)        bound {:.6}  t0 {:.6}", p.bound, p.t0);
    }
    if let Some(s) = &d.null_space {
        println!(
            "null-space phi   min {:.12}  max {:.12}  over {} samples",
            s.min_phi, s.max_phi, s.samples
        );
    }
    if let Some(note) = &d.note {
        println!("note             {note}");
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let spec = problem(&args.problem)?;
    let cfg = bench::bench_config(&spec, &solver_config(&args.solver, SolverConfig::default())?);
    let report = solve::run_algorithm1(&spec.polynomial, &cfg);
    if args.json {
        let v = json!({
            "problem": spec.name,
            "known_value": spec.known_value,
            "published_t0": spec.published_t0,
            "better_value": spec.better_value,
            "note": spec.note,
            "report": report,
        });
        println!("{}", to_json(&v));
    } else {
        println!("problem    {}", spec.name);
        print!("{}", report.summary());
        if let Some(v) = spec.known_value {
            println!("reported   {v:.15e}  (difference {:.3e})", report.f_star - v);
        }
        if let Some(v) = spec.better_value {
            println!("better     {v:.15e}");
        }
        if let Some(note) = &spec.note {
            println!("note       {note}");
        }
    }
    if report.status.is_success() {
        Ok(())
    } else {
        Err(Failure::Solver)
    }
}

fn cmd_batch(args: BatchArgs) -> Result<(), Failure> {
    if args.n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    if args.count == 0 {
        return Err(Failure::Usage("--count must be at least 1".into()));
    }
    let ib = parse_interval(&args.ib)?;
    let jobs = match args.jobs {
        Some(j) => j,
        None => match std::env::var("STEKLOV_JOBS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| format!("STEKLOV_JOBS must be a positive integer, got `{v}`"))?,
            Err(_) => 1,
        },
    }
    .max(1);
    let stats = bench::batch_run(args.n, ib, args.count, args.seed, &SolverConfig::batch(), jobs);
    let format = match (args.format, &args.out) {
        (Some(Format::Json), _) => ReportFormat::Json,
        (Some(Format::Csv), _) => ReportFormat::Csv,
        (None, Some(p)) if p.extension().is_some_and(|e| e == "json") => ReportFormat::Json,
        _ => ReportFormat::Csv,
    };
    let text = bench::emit_batch(std::slice::from_ref(&stats), format);
    match &args.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    eprintln!(
        "n={} I_B=[{}, {}] count={} failures={} ({}%)",
        stats.n,
        ib.0,
        ib.1,
        stats.count,
        stats.failures,
        bench::format_sig(100.0 * stats.failure_rate)
    );
    for s in &stats.seeds_of_failures {
        eprintln!("  failed: solve --seed-instance {s} --n {} --ib {},{}", stats.n, ib.0, ib.1);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Info(a) => cmd_info(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Batch(a) => cmd_batch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Solver) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
