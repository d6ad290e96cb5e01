//! Experiment harness: built-in problems, random normal instances, batch
//! statistics and report emitters.

pub mod problems;
mod report;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SymMatrix;
use crate::poly::NormalQuartic;
use crate::solve::{run_algorithm1, SolveReport, SolverConfig, T0Mode};

pub use problems::{builtin_problem, ProblemSpec, BUILTIN_NAMES};
pub use report::{batch_csv, emit_batch, emit_solves, format_sig, ReportFormat, BATCH_CSV_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("{0}")]
    InvalidParameter(String),
}

/// A random normal quartic: `aᵢ ∈ [1,2]`, `bᵢᵢ ∈ [−1,1]`, `bᵢⱼ ∈ I_B` for
/// `i < j`, `dᵢ ∈ [−1,1]`, all uniform from a ChaCha8 stream seeded by `seed`.
pub fn random_normal(n: usize, ib: (f64, f64), seed: u64) -> NormalQuartic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |lo: f64, hi: f64| if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    let a = (0..n).map(|_| uniform(1.0, 2.0)).collect();
    let mut b = SymMatrix::zeros(n);
    for i in 0..n {
        b.set(i, i, uniform(-1.0, 1.0));
        for j in i + 1..n {
            b.set(i, j, uniform(ib.0, ib.1));
        }
    }
    let d = (0..n).map(|_| uniform(-1.0, 1.0)).collect();
    NormalQuartic::new(a, b, d, 0.0).expect("dimensions agree")
}

/// Per-instance seeds of a batch, drawn from a ChaCha8 stream seeded by `seed`.
pub fn instance_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen()).collect()
}

/// The configuration a built-in problem is benchmarked with: its published
/// `t₀` when there is one.
pub fn bench_config(spec: &ProblemSpec, base: &SolverConfig) -> SolverConfig {
    let mut cfg = base.clone();
    if let (T0Mode::AutoNormal, Some(t0)) = (cfg.t0_mode, spec.published_t0) {
        cfg.t0_mode = T0Mode::User(t0);
    }
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub n: usize,
    #[serde(rename = "interval_IB")]
    pub interval_ib: (f64, f64),
    pub count: usize,
    pub seed: u64,
    pub failures: usize,
    pub failure_rate: f64,
    pub seeds_of_failures: Vec<u64>,
    /// Successful runs whose endpoint Hessian was not positive definite.
    pub non_pd_successes: usize,
    pub mean_wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct InstanceOutcome {
    pub seed: u64,
    pub report: SolveReport,
}

/// Solves `count` random instances and tallies failures. `jobs` worker
/// threads are used; results do not depend on it apart from timings.
pub fn batch_run_detailed(
    n: usize,
    ib: (f64, f64),
    count: usize,
    seed: u64,
    cfg: &SolverConfig,
    jobs: usize,
) -> (BatchStats, Vec<InstanceOutcome>) {
    let seeds = instance_seeds(seed, count);
    let work = |&s: &u64| InstanceOutcome {
        seed: s,
        report: run_algorithm1(&random_normal(n, ib, s).into(), cfg),
    };
    let outcomes: Vec<InstanceOutcome> = if jobs <= 1 {
        seeds.iter().map(work).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| seeds.par_iter().map(work).collect()),
            Err(_) => seeds.iter().map(work).collect(),
        }
    };
    let failed: Vec<u64> = outcomes
        .iter()
        .filter(|o| !o.report.status.is_success())
        .map(|o| o.seed)
        .collect();
    let non_pd = outcomes
        .iter()
        .filter(|o| o.report.status.is_success() && !o.report.hessian_pd)
        .count();
    let total_time: f64 = outcomes.iter().map(|o| o.report.wall_time).sum();
    let stats = BatchStats {
        n,
        interval_ib: ib,
        count,
        seed,
        failures: failed.len(),
        failure_rate: if count == 0 { 0.0 } else { failed.len() as f64 / count as f64 },
        seeds_of_failures: failed,
        non_pd_successes: non_pd,
        mean_wall_time: if count == 0 { 0.0 } else { total_time / count as f64 },
    };
    (stats, outcomes)
}

pub fn batch_run(n: usize, ib: (f64, f64), count: usize, seed: u64, cfg: &SolverConfig, jobs: usize) -> BatchStats {
    batch_run_detailed(n, ib, count, seed, cfg, jobs).0
}
