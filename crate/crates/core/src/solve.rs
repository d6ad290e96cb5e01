//! The trajectory method end to end: minimize the convexified `μ(·, t₀)` by
//! Newton's method, follow the stationary path `∇ₓμ(x(t), t) = 0` from `t₀`
//! down to `t = 0`, and certify the endpoint.

use std::cell::Cell;
use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convexify::{
    self, Classification, ConvexifyError, ConvexifyPlan, SamplingConfig, DEFAULT_MARGIN,
};
use crate::linalg::{self, LinalgError, DEFAULT_RCOND_THRESHOLD};
use crate::ode::{self, DopriOptions, OdeError};
use crate::poly::Polynomial;
use crate::steklov::{SteklovCoeffs, SteklovError};

/// Endpoint gradient above which a run counts as failed.
pub const FAILURE_GRAD_TOL: f64 = 1e-6;

/// An integrator stall whose nearby Hessians had rcond below this is reported
/// as a fold of the path rather than a plain step failure.
pub const FOLD_RCOND: f64 = 1e-8;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;
const POLISH_STEPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T0Mode {
    /// `t₀` from the normal-form threshold; general quartics fall back to `Ball`.
    AutoNormal,
    /// Local threshold on an ℓ₂ ball; `l = None` picks the radius automatically.
    Ball { l: Option<f64> },
    User(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t0_mode: T0Mode,
    pub margin: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub rcond_threshold: f64,
    pub polish: bool,
    /// Record every k-th accepted step; `None` keeps only the two ends.
    pub trace_every: Option<usize>,
    pub sampling: SamplingConfig,
    pub sampling_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t0_mode: T0Mode::AutoNormal,
            margin: DEFAULT_MARGIN,
            newton_tol: 1e-12,
            newton_max_iters: 200,
            ode_rtol: 1e-12,
            ode_atol: 1e-12,
            rcond_threshold: DEFAULT_RCOND_THRESHOLD,
            polish: false,
            trace_every: Some(1),
            sampling: SamplingConfig::default(),
            sampling_seed: 0,
        }
    }
}

impl SolverConfig {
    /// Looser settings used for large random batches.
    pub fn batch() -> Self {
        Self {
            newton_tol: 1e-10,
            ode_rtol: 1e-8,
            ode_atol: 1e-8,
            trace_every: None,
            ..Self::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("Newton did not converge in {iters} iterations (|grad mu|_inf = {grad_inf:e})")]
    NewtonNoConvergence { iters: usize, grad_inf: f64 },
    #[error("line search failed at |grad mu|_inf = {grad_inf:e}")]
    LineSearch { grad_inf: f64 },
    #[error("Hessian of mu(., t0) is near-singular during Newton (rcond = {rcond:e}); t0 may not convexify")]
    NewtonSingular { rcond: f64 },
    #[error("t0 must be positive, got {0}")]
    InvalidT0(f64),
    #[error(transparent)]
    Steklov(#[from] SteklovError),
    #[error(transparent)]
    Convexify(#[from] ConvexifyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub iters: usize,
    pub grad_inf: f64,
    /// Stopped on roundoff stagnation rather than on `newton_tol`.
    pub stagnated: bool,
}

/// Damped Newton on `∇ₓμ(·, t0)` from `start`, merit `‖∇ₓμ‖₂²`.
pub fn minimize_convexified(
    s: &SteklovCoeffs<'_>,
    t0: f64,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<NewtonResult, SolveError> {
    let mut x = start.to_vec();
    let mut g = s.grad_x(&x, t0)?;
    let mut merit = linalg::dot(&g, &g);
    for iter in 0..=cfg.newton_max_iters {
        let grad_inf = linalg::norm_inf(&g);
        if grad_inf <= cfg.newton_tol {
            return Ok(NewtonResult {
                x,
                iters: iter,
                grad_inf,
                stagnated: false,
            });
        }
        if iter == cfg.newton_max_iters {
            return Err(SolveError::NewtonNoConvergence { iters: iter, grad_inf });
        }
        let h = s.hess_x(&x, t0)?;
        let step = match linalg::solve_sym(&h, &g, cfg.rcond_threshold) {
            Ok(sol) => sol.x,
            Err(LinalgError::NearSingular { rcond }) => return Err(SolveError::NewtonSingular { rcond }),
            Err(e) => return Err(e.into()),
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, di)| xi - alpha * di).collect();
            let gt = s.grad_x(&trial, t0)?;
            let mt = linalg::dot(&gt, &gt);
            if mt <= (1.0 - 2.0 * ARMIJO * alpha) * merit {
                accepted = Some((trial, gt, mt));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xn, gn, mn)) => {
                x = xn;
                g = gn;
                merit = mn;
            }
            None => {
                // a Newton step at the roundoff level cannot reduce the gradient further
                let scale = 1.0 + linalg::norm_inf(&x);
                if linalg::norm_inf(&step) <= 1e-10 * scale {
                    return Ok(NewtonResult {
                        x,
                        iters: iter,
                        grad_inf,
                        stagnated: true,
                    });
                }
                return Err(SolveError::LineSearch { grad_inf });
            }
        }
    }
    unreachable!("loop returns on the final iteration")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    ReachedZero,
    NearSingularHessian { t: f64, rcond: f64 },
    StepFailure { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    /// `(t, x(t))`, `t` decreasing from `t₀`.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub status: TrajectoryStatus,
    pub x_final: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    pub min_rcond: f64,
}

#[derive(Debug, Clone)]
struct RhsFailure {
    rcond: f64,
    other: Option<String>,
}

impl std::fmt::Display for RhsFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.other {
            Some(msg) => f.write_str(msg),
            None => write!(f, "near-singular Hessian (rcond = {:e})", self.rcond),
        }
    }
}

/// Integrates `ẋ = −[∇ₓₓμ(x, t)]⁻¹ ∇ₜₓμ(x, t)` from `(x0, t0)` to `t = 0`.
pub fn trajectory(s: &SteklovCoeffs<'_>, x0: &[f64], t0: f64, cfg: &SolverConfig) -> TrajectoryResult {
    let min_rcond = Cell::new(f64::INFINITY);
    // smallest rcond seen since the last accepted step
    let recent_rcond = Cell::new(f64::INFINITY);
    let rhs = |t: f64, x: &[f64]| -> Result<Vec<f64>, RhsFailure> {
        let fail = |e: SteklovError| RhsFailure {
            rcond: f64::NAN,
            other: Some(e.to_string()),
        };
        let h = s.hess_x(x, t).map_err(fail)?;
        let b = s.grad_tx(x, t).map_err(fail)?;
        match linalg::solve_sym(&h, &b, cfg.rcond_threshold) {
            Ok(sol) => {
                min_rcond.set(min_rcond.get().min(sol.rcond));
                recent_rcond.set(recent_rcond.get().min(sol.rcond));
                Ok(sol.x.into_iter().map(|v| -v).collect())
            }
            Err(LinalgError::NearSingular { rcond }) => {
                min_rcond.set(min_rcond.get().min(rcond));
                Err(RhsFailure { rcond, other: None })
            }
            Err(e) => Err(RhsFailure {
                rcond: f64::NAN,
                other: Some(e.to_string()),
            }),
        }
    };

    let opts = DopriOptions {
        rtol: cfg.ode_rtol,
        atol: cfg.ode_atol,
        ..Default::default()
    };
    let mut samples = vec![(t0, x0.to_vec())];
    let mut last = (t0, x0.to_vec());
    let mut count = 0usize;
    let stride = cfg.trace_every;
    let result = ode::integrate(rhs, t0, 0.0, x0, &opts, |t, y| {
        count += 1;
        recent_rcond.set(f64::INFINITY);
        last = (t, y.to_vec());
        if let Some(k) = stride {
            if k > 0 && count.is_multiple_of(k) && t != 0.0 {
                samples.push((t, y.to_vec()));
            }
        }
    });
    let (status, x_final, stats) = match result {
        Ok((y, stats)) => {
            samples.push((0.0, y.clone()));
            (TrajectoryStatus::ReachedZero, y, stats)
        }
        Err((err, stats)) => {
            let status = match err {
                OdeError::Rhs { t, source } if source.other.is_none() => {
                    TrajectoryStatus::NearSingularHessian { t, rcond: source.rcond }
                }
                OdeError::Rhs { t, .. } | OdeError::MaxSteps { t } => TrajectoryStatus::StepFailure { t },
                OdeError::StepUnderflow { t, .. } => {
                    let r = recent_rcond.get();
                    if r < FOLD_RCOND {
                        TrajectoryStatus::NearSingularHessian { t, rcond: r }
                    } else {
                        TrajectoryStatus::StepFailure { t }
                    }
                }
            };
            if last.0 != t0 {
                samples.push(last.clone());
            }
            (status, last.1, stats)
        }
    };
    TrajectoryResult {
        samples,
        status,
        x_final,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
        rhs_evals: stats.rhs_evals,
        min_rcond: min_rcond.get(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub grad_inf: f64,
    pub hessian_pd: bool,
    pub eig_min: f64,
}

pub fn certify_endpoint(f: &Polynomial, x: &[f64]) -> Result<Certificate, SolveError> {
    let g = f.gradient(x).map_err(SteklovError::from)?;
    let eig_min = linalg::lambda_min(&f.hessian(x).map_err(SteklovError::from)?)?;
    Ok(Certificate {
        grad_inf: linalg::norm_inf(&g),
        hessian_pd: eig_min > 0.0,
        eig_min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum SolveStatus {
    Success,
    Failure(String),
}

impl SolveStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, SolveStatus::Success)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub classification: Option<Classification>,
    pub lambda_min_c: Option<f64>,
    pub plan: Option<ConvexifyPlan>,
    pub newton_iters: usize,
    pub newton_grad_inf: Option<f64>,
    pub newton_stagnated: bool,
    pub trajectory: Option<TrajectoryStatus>,
    pub ode_steps: usize,
    pub ode_rejected: usize,
    pub rhs_evals: usize,
    pub min_rcond: Option<f64>,
    pub polish_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub grad_inf: f64,
    pub hessian_pd: bool,
    pub eig_min: f64,
    pub t0_used: f64,
    pub x0: Vec<f64>,
    pub status: SolveStatus,
    pub wall_time: f64,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        match &self.status {
            SolveStatus::Success => s.push_str("status     success\n"),
            SolveStatus::Failure(r) => {
                let _ = writeln!(s, "status     FAILURE: {r}");
            }
        }
        let _ = writeln!(s, "f_star     {:.15e}", self.f_star);
        let _ = writeln!(s, "grad_inf   {:.3e}", self.grad_inf);
        let _ = writeln!(s, "hessian_pd {} (eig_min {:.6e})", self.hessian_pd, self.eig_min);
        let _ = writeln!(s, "t0_used    {:.12}", self.t0_used);
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(", ");
        if self.x_star.len() <= 12 {
            let _ = writeln!(s, "x_star     ({})", fmt(&self.x_star));
            let _ = writeln!(s, "x0         ({})", fmt(&self.x0));
        }
        let _ = writeln!(s, "wall_time  {:.3}s", self.wall_time);
        s
    }
}

/// A report together with the traced path when the run got that far.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub trajectory: Option<TrajectoryResult>,
}

fn choose_plan(f: &Polynomial, cfg: &SolverConfig, diag: &mut Diagnostics) -> Result<ConvexifyPlan, String> {
    let info = convexify::classify_c(f).map_err(|e| format!("spectrum of C: {e}"))?;
    diag.classification = Some(info.classification);
    diag.lambda_min_c = Some(info.lambda_min_c);
    if let T0Mode::User(t0) = cfg.t0_mode {
        if !(t0 > 0.0) {
            return Err(SolveError::InvalidT0(t0).to_string());
        }
        return Ok(ConvexifyPlan::user(t0));
    }
    match info.classification {
        Classification::NotPSD => {
            return Err(format!(
                "refused: C has a negative eigenvalue ({:e}), no smoothing radius convexifies f",
                info.lambda_min_c
            ))
        }
        Classification::Zero => {
            let convex = f.degree() <= 2
                && linalg::lambda_min(&f.hessian(&vec![0.0; f.dim()]).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?
                    >= 0.0;
            if !convex {
                return Err("refused: C = 0 and f is not convex, smoothing cannot convexify it".into());
            }
            let mut plan = ConvexifyPlan::user(cfg.margin.max(f64::MIN_POSITIVE));
            plan.note = Some("C = 0: f is convex".into());
            return Ok(plan);
        }
        Classification::SingularPSD => {
            return Err(format!(
                "refused: C is singular (null space of dimension {}); supply t0 explicitly",
                info.null_dim_estimate
            ))
        }
        Classification::PositiveDefinite => {}
    }
    let normal = f.as_normal().filter(|nf| nf.a_min() > 0.0);
    let err = |e: ConvexifyError| format!("convexification: {e}");
    match (cfg.t0_mode, normal) {
        (T0Mode::AutoNormal, Some(nf)) => convexify::t0_normal(&nf, cfg.margin).map_err(err),
        (T0Mode::AutoNormal, None) | (T0Mode::Ball { .. }, _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.sampling_seed);
            let l = match cfg.t0_mode {
                T0Mode::Ball { l: Some(l) } => l,
                _ => convexify::ball_radius_estimate(f, cfg.sampling.samples, &mut rng).map_err(err)?,
            };
            let theta = convexify::theta_l_estimate(f, l, &cfg.sampling, &mut rng).map_err(err)?;
            let mut plan = convexify::t0_ball(l, theta.value, info.lambda_min_c, cfg.margin).map_err(err)?;
            if !theta.guaranteed {
                plan.note = Some("theta_L is a sampled estimate".into());
            }
            Ok(plan)
        }
        (T0Mode::User(_), _) => unreachable!("handled above"),
    }
}

fn polish(f: &Polynomial, x: &mut Vec<f64>, rcond_threshold: f64) -> usize {
    let mut steps = 0;
    let Ok(mut g) = f.gradient(x) else { return 0 };
    for _ in 0..POLISH_STEPS {
        let gi = linalg::norm_inf(&g);
        if gi == 0.0 {
            break;
        }
        let Ok(h) = f.hessian(x) else { break };
        let Ok(sol) = linalg::solve_sym(&h, &g, rcond_threshold) else { break };
        let trial: Vec<f64> = x.iter().zip(&sol.x).map(|(a, b)| a - b).collect();
        let Ok(gt) = f.gradient(&trial) else { break };
        if linalg::norm_inf(&gt) >= gi {
            break;
        }
        *x = trial;
        g = gt;
        steps += 1;
    }
    steps
}

/// Convexify, minimize at `t₀`, follow the path to `t = 0` and certify.
pub fn solve(f: &Polynomial, cfg: &SolverConfig) -> SolveOutcome {
    let start = Instant::now();
    let n = f.dim();
    let mut diag = Diagnostics::default();
    let mut x0 = vec![0.0; n];
    let mut t0_used = 0.0;
    let mut trajectory_out = None;

    let run = (|| -> Result<Vec<f64>, (String, Vec<f64>)> {
        let plan = choose_plan(f, cfg, &mut diag).map_err(|r| (r, vec![0.0; n]))?;
        t0_used = plan.t0;
        diag.plan = Some(plan);
        let s = SteklovCoeffs::build(f);
        let newton = minimize_convexified(&s, t0_used, &vec![0.0; n], cfg)
            .map_err(|e| (format!("minimizing mu(., t0): {e}"), vec![0.0; n]))?;
        diag.newton_iters = newton.iters;
        diag.newton_grad_inf = Some(newton.grad_inf);
        diag.newton_stagnated = newton.stagnated;
        x0 = newton.x;
        let traj = trajectory(&s, &x0, t0_used, cfg);
        diag.trajectory = Some(traj.status);
        diag.ode_steps = traj.accepted_steps;
        diag.ode_rejected = traj.rejected_steps;
        diag.rhs_evals = traj.rhs_evals;
        diag.min_rcond = traj.min_rcond.is_finite().then_some(traj.min_rcond);
        let mut x = traj.x_final.clone();
        let status = traj.status;
        trajectory_out = Some(traj);
        match status {
            TrajectoryStatus::ReachedZero => {}
            TrajectoryStatus::NearSingularHessian { t, rcond } => {
                return Err((
                    format!("trajectory: Hessian of mu became near-singular at t = {t:.6} (rcond = {rcond:.3e})"),
                    x,
                ))
            }
            TrajectoryStatus::StepFailure { t } => {
                return Err((format!("trajectory: integrator step failure at t = {t:.6}"), x))
            }
        }
        if cfg.polish {
            diag.polish_steps = polish(f, &mut x, cfg.rcond_threshold);
        }
        Ok(x)
    })();

    let (x_star, mut status) = match run {
        Ok(x) => (x, SolveStatus::Success),
        Err((reason, x)) => (x, SolveStatus::Failure(reason)),
    };
    let f_star = f.eval(&x_star).unwrap_or(f64::NAN);
    let cert = certify_endpoint(f, &x_star).unwrap_or(Certificate {
        grad_inf: f64::INFINITY,
        hessian_pd: false,
        eig_min: f64::NEG_INFINITY,
    });
    if status.is_success() && !(cert.grad_inf <= FAILURE_GRAD_TOL) {
        status = SolveStatus::Failure(format!(
            "endpoint gradient {:.3e} exceeds {FAILURE_GRAD_TOL:e}",
            cert.grad_inf
        ));
    }
    SolveOutcome {
        report: SolveReport {
            x_star,
            f_star,
            grad_inf: cert.grad_inf,
            hessian_pd: cert.hessian_pd,
            eig_min: cert.eig_min,
            t0_used,
            x0,
            status,
            wall_time: start.elapsed().as_secs_f64(),
            diagnostics: diag,
        },
        trajectory: trajectory_out,
    }
}

pub fn run_algorithm1(f: &Polynomial, cfg: &SolverConfig) -> SolveReport {
    solve(f, cfg).report
}

/// Trajectory samples as CSV with header `t,x1,…,xn`.
pub fn trace_csv(traj: &TrajectoryResult) -> String {
    let n = traj.x_final.len();
    let mut s = String::from("t");
    for i in 1..=n {
        let _ = write!(s, ",x{i}");
    }
    s.push('\n');
    for (t, x) in &traj.samples {
        let _ = write!(s, "{t:.16e}");
        for v in x {
            let _ = write!(s, ",{v:.16e}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::problems;
    use crate::poly::{MonomialPoly, NormalQuartic};
    use crate::linalg::SymMatrix;
    use rand::Rng;

    fn user(t0: f64) -> SolverConfig {
        SolverConfig {
            t0_mode: T0Mode::User(t0),
            ..Default::default()
        }
    }

    #[test]
    fn f1_start_and_end() {
        let p = problems::f1();
        let t0 = 2.1f64.sqrt();
        let rep = run_algorithm1(&p.polynomial, &user(t0));
        assert!(rep.status.is_success(), "{:?}", rep.status);
        let x0 = [-0.10500662833508, -0.38094363094061];
        assert!(rep.x0.iter().zip(x0).all(|(a, b)| (a - b).abs() < 1e-10), "{:?}", rep.x0);
        let xs = [-1.128494496206, -1.477960288995];
        assert!(rep.x_star.iter().zip(xs).all(|(a, b)| (a - b).abs() < 1e-9), "{:?}", rep.x_star);
        assert!((rep.f_star - (-1.727802817222)).abs() < 1e-9);
        assert!(rep.hessian_pd);
    }

    #[test]
    fn convex_quartic_stays_at_origin() {
        let f: Polynomial = NormalQuartic::new(vec![1.0; 3], SymMatrix::identity(3), vec![0.0; 3], 0.0)
            .unwrap()
            .into();
        let s = SteklovCoeffs::build(&f);
        for t0 in [0.1, 1.0, 3.0] {
            let r = minimize_convexified(&s, t0, &[0.0; 3], &SolverConfig::default()).unwrap();
            assert_eq!(r.x, vec![0.0; 3]);
        }
    }

    #[test]
    fn newton_matches_descent_oracle_on_q62() {
        let p = problems::q62();
        let f = &p.polynomial;
        let s = SteklovCoeffs::build(f);
        let t0 = 1.940;
        let x0 = minimize_convexified(&s, t0, &[0.0; 6], &SolverConfig::default()).unwrap().x;
        // gradient descent with backtracking from several starts
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for _ in 0..4 {
            let mut x: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut val = s.eval(&x, t0).unwrap();
            for _ in 0..200_000 {
                let g = s.grad_x(&x, t0).unwrap();
                if linalg::norm_inf(&g) < 1e-11 {
                    break;
                }
                let gg = linalg::dot(&g, &g);
                let mut step = 1.0;
                loop {
                    let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                    let vy = s.eval(&y, t0).unwrap();
                    if vy <= val - 0.5 * step * gg || step < 1e-20 {
                        x = y;
                        val = vy;
                        break;
                    }
                    step *= 0.5;
                }
            }
            let d = x.iter().zip(&x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-8, "{d}");
        }
    }

    #[test]
    fn counterexample_hits_fold() {
        let p = problems::counterexample();
        let s = SteklovCoeffs::build(&p.polynomial);
        let cfg = SolverConfig::default();
        let x0 = minimize_convexified(&s, 0.694, &[0.0; 2], &cfg).unwrap().x;
        let traj = trajectory(&s, &x0, 0.694, &cfg);
        match traj.status {
            TrajectoryStatus::NearSingularHessian { t, .. } => assert!((0.60..=0.66).contains(&t), "{t}"),
            other => panic!("{other:?}"),
        }
        let rep = run_algorithm1(&p.polynomial, &user(0.694));
        let SolveStatus::Failure(reason) = &rep.status else { panic!() };
        assert!(reason.contains("near-singular"), "{reason}");
    }

    fn double_well(tilt: f64) -> Polynomial {
        // (x₁² − 1)² + (x₂² − 2)² + tilt·(x₁ + x₂)
        MonomialPoly::new(2)
            .with_term(&[4, 0], 1.0)
            .unwrap()
            .with_term(&[2, 0], -2.0)
            .unwrap()
            .with_term(&[0, 4], 1.0)
            .unwrap()
            .with_term(&[0, 2], -4.0)
            .unwrap()
            .with_term(&[0, 0], 5.0)
            .unwrap()
            .with_term(&[1, 0], tilt)
            .unwrap()
            .with_term(&[0, 1], tilt)
            .unwrap()
            .into()
    }

    fn univariate_min(c: [f64; 5]) -> f64 {
        // c₀ + c₁x + c₂x² + c₃x³ + c₄x⁴ at the real roots of its derivative
        let p = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])));
        let dp = |x: f64| c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + 4.0 * x * c[4]));
        let mut best = f64::INFINITY;
        let mut x = -10.0;
        while x < 10.0 {
            let (mut lo, mut hi) = (x, x + 1e-3);
            if dp(lo) * dp(hi) <= 0.0 {
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if dp(lo) * dp(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                best = best.min(p(0.5 * (lo + hi)));
            }
            x += 1e-3;
        }
        best
    }

    #[test]
    fn separable_reaches_global_values() {
        let tilt = 0.05;
        let rep = run_algorithm1(&double_well(tilt), &SolverConfig::default());
        assert!(rep.status.is_success(), "{:?}", rep.status);
        let oracle = univariate_min([1.0, tilt, -2.0, 0.0, 1.0]) + univariate_min([4.0, tilt, -4.0, 0.0, 1.0]);
        assert!((rep.f_star - oracle).abs() < 1e-8, "{} vs {oracle}", rep.f_star);
        assert!(rep.x_star[0] < -0.9 && rep.x_star[1] < -1.3);
    }

    #[test]
    fn symmetric_double_well_stays_on_the_symmetric_branch() {
        // with no tilt the origin is stationary for every t
        let rep = run_algorithm1(&double_well(0.0), &SolverConfig::default());
        assert_eq!(rep.x_star, vec![0.0, 0.0]);
        assert!(!rep.hessian_pd);
        assert_eq!(rep.f_star, 5.0);
    }

    #[test]
    fn path_stays_stationary() {
        for p in [problems::f1(), problems::q61(), problems::qing(5)] {
            let f = &p.polynomial;
            let s = SteklovCoeffs::build(f);
            let cfg = SolverConfig::default();
            let t0 = p.published_t0.unwrap();
            let x0 = minimize_convexified(&s, t0, &vec![0.0; f.dim()], &cfg).unwrap().x;
            let traj = trajectory(&s, &x0, t0, &cfg);
            assert_eq!(traj.status, TrajectoryStatus::ReachedZero);
            assert_eq!(traj.samples[0].0, t0);
            assert_eq!(traj.samples.last().unwrap().0, 0.0);
            let scale = 1.0 + linalg::norm_inf(&s.grad_x(&x0, t0 + 1.0).unwrap());
            for (t, x) in &traj.samples {
                let g = linalg::norm_inf(&s.grad_x(x, *t).unwrap());
                assert!(g <= 1e-6 * scale, "{}: t={t} g={g}", p.name);
            }
        }
    }

    #[test]
    fn halving_tolerances_barely_moves_endpoint() {
        for p in [problems::f1(), problems::q61()] {
            let mut cfg = user(p.published_t0.unwrap());
            let a = run_algorithm1(&p.polynomial, &cfg);
            cfg.ode_rtol *= 0.5;
            cfg.ode_atol *= 0.5;
            let b = run_algorithm1(&p.polynomial, &cfg);
            let d = a.x_star.iter().zip(&b.x_star).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(d <= 1e-7, "{}: {d}", p.name);
        }
    }

    #[test]
    fn restarts_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for k in 0..50 {
            let n = rng.gen_range(2..=6);
            let nf = crate::bench::random_normal(n, (-1.0, 1.0), k);
            let plan = convexify::t0_normal(&nf, DEFAULT_MARGIN).unwrap();
            let f: Polynomial = nf.into();
            let s = SteklovCoeffs::build(&f);
            let cfg = SolverConfig::default();
            let base = minimize_convexified(&s, plan.t0, &vec![0.0; n], &cfg).unwrap().x;
            for _ in 0..20 {
                let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let x = minimize_convexified(&s, plan.t0, &start, &cfg).unwrap().x;
                let d = x.iter().zip(&base).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
                assert!(d <= 1e-8, "instance {k}: {d}");
            }
        }
    }

    #[test]
    fn certificates() {
        let f = problems::f1().polynomial;
        let c = certify_endpoint(&f, &[0.044197271094, 0.033651793151]).unwrap();
        assert!(c.grad_inf < 1e-8);
        assert!(!c.hessian_pd);
        let q4: Polynomial = NormalQuartic::new(vec![1.0; 3], SymMatrix::zeros(3), vec![0.0; 3], 0.0)
            .unwrap()
            .into();
        let c = certify_endpoint(&q4, &[0.0; 3]).unwrap();
        assert_eq!(c.grad_inf, 0.0);
        assert_eq!(c.eig_min, 0.0);
        assert!(!c.hessian_pd);
    }

    #[test]
    fn refusals_and_failures_are_reported() {
        let b = SymMatrix::identity(2);
        let bad: Polynomial = NormalQuartic::new(vec![-1.0, 1.0], b, vec![0.0, 0.0], 0.0).unwrap().into();
        let rep = run_algorithm1(&bad, &SolverConfig::default());
        let SolveStatus::Failure(r) = &rep.status else { panic!() };
        assert!(r.starts_with("refused"));
        let rosen = problems::rosenbrock(3).polynomial;
        let rep = run_algorithm1(&rosen, &SolverConfig::default());
        assert!(!rep.status.is_success());
        let rep = run_algorithm1(&problems::f1().polynomial, &user(-1.0));
        assert!(!rep.status.is_success());
    }

    #[test]
    fn ball_mode_matches_normal_mode_on_f1() {
        let f = problems::f1().polynomial;
        let a = run_algorithm1(&f, &SolverConfig::default());
        let b = run_algorithm1(
            &f,
            &SolverConfig {
                t0_mode: T0Mode::Ball { l: None },
                ..Default::default()
            },
        );
        assert!((a.t0_used - b.t0_used).abs() < 1e-12);
        assert_eq!(b.diagnostics.plan.unwrap().mode, convexify::PlanMode::Ball);
        assert!((a.f_star - b.f_star).abs() < 1e-12);
    }

    #[test]
    fn trace_and_report_serialization() {
        let p = problems::f1();
        let out = solve(&p.polynomial, &user(2.1f64.sqrt()));
        let traj = out.trajectory.unwrap();
        let csv = trace_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1,x2"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], 2.1f64.sqrt());
        assert_eq!(csv.lines().count(), traj.samples.len() + 1);
        let json = serde_json::to_string(&out.report).unwrap();
        let back: SolveReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out.report);
    }
}
