//! When and how far to smooth: spectrum of `C = Σ ∇²f_ii`, convexification
//! thresholds `t₀`, the minimizer-enclosing radius for normal quartics and a
//! sampler for the null-space curvature condition when `C` is singular.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, SymMatrix};
use crate::poly::{NormalQuartic, Polynomial};

/// Default additive margin on top of a computed threshold.
pub const DEFAULT_MARGIN: f64 = 0.1;

/// Safety factor applied to negative sampled curvature bounds.
const THETA_SAFETY: f64 = 1.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexifyError {
    #[error("polynomial is not normal: min aᵢ = {a_min} must be positive")]
    NotNormal { a_min: f64 },
    #[error("threshold formula needs λ_min(C) > 0, got {lambda_min_c}")]
    CNotPositiveDefinite { lambda_min_c: f64 },
    #[error("null-space condition needs a singular PSD C, classification is {0:?}")]
    ConditionNotApplicable(Classification),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("quartic part is not positive on the unit sphere (sampled minimum {0:e}); f is not coercive")]
    NotCoercive(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// `C` has a negative eigenvalue; no amount of smoothing convexifies.
    NotPSD,
    /// `C = 0`; the smoothed function is convex iff `f` is.
    Zero,
    SingularPSD,
    PositiveDefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumInfo {
    pub lambda_min_c: f64,
    pub lambda_max_c: f64,
    pub classification: Classification,
    pub null_dim_estimate: usize,
}

/// Absolute tolerance for treating an eigenvalue of `C` as zero.
pub fn psd_tol(lambda_max_c: f64) -> f64 {
    1e-10 * (1.0 + lambda_max_c.abs())
}

pub fn classify_c(f: &Polynomial) -> Result<SpectrumInfo, LinalgError> {
    classify_matrix(&f.c_matrix())
}

fn classify_matrix(c: &SymMatrix) -> Result<SpectrumInfo, LinalgError> {
    let ev = linalg::sym_eigvals(c)?;
    let (lmin, lmax) = (ev[0], *ev.last().expect("n >= 1"));
    let tol = psd_tol(lmax);
    let classification = if lmin < -tol {
        Classification::NotPSD
    } else if lmax <= tol {
        Classification::Zero
    } else if lmin.abs() <= tol {
        Classification::SingularPSD
    } else {
        Classification::PositiveDefinite
    };
    Ok(SpectrumInfo {
        lambda_min_c: lmin,
        lambda_max_c: lmax,
        classification,
        null_dim_estimate: ev.iter().filter(|v| v.abs() <= tol).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanMode {
    NormalForm,
    Ball,
    UserSupplied,
}

/// A chosen smoothing radius and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexifyPlan {
    pub t0: f64,
    /// The raw threshold before the margin was added.
    pub bound: f64,
    pub mode: PlanMode,
    /// ℓ₂ radius of the region where convexity holds, when it is local.
    pub l: Option<f64>,
    pub theta_l: Option<f64>,
    pub margin: f64,
    pub note: Option<String>,
}

impl ConvexifyPlan {
    pub fn user(t0: f64) -> Self {
        Self {
            t0,
            bound: t0,
            mode: PlanMode::UserSupplied,
            l: None,
            theta_l: None,
            margin: 0.0,
            note: None,
        }
    }
}

fn require_normal(f: &NormalQuartic) -> Result<f64, ConvexifyError> {
    let a_min = f.a_min();
    if !(a_min > 0.0) {
        return Err(ConvexifyError::NotNormal { a_min });
    }
    Ok(a_min)
}

/// `t₀ = sqrt(|λ_min(B)| / (2 min aᵢ)) + margin`, convexifying on all of ℝⁿ.
pub fn t0_normal(f: &NormalQuartic, margin: f64) -> Result<ConvexifyPlan, ConvexifyError> {
    let a_min = require_normal(f)?;
    let lambda_b = linalg::lambda_min(&f.b)?;
    let mut plan = ConvexifyPlan {
        t0: margin,
        bound: 0.0,
        mode: PlanMode::NormalForm,
        l: None,
        theta_l: Some(2.0 * lambda_b),
        margin,
        note: None,
    };
    if lambda_b >= 0.0 {
        plan.note = Some("B is positive semidefinite: f is already convex".into());
        return Ok(plan);
    }
    plan.bound = (lambda_b.abs() / (2.0 * a_min)).sqrt();
    plan.t0 = plan.bound + margin;
    Ok(plan)
}

/// `t₀ = sqrt(6|θ_L| / λ_min(C)) + margin` for `θ_L < 0`, else `margin`;
/// convexity then holds on the ℓ₂ ball of radius `l`.
pub fn t0_ball(l: f64, theta_l: f64, lambda_min_c: f64, margin: f64) -> Result<ConvexifyPlan, ConvexifyError> {
    if !(lambda_min_c > 0.0) {
        return Err(ConvexifyError::CNotPositiveDefinite { lambda_min_c });
    }
    let bound = if theta_l < 0.0 {
        (6.0 * theta_l.abs() / lambda_min_c).sqrt()
    } else {
        0.0
    };
    Ok(ConvexifyPlan {
        t0: bound + margin,
        bound,
        mode: PlanMode::Ball,
        l: Some(l),
        theta_l: Some(theta_l),
        margin,
        note: (theta_l >= 0.0).then(|| "f is convex on the ball".to_string()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub samples: usize,
    pub refinements: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            refinements: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub value: f64,
    /// True when `value` is a proven lower bound of `min λ_min(∇²f)` on the ball.
    pub guaranteed: bool,
}

/// Uniform draw from the closed ℓ₂ ball of radius `l`.
pub fn uniform_in_ball(n: usize, l: f64, rng: &mut impl Rng) -> Vec<f64> {
    let dir = unit_vector(n, rng);
    let r = l * rng.gen::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r).collect()
}

fn unit_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = linalg::norm2(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn project_to_ball(x: &mut [f64], l: f64) {
    let norm = linalg::norm2(x);
    if norm > l {
        x.iter_mut().for_each(|v| *v *= l / norm);
    }
}

/// Estimate of `θ_L = min_{‖x‖≤L} λ_min(∇²f(x))`.
///
/// For a normal quartic with `aᵢ ≥ 0` the bound `2λ_min(B)` holds everywhere.
/// Otherwise the minimum is searched by random sampling followed by
/// coordinate descent from the best samples; the result is a heuristic.
pub fn theta_l_estimate(
    f: &Polynomial,
    l: f64,
    cfg: &SamplingConfig,
    rng: &mut impl Rng,
) -> Result<ThetaEstimate, ConvexifyError> {
    if !(l > 0.0) {
        return Err(ConvexifyError::InvalidRadius(l));
    }
    if let Some(nf) = f.as_normal() {
        if nf.a.iter().all(|&a| a >= 0.0) {
            return Ok(ThetaEstimate {
                value: 2.0 * linalg::lambda_min(&nf.b)?,
                guaranteed: true,
            });
        }
    }
    let n = f.dim();
    let curvature = |x: &[f64]| -> Result<f64, ConvexifyError> {
        Ok(linalg::lambda_min(&f.hessian(x).expect("dimension fixed"))?)
    };
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::with_capacity(cfg.samples + 1);
    let origin = vec![0.0; n];
    pts.push((curvature(&origin)?, origin));
    for _ in 0..cfg.samples {
        let x = uniform_in_ball(n, l, rng);
        pts.push((curvature(&x)?, x));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = pts[0].0;
    for (v0, x0) in pts.into_iter().take(cfg.refinements) {
        let (mut v, mut x) = (v0, x0);
        let mut h = 0.25 * l;
        let mut sweeps = 0;
        while h > 1e-9 * l && sweeps < 500 {
            sweeps += 1;
            let mut improved = false;
            for i in 0..n {
                for s in [h, -h] {
                    let mut y = x.clone();
                    y[i] += s;
                    project_to_ball(&mut y, l);
                    let vy = curvature(&y)?;
                    if vy < v {
                        v = vy;
                        x = y;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        best = best.min(v);
    }
    Ok(ThetaEstimate {
        value: if best < 0.0 { THETA_SAFETY * best } else { best },
        guaranteed: false,
    })
}

/// Radius of an ℓ∞ ball that contains every global minimizer of a normal
/// quartic: `L(ε) = max{‖d‖₁/ε, sqrt((nρ(B) + ε)/min aᵢ)}` at the `ε̂` where the
/// two branches cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRadius {
    pub l_inf: f64,
    pub eps_hat: f64,
    /// `sqrt(n)·l_inf`, an enclosing ℓ₂ radius.
    pub l2: f64,
}

pub fn radius_at(eps: f64, d1: f64, n_rho: f64, a_min: f64) -> f64 {
    (d1 / eps).max(((n_rho + eps) / a_min).sqrt())
}

pub fn ball_radius_normal(f: &NormalQuartic) -> Result<BallRadius, ConvexifyError> {
    let a_min = require_normal(f)?;
    let n = f.dim() as f64;
    let ev = linalg::sym_eigvals(&f.b)?;
    let rho = ev[0].abs().max(ev[ev.len() - 1].abs());
    let n_rho = n * rho;
    let d1: f64 = f.d.iter().map(|v| v.abs()).sum();
    let finish = |l_inf: f64, eps_hat: f64| BallRadius {
        l_inf,
        eps_hat,
        l2: n.sqrt() * l_inf,
    };
    if d1 == 0.0 {
        return Ok(finish((n_rho / a_min).sqrt(), 0.0));
    }
    // gap(ε) = ‖d‖₁/ε − sqrt((nρ+ε)/a) is strictly decreasing with one root
    let gap = |eps: f64| d1 / eps - ((n_rho + eps) / a_min).sqrt();
    let (mut lo, mut hi) = (1.0, 1.0);
    while gap(lo) <= 0.0 {
        lo *= 0.5;
    }
    while gap(hi) >= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let eps_hat = 0.5 * (lo + hi);
    Ok(finish(radius_at(eps_hat, d1, n_rho, a_min), eps_hat))
}

/// An ℓ₂ radius outside of which `f(x) > f(0)` for a coercive quartic, so
/// every global minimizer lies inside.
///
/// With `m₄` the minimum of the quartic part on the unit sphere and `s_k` the
/// absolute coefficient sums of the degree-`k` parts, `m₄r⁴ > s₃r³ + s₂r² + s₁r`
/// holds for `r > max(1, (s₁+s₂+s₃)/m₄)`. `m₄` is sampled and halved, so the
/// radius is a heuristic unless the polynomial is normal.
pub fn ball_radius_estimate(f: &Polynomial, samples: usize, rng: &mut impl Rng) -> Result<f64, ConvexifyError> {
    if let Some(nf) = f.as_normal() {
        if nf.a_min() > 0.0 {
            return Ok(ball_radius_normal(&nf)?.l2);
        }
    }
    let m = f.to_monomial();
    let n = m.dim();
    let mut s = [0.0f64; 5];
    for (e, c) in m.terms() {
        let deg: usize = e.iter().map(|&k| k as usize).sum();
        s[deg] += c.abs();
    }
    let quartic = |x: &[f64]| -> f64 {
        m.terms()
            .filter(|(e, _)| e.iter().map(|&k| k as u32).sum::<u32>() == 4)
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    };
    let mut m4 = f64::INFINITY;
    for _ in 0..samples.max(1) {
        m4 = m4.min(quartic(&unit_vector(n, rng)));
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        m4 = m4.min(quartic(&e));
    }
    if !(m4 > 0.0) {
        return Err(ConvexifyError::NotCoercive(m4));
    }
    Ok(1.0f64.max((s[1] + s[2] + s[3]) / (0.5 * m4)) * (1.0 + 1e-9))
}

/// Smallest sampled value of the curvature form restricted to the null space
/// of `C`, `φ(α, x) = wᵀ∇²f(x)w` with `w = Σ αᵢvᵢ`, `‖α‖ = 1`, `‖x‖ ≤ L`.
/// A positive minimum is evidence, not proof, that smoothing convexifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpaceSample {
    pub null_dim: usize,
    pub samples: usize,
    pub min_phi: f64,
    pub max_phi: f64,
    pub witness_alpha: Vec<f64>,
    pub witness_x: Vec<f64>,
}

pub fn null_space_condition_sample(
    f: &Polynomial,
    l: f64,
    num_samples: usize,
    rng: &mut impl Rng,
) -> Result<NullSpaceSample, ConvexifyError> {
    if !(l > 0.0) {
        return Err(ConvexifyError::InvalidRadius(l));
    }
    let c = f.c_matrix();
    let info = classify_matrix(&c)?;
    if info.classification != Classification::SingularPSD {
        return Err(ConvexifyError::ConditionNotApplicable(info.classification));
    }
    let tol = psd_tol(info.lambda_max_c);
    let eig = linalg::sym_eigen(&c)?;
    let basis: Vec<&Vec<f64>> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(v, _)| v.abs() <= tol)
        .map(|(_, vec)| vec)
        .collect();
    let n = f.dim();
    let p = basis.len();
    let mut out = NullSpaceSample {
        null_dim: p,
        samples: num_samples.max(1),
        min_phi: f64::INFINITY,
        max_phi: f64::NEG_INFINITY,
        witness_alpha: Vec::new(),
        witness_x: Vec::new(),
    };
    for _ in 0..out.samples {
        let alpha = unit_vector(p, rng);
        let x = uniform_in_ball(n, l, rng);
        let mut w = vec![0.0; n];
        for (a, v) in alpha.iter().zip(&basis) {
            for (wi, vi) in w.iter_mut().zip(v.iter()) {
                *wi += a * vi;
            }
        }
        let h = f.hessian(&x).expect("dimension fixed");
        let phi = h.bilinear(&w, &w);
        out.max_phi = out.max_phi.max(phi);
        if phi < out.min_phi {
            out.min_phi = phi;
            out.witness_alpha = alpha;
            out.witness_x = x;
        }
    }
    Ok(out)
}

/// Everything the convexification analysis can say about `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dossier {
    pub dim: usize,
    pub degree: u32,
    pub normal_form: bool,
    pub kappa: f64,
    pub spectrum: SpectrumInfo,
    pub note: Option<String>,
    pub t0_normal: Option<ConvexifyPlan>,
    pub ball_radius: Option<BallRadius>,
    /// ℓ₂ radius used for the ball threshold and the null-space sampler.
    pub l: Option<f64>,
    pub theta_l: Option<ThetaEstimate>,
    pub t0_ball: Option<ConvexifyPlan>,
    pub null_space: Option<NullSpaceSample>,
}

pub fn dossier(
    f: &Polynomial,
    l: Option<f64>,
    margin: f64,
    cfg: &SamplingConfig,
    rng: &mut impl Rng,
) -> Result<Dossier, ConvexifyError> {
    let spectrum = classify_c(f)?;
    let normal = f.as_normal().filter(|nf| nf.a_min() > 0.0).map(|nf| nf.into_owned());
    let mut d = Dossier {
        dim: f.dim(),
        degree: f.degree(),
        normal_form: normal.is_some(),
        kappa: f.quartic_tail_kappa(),
        spectrum: spectrum.clone(),
        note: None,
        t0_normal: None,
        ball_radius: None,
        l: None,
        theta_l: None,
        t0_ball: None,
        null_space: None,
    };
    match spectrum.classification {
        Classification::NotPSD => {
            d.note = Some("C has a negative eigenvalue: no smoothing radius convexifies f".into());
            return Ok(d);
        }
        Classification::Zero => {
            d.note = Some("C = 0: the smoothed function is convex iff f is convex".into());
            return Ok(d);
        }
        _ => {}
    }
    if let Some(nf) = &normal {
        d.t0_normal = Some(t0_normal(nf, margin)?);
        d.ball_radius = Some(ball_radius_normal(nf)?);
    }
    let radius = match l {
        Some(l) => l,
        None => match ball_radius_estimate(f, cfg.samples, rng) {
            Ok(l) => l,
            Err(ConvexifyError::NotCoercive(m4)) => {
                d.note = Some(format!(
                    "quartic part vanishes along some direction (sampled minimum {m4:e}); radius defaults to 1"
                ));
                1.0
            }
            Err(e) => return Err(e),
        },
    };
    d.l = Some(radius);
    match spectrum.classification {
        Classification::PositiveDefinite => {
            let theta = theta_l_estimate(f, radius, cfg, rng)?;
            d.theta_l = Some(theta);
            d.t0_ball = Some(t0_ball(radius, theta.value, spectrum.lambda_min_c, margin)?);
        }
        Classification::SingularPSD => {
            let sample = null_space_condition_sample(f, radius, cfg.samples, rng)?;
            if d.note.is_none() {
                d.note = Some(if sample.min_phi > 0.0 {
                    "C is singular; the sampled null-space curvature is positive".into()
                } else {
                    "C is singular; the sampled null-space curvature is not positive".into()
                });
            }
            d.null_space = Some(sample);
        }
        _ => unreachable!("handled above"),
    }
    Ok(d)
}
