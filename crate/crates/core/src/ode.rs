//! Adaptive Dormand–Prince 5(4) integrator for `y' = f(t, y)`.
//!
//! Integrates in either direction of `t`. The right-hand side may fail; the
//! failure is returned together with the `t` at which it happened.

use thiserror::Error;

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopriOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Step sizes below `h_min_rel · |t_end − t_start|` abort the run.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for DopriOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            h_min_rel: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError<E> {
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: E },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit reached at t = {t}")]
    MaxSteps { t: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

fn axpy_into(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

fn scaled_rms(v: &[f64], y: &[f64], atol: f64, rtol: f64) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter()
        .zip(y)
        .map(|(a, b)| {
            let s = a / (atol + rtol * b.abs());
            s * s
        })
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Integrates from `t_start` to `t_end`, landing exactly on `t_end`.
/// `on_step(t, y)` is called after every accepted step.
pub fn integrate<F, E, S>(
    mut rhs: F,
    t_start: f64,
    t_end: f64,
    y0: &[f64],
    opts: &DopriOptions,
    mut on_step: S,
) -> Result<(Vec<f64>, OdeStats), (OdeError<E>, OdeStats)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    S: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let span = t_end - t_start;
    let dir = span.signum();
    let mut stats = OdeStats::default();
    if span == 0.0 {
        return Ok((y0.to_vec(), stats));
    }
    let h_min = opts.h_min_rel * span.abs();

    let mut eval = |t: f64, y: &[f64], stats: &mut OdeStats| {
        stats.rhs_evals += 1;
        rhs(t, y).map_err(|source| OdeError::Rhs { t, source })
    };

    let mut t = t_start;
    let mut y = y0.to_vec();
    let mut k1 = eval(t, &y, &mut stats).map_err(|e| (e, stats))?;

    // initial step, Hairer–Nørsett–Wanner
    let mut h = {
        let d0 = scaled_rms(&y, &y, opts.atol, opts.rtol);
        let d1 = scaled_rms(&k1, &y, opts.atol, opts.rtol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span.abs());
        let mut y1 = vec![0.0; n];
        axpy_into(&mut y1, &y, dir * h0, &[(1.0, &k1)]);
        let f1 = eval(t + dir * h0, &y1, &mut stats).map_err(|e| (e, stats))?;
        let diff: Vec<f64> = f1.iter().zip(&k1).map(|(a, b)| a - b).collect();
        let d2 = scaled_rms(&diff, &y, opts.atol, opts.rtol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span.abs())
    };

    let mut ytmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut last_rejected = false;
    loop {
        if stats.accepted >= opts.max_steps {
            return Err((OdeError::MaxSteps { t }, stats));
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < h_min && !last {
            return Err((OdeError::StepUnderflow { t, h }, stats));
        }
        let hs = dir * h;

        let step = (|| {
            axpy_into(&mut ytmp, &y, hs, &[(A21, &k1)]);
            let k2 = eval(t + C2 * hs, &ytmp, &mut stats)?;
            axpy_into(&mut ytmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
            let k3 = eval(t + C3 * hs, &ytmp, &mut stats)?;
            axpy_into(&mut ytmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = eval(t + C4 * hs, &ytmp, &mut stats)?;
            axpy_into(&mut ytmp, &y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = eval(t + C5 * hs, &ytmp, &mut stats)?;
            axpy_into(&mut ytmp, &y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = eval(t + hs, &ytmp, &mut stats)?;
            axpy_into(&mut y5, &y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { t_end } else { t + hs };
            let k7 = eval(t_new, &y5, &mut stats)?;
            let mut err = 0.0f64;
            for i in 0..n {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((e / sc).abs());
            }
            Ok((k7, err, t_new))
        })();

        let (k7, err, t_new) = match step {
            Ok(v) => v,
            Err(e) => return Err((e, stats)),
        };

        if err.is_finite() && err <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            std::mem::swap(&mut y, &mut y5);
            k1 = k7;
            on_step(t, &y);
            if last {
                return Ok((y, stats));
            }
            let mut fac = if err == 0.0 { FAC_MAX } else { SAFETY * err.powf(-0.2) };
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            h *= fac;
            last_rejected = true;
        }
    }
}
