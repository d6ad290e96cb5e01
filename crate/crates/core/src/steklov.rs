//! The Steklov box-average of a quartic in closed form,
//!
//! `μ(x, t) = f(x) + (t²/6)·q(x) + κ·t⁴`,
//!
//! where `q` is the trace-of-Hessian polynomial and `κ` the constant built from
//! the fourth partials, together with its x- and t-derivatives. The defining
//! integral is available separately as a Gauss–Legendre quadrature so the
//! closed form can be checked against it.

use thiserror::Error;

use crate::linalg::SymMatrix;
use crate::poly::{PolyError, Polynomial, QuadraticPoly};

/// Largest dimension the tensor-product quadrature accepts (3ⁿ points).
pub const ORACLE_MAX_DIM: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteklovError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("smoothing radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("quadrature oracle needs a positive radius, got {0}")]
    OracleRadius(f64),
    #[error("quadrature oracle is capped at n = {ORACLE_MAX_DIM}, got n = {0}")]
    OracleDimension(usize),
}

#[derive(Debug, Clone)]
pub struct SteklovCoeffs<'a> {
    pub f: &'a Polynomial,
    pub q: QuadraticPoly,
    pub kappa: f64,
    c: SymMatrix,
}

impl<'a> SteklovCoeffs<'a> {
    pub fn build(f: &'a Polynomial) -> Self {
        let q = f.trace_hessian_poly();
        let c = f.c_matrix();
        Self {
            f,
            kappa: f.quartic_tail_kappa(),
            q,
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `C = Σᵢ ∇²f_ii`.
    pub fn c_matrix(&self) -> &SymMatrix {
        &self.c
    }

    fn check_t(t: f64) -> Result<(), SteklovError> {
        if t < 0.0 || t.is_nan() {
            return Err(SteklovError::NegativeRadius(t));
        }
        Ok(())
    }

    /// `μ(x, t)`; `t = 0` gives `f(x)`.
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, SteklovError> {
        Self::check_t(t)?;
        let t2 = t * t;
        Ok(self.f.eval(x)? + t2 / 6.0 * self.q.eval(x) + self.kappa * t2 * t2)
    }

    /// `∇ₓμ = ∇f(x) + (t²/6)∇q(x)`.
    pub fn grad_x(&self, x: &[f64], t: f64) -> Result<Vec<f64>, SteklovError> {
        Self::check_t(t)?;
        let mut g = self.f.gradient(x)?;
        let s = t * t / 6.0;
        for (gi, qi) in g.iter_mut().zip(self.q.gradient(x)) {
            *gi += s * qi;
        }
        Ok(g)
    }

    /// `∇ₓₓμ = ∇²f(x) + (t²/6)C`.
    pub fn hess_x(&self, x: &[f64], t: f64) -> Result<SymMatrix, SteklovError> {
        Self::check_t(t)?;
        Ok(self.f.hessian(x)?.add_scaled(t * t / 6.0, &self.c))
    }

    /// `∇ₜₓμ = (t/3)∇q(x)`.
    pub fn grad_tx(&self, x: &[f64], t: f64) -> Result<Vec<f64>, SteklovError> {
        Self::check_t(t)?;
        if x.len() != self.dim() {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            }
            .into());
        }
        Ok(self.q.gradient(x).into_iter().map(|v| t / 3.0 * v).collect())
    }
}

/// Average of `f` over the box `Πᵢ [xᵢ − t, xᵢ + t]` by a 3-point
/// Gauss–Legendre tensor rule. The rule integrates polynomials of degree ≤ 5
/// per axis exactly, so for quartics the result equals the true average up
/// to roundoff.
pub fn quadrature_oracle(f: &Polynomial, x: &[f64], t: f64) -> Result<f64, SteklovError> {
    let n = f.dim();
    if n > ORACLE_MAX_DIM {
        return Err(SteklovError::OracleDimension(n));
    }
    if !(t > 0.0) {
        return Err(SteklovError::OracleRadius(t));
    }
    if x.len() != n {
        return Err(PolyError::DimensionMismatch { expected: n, got: x.len() }.into());
    }
    let r = (0.6f64).sqrt();
    let nodes = [-r, 0.0, r];
    // weights on [-1, 1] halved so that they sum to one
    let weights = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let total = 3usize.pow(n as u32);
    let mut point = vec![0.0; n];
    let mut sum = 0.0;
    for idx in 0..total {
        let mut k = idx;
        let mut w = 1.0;
        for i in 0..n {
            let j = k % 3;
            k /= 3;
            point[i] = x[i] + t * nodes[j];
            w *= weights[j];
        }
        sum += w * f.eval(&point)?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::problems;
    use crate::poly::MonomialPoly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn x4() -> Polynomial {
        MonomialPoly::new(1).with_term(&[4], 1.0).unwrap().into()
    }

    #[test]
    fn univariate_quartic_closed_form() {
        let f = x4();
        let s = SteklovCoeffs::build(&f);
        for (x, t) in [(0.0f64, 1.0f64), (1.0, 1.0), (-0.5, 2.0)] {
            let expect = x.powi(4) + 2.0 * t * t * x * x + t.powi(4) / 5.0;
            assert!((s.eval(&[x], t).unwrap() - expect).abs() < 1e-14);
        }
        assert!((quadrature_oracle(&f, &[1.0], 1.0).unwrap() - 3.2).abs() < 1e-14);
    }

    #[test]
    fn f1_steklov_polynomial() {
        let f = problems::f1().polynomial;
        let s = SteklovCoeffs::build(&f);
        assert!((s.eval(&[0.0, 0.0], 1.0).unwrap() - 3.4).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let t: f64 = rng.gen_range(0.0..2.0);
            let expect = f.eval(&x).unwrap()
                + 2.0 * t * t * (x[0] * x[0] + x[1] * x[1] - 1.0)
                + 0.4 * t.powi(4);
            assert!((s.eval(&x, t).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_has_no_quartic_tail() {
        let f: Polynomial = MonomialPoly::new(2)
            .with_term(&[2, 0], 1.0)
            .unwrap()
            .with_term(&[1, 1], 3.0)
            .unwrap()
            .into();
        let s = SteklovCoeffs::build(&f);
        assert_eq!(s.kappa, 0.0);
        assert_eq!(s.q.c0, 2.0);
    }

    #[test]
    fn constant_average() {
        let f: Polynomial = MonomialPoly::new(3).with_term(&[0, 0, 0], 2.5).unwrap().into();
        assert!((quadrature_oracle(&f, &[1.0, -4.0, 0.3], 0.7).unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn zero_radius_limits() {
        let f = problems::q61().polynomial;
        let s = SteklovCoeffs::build(&f);
        let x = [0.1, -0.2, 0.3, 0.4, -0.5, 0.6];
        assert_eq!(s.eval(&x, 0.0).unwrap(), f.eval(&x).unwrap());
        assert_eq!(s.grad_x(&x, 0.0).unwrap(), f.gradient(&x).unwrap());
        assert_eq!(s.hess_x(&x, 0.0).unwrap(), f.hessian(&x).unwrap());
        assert!(s.grad_tx(&x, 0.0).unwrap().iter().all(|&v| v == 0.0));
        let small = s.eval(&x, 1e-6).unwrap();
        let fx = f.eval(&x).unwrap();
        assert!((small - fx).abs() <= 1e-10 * (1.0 + fx.abs()));
    }

    #[test]
    fn normal_form_gradient_formula() {
        let f = problems::q62().polynomial;
        let Polynomial::Normal(nf) = &f else { panic!() };
        let s = SteklovCoeffs::build(&f);
        let x = [0.3, -1.0, 0.5, 0.2, -0.4, 1.1];
        let t = 1.3;
        let g = s.grad_x(&x, t).unwrap();
        let bx = nf.b.matvec(&x);
        for i in 0..6 {
            let expect = 4.0 * nf.a[i] * (x[i].powi(3) + t * t * x[i]) + 2.0 * bx[i] + nf.d[i];
            assert!((g[i] - expect).abs() < 1e-12);
        }
        let gtx = s.grad_tx(&x, t).unwrap();
        for i in 0..6 {
            assert!((gtx[i] - 8.0 * t * nf.a[i] * x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let f = x4();
        let s = SteklovCoeffs::build(&f);
        assert!(matches!(s.eval(&[1.0], -1.0), Err(SteklovError::NegativeRadius(_))));
        assert!(s.eval(&[1.0, 2.0], 1.0).is_err());
        assert!(s.grad_tx(&[1.0, 2.0], 1.0).is_err());
        assert!(matches!(quadrature_oracle(&f, &[1.0], 0.0), Err(SteklovError::OracleRadius(_))));
        let big: Polynomial = MonomialPoly::new(7).into();
        assert!(matches!(
            quadrature_oracle(&big, &[0.0; 7], 1.0),
            Err(SteklovError::OracleDimension(7))
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let n = rng.gen_range(1..=3);
            let f: Polynomial = crate::poly::tests::random_monomial(n, 10, &mut rng).into();
            let s = SteklovCoeffs::build(&f);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let t = rng.gen_range(0.1..1.5);
            let g = s.grad_x(&x, t).unwrap();
            for i in 0..n {
                let h = 1e-5 * (1.0 + x[i].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (s.eval(&xp, t).unwrap() - s.eval(&xm, t).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()));
            }
            let ht = 1e-5;
            let gp = s.grad_x(&x, t + ht).unwrap();
            let gm = s.grad_x(&x, t - ht).unwrap();
            let gtx = s.grad_tx(&x, t).unwrap();
            for i in 0..n {
                let fd = (gp[i] - gm[i]) / (2.0 * ht);
                assert!((fd - gtx[i]).abs() <= 1e-5 * (1.0 + gtx[i].abs()));
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let f: Polynomial = crate::poly::tests::random_monomial(n, 12, &mut rng).into();
            let s = SteklovCoeffs::build(&f);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = rng.gen_range(0.05..2.0);
            let closed = s.eval(&x, t).unwrap();
            let quad = quadrature_oracle(&f, &x, t).unwrap();
            assert!((closed - quad).abs() <= 1e-9 * (1.0 + closed.abs()));
        }
    }
}
