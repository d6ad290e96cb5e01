use serde::{Deserialize, Serialize};

use super::{MonomialPoly, PolyError, QuadraticPoly};
use crate::linalg::{dot, SymMatrix};

/// `f(x) = Σ aᵢxᵢ⁴ + xᵀBx + dᵀx + c`.
///
/// `a` is stored unrestricted; operations that need a positive leading part
/// check `min aᵢ > 0` themselves. The constant `c` only shifts values (it is
/// needed for families such as `Σ (xᵢ² − i)² + …`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalQuartic {
    pub a: Vec<f64>,
    pub b: SymMatrix,
    pub d: Vec<f64>,
    #[serde(default)]
    pub c: f64,
}

impl NormalQuartic {
    pub fn new(a: Vec<f64>, b: SymMatrix, d: Vec<f64>, c: f64) -> Result<Self, PolyError> {
        let n = b.dim();
        for len in [a.len(), d.len()] {
            if len != n {
                return Err(PolyError::DimensionMismatch { expected: n, got: len });
            }
        }
        Ok(Self { a, b, d, c })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `min aᵢ`.
    pub fn a_min(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_normal(&self) -> bool {
        self.a_min() > 0.0
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), PolyError> {
        if x.len() != self.dim() {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.check_dim(x)?;
        let quartic: f64 = self.a.iter().zip(x).map(|(a, v)| a * (v * v) * (v * v)).sum();
        Ok(quartic + self.b.bilinear(x, x) + dot(&self.d, x) + self.c)
    }

    /// `4 diag(a) x³ + 2Bx + d`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.check_dim(x)?;
        let bx = self.b.matvec(x);
        Ok((0..self.dim())
            .map(|i| 4.0 * self.a[i] * x[i] * x[i] * x[i] + 2.0 * bx[i] + self.d[i])
            .collect())
    }

    /// `12 diag(aᵢxᵢ²) + 2B`.
    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix, PolyError> {
        self.check_dim(x)?;
        let mut h = self.b.scaled(2.0);
        let diag: Vec<f64> = self.a.iter().zip(x).map(|(a, v)| 12.0 * a * v * v).collect();
        h.add_diag(&diag);
        Ok(h)
    }

    /// `q(x) = 12 Σ aᵢxᵢ² + 2 trace(B)`.
    pub fn trace_hessian_poly(&self) -> QuadraticPoly {
        let m: Vec<f64> = self.a.iter().map(|a| 12.0 * a).collect();
        QuadraticPoly {
            c0: 2.0 * self.b.trace(),
            g: vec![0.0; self.dim()],
            m: SymMatrix::from_diag(&m),
        }
    }

    /// `κ = Σ aᵢ / 5`.
    pub fn quartic_tail_kappa(&self) -> f64 {
        self.a.iter().sum::<f64>() / 5.0
    }

    /// `C = 24 diag(a)`.
    pub fn c_matrix(&self) -> SymMatrix {
        let diag: Vec<f64> = self.a.iter().map(|a| 24.0 * a).collect();
        SymMatrix::from_diag(&diag)
    }

    pub fn to_monomial(&self) -> MonomialPoly {
        let n = self.dim();
        let mut p = MonomialPoly::new(n);
        let mut e = vec![0u8; n];
        let put = |p: &mut MonomialPoly, e: &mut Vec<u8>, c: f64| {
            p.add_term(e, c).expect("normal-form terms have degree <= 4");
            e.iter_mut().for_each(|k| *k = 0);
        };
        for i in 0..n {
            e[i] = 4;
            put(&mut p, &mut e, self.a[i]);
            e[i] = 2;
            put(&mut p, &mut e, self.b.get(i, i));
            for j in (i + 1)..n {
                e[i] = 1;
                e[j] = 1;
                put(&mut p, &mut e, 2.0 * self.b.get(i, j));
            }
            e[i] = 1;
            put(&mut p, &mut e, self.d[i]);
        }
        put(&mut p, &mut e, self.c);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_at_origin_is_two_b() {
        let b = SymMatrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, 3.0]], 0.0, false).unwrap();
        let f = NormalQuartic::new(vec![1.0, 2.0], b.clone(), vec![0.1, 0.2], 0.0).unwrap();
        assert_eq!(f.hessian(&[0.0, 0.0]).unwrap(), b.scaled(2.0));
    }

    #[test]
    fn dimension_checks() {
        let b = SymMatrix::identity(2);
        assert!(NormalQuartic::new(vec![1.0], b.clone(), vec![0.0, 0.0], 0.0).is_err());
        let f = NormalQuartic::new(vec![1.0, 1.0], b, vec![0.0, 0.0], 0.0).unwrap();
        assert!(f.eval(&[1.0, 2.0, 3.0]).is_err());
        assert!(f.gradient(&[1.0]).is_err());
    }

    #[test]
    fn monomial_round_trip_is_exact_on_recognition() {
        let b = SymMatrix::from_rows(&[vec![-2.0, -0.35], vec![-0.35, -4.0]], 0.0, false).unwrap();
        let f = NormalQuartic::new(vec![1.0, 1.0], b, vec![0.2, 0.3], 5.0).unwrap();
        assert_eq!(f.to_monomial().to_normal().unwrap(), f);
    }
}
