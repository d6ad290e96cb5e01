use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{NormalQuartic, PolyError, QuadraticPoly};
use crate::linalg::SymMatrix;

/// Exponent vector of a monomial, one small integer per variable.
pub type Exponents = Vec<u8>;

/// A sparse multivariate polynomial of total degree at most four.
///
/// Terms are keyed by exponent vector; the `BTreeMap` keeps them in
/// lexicographic order so serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialPoly {
    n: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl MonomialPoly {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| total_degree(e)).max().unwrap_or(0)
    }

    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    /// Adds `coeff · x^exps`, summing with any existing term. Terms that
    /// cancel to zero are dropped.
    pub fn add_term(&mut self, exps: &[u8], coeff: f64) -> Result<(), PolyError> {
        if exps.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: exps.len(),
            });
        }
        let deg = total_degree(exps);
        if deg > 4 {
            return Err(PolyError::DegreeTooHigh { degree: deg });
        }
        if coeff == 0.0 {
            return Ok(());
        }
        let entry = self.terms.entry(exps.to_vec()).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(exps);
        }
        Ok(())
    }

    pub fn with_term(mut self, exps: &[u8], coeff: f64) -> Result<Self, PolyError> {
        self.add_term(exps, coeff)?;
        Ok(self)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), PolyError> {
        if x.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    // powers[i][k] = x_i^k for k = 0..=4
    fn powers(x: &[f64]) -> Vec<[f64; 5]> {
        x.iter()
            .map(|&v| {
                let v2 = v * v;
                [1.0, v, v2, v2 * v, v2 * v2]
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.check_dim(x)?;
        let p = Self::powers(x);
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| c * e.iter().enumerate().map(|(i, &k)| p[i][k as usize]).product::<f64>())
            .sum())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.check_dim(x)?;
        let p = Self::powers(x);
        let mut g = vec![0.0; self.n];
        for (e, c) in &self.terms {
            for (i, &ei) in e.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                let mut v = c * ei as f64;
                for (j, &ej) in e.iter().enumerate() {
                    let k = if j == i { ej - 1 } else { ej };
                    v *= p[j][k as usize];
                }
                g[i] += v;
            }
        }
        Ok(g)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix, PolyError> {
        self.check_dim(x)?;
        let n = self.n.max(1);
        let p = Self::powers(x);
        let mut h = SymMatrix::zeros(n);
        let mut reduced = vec![0u8; self.n];
        for (e, c) in &self.terms {
            for i in 0..self.n {
                if e[i] == 0 {
                    continue;
                }
                for j in i..self.n {
                    let factor = if i == j {
                        if e[i] < 2 {
                            continue;
                        }
                        (e[i] as f64) * (e[i] - 1) as f64
                    } else {
                        if e[j] == 0 {
                            continue;
                        }
                        (e[i] as f64) * (e[j] as f64)
                    };
                    reduced.copy_from_slice(e);
                    reduced[i] -= 1;
                    reduced[j] -= 1;
                    let mono: f64 = reduced.iter().enumerate().map(|(k, &r)| p[k][r as usize]).product();
                    h.add_sym(i, j, c * factor * mono);
                }
            }
        }
        Ok(h)
    }

    /// `q(x) = Σᵢ ∂²f/∂xᵢ²`, obtained by differentiating each term twice in
    /// each variable.
    pub fn trace_hessian_poly(&self) -> QuadraticPoly {
        let n = self.n.max(1);
        let mut q = QuadraticPoly::zero(n);
        for (e, c) in &self.terms {
            for i in 0..self.n {
                if e[i] < 2 {
                    continue;
                }
                let coeff = c * (e[i] as f64) * (e[i] - 1) as f64;
                let mut r = e.clone();
                r[i] -= 2;
                let nz: Vec<usize> = (0..self.n).filter(|&k| r[k] > 0).collect();
                match (total_degree(&r), nz.as_slice()) {
                    (0, _) => q.c0 += coeff,
                    (1, [k]) => q.g[*k] += coeff,
                    (2, [k]) => q.m.add_sym(*k, *k, coeff),
                    (2, [k, l]) => q.m.add_sym(*k, *l, 0.5 * coeff),
                    _ => unreachable!("degree <= 4 leaves degree <= 2"),
                }
            }
        }
        q
    }

    /// `(1/120) Σ f_iiii + (1/36) Σ_{i<j} f_iijj` with `f_iiii = 24·[xᵢ⁴]`
    /// and `f_iijj = 4·[xᵢ²xⱼ²]`.
    pub fn quartic_tail_kappa(&self) -> f64 {
        let mut kappa = 0.0;
        for (e, c) in &self.terms {
            let nz: Vec<u8> = e.iter().copied().filter(|&k| k > 0).collect();
            match nz.as_slice() {
                [4] => kappa += 24.0 * c / 120.0,
                [2, 2] => kappa += 4.0 * c / 36.0,
                _ => {}
            }
        }
        kappa
    }

    /// Recognizes `Σ aᵢxᵢ⁴ + xᵀBx + dᵀx + c` and returns it in structured
    /// form. Any other quartic or cubic term makes this `None`.
    pub fn to_normal(&self) -> Option<NormalQuartic> {
        let n = self.n;
        if n == 0 {
            return None;
        }
        let mut a = vec![0.0; n];
        let mut b = SymMatrix::zeros(n);
        let mut d = vec![0.0; n];
        let mut c = 0.0;
        for (e, coeff) in &self.terms {
            let nz: Vec<usize> = (0..n).filter(|&k| e[k] > 0).collect();
            match (total_degree(e), nz.as_slice()) {
                (0, _) => c += coeff,
                (1, [k]) => d[*k] += coeff,
                (2, [k]) => b.add_sym(*k, *k, *coeff),
                (2, [k, l]) => b.add_sym(*k, *l, 0.5 * coeff),
                (4, [k]) => a[*k] += coeff,
                _ => return None,
            }
        }
        NormalQuartic::new(a, b, d, c).ok()
    }
}

fn total_degree(e: &[u8]) -> u32 {
    e.iter().map(|&k| k as u32).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x4_plus_cross() -> MonomialPoly {
        MonomialPoly::new(2)
            .with_term(&[4, 0], 1.0)
            .unwrap()
            .with_term(&[1, 2], -3.0)
            .unwrap()
            .with_term(&[0, 1], 2.0)
            .unwrap()
    }

    #[test]
    fn degree_cap_and_zero_terms() {
        let mut p = MonomialPoly::new(2);
        assert!(matches!(p.add_term(&[1, 4], 1.0), Err(PolyError::DegreeTooHigh { degree: 5 })));
        p.add_term(&[1, 1], 2.0).unwrap();
        p.add_term(&[1, 1], -2.0).unwrap();
        assert_eq!(p.num_terms(), 0);
        p.add_term(&[0, 0], 0.0).unwrap();
        assert_eq!(p.num_terms(), 0);
    }

    #[test]
    fn eval_gradient_hessian() {
        let p = x4_plus_cross();
        let x = [2.0, -1.0];
        // 16 - 3·2·1 - 2
        assert_eq!(p.eval(&x).unwrap(), 8.0);
        // ∂₁ = 4x₁³ - 3x₂², ∂₂ = -6x₁x₂ + 2
        assert_eq!(p.gradient(&x).unwrap(), vec![32.0 - 3.0, 12.0 + 2.0]);
        let h = p.hessian(&x).unwrap();
        assert_eq!(h.get(0, 0), 48.0);
        assert_eq!(h.get(0, 1), 6.0);
        assert_eq!(h.get(1, 1), -12.0);
        assert!(p.eval(&[1.0]).is_err());
    }

    #[test]
    fn single_quartic_trace_and_kappa() {
        let p = MonomialPoly::new(2).with_term(&[4, 0], 1.0).unwrap();
        let q = p.trace_hessian_poly();
        assert_eq!(q.m.get(0, 0), 12.0);
        assert_eq!(q.m.get(1, 1), 0.0);
        assert_eq!(q.c0, 0.0);
        assert_eq!(p.quartic_tail_kappa(), 0.2);
    }

    #[test]
    fn cross_square_kappa() {
        let p = MonomialPoly::new(2).with_term(&[2, 2], 1.0).unwrap();
        assert!((p.quartic_tail_kappa() - 1.0 / 9.0).abs() < 1e-16);
        let q = p.trace_hessian_poly();
        assert_eq!(q.m.get(0, 0), 2.0);
        assert_eq!(q.m.get(1, 1), 2.0);
    }

    #[test]
    fn normal_form_recognition() {
        assert!(x4_plus_cross().to_normal().is_none());
        let p = MonomialPoly::new(2)
            .with_term(&[4, 0], 2.0)
            .unwrap()
            .with_term(&[0, 4], 1.0)
            .unwrap()
            .with_term(&[1, 1], -0.7)
            .unwrap()
            .with_term(&[0, 2], -4.0)
            .unwrap()
            .with_term(&[1, 0], 0.2)
            .unwrap()
            .with_term(&[0, 0], 5.0)
            .unwrap();
        let nq = p.to_normal().unwrap();
        assert_eq!(nq.a, vec![2.0, 1.0]);
        assert_eq!(nq.b.get(0, 1), -0.35);
        assert_eq!(nq.b.get(1, 1), -4.0);
        assert_eq!(nq.d, vec![0.2, 0.0]);
        assert_eq!(nq.c, 5.0);
    }
}
