use serde::{Deserialize, Serialize};

use crate::linalg::{dot, SymMatrix};

/// `c0 + gᵀx + xᵀMx`.
///
/// Used for the trace-of-Hessian polynomial `q(x) = Σᵢ ∂²f/∂xᵢ²` of a
/// quartic, which has degree at most two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPoly {
    pub c0: f64,
    pub g: Vec<f64>,
    pub m: SymMatrix,
}

impl QuadraticPoly {
    pub fn zero(n: usize) -> Self {
        Self {
            c0: 0.0,
            g: vec![0.0; n],
            m: SymMatrix::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c0 + dot(&self.g, x) + self.m.bilinear(x, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mx = self.m.matvec(x);
        self.g.iter().zip(mx).map(|(g, v)| g + 2.0 * v).collect()
    }

    /// The constant Hessian `2M`.
    pub fn hessian(&self) -> SymMatrix {
        self.m.scaled(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_identity() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 1.0);
        m.set(0, 1, 0.5);
        m.set(1, 1, -2.0);
        let q = QuadraticPoly {
            c0: 3.0,
            g: vec![1.0, -1.0],
            m,
        };
        let x = [0.3, -0.7];
        // value: 3 + 0.3 + 0.7 + (0.09 - 0.21 - 0.98)
        assert!((q.eval(&x) - (4.0 - 1.1)).abs() < 1e-14);
        let g = q.gradient(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (q.eval(&xp) - q.eval(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }
}
