//! Quartic polynomials in two representations: a sparse monomial map for
//! arbitrary quartics and the structured normal form for large `n`.

mod monomial;
mod normal;
mod parse;
mod quadratic;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use monomial::{Exponents, MonomialPoly};
pub use normal::NormalQuartic;
pub use parse::{format_poly, parse_poly, ParseError};
pub use quadratic::QuadraticPoly;

use crate::linalg::SymMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree exceeds 4 (term has degree {degree})")]
    DegreeTooHigh { degree: u32 },
}

/// Either representation; both answer the same operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Polynomial {
    Monomial(MonomialPoly),
    Normal(NormalQuartic),
}

impl From<MonomialPoly> for Polynomial {
    fn from(p: MonomialPoly) -> Self {
        Polynomial::Monomial(p)
    }
}

impl From<NormalQuartic> for Polynomial {
    fn from(p: NormalQuartic) -> Self {
        Polynomial::Normal(p)
    }
}

impl Polynomial {
    pub fn dim(&self) -> usize {
        match self {
            Polynomial::Monomial(p) => p.dim(),
            Polynomial::Normal(p) => p.dim(),
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            Polynomial::Monomial(p) => p.degree(),
            Polynomial::Normal(p) => {
                if p.a.iter().any(|&a| a != 0.0) {
                    4
                } else if p.b.max_abs() > 0.0 {
                    2
                } else if p.d.iter().any(|&d| d != 0.0) {
                    1
                } else {
                    0
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        match self {
            Polynomial::Monomial(p) => p.eval(x),
            Polynomial::Normal(p) => p.eval(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        match self {
            Polynomial::Monomial(p) => p.gradient(x),
            Polynomial::Normal(p) => p.gradient(x),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix, PolyError> {
        match self {
            Polynomial::Monomial(p) => p.hessian(x),
            Polynomial::Normal(p) => p.hessian(x),
        }
    }

    /// `q(x) = trace ∇²f(x)`.
    pub fn trace_hessian_poly(&self) -> QuadraticPoly {
        match self {
            Polynomial::Monomial(p) => p.trace_hessian_poly(),
            Polynomial::Normal(p) => p.trace_hessian_poly(),
        }
    }

    /// Constant coefficient of `t⁴` in the Steklov polynomial.
    pub fn quartic_tail_kappa(&self) -> f64 {
        match self {
            Polynomial::Monomial(p) => p.quartic_tail_kappa(),
            Polynomial::Normal(p) => p.quartic_tail_kappa(),
        }
    }

    /// `C = Σᵢ ∇²f_ii`, the constant Hessian of the trace-of-Hessian polynomial.
    pub fn c_matrix(&self) -> SymMatrix {
        match self {
            Polynomial::Monomial(p) => p.trace_hessian_poly().hessian(),
            Polynomial::Normal(p) => p.c_matrix(),
        }
    }

    pub fn to_monomial(&self) -> Cow<'_, MonomialPoly> {
        match self {
            Polynomial::Monomial(p) => Cow::Borrowed(p),
            Polynomial::Normal(p) => Cow::Owned(p.to_monomial()),
        }
    }

    /// The structured normal form, when the polynomial has that shape.
    pub fn as_normal(&self) -> Option<Cow<'_, NormalQuartic>> {
        match self {
            Polynomial::Monomial(p) => p.to_normal().map(Cow::Owned),
            Polynomial::Normal(p) => Some(Cow::Borrowed(p)),
        }
    }
}
