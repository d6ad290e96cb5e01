//! Global minimization of multivariate quartic polynomials by Steklov
//! convexification and trajectory tracking.
//!
//! The box-average `μ(x, t)` of a quartic `f` is again a quartic polynomial in
//! `(x, t)`. For `t₀` large enough `μ(·, t₀)` is convex, so its minimizer is
//! easy to find; following the curve of stationary points `∇ₓμ(x(t), t) = 0`
//! back to `t = 0` gives a candidate global minimizer of `f`.
//!
//! ```
//! use steklov::bench::problems;
//! use steklov::solve::{run_algorithm1, SolverConfig};
//!
//! let p = problems::f1();
//! let report = run_algorithm1(&p.polynomial, &SolverConfig::default());
//! assert!(report.status.is_success());
//! assert!((report.f_star - p.known_value.unwrap()).abs() < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod convexify;
pub mod linalg;
pub mod ode;
pub mod poly;
pub mod solve;
pub mod steklov;

pub use poly::{parse_poly, MonomialPoly, NormalQuartic, Polynomial};
pub use solve::{run_algorithm1, SolveReport, SolveStatus, SolverConfig, T0Mode};
pub use steklov::SteklovCoeffs;
