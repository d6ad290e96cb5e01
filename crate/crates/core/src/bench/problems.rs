//! Built-in test problems with their reported minima.

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::linalg::SymMatrix;
use crate::poly::{MonomialPoly, NormalQuartic, Polynomial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub polynomial: Polynomial,
    /// Minimum value reported for this problem.
    pub known_value: Option<f64>,
    pub known_point: Option<Vec<f64>>,
    /// The smoothing radius used for the reported run.
    pub published_t0: Option<f64>,
    /// A better point than the reported one, when the reported value is not global.
    pub better_value: Option<f64>,
    pub better_point: Option<Vec<f64>>,
    pub note: Option<String>,
}

impl ProblemSpec {
    fn new(name: impl Into<String>, polynomial: impl Into<Polynomial>) -> Self {
        Self {
            name: name.into(),
            polynomial: polynomial.into(),
            known_value: None,
            known_point: None,
            published_t0: None,
            better_value: None,
            better_point: None,
            note: None,
        }
    }

    fn known(mut self, value: f64, point: Option<&[f64]>) -> Self {
        self.known_value = Some(value);
        self.known_point = point.map(<[f64]>::to_vec);
        self
    }

    fn t0(mut self, t0: f64) -> Self {
        self.published_t0 = Some(t0);
        self
    }
}

pub const BUILTIN_NAMES: &[&str] = &[
    "f1",
    "f2",
    "qing:<n>",
    "q61",
    "q62",
    "q63",
    "q64",
    "counterexample",
    "rosenbrock:<n>",
];

fn normal(a: &[f64], b: &[[f64; 6]], d: &[f64]) -> NormalQuartic {
    let rows: Vec<Vec<f64>> = b.iter().map(|r| r.to_vec()).collect();
    let b = SymMatrix::from_rows(&rows, 0.0, false).expect("built-in B is symmetric");
    NormalQuartic::new(a.to_vec(), b, d.to_vec(), 0.0).expect("built-in dimensions agree")
}

/// `Σ (xᵢ² − i)² − 0.7 Σ_{i<j} xᵢxⱼ + 0.2 Σ xᵢ`.
fn qing_poly(n: usize, d: &[f64]) -> NormalQuartic {
    let mut b = SymMatrix::zeros(n);
    for i in 0..n {
        b.set(i, i, -2.0 * (i + 1) as f64);
        for j in i + 1..n {
            b.set(i, j, -0.35);
        }
    }
    let c = (1..=n).map(|i| (i * i) as f64).sum();
    NormalQuartic::new(vec![1.0; n], b, d.to_vec(), c).expect("dimensions agree")
}

pub fn f1() -> ProblemSpec {
    ProblemSpec::new("f1", qing_poly(2, &[0.2, 0.3]))
        .known(-1.727802817222, Some(&[-1.128494496206, -1.477960288995]))
        .t0(2.1f64.sqrt())
}

// (n, t₀, f*) of the reported qing runs
const QING_TABLE: &[(usize, f64, f64)] = &[
    (5, 2.354, -2.425189606694e1),
    (10, 3.283, -1.937676325137e2),
    (50, 7.196, -2.434927308593e4),
    (100, 10.13, -1.951017166604e5),
    (500, 22.50, -2.442736975195e7),
    (1000, 31.78, -1.954665241231e8),
    (2000, 44.90, -1.563932649564e9),
    (5000, 70.93, -2.443840227592e10),
];

pub fn qing(n: usize) -> ProblemSpec {
    let spec = ProblemSpec::new(format!("qing:{n}"), qing_poly(n, &vec![0.2; n]));
    if n == 3 {
        return spec
            .known(-5.274573029462, Some(&[-1.231880992829, -1.542141914625, -1.815208552194]))
            .t0(3.1f64.sqrt());
    }
    match QING_TABLE.iter().find(|r| r.0 == n) {
        Some(&(_, t0, value)) => spec.known(value, None).t0(t0),
        None => spec,
    }
}

pub fn f2() -> ProblemSpec {
    let mut p = qing(3);
    p.name = "f2".into();
    p
}

pub fn q61() -> ProblemSpec {
    let f = normal(
        &[9.0, 2.0, 6.0, 4.0, 8.0, 7.0],
        &[
            [4.0, 4.0, 9.0, 3.0, 4.0, 1.0],
            [4.0, 3.0, 7.0, 9.0, 9.0, 2.0],
            [9.0, 7.0, 4.0, 7.0, 6.0, 6.0],
            [3.0, 9.0, 7.0, 4.0, 2.0, 6.0],
            [4.0, 9.0, 6.0, 2.0, 8.0, 3.0],
            [1.0, 2.0, 6.0, 6.0, 3.0, 5.0],
        ],
        &[2.0, 6.0, 5.0, 0.0, 0.0, 2.0],
    );
    ProblemSpec::new("q61", f)
        .known(
            -28.94281730403047,
            Some(&[0.545218813388, -1.464410189792, -0.720606654276, 1.178144265592, 0.794065108243, -0.465794119448]),
        )
        .t0(1.540)
}

pub fn q62() -> ProblemSpec {
    let f = normal(
        &[4.0, 1.0, 8.0, 4.0, 6.0, 7.0],
        &[
            [4.0, 0.0, 0.0, 3.0, 0.0, 3.0],
            [0.0, 0.0, 0.0, 6.0, 6.0, 0.0],
            [0.0, 0.0, 5.0, 0.0, 3.0, 6.0],
            [3.0, 6.0, 0.0, 4.0, 4.0, 3.0],
            [0.0, 6.0, 3.0, 4.0, 4.0, 5.0],
            [3.0, 0.0, 6.0, 3.0, 5.0, 2.0],
        ],
        &[8.0, 7.0, 7.0, 8.0, 6.0, 2.0],
    );
    ProblemSpec::new("q62", f)
        .known(
            -23.0056478266632,
            Some(&[-0.654664171603, -1.869516007115, -0.368135071982, 0.819086646324, 0.775622316964, -0.531322790207]),
        )
        .t0(1.940)
}

pub fn q63() -> ProblemSpec {
    let f = normal(
        &[9.0, 7.0, 1.0, 4.0, 9.0, 9.0],
        &[
            [8.0, 0.0, 1.0, 3.0, 9.0, 9.0],
            [0.0, 0.0, 9.0, 5.0, 2.0, 6.0],
            [1.0, 9.0, 4.0, 1.0, 1.0, 8.0],
            [3.0, 5.0, 1.0, 0.0, 8.0, 0.0],
            [9.0, 2.0, 1.0, 8.0, 2.0, 1.0],
            [9.0, 6.0, 8.0, 0.0, 1.0, 8.0],
        ],
        &[5.0, 8.0, 6.0, 9.0, 9.0, 0.0],
    );
    ProblemSpec::new("q63", f)
        .known(
            -31.78036928464823,
            Some(&[-0.677847258779, 0.915757213506, -1.676567471092, -1.129390429402, 0.769478574815, 0.740933617859]),
        )
        .t0(2.271)
}

pub fn q64() -> ProblemSpec {
    let f = normal(
        &[1.0, 2.0, 1.0, 6.0, 2.0, 1.0],
        &[
            [4.0, 1.0, 4.0, 2.0, 4.0, 4.0],
            [1.0, 1.0, 4.0, 0.0, 1.0, 7.0],
            [4.0, 4.0, 4.0, 6.0, 6.0, 7.0],
            [2.0, 0.0, 6.0, 6.0, 7.0, 9.0],
            [4.0, 1.0, 6.0, 7.0, 3.0, 0.0],
            [4.0, 7.0, 7.0, 9.0, 0.0, 3.0],
        ],
        &[8.0, 7.0, 6.0, 4.0, 7.0, 6.0],
    );
    let mut p = ProblemSpec::new("q64", f)
        .known(
            -60.61429171639984,
            Some(&[0.707423237483, 1.239514850400, 1.260381219594, 1.082078205488, -1.644024006236, -2.351712409938]),
        )
        .t0(2.340);
    p.better_value = Some(-70.87818171);
    p.better_point = Some(vec![-1.350391459, -1.483150332, -1.369006772, -1.10594118, 1.54353024, 2.33088412]);
    p.note = Some("the trajectory ends at a local minimizer; better_point is lower".into());
    p
}

pub fn counterexample() -> ProblemSpec {
    let b = SymMatrix::from_rows(&[vec![-0.670, -0.442], vec![-0.442, -0.436]], 0.0, false).expect("symmetric");
    let f = NormalQuartic::new(vec![1.05, 1.96], b, vec![0.08911, -0.2315], 0.0).expect("dimensions agree");
    let mut p = ProblemSpec::new("counterexample", f).t0(0.694);
    p.note = Some("the path from t0 = 0.694 runs into a singular Hessian".into());
    p
}

/// `Σ_{i<n} (1 − xᵢ)² + 100(xᵢ₊₁ − xᵢ²)²`.
pub fn rosenbrock(n: usize) -> ProblemSpec {
    let mut m = MonomialPoly::new(n);
    let unit = |i: usize, k: u8| {
        let mut e = vec![0u8; n];
        e[i] = k;
        e
    };
    for i in 0..n - 1 {
        let mut cross = unit(i, 2);
        cross[i + 1] = 1;
        let terms = [
            (vec![0u8; n], 1.0),
            (unit(i, 1), -2.0),
            (unit(i, 2), 1.0),
            (unit(i + 1, 2), 100.0),
            (cross, -200.0),
            (unit(i, 4), 100.0),
        ];
        for (e, c) in terms {
            m.add_term(&e, c).expect("quartic");
        }
    }
    ProblemSpec::new(format!("rosenbrock:{n}"), m).known(0.0, Some(&vec![1.0; n]))
}

fn parse_dim(name: &str, arg: &str, min: usize) -> Result<usize, BenchError> {
    let n: usize = arg
        .parse()
        .map_err(|_| BenchError::InvalidParameter(format!("{name}: `{arg}` is not a dimension")))?;
    if n < min {
        return Err(BenchError::InvalidParameter(format!("{name} needs n >= {min}, got {n}")));
    }
    Ok(n)
}

/// Looks up `f1`, `f2`, `qing:<n>`, `q61`–`q64`, `counterexample` or `rosenbrock:<n>`.
pub fn builtin_problem(name: &str) -> Result<ProblemSpec, BenchError> {
    let lower = name.trim().to_ascii_lowercase();
    let (base, arg) = match lower.split_once(':') {
        Some((b, a)) => (b, Some(a)),
        None => (lower.as_str(), None),
    };
    let spec = match (base, arg) {
        ("f1", None) => f1(),
        ("f2", None) => f2(),
        ("qing", Some(a)) => qing(parse_dim("qing", a, 2)?),
        ("q61", None) => q61(),
        ("q62", None) => q62(),
        ("q63", None) => q63(),
        ("q64", None) => q64(),
        ("counterexample", None) => counterexample(),
        ("rosenbrock", Some(a)) => rosenbrock(parse_dim("rosenbrock", a, 2)?),
        _ => return Err(BenchError::UnknownProblem(name.to_string())),
    };
    Ok(spec)
}
