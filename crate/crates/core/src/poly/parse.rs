//! Text formats for polynomials.
//!
//! Format A, any quartic:
//!
//! ```text
//! mqp <n>
//! <coeff> <e1> ... <en>      # one line per term, duplicates are summed
//! ```
//!
//! Format B, the structured normal form:
//!
//! ```text
//! normal <n>
//! a <n reals>
//! B <n reals>                # n rows, symmetric
//! d <n reals>
//! c <real>                   # optional constant offset
//! ```
//!
//! `#` starts a comment in both formats; blank lines are ignored.

use std::fmt::Write as _;

use super::{MonomialPoly, NormalQuartic, PolyError, Polynomial};
use crate::linalg::{LinalgError, SymMatrix};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| err(line, format!("expected a real number, found `{tok}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

fn parse_reals(toks: &[&str], n: usize, line: usize) -> Result<Vec<f64>, ParseError> {
    if toks.len() != n {
        return Err(err(line, format!("dimension mismatch: expected {n} values, found {}", toks.len())));
    }
    toks.iter().map(|t| parse_f64(t, line)).collect()
}

pub fn parse_poly(text: &str) -> Result<Polynomial, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    if header.len() != 2 {
        return Err(err(hline, "header must be `mqp <n>` or `normal <n>`"));
    }
    let n: usize = header[1]
        .parse()
        .map_err(|_| err(hline, format!("invalid dimension `{}`", header[1])))?;
    if n == 0 {
        return Err(err(hline, "dimension must be at least 1"));
    }
    match header[0] {
        "mqp" => parse_mqp(n, lines).map(Polynomial::Monomial),
        "normal" => parse_normal(n, hline, lines).map(Polynomial::Normal),
        other => Err(err(hline, format!("unknown format `{other}`"))),
    }
}

fn parse_mqp<'a>(n: usize, lines: impl Iterator<Item = (usize, Vec<&'a str>)>) -> Result<MonomialPoly, ParseError> {
    let mut p = MonomialPoly::new(n);
    for (line, toks) in lines {
        if toks.len() != n + 1 {
            return Err(err(
                line,
                format!("dimension mismatch: expected coefficient and {n} exponents, found {} fields", toks.len()),
            ));
        }
        let coeff = parse_f64(toks[0], line)?;
        let exps = toks[1..]
            .iter()
            .map(|t| t.parse::<u8>().map_err(|_| err(line, format!("invalid exponent `{t}`"))))
            .collect::<Result<Vec<u8>, _>>()?;
        p.add_term(&exps, coeff).map_err(|e| match e {
            PolyError::DegreeTooHigh { degree } => err(line, format!("degree exceeds 4 (term has degree {degree})")),
            other => err(line, other.to_string()),
        })?;
    }
    Ok(p)
}

fn parse_normal<'a>(
    n: usize,
    hline: usize,
    lines: impl Iterator<Item = (usize, Vec<&'a str>)>,
) -> Result<NormalQuartic, ParseError> {
    let mut a = None;
    let mut d = None;
    let mut c = None;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut last_line = hline;
    let mut b_start = hline;
    for (line, toks) in lines {
        last_line = line;
        let vals = &toks[1..];
        match toks[0] {
            "a" if a.is_none() => a = Some(parse_reals(vals, n, line)?),
            "d" if d.is_none() => d = Some(parse_reals(vals, n, line)?),
            "c" if c.is_none() => c = Some(parse_reals(vals, 1, line)?[0]),
            "B" => {
                if rows.len() == n {
                    return Err(err(line, format!("too many B rows (expected {n})")));
                }
                if rows.is_empty() {
                    b_start = line;
                }
                rows.push(parse_reals(vals, n, line)?);
            }
            "a" | "d" | "c" => return Err(err(line, format!("duplicate `{}` line", toks[0]))),
            other => return Err(err(line, format!("unknown line tag `{other}`"))),
        }
    }
    let a = a.ok_or_else(|| err(last_line, "missing `a` line"))?;
    let d = d.ok_or_else(|| err(last_line, "missing `d` line"))?;
    if rows.len() != n {
        return Err(err(last_line, format!("expected {n} B rows, found {}", rows.len())));
    }
    let b = SymMatrix::from_rows(&rows, SYMMETRY_TOL, false).map_err(|e| match e {
        LinalgError::Asymmetric { i, j, .. } => err(
            b_start + i.max(j),
            format!("B is not symmetric at ({}, {})", i + 1, j + 1),
        ),
        other => err(b_start, other.to_string()),
    })?;
    NormalQuartic::new(a, b, d, c.unwrap_or(0.0)).map_err(|e| err(hline, e.to_string()))
}

/// Writes a polynomial back in its native format, full precision.
pub fn format_poly(p: &Polynomial) -> String {
    let mut s = String::new();
    match p {
        Polynomial::Monomial(m) => {
            let _ = writeln!(s, "mqp {}", m.dim());
            for (e, c) in m.terms() {
                let _ = write!(s, "{c:?}");
                for k in e {
                    let _ = write!(s, " {k}");
                }
                s.push('\n');
            }
        }
        Polynomial::Normal(f) => {
            let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
            let _ = writeln!(s, "normal {}", f.dim());
            let _ = writeln!(s, "a {}", join(&f.a));
            for row in f.b.rows() {
                let _ = writeln!(s, "B {}", join(&row));
            }
            let _ = writeln!(s, "d {}", join(&f.d));
            if f.c != 0.0 {
                let _ = writeln!(s, "c {:?}", f.c);
            }
        }
    }
    s
}
