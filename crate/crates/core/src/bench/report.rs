use std::fmt::Write as _;

use serde::Serialize;

use super::BatchStats;
use crate::solve::SolveReport;

pub const BATCH_CSV_HEADER: &str = "n,ib_lo,ib_hi,count,failures,rate,mean_time";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// `x` with six significant digits, trailing zeros trimmed.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn batch_csv(stats: &[BatchStats]) -> String {
    let mut s = String::from(BATCH_CSV_HEADER);
    s.push('\n');
    for b in stats {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            b.n,
            b.interval_ib.0,
            b.interval_ib.1,
            b.count,
            b.failures,
            format_sig(b.failure_rate),
            format_sig(b.mean_wall_time)
        );
    }
    s
}

pub fn emit_batch(stats: &[BatchStats], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => batch_csv(stats),
        ReportFormat::Json => to_json(stats),
    }
}

#[derive(Serialize)]
struct NamedReport<'a> {
    problem: &'a str,
    #[serde(flatten)]
    report: &'a SolveReport,
}

/// Solve reports keyed by problem name. The CSV form keeps the scalar fields.
pub fn emit_solves(reports: &[(String, SolveReport)], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let named: Vec<NamedReport<'_>> = reports
                .iter()
                .map(|(problem, report)| NamedReport { problem, report })
                .collect();
            to_json(&named)
        }
        ReportFormat::Csv => {
            let mut s = String::from("problem,status,f_star,grad_inf,hessian_pd,t0_used,wall_time\n");
            for (name, r) in reports {
                let status = if r.status.is_success() { "success" } else { "failure" };
                let _ = writeln!(
                    s,
                    "{name},{status},{:.16e},{:.3e},{},{},{}",
                    r.f_star, r.grad_inf, r.hessian_pd, r.t0_used, r.wall_time
                );
            }
            s
        }
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports contain only finite numbers and strings")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> BatchStats {
        BatchStats {
            n: 5,
            interval_ib: (-1.0, 1.0),
            count: 2000,
            seed: 7,
            failures: 23,
            failure_rate: 23.0 / 2000.0,
            seeds_of_failures: vec![1, 2, 3],
            non_pd_successes: 0,
            mean_wall_time: 0.00123456789,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        assert_eq!(batch_csv(&[]), format!("{BATCH_CSV_HEADER}\n"));
    }

    #[test]
    fn one_row() {
        let csv = batch_csv(&[stats()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "5,-1,1,2000,23,0.0115,0.00123457");
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig(0.0115), "0.0115");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(2.0 / 3000.0), "0.000666667");
        assert_eq!(format_sig(1.0e-7 / 3.0), "3.33333e-8");
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut s = stats();
        s.failure_rate = 0.1 + 0.2;
        s.mean_wall_time = std::f64::consts::PI * 1e-3;
        let json = emit_batch(&[s.clone()], ReportFormat::Json);
        let back: Vec<BatchStats> = serde_json::from_str(&json).unwrap();
        assert_eq!(back[0].failure_rate.to_bits(), s.failure_rate.to_bits());
        assert_eq!(back[0].mean_wall_time.to_bits(), s.mean_wall_time.to_bits());
        assert_eq!(back[0], s);
        assert!(json.contains("\"interval_IB\""));
    }
}
