use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const F1: &str = "normal 2\na 1 1\nB -2 -0.35\nB -0.35 -4\nd 0.2 0.3\nc 5\n";
const FOLD: &str = "normal 2\na 1.05 1.96\nB -0.670 -0.442\nB -0.442 -0.436\nd 0.08911 -0.2315\n";

fn steklov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(args)
        .env_remove("STEKLOV_JOBS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

#[test]
fn solve_normal_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "f1.txt", F1);
    let out = steklov(&["solve", "--input", &input, "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["f_star"].as_f64().unwrap() + 1.727802817222).abs() < 1e-9);
    assert_eq!(v["status"]["kind"], "success");
    assert_eq!(v["hessian_pd"], true);
    assert!(v["grad_inf"].as_f64().unwrap() < 1e-8);
}

#[test]
fn solve_mqp_file_matches_normal_file() {
    let dir = tempfile::tempdir().unwrap();
    let mqp = "mqp 2\n1 4 0\n1 0 4\n-2 2 0\n-4 0 2\n-0.7 1 1\n0.2 1 0\n0.3 0 1\n5 0 0\n";
    let a = steklov(&["solve", "--input", &write(dir.path(), "a.txt", mqp), "--json"]);
    let b = steklov(&["solve", "--input", &write(dir.path(), "b.txt", F1), "--json"]);
    let (fa, fb) = (json(&a)["f_star"].as_f64().unwrap(), json(&b)["f_star"].as_f64().unwrap());
    assert!((fa - fb).abs() < 1e-10);
}

#[test]
fn fold_exits_with_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "fold.txt", FOLD);
    let out = steklov(&["solve", "--input", &input, "--t0", "0.694", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"]["kind"], "failure");
    assert!(v["status"]["reason"].as_str().unwrap().contains("near-singular"));
}

#[test]
fn usage_errors_exit_one() {
    let out = steklov(&["solve", "--input", "/nonexistent/poly.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(steklov(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(steklov(&["bench", "--problem", "nope"]).status.code(), Some(1));
    assert_eq!(steklov(&["solve", "--problem", "f1", "--t0", "-1"]).status.code(), Some(1));
    assert_eq!(steklov(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "normal 2\na 1\n");
    let out = steklov(&["solve", "--input", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn bench_problems() {
    let out = steklov(&["bench", "--problem", "q61", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let known = v["known_value"].as_f64().unwrap();
    assert!((v["report"]["f_star"].as_f64().unwrap() - known).abs() < 1e-8);

    let v = json(&steklov(&["bench", "--problem", "qing:5", "--json"]));
    assert!((v["report"]["t0_used"].as_f64().unwrap() - 2.354).abs() < 1e-12);
    assert!((v["report"]["f_star"].as_f64().unwrap() + 24.25189606694).abs() < 1e-8);
}

#[test]
fn info_reports() {
    let out = steklov(&["info", "--problem", "rosenbrock:4", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["spectrum"]["classification"], "SingularPSD");
    let ns = &v["null_space"];
    assert!((ns["min_phi"].as_f64().unwrap() - 200.0).abs() < 1e-9);
    assert!((ns["max_phi"].as_f64().unwrap() - 200.0).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let quad = write(dir.path(), "q.txt", "mqp 2\n1 2 0\n1 0 2\n-1 1 0\n");
    let v = json(&steklov(&["info", "--input", &quad, "--json"]));
    assert_eq!(v["spectrum"]["classification"], "Zero");
    assert!(v["note"].as_str().unwrap().starts_with("C = 0"));

    let out = steklov(&["info", "--problem", "f1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("t0 (normal)"));
}

#[test]
fn solve_is_deterministic() {
    let run = || {
        let mut v = json(&steklov(&["solve", "--problem", "q62", "--json"]));
        v.as_object_mut().unwrap().remove("wall_time");
        v
    };
    assert_eq!(run(), run());
}

#[test]
fn trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = steklov(&["solve", "--problem", "f1", "--json", "--trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let t0 = json(&out)["t0_used"].as_f64().unwrap();
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 2);
    assert_eq!(rows[0][0], t0);
    assert_eq!(rows.last().unwrap()[0], 0.0);
}

#[test]
fn batch_small_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("b.csv");
    let out = steklov(&[
        "batch", "--n", "2", "--ib", "-0.1,0.1", "--count", "100", "--seed", "7", "--jobs", "2", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,ib_lo,ib_hi,count,failures,rate,mean_time");
    assert!(lines[1].starts_with("2,-0.1,0.1,100,0,0,"));
}

#[test]
fn batch_jobs_do_not_change_results() {
    let run = |jobs: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_steklov"));
        cmd.args(["batch", "--n", "3", "--ib", "-1,1", "--count", "60", "--seed", "11", "--format", "json"]);
        match jobs {
            Some(j) => cmd.env("STEKLOV_JOBS", j),
            None => cmd.env_remove("STEKLOV_JOBS"),
        };
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let mut v = json(&out);
        v[0].as_object_mut().unwrap().remove("mean_wall_time");
        v
    };
    assert_eq!(run(None), run(Some("4")));

    let out = Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(["batch", "--n", "2", "--ib", "0,0", "--count", "1", "--seed", "0"])
        .env("STEKLOV_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
