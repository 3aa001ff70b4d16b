use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn robust_t(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-t")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = robust_t(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["simulate", "--seed", "3", "--out", &p];
    args.extend_from_slice(extra);
    ok(&args);
    p
}

#[test]
fn simulate_writes_the_dataset_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "d.csv", &[]);
    let text = fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,y"));
    assert_eq!(lines.count(), 20);
    assert!(text.lines().skip(1).all(|l| l.starts_with("1,")));
    assert!(!text.contains('\r'));
}

#[test]
fn fit_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", &[]);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        ok(&["fit", "--data", &data, "--gamma", "4", "--samples", "3000", "--seed", "9", "--out", out.to_str().unwrap()]);
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# robust-t v0.1.0 seed=9"));
    assert_eq!(lines.next().unwrap(), "parameter,mean,sd,q025,q50,q975,ess,mcse_mean,mcse_sd,accept_rate");
    assert_eq!(text.lines().filter(|l| l.starts_with("beta") || l.starts_with("sigma")).count(), 3);
}

#[test]
fn sweep_is_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", &[]);
    let run = |jobs: &str| {
        ok(&[
            "sweep-outlier", "--data", &data, "--gamma", "2,inf", "--y-values", "10,1000", "--samples", "1000",
            "--seed", "4", "--jobs", jobs, "--format", "json",
        ])
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    assert!(one.contains("\"gamma\": \"inf\""));
    assert_eq!(one.matches("\"status\": \"ok\"").count(), 4);
}

#[test]
fn limit_fit_uses_one_based_indices() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", &[]);
    let base = ["limit-fit", "--data", data.as_str(), "--gamma", "1", "--samples", "1000"];
    let mut args = base.to_vec();
    args.extend(["--outliers", "20"]);
    ok(&args);
    let mut args = base.to_vec();
    args.extend(["--outliers", "21"]);
    assert_eq!(robust_t(&args).status.code(), Some(2));
    let mut args = base.to_vec();
    args.extend(["--outliers", "0"]);
    assert_eq!(robust_t(&args).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // n = 3, p = 2 fails n > p + 1.
    let tiny = dir.path().join("tiny.csv");
    fs::write(&tiny, "x1,x2,y\n1,1,1\n1,2,2\n1,3,2.5\n").unwrap();
    let t = tiny.to_str().unwrap();
    assert_eq!(robust_t(&["fit", "--data", t, "--gamma", "4", "--samples", "100"]).status.code(), Some(3));
    // gamma = 17 with one outlier fails n - |O| (gamma + 1) > p + 1 at n = 20.
    let data = simulate(dir.path(), "d.csv", &[]);
    let code = robust_t(&["limit-fit", "--data", &data, "--gamma", "17", "--outliers", "20", "--samples", "100"]);
    assert_eq!(code.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&code.stderr).contains("p + 1"));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x1,x2,y\n2,1,1\n1,2,2\n1,3,2.5\n1,4,5\n").unwrap();
    assert_eq!(robust_t(&["ols", "--data", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(robust_t(&["fit", "--data", "/nonexistent.csv", "--gamma", "1"]).status.code(), Some(2));
    assert_eq!(robust_t(&["fit", "--data", t, "--gamma", "inf"]).status.code(), Some(2));
    assert_eq!(robust_t(&["fit", "--data", &data, "--gamma", "2", "--step-size", "0"]).status.code(), Some(2));
}

#[test]
fn check_and_curves() {
    let out = ok(&["check", "--n", "20", "--p", "2", "--n-outliers", "1", "--gamma", "1"]);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.contains(",true,")));
    let out = ok(&["check", "--n", "1000", "--p", "2", "--gamma", "1", "--format", "json"]);
    assert!(out.contains("\"breakdown_fraction\": 0.498"));

    let out = ok(&["sigma-star", "--gamma-min", "1", "--gamma-max", "3"]);
    assert!(out.lines().nth(1).unwrap().starts_with("gamma,sigma_star_ratio"));
    assert!(out.lines().nth(2).unwrap().starts_with("1,0.6120"));
    let out = ok(&["phi", "--gamma-min", "4", "--gamma-max", "4", "--jobs", "2"]);
    assert_eq!(out.lines().nth(2).unwrap(), "4,1.12021,1.0,1.12021");
    assert_eq!(robust_t(&["phi", "--gamma-min", "5", "--gamma-max", "4"]).status.code(), Some(2));
}

#[test]
fn ols_and_table1() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", &[]);
    let out = ok(&["ols", "--data", &data]);
    assert!(out.lines().nth(1).unwrap().starts_with("parameter,estimate,posterior_sd"));
    let out = ok(&["table1", "--data", &data, "--gamma", "1,4", "--samples", "1000", "--jobs", "2"]);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].starts_with("inf,,,,,"));
}

#[test]
fn simulate_iid_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "d.csv", &["--scheme", "iid", "--n", "50", "--p", "3", "--beta", "1,-2,0.5"]);
    let text = fs::read_to_string(p).unwrap();
    assert!(text.starts_with("x1,x2,x3,y\n"));
    assert_eq!(text.lines().count(), 51);
    assert_eq!(robust_t(&["simulate", "--p", "3"]).status.code(), Some(2));
}
