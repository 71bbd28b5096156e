use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gsinkhorn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsinkhorn")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(path: &Path, text: &str) -> String {
    fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn compute_prints_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(&dir.path().join("x.csv"), "x1,x2\n0,1\n1,2\n3,0.5\n");
    let y = write(&dir.path().join("y.csv"), "x1,x2\n1,1\n2,0\n0,0\n-1,2\n");
    let out = gsinkhorn(&["compute", "--kernel", "gaussian:sigma=1", "--epsilon", "inf", "--x", &x, "--y", &y]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("epsilon = inf") && text.contains("m = 3") && text.contains("n = 4"), "{text}");
    let value: f64 = text.lines().find_map(|l| l.strip_prefix("value = ")).unwrap().parse().unwrap();
    let mean: f64 = text.lines().find_map(|l| l.strip_prefix("mean_sq = ")).unwrap().parse().unwrap();
    assert_eq!(value, mean);
}

#[test]
fn compute_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(&dir.path().join("x.csv"), "a,b\n0,1\n");
    let y = write(&dir.path().join("y.csv"), "x1,x2\n0,1\n");
    let out = gsinkhorn(&["compute", "--epsilon", "1", "--x", &x, "--y", &y]);
    assert_eq!(out.status.code(), Some(1));
    let out = gsinkhorn(&["compute", "--kernel", "cosine", "--epsilon", "1", "--x", &y, "--y", &y]);
    assert_eq!(out.status.code(), Some(1));
    let z = write(&dir.path().join("z.csv"), "x1\n0\n");
    let out = gsinkhorn(&["compute", "--epsilon", "1", "--x", &y, "--y", &z]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn experiment_writes_csv_and_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/exp4.csv");
    let cfg = write(
        &dir.path().join("exp4.toml"),
        &format!(
            "experiment_id = \"exp4\"\nepsilons = [0, \"1\", \"inf\"]\nsample_sizes = [10, 20]\ndims = [3]\nseed = 2\noutput_path = {:?}\n",
            csv.to_str().unwrap()
        ),
    );
    let out = gsinkhorn(&["experiment", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
    assert!(text.lines().nth(1).unwrap().starts_with("exp4-raw,0,10,0,linear,"));

    let bad = write(&dir.path().join("bad.toml"), "experiment_id = \"exp1\"\ntrials = 0\nseed = 1\noutput_path = \"x.csv\"\n");
    assert_eq!(gsinkhorn(&["experiment", "--config", &bad]).status.code(), Some(1));
    assert_eq!(gsinkhorn(&["experiment", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(1));
}

#[test]
fn bounds_writes_report_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bounds.csv");
    let cfg = write(
        &dir.path().join("bounds.toml"),
        &format!("instances = 20\nmax_dim = 4\nepsilons = [1.0]\nseed = 3\noutput_path = {:?}\n", csv.to_str().unwrap()),
    );
    let out = gsinkhorn(&["bounds", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "name,lhs,rhs,slack,holds");
    assert!(lines.all(|l| l.ends_with(",true")));
    let toml_files = fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "toml").count();
    assert_eq!(toml_files, 1);
}

#[test]
fn counterexample_streams_csv() {
    let out = gsinkhorn(&["counterexample", "--variant", "trace_gap", "--epsilon", "1", "--n-grid", "10,100,1000000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 3 * 5);
    assert!(text.contains("counterexample-trace_gap-w2_sq,0,1000000,1,linear,1.0,1.0,0"));

    let out = gsinkhorn(&["counterexample", "--variant", "hs_gap", "--epsilon", "0", "--n-grid", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gsinkhorn(&["counterexample", "--variant", "hs_gap", "--epsilon", "1", "--n-grid", "100,10"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gsinkhorn(&["counterexample", "--variant", "op_gap", "--epsilon", "1", "--n-grid", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_succeeds() {
    assert!(gsinkhorn(&["--help"]).status.success());
    assert_eq!(gsinkhorn(&[]).status.code(), Some(1));
}
