use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metric-clt")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("ok.csv"), "0,1,2\n1,0,1\n2,1,0\n").unwrap();
    std::fs::write(d.join("bad.csv"), "0,1,3\n1,0,1\n3,1,0\n").unwrap();
    std::fs::write(d.join("garbled.csv"), "0,1\n1,zero\n").unwrap();

    let ok = run(d, &["validate", "--input", "ok.csv", "-o", "r.json"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "validate");
    assert_eq!(report["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(report["version"].is_string());

    let bad = run(d, &["validate", "--input", "bad.csv"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("(0, 2, 1)"), "{}", stdout(&bad));

    assert_eq!(run(d, &["validate", "--input", "garbled.csv"]).status.code(), Some(2));
    assert_eq!(run(d, &["validate", "--input", "missing.csv"]).status.code(), Some(2));
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(d, &["validate", "--bogus"]).status.code(), Some(2));
    // a non-metric input to any other subcommand is a validation failure
    assert_eq!(run(d, &["frechet", "--input", "bad.csv"]).status.code(), Some(1));
}

#[test]
fn help_documents_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, cols) in [
        ("entropy", "eps, n_cover, sqrt_log, cell_contribution"),
        ("lp-check", "x, y, d_p, d_p_prime, lower_bound, slack"),
        ("clt", "n, projection_id, p_value"),
        ("frechet", "index, label, value"),
    ] {
        let o = run(dir.path(), &[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains(cols), "{cmd}: {}", stdout(&o));
    }
}

#[test]
fn cone_demo_reports_the_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["cone-demo", "--nu", "8", "--nv", "24", "--seed", "7", "-o", "cone.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("cone.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["frechet_minimizers"].as_array().unwrap().len(), 24);
    assert_eq!(v["result"]["frechet_unique"], false);
    assert_eq!(v["seed"], 7);
}

#[test]
fn pseudo_metric_measure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("tri.csv"), "0,1,1\n1,0,1.5\n1,1.5,0\n").unwrap();
    std::fs::write(d.join("delta.json"), r#"{"weights":[1,0,0]}"#).unwrap();
    let o = run(d, &["embed", "-i", "tri.csv", "--measure", "delta.json", "--metric", "d-eta"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("collapses"));
    let o = run(
        d,
        &["clt", "-i", "tri.csv", "--measure", "delta.json", "--replicates", "100", "--n-list", "10", "--transport"],
    );
    assert_eq!(o.status.code(), Some(1));
}
