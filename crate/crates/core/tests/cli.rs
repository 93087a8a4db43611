use std::process::Command;

use serde_json::Value;

fn dichotomy(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dichotomy"))
        .args(args)
        .args(["--format", "json"])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

const FIXTURE: [&str; 4] = ["--theta", "2", "--grad", "1"];

fn with_fixture(cmd: &str, extra: &[&str]) -> Vec<String> {
    let mut v = vec![cmd.to_string()];
    v.extend(FIXTURE.iter().map(|s| s.to_string()));
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run(cmd: &str, extra: &[&str]) -> (i32, Value, String) {
    let args = with_fixture(cmd, extra);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    dichotomy(&refs)
}

#[test]
fn analyze_fourier() {
    let (code, v, _) = run("analyze", &[]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "admissible-nonequilibrium");
    assert!((v["sigma"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((v["lambda_multipliers"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    for key in ["residual_norm", "samples", "seed", "model", "state"] {
        assert!(!v[key].is_null(), "{key}");
    }
}

#[test]
fn analyze_negative_conductivity() {
    let (code, v, _) = run("analyze", &["--kappa", "-1"]);
    assert_eq!(code, 3);
    assert_eq!(v["verdict"], "inadmissible-negative");
    let (code, v, _) = run("analyze", &["--model", "fourier-negkappa"]);
    assert_eq!(code, 3);
    assert_eq!(v["verdict"], "inadmissible-negative");
}

#[test]
fn analyze_gibbs_mismatch() {
    let (code, v, _) = run("analyze", &["--model", "fourier-gibbs-mismatch", "--epsilon", "0.2"]);
    assert_eq!(code, 3);
    assert_eq!(v["verdict"], "inadmissible-mixed");
    let lambda = v["lambda_convex"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda < 1.0);
    assert!((v["residual_norm"].as_f64().unwrap() - 0.05 * 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(v["in_row_space"], false);
}

#[test]
fn classify_vectors() {
    for (y, class) in [("1.5,0,0", "real"), ("-0.5,0,0", "ideal"), ("-2.5,0,0", "over-ideal")] {
        let (code, v, _) = run("classify", &["--y", y]);
        assert_eq!(code, 0);
        assert_eq!(v["class"], class, "{y}");
    }
}

#[test]
fn combine_vectors() {
    let (code, v, _) = run("combine", &["--y1", "3.5,0,0", "--y2", "-6.5,0,0"]);
    assert_eq!(code, 0);
    assert!((v["lambda_convex"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert!(v["sigma"].as_f64().unwrap().abs() < 1e-12);

    let (_, v, _) = run("combine", &["--y1", "0.5,0,0", "--y2", "-1.5,0,0"]);
    assert!((v["lambda_convex"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let (code, _, err) = run("combine", &["--y1", "-6.5,0,0", "--y2", "3.5,0,0"]);
    assert_eq!(code, 2);
    assert!(err.contains("not real"));
}

#[test]
fn scan_histograms() {
    let (code, v, _) = run("scan", &["--bins", "7"]);
    assert_eq!(code, 0);
    assert!((v["min_sigma"].as_f64().unwrap() - 0.25).abs() < 1e-10);
    assert!((v["max_sigma"].as_f64().unwrap() - 0.25).abs() < 1e-10);

    let (_, v, _) = run("scan", &["--model", "fourier-gibbs-mismatch", "--radius", "1000"]);
    assert_eq!(v["both_signs"], true);

    let (_, v, _) = run("scan", &["--model", "fourier-gibbs-mismatch", "--radius", "0", "--seed", "5"]);
    assert_eq!(v["min_sigma"], v["max_sigma"]);
    assert_eq!(v["histogram"].as_array().unwrap().len(), 1);
    assert_eq!(v["seed"], 5);
}

#[test]
fn seeded_reports_are_reproducible() {
    let a = run("analyze", &["--model", "fourier-gibbs-mismatch", "--seed", "42"]);
    let b = run("analyze", &["--model", "fourier-gibbs-mismatch", "--seed", "42"]);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1["seed"], 42);
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "[model]\nname = \"cattaneo\"\nkappa = 2.0\ntau = 0.5\n\n[state]\ndim = 1\ntheta = 3.0\ngrad = [0.5]\nq = [-1.0]\n\n[analysis]\nseed = 3\nsamples = 50\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let (code, v, _) = dichotomy(&["--config", p, "analyze"]);
    assert_eq!(code, 0);
    assert_eq!(v["model"]["name"], "cattaneo");
    assert_eq!(v["seed"], 3);
    assert_eq!(v["in_row_space"], true);
    let sigma = v["sigma"].as_f64().unwrap();
    assert!((sigma - 1.0 / (2.0 * 9.0)).abs() < 1e-12);

    let (_, v, _) = dichotomy(&["--config", p, "analyze", "--theta", "1"]);
    assert!((v["sigma"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    std::fs::write(&path, "[model\n").unwrap();
    let (code, _, _) = dichotomy(&["--config", p, "analyze"]);
    assert_eq!(code, 2);
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let (code, v, _) = dichotomy(&[
        "simulate", "--nx", "21", "--steps", "5", "--profile", "quarter-sine", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["process_class"], "irreversible");
    assert_eq!(v["amendment_flags"], 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 19);

    let (code, v, _) = dichotomy(&["simulate", "--model", "fourier-negkappa", "--steps", "1"]);
    assert_eq!(code, 3);
    assert_eq!(v["process_class"], "over-reversible");
    assert!(v["over_ideal_flags"].as_u64().unwrap() >= 1);

    let (code, _, _) = dichotomy(&["simulate", "--model", "cattaneo"]);
    assert_eq!(code, 2);
}

#[test]
fn solver_failure_exit_code() {
    let (code, _, err) = dichotomy(&[
        "analyze", "--model", "cattaneo", "--tau", "0", "--theta", "2", "--grad", "1", "--q", "0.3",
    ]);
    assert_eq!(code, 4);
    assert!(err.contains("error"));
}
