use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vekua(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vekua"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("VEKUA_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_s_example1_is_harmonic() {
    let dir = tempfile::tempdir().unwrap();
    let o = vekua(&["check-s", "--problem", "example1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: true"));
    let report = json(&dir.path().join("condition_s.json"));
    let table = report["condition_s"]["table"].as_array().unwrap();
    assert!(!table.is_empty());
    assert!(table.iter().all(|row| row[1].as_f64().unwrap().abs() < 1e-8));
}

#[test]
fn check_s_counterexample_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = vekua(&["check-s", "--nu", "0", "--f0", "1", "--rho", "x^2 + y"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict: false"));
}

#[test]
fn basis_example1_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = vekua(&["basis", "--problem", "example1", "--n", "1", "--grid", "11"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["problem"], "example1");
    assert_eq!(manifest["N"], 1);
    assert!(manifest["provenance"]["config"].is_object());
    let residuals = manifest["residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 4);
    for r in residuals {
        assert!(r["residual"].as_f64().unwrap() <= 1e-6);
        let csv = fs::read_to_string(dir.path().join(r["file"].as_str().unwrap())).unwrap();
        assert!(csv.starts_with("x,y,value\n"));
    }
    // Re Z^(0)(1) = (y+1)^3
    let csv = fs::read_to_string(dir.path().join("basis_n0_1.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!((v[2] - (v[1] + 1.0).powi(3)).abs() < 1e-13);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["basis", "--problem", "example2", "--alpha", "2", "--beta", "3", "--n", "1", "--grid", "7"];
    assert_eq!(vekua(&args, dir.path()).status.code(), Some(0));
    let first: Vec<(String, Vec<u8>)> = snapshot(dir.path());
    assert_eq!(vekua(&args, dir.path()).status.code(), Some(0));
    assert_eq!(first, snapshot(dir.path()));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn verify_example2_prints_closed_form_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let o = vekua(&["verify", "--problem", "example2", "--alpha", "2", "--beta", "3", "--n", "2"], dir.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    let (a, b) = (2f64, 3f64);
    let s = a * a + b * b;
    let closed = [
        ("lambda1", a.sqrt() / (b.sqrt() * s)),
        ("mu1", -(a * b.powi(3)).sqrt() / s),
        ("lambda2", b.sqrt() / (a.sqrt() * s)),
        ("mu2", (a.powi(3) * b).sqrt() / s),
    ];
    for (name, exact) in closed {
        let prefix = format!("{name} = ");
        let line = text.lines().find(|l| l.starts_with(&prefix)).unwrap_or_else(|| panic!("{name} missing"));
        let value: f64 = line[prefix.len()..].split_whitespace().next().unwrap().parse().unwrap();
        assert!((value - exact).abs() < 1e-10, "{name}: {value} vs {exact}");
    }
    let report = json(&dir.path().join("verify.json"));
    assert_eq!(report["pass"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn expand_writes_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = vekua(
        &["expand", "--problem", "example1", "--n", "1", "--target", "(y+1)^(-2) + 5*i*x*(y+1)^(-3) + (y+1)^3", "--complex"],
        dir.path(),
    );
    let text = stdout(&o);
    // the target is Z^(0)(2) + Z^(1)(10i): exact at N = 1
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("noise floor"));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("N,radius,remainder,slope\n"));
    let expansion = json(&dir.path().join("expansion.json"));
    let a1 = &expansion["coefficients"][1];
    assert!((a1[1].as_f64().unwrap() - 10.0).abs() < 1e-10);
}

#[test]
fn expand_without_target_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vekua(&["expand"], dir.path()).status.code(), Some(2));
}

#[test]
fn darboux_of_harmonic_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = vekua(&["darboux", "--problem", "harmonic", "--field", "x^2 - y^2", "--grid", "9"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("darboux_v.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!((v[2] - 2.0 * v[0] * v[1]).abs() < 1e-12);
    }
    let o = vekua(&["darboux", "--problem", "harmonic", "--field", "x^3", "--direction", "u-to-v"], dir.path());
    assert_eq!(o.status.code(), Some(1), "x^3 is not harmonic");
}

#[test]
fn config_file_parse_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"N\": 2,\n  \"radius\": oops\n}").unwrap();
    let o = vekua(&["basis", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3, column 13"));
}

#[test]
fn bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vekua(&["basis", "--tolerance", "0"], dir.path()).status.code(), Some(2));
    assert_eq!(vekua(&["basis", "--problem", "nonesuch"], dir.path()).status.code(), Some(2));
    assert_eq!(vekua(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_round_trips_through_print_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"problem": {"nu": "0", "f0": "1", "rho": "x"}, "z0": [0.1, -0.2], "N": 3, "params": {"k": 1.5}}"#).unwrap();
    let o = vekua(&["verify", "--config", cfg.to_str().unwrap(), "--print-config"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let printed = stdout(&o);
    let again = dir.path().join("again.json");
    fs::write(&again, &printed).unwrap();
    let o2 = vekua(&["verify", "--config", again.to_str().unwrap(), "--print-config"], dir.path());
    assert_eq!(stdout(&o2), printed);
    let v: serde_json::Value = serde_json::from_str(&printed).unwrap();
    assert_eq!(v["N"], 3);
    assert_eq!(v["problem"]["rho"], "x");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_vekua"))
        .args(["check-s", "--problem", "harmonic"])
        .env("VEKUA_OUT", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(target.join("condition_s.json").exists());
}
