use std::path::Path;
use std::process::{Command, Output};

fn nematic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nematic")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const ZERO_RUN: &str = "dim = 2\nn = 8\nhorizon = 0.05\nsnapshot_every = 2\nparams.l1 = 0.1\nparams.alpha = 1.0\nscheme.kind = \"semi_implicit\"\nscheme.tau = 0.01\ninitial.kind = \"zero\"\n";

#[test]
fn run_on_zero_field_gives_constant_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ZERO_RUN);
    let out = dir.path().join("out");
    let o = nematic(&["run", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let rows = nematic_core::io::parse_series_csv(&csv).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[1], rows[0][1]);
        assert_eq!(r[5], 0.0);
        assert!((r[7] - 1.0 / 3.0).abs() < 1e-15);
    }
    assert!(out.join("summary.json").exists());
    assert!(out.join("snapshots/step_00000000.json").exists());
    let canon = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert_eq!(nematic_core::config::RunConfig::parse(&canon).unwrap().to_canonical_string(), canon);
}

#[test]
fn check_potential_isotropic_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = nematic(&["check-potential", "--steps", "3", "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("check_potential.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(&row[..3], &[0.0, 0.0, 0.0]);
    assert!((row[3] + (4.0 * std::f64::consts::PI).ln()).abs() < 1e-10);
    assert!(row[4] < 1e-10);
}

#[test]
fn gamma_study_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let body = "dim = 2\nn = 8\nhorizon = 0.02\nparams.l1 = 0.05\nparams.alpha = 1.0\nscheme.kind = \"semi_implicit\"\nscheme.tau = 0.001\ninitial.kind = \"random_bandlimited\"\ninitial.kmax = 1\ninitial.margin_min = 0.05\ngamma.n_list = [4, 16]\n";
    let cfg = write_config(dir.path(), body);
    let o = nematic(&["gamma-study", "--config", &cfg, "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["distance_monotone"], true);
    assert!(dir.path().join("gamma.json").exists());
}

#[test]
fn invalid_configuration_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &ZERO_RUN.replace("params.l1 = 0.1", "params.l1 = -0.1"));
    let o = nematic(&["run", "--config", &cfg, "--output", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 2);

    let o = nematic(&["run", "--config", &cfg, "--override", "params.l1", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = nematic(&["boxdim"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_exits_with_code_4() {
    let o = nematic(&["run", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = ZERO_RUN.replace("initial.kind = \"zero\"", "seed = 9\ninitial.kind = \"random_bandlimited\"\ninitial.kmax = 2\ninitial.margin_min = 0.05");
    let cfg = write_config(dir.path(), &body);
    let files = ["series.csv", "summary.json", "config.toml", "snapshots/step_00000004.bin", "snapshots/step_00000004.json"];
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(name);
        let o = nematic(&["run", "--config", &cfg, "--output", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn boxdim_reads_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let body = ZERO_RUN.replace("initial.kind = \"zero\"", "initial.kind = \"near_boundary\"\ninitial.geometry = \"line\"\ninitial.profile = \"quadratic\"\ninitial.floor = 0.001");
    let cfg = write_config(dir.path(), &body);
    let run = dir.path().join("run");
    assert!(nematic(&["run", "--config", &cfg, "--output", run.to_str().unwrap()]).status.success());
    let snap = run.join("snapshots/step_00000000.json");
    let o = nematic(&["boxdim", "--snapshot", snap.to_str().unwrap(), "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("boxdim.json").exists());
}

#[test]
fn scan_blowup_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = nematic(&["scan-blowup", "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], true);
}
