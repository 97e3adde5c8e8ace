use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ttrap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttrap"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TTRAP_JOBS")
        .output()
        .expect("spawn ttrap")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const PLATFORMS: &str = r#"[
  {"name": "tfln", "lambda_fh": 1.56e-6, "n_g": 2.324, "eta0_w_cm2": 40.0,
   "tau0": 5e-14, "t_rt": 1.5e-11, "alpha_loss": 0.7},
  {"name": "phc", "lambda_fh": 1.55e-6, "n": 2.2, "d_eff": 3.3e-11,
   "q_a": 1e6, "q_b": 1e3, "v_tilde": 1.0}
]"#;

#[test]
fn eigenmodes_smoke() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ttrap(&["eigenmodes", "--xi0", "1", "--n-grid", "128", "--output-dir", "out"], dir.path()));
    let out = dir.path().join("out");
    for f in ["fh_modes.csv", "sh_modes.csv", "fh_spectrum.csv", "sh_spectrum.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let s = read_json(&out.join("summary.json"));
    assert!((s["lambda_a0"].as_f64().unwrap() + 0.5).abs() < 1e-6);
    assert!((s["lambda_b0"].as_f64().unwrap() + 1.0).abs() < 1e-6);
}

#[test]
fn rabi_smoke() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ttrap(
        &["rabi", "--dg-ratio", "3", "--n-grid", "64", "--dt", "2e-3", "--output-dir", "out"],
        dir.path(),
    ));
    let s = read_json(&dir.path().join("out/summary.json"));
    assert!(s["max_n_sh"].as_f64().unwrap() > 0.95);
    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert!(trace.starts_with("t,n_sh,X,Y,Z,norm,mr\n"));
    assert!(fs::read_to_string(dir.path().join("out/flux.csv")).unwrap().starts_with("t,xi,fh_flux,sh_flux\n"));
}

#[test]
fn upi_smoke_with_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ttrap(
        &["upi", "--dg-ratio", "3", "--n-grid", "64", "--dt", "2e-3", "--checkpoint", "--flux-stride", "0", "--output-dir", "out"],
        dir.path(),
    ));
    let out = dir.path().join("out");
    assert!(out.join("state_tpi.bin").exists());
    assert!(!out.join("flux.csv").exists());
    let s = read_json(&out.join("summary.json"));
    assert!(s["s2"][0].as_f64().unwrap() < -0.9);
}

#[test]
fn cz_sweep_smoke() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ttrap(
        &["cz-sweep", "--dg-ratios", "2,3", "--n-grid", "64", "--dt", "2e-3", "--jobs", "2", "--output-dir", "out"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("out/epsilon.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dg_ratio,epsilon,s1_re,s1_im,s2_re,s2_im,t_pi_located");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2.0"));
    let s = read_json(&dir.path().join("out/summary.json"));
    assert!(s["fit"]["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn gaussian_sweep_smoke() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ttrap(
        &[
            "gaussian-sweep", "--t-pi", "4", "--tau-g", "1,1.5,2", "--n-grid", "64", "--box", "40", "--dt", "1e-2",
            "--output-dir", "out",
        ],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("out/dist.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let s = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(s["optima"].as_array().unwrap().len(), 1);
}

#[test]
fn fom_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("platforms.json"), PLATFORMS).unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"format_version": "1", "experiment": "fom", "output_dir": "res",
            "params": {"platforms_file": "platforms.json"}}"#,
    )
    .unwrap();
    ok(&ttrap(&["run", "--config", "run.json"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("res/table.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("tfln,,,"));
    assert!(lines[2].starts_with("phc,"));
    let m = read_json(&dir.path().join("res/manifest.json"));
    assert_eq!(m["experiment"], "fom");
    assert_eq!(m["constants_version"], "CODATA-2018");
    assert_eq!(m["params"]["platforms"].as_array().unwrap().len(), 2);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"format_version": "1", "experiment": "eigenmodes",
            "params": {"xi0": 1.0, "n_grid": 96, "n_modes": 3}}"#,
    )
    .unwrap();
    ok(&ttrap(&["eigenmodes", "--config", "run.json", "--n-grid", "64", "--output-dir", "o"], dir.path()));
    let m = read_json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["params"]["n_grid"], 64);
    assert_eq!(m["params"]["n_modes"], 3);
    assert_eq!(m["params"]["alpha"], 1.0);
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&ttrap(
            &["upi", "--dg-ratio", "4", "--n-grid", "64", "--dt", "2e-3", "--output-dir", out],
            dir.path(),
        ));
    }
    for f in ["trace.csv", "flux.csv", "summary.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
        assert!(!a.contains(&b'\r'));
    }
}

#[test]
fn golden_fom_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.json"), PLATFORMS).unwrap();
    ok(&ttrap(&["fom", "--platforms", "p.json", "--output-dir", "o"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("o/table.csv")).unwrap();
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fom_table.csv")).unwrap();
    assert_eq!(csv, golden);
}

#[test]
fn unknown_param_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        "{\n  \"format_version\": \"1\",\n  \"experiment\": \"rabi\",\n  \"params\": {\n    \"dg_ratio\": 3,\n    \"dtt\": 0.001\n  }\n}\n",
    )
    .unwrap();
    let out = ttrap(&["run", "--config", "run.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dtt") && err.contains("line 6"), "{err}");
}

#[test]
fn unknown_top_level_key_and_bad_version() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), r#"{"format_version": "1", "experiment": "fom", "extra": 1}"#).unwrap();
    fs::write(dir.path().join("b.json"), r#"{"format_version": "2", "experiment": "fom"}"#).unwrap();
    for f in ["a.json", "b.json"] {
        let out = ttrap(&["run", "--config", f], dir.path());
        assert_eq!(out.status.code(), Some(2), "{f}");
    }
}

#[test]
fn experiment_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"format_version": "1", "experiment": "fom"}"#).unwrap();
    let out = ttrap(&["rabi", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // dt far beyond the accuracy guard
    let out = ttrap(&["upi", "--dt", "10", "--n-grid", "64", "--output-dir", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = ttrap(&["cz-sweep", "--jobs", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = ttrap(&["fom", "--output-dir", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
