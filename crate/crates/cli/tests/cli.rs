use std::path::Path;
use std::process::{Command, Output};

const SPECTRUM_CONFIG: &str = "\
omega_b_hz = 100e6
omega_q_hz = 100e6
delta_a_hz = 100e6
chi_hz = 10e6
g_hz = 10e6
gamma_a_hz = 4e6
gamma_b_hz = 1000.0
gamma_q_hz = 0.1e6
drive_hz = 19.8e6
probe_hz = 19.8
";

fn omit(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omit"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("OMIT_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn spectrum_writes_csv_and_windows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spec.toml", SPECTRUM_CONFIG);
    let out = omit(dir.path(), &["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "delta,delta_over_omega_b,mu_p,nu_p,G_s,G_as,re_eps_T,im_eps_T");
    assert_eq!(lines.count(), 2001);

    let windows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spectrum_windows.json")).unwrap()).unwrap();
    assert_eq!(windows["count"], 2);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("spectrum.csv"));
}

#[test]
fn json_config_is_accepted_and_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let toml_cfg = write_config(dir.path(), "spec.toml", SPECTRUM_CONFIG);
    let json = "{\"omega_b_hz\":100e6,\"omega_q_hz\":100e6,\"delta_a_hz\":100e6,\"chi_hz\":10e6,\"g_hz\":10e6,\
                \"gamma_a_hz\":4e6,\"gamma_b_hz\":1000.0,\"gamma_q_hz\":0.1e6,\"drive_hz\":19.8e6,\"probe_hz\":19.8}";
    let json_cfg = write_config(dir.path(), "spec.json", json);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(omit(&a, &["spectrum", "--config", &toml_cfg, "--count", "201"]).status.code(), Some(0));
    assert_eq!(omit(&b, &["spectrum", "--config", &json_cfg, "--count", "201"]).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("spectrum.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spec.toml", SPECTRUM_CONFIG);
    let run = |sub: &str, workers: &str| {
        let out_dir = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_omit"))
            .args(["--out", out_dir.to_str().unwrap(), "spectrum", "--config", &cfg, "--count", "301"])
            .env("OMIT_WORKERS", workers)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        std::fs::read(out_dir.join("spectrum.csv")).unwrap()
    };
    assert_eq!(run("one", "1"), run("three", "3"));
}

#[test]
fn bistability_fixed_and_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bi.toml", &SPECTRUM_CONFIG.replace("delta_a_hz = 100e6", "delta_a_hz = 50e6"));
    let out = omit(dir.path(), &["bistability", "--config", &cfg, "--mode", "photon", "--z0", "-0.99", "--points", "51"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bistability_photon.csv")).unwrap();
    assert!(csv.starts_with("x,omega_abs,branch_id,z0,defect\n"));
    assert_eq!(csv.lines().count(), 52);

    let out = omit(dir.path(), &["bistability", "--config", &cfg, "--mode", "phonon", "--self-consistent", "--points", "21"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("bistability_phonon.csv").exists());
}

#[test]
fn sweep_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{
        "base": {"omega_b_hz":100e6,"omega_q_hz":100e6,"delta_a_hz":100e6,"chi_hz":10e6,"g_hz":10e6,
                 "gamma_a_hz":4e6,"gamma_b_hz":1000.0,"gamma_q_hz":0.1e6,"drive_hz":19.8e6,"probe_hz":19.8},
        "axis1": {"field": "g_hz", "values": [0.0, 5e6]},
        "axis2": {"field": "delta_over_omega_b", "start": 0.9, "stop": 1.1, "count": 3},
        "quantity": "mu_p"
    }"#;
    let path = write_config(dir.path(), "sweep.json", spec);
    let out = omit(dir.path(), &["sweep", "--spec", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "g_hz,delta_over_omega_b,mu_p,error");
    assert_eq!(lines.len(), 7);
}

#[test]
fn preset_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = omit(dir.path(), &["preset", "fig5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".json")), "{names:?}");
    assert!(names.iter().filter(|n| n.ends_with(".csv")).count() >= 2, "{names:?}");
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(omit(dir.path(), &["preset", "fig4"]).status.code(), Some(2));

    let bad = write_config(dir.path(), "bad.toml", "chi_hz = \"ten\"\n");
    assert_eq!(omit(dir.path(), &["spectrum", "--config", &bad]).status.code(), Some(2));

    let missing = dir.path().join("nope.toml");
    assert_eq!(omit(dir.path(), &["spectrum", "--config", missing.to_str().unwrap()]).status.code(), Some(2));

    let unprobed = write_config(dir.path(), "np.toml", &SPECTRUM_CONFIG.replace("probe_hz = 19.8", "probe_hz = 0.0"));
    assert_eq!(omit(dir.path(), &["spectrum", "--config", &unprobed]).status.code(), Some(2));

    let cfg = write_config(dir.path(), "spec.toml", SPECTRUM_CONFIG);
    assert_eq!(omit(dir.path(), &["bistability", "--config", &cfg, "--mode", "photon"]).status.code(), Some(2));
    assert_eq!(omit(dir.path(), &["oracle-check", "--config", &cfg, "--eps-ratio", "-1"]).status.code(), Some(2));

    let status = Command::new(env!("CARGO_BIN_EXE_omit"))
        .args(["--out", dir.path().to_str().unwrap(), "preset", "fig5"])
        .env("OMIT_WORKERS", "zero")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    // Strong drive on the phonon set leaves a single, unstable branch.
    let dir = tempfile::tempdir().unwrap();
    let cfg = SPECTRUM_CONFIG
        .replace("delta_a_hz = 100e6", "delta_a_hz = 20e6")
        .replace("drive_hz = 19.8e6", "drive_hz = 40e6");
    let cfg = write_config(dir.path(), "fig3.toml", &cfg);
    let out = omit(dir.path(), &["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stable"));
}

#[test]
fn oracle_check_reports_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spec.toml", SPECTRUM_CONFIG);
    let out = omit(
        dir.path(),
        &["oracle-check", "--config", &cfg, "--eps-ratio", "1e-3", "--start", "1.0", "--stop", "1.0", "--count", "1", "--export-trajectories"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle_check.json")).unwrap()).unwrap();
    assert_eq!(report["points"].as_array().unwrap().len(), 1);
    assert_eq!(report["pass"], true);
    let traj = std::fs::read_to_string(dir.path().join("trajectory_000.csv")).unwrap();
    assert!(traj.starts_with("t,re_a,im_a,re_b,im_b,re_s,im_s,z\n"));
}
