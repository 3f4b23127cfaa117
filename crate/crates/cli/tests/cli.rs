use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nle-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn nle(dir: &PathBuf, command: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nle"))
        .arg(command)
        .arg("--config")
        .arg(&path)
        .args(extra)
        .output()
        .unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line on stderr");
    serde_json::from_str(line).unwrap()
}

const SMALL_BEAM_SWEEP: &str = "\
[mesh]
elements = 20

[sweep]
structure = \"beam\"
l0 = [1e-3, 5e-3]
alpha = [0.8, 1.0]
l_f = [0.5, 1.0]
";

#[test]
fn dispersion_writes_one_row_per_wavenumber() {
    let dir = scratch("dispersion");
    let out = dir.join("out");
    let config = "[kernel]\nkind = \"exponential\"\nl0 = 0.05\n[dispersion]\npoints = 100\nnumerical = true\n";
    let run = nle(&dir, "dispersion", config, &["--verify", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.join("dispersion.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("k,re_vp2,im_vp2,kernel,params"));
    assert_eq!(lines.count(), 100);
    assert!(!csv.contains('\r'));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "dispersion");
    assert_eq!(manifest["verify_failed"], 0);
    assert_eq!(manifest["rows"], 100);
}

#[test]
fn sweep_output_is_identical_across_thread_counts() {
    let dir = scratch("sweep");
    let mut csvs = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.join(format!("t{threads}"));
        let run = nle(&dir, "sweep", SMALL_BEAM_SWEEP, &["--threads", threads, "--out", out.to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        csvs.push(fs::read(out.join("sweep_beam.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    // Header plus 4 kernels × 2 horizons × 2 load cases.
    assert_eq!(csvs[0].iter().filter(|b| **b == b'\n').count(), 17);
}

#[test]
fn invalid_config_exits_with_code_two() {
    let dir = scratch("invalid");
    let run = nle(&dir, "beam", "[kernel]\nkind = \"power_law\"\nalpha = 0.3\n[mesh]\nelemnts = 4\n", &[]);
    assert_eq!(run.status.code(), Some(2));
    let err = error_json(&run);
    assert_eq!(err["error"], "config");
    let message = err["message"].as_str().unwrap();
    assert!(message.contains("admissibility floor"), "{message}");
    assert!(message.contains("mesh.elemnts"), "{message}");
}

#[test]
fn missing_config_exits_with_code_three() {
    let run = Command::new(env!("CARGO_BIN_EXE_nle"))
        .args(["plate", "--config", "/nonexistent/nle.toml"])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(3));
    assert_eq!(error_json(&run)["error"], "io");
}

#[test]
fn failed_invariant_exits_with_code_five() {
    let dir = scratch("verify");
    let out = dir.join("out");
    // A coarse lattice cannot meet the 1e-4 dispersion target at k·l0 = 5.
    let config = "[kernel]\nl0 = 0.005\n[dispersion]\nk_max = 1000.0\nnumerical = true\npoints_per_wavelength = 40\n";
    let run = nle(&dir, "dispersion", config, &["--verify", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&run.stdout).contains("FAIL lattice operator"));
    assert!(out.join("dispersion.csv").exists());
}
