use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qlight_core::io::{ConfigKey, BASIN_KEYS, DATA_KEYS, QAM_KEYS, QRC_KEYS, SUCCESS_KEYS, TRAJECTORY_KEYS, WIGNER_KEYS};
use tempfile::TempDir;

fn qlight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlight"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

struct Case {
    dir: TempDir,
}

impl Case {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("c.toml"), config).unwrap();
        Self { dir }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn run(&self, sub: &str, extra: &[&str]) -> Output {
        let config = self.dir.path().join("c.toml");
        let out = self.out();
        let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        qlight(&args)
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.out().join(name)).unwrap()
    }

    fn json(&self, name: &str) -> serde_json::Value {
        serde_json::from_str(&self.read(name)).unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

const SMALL_QRC: &str = "[qrc]\nmodes = 3\n\n[data]\nsynthetic_length = 401\n\n[split]\nwashout = 50\ntrain = 250\ntest = 80\n";

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn qrc_run_succeeds() {
    let c = Case::new(SMALL_QRC);
    let o = c.run("qrc-run", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let result = c.json("forecast.json");
    assert!(result["test_nmse"].as_f64().unwrap() < result["baseline_test_nmse"].as_f64().unwrap());
    assert_eq!(csv_rows(&c.out().join("predictions.csv")).len(), 80);
    let manifest = c.json("manifest.json");
    assert_eq!(manifest["command"], "qrc-run");
}

#[test]
fn sweep_has_one_row_per_cell() {
    let c = Case::new(
        "[qrc]\nmodes = 2\ncavity_squeezing = [0.0, 0.5, 1.0]\nnoise_intensity = [0.0, 0.01, 0.1, 0.2]\nrealizations = 20\n\n\
         [data]\nsynthetic_length = 301\n\n[split]\nwashout = 20\ntrain = 200\ntest = 50\n",
    );
    let o = c.run("qrc-sweep", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = c.read("sweep.csv");
    assert!(text.starts_with("cavity_squeezing_dB,noise_relative_intensity,seed,train_nmse,test_nmse\n"));
    assert_eq!(text.lines().count(), 1 + 240);
}

#[test]
fn config_errors_exit_2() {
    let c = Case::new("[qrc]\nmodez = 3\n");
    assert_eq!(code(&c.run("qrc-run", &[])), 2);
    let c = Case::new("[qrc]\nmodes = 0\n");
    assert_eq!(code(&c.run("qrc-run", &[])), 2);
    let o = qlight(&["qam-steady", "--config", "/nonexistent/config.toml", "--out", "/tmp/never"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn singular_readout_exits_3() {
    let c = Case::new(&format!("{SMALL_QRC}\n").replace("[qrc]\nmodes = 3\n", "[qrc]\nmodes = 3\ninput_squeezing = 0.0\nlambda = 0.0\n"));
    let o = c.run("qrc-run", &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn physics_failures_exit_4() {
    // fixed cutoff that fails the doubling check
    let c = Case::new("[qam]\neta = 13.02\ncutoff = 12\n");
    assert_eq!(code(&c.run("qam-steady", &[])), 4);
    // --force accepts the unconverged cutoff
    let c = Case::new("[qam]\neta = 13.02\ncutoff = 12\n");
    assert_eq!(code(&c.run("qam-steady", &["--force"])), 0);
    // a cutoff that cannot hold the operators is a config error
    let c = Case::new("[qam]\neta = 13.02\ncutoff = 4\n");
    assert_eq!(code(&c.run("qam-steady", &["--force"])), 2);
    // search capped below what the drive needs
    let c = Case::new("[qam]\nn = 4\nm = 5\neta = 91.13\nmin_cutoff = 8\nmax_cutoff = 12\n");
    assert_eq!(code(&c.run("check-convergence", &[])), 4);
    assert_eq!(c.json("convergence.json")["converged"], false);
    // undriven: no metastable window
    let c = Case::new("[qam]\neta = 0.0\ncutoff = 16\n\n[basins]\nradial_points = 1\nangular_points = 3\n");
    assert_eq!(code(&c.run("qam-basins", &[])), 4);
}

#[test]
fn undriven_steady_state_is_vacuum() {
    let c = Case::new("[qam]\neta = 0.0\n\n[wigner]\nextent = 2.0\nresolution = 5\n");
    let o = c.run("qam-steady", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fock = csv_rows(&c.out().join("fock.csv"));
    for row in &fock {
        let p: f64 = row[1].parse().unwrap();
        let want = if row[0] == "0" { 1.0 } else { 0.0 };
        assert!((p - want).abs() < 1e-10, "{row:?}");
    }
    let origin = csv_rows(&c.out().join("wigner.csv"))
        .into_iter()
        .find(|r| r[0].parse::<f64>().unwrap() == 0.0 && r[1].parse::<f64>().unwrap() == 0.0)
        .unwrap();
    assert!((origin[2].parse::<f64>().unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-10);
}

#[test]
fn spectrum_shows_metastable_gap() {
    let c = Case::new("[qam]\neta = 13.02\ncutoff = 32\n");
    let o = c.run("qam-spectrum", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&c.out().join("eigenvalues.csv"));
    assert!(rows[0][1].parse::<f64>().unwrap().abs() < 1e-8);
    assert!(c.json("spectrum.json")["gap_ratio"].as_f64().unwrap() > 10.0);
}

#[test]
fn convergence_cutoff_grows_with_drive() {
    let accepted = |config: &str| {
        let c = Case::new(config);
        let o = c.run("check-convergence", &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        c.json("convergence.json")["accepted"].as_u64().unwrap()
    };
    let weak = accepted("[qam]\nn = 4\nm = 5\neta = 5.0\nmin_cutoff = 8\n");
    let mid = accepted("[qam]\nn = 4\nm = 5\neta = 91.13\nmin_cutoff = 8\n");
    let strong = accepted("[qam]\nn = 4\nm = 5\neta = 1000.0\nmin_cutoff = 8\n");
    let idle = accepted("[qam]\neta = 0.0\nmin_cutoff = 8\n");
    assert!(weak <= mid && mid <= strong, "{weak} {mid} {strong}");
    assert!(weak < strong);
    assert_eq!(idle, 8);
}

fn keys_listed(sub: &str, tables: &[&[ConfigKey]]) {
    let o = qlight(&[sub, "--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for k in tables.iter().flat_map(|t| t.iter()) {
        assert!(text.contains(k.key), "{sub} --help misses {}", k.key);
    }
}

#[test]
fn help_lists_config_keys() {
    keys_listed("qrc-run", &[QRC_KEYS, DATA_KEYS]);
    keys_listed("qrc-sweep", &[QRC_KEYS, DATA_KEYS]);
    keys_listed("qam-steady", &[QAM_KEYS, WIGNER_KEYS]);
    keys_listed("qam-spectrum", &[QAM_KEYS]);
    keys_listed("qam-trajectories", &[QAM_KEYS, TRAJECTORY_KEYS]);
    keys_listed("qam-success", &[QAM_KEYS, SUCCESS_KEYS]);
    keys_listed("qam-basins", &[QAM_KEYS, BASIN_KEYS]);
    keys_listed("check-convergence", &[QAM_KEYS]);
}

#[test]
fn manifest_replays_the_run() {
    let c = Case::new(SMALL_QRC);
    assert_eq!(code(&c.run("qrc-run", &["--seed", "3"])), 0);
    let first = c.read("forecast.json");
    let manifest = c.out().join("manifest.json");
    let again = c.dir.path().join("again");
    let o = qlight(&["qrc-run", "--config", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first, std::fs::read_to_string(again.join("forecast.json")).unwrap());
}
