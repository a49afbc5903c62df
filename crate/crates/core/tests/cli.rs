//! Drives the `otsm-sim` binary.

use std::process::Command;

fn sim() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_otsm-sim"));
    c.env("RUST_LOG", "warn");
    c
}

fn config_path(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn selftest_succeeds() {
    let out = sim().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn run_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let path = dir.path().join(format!("run{i}.csv"));
        let status = sim()
            .args(["run", "--config", &config_path("otsm_gs_perfect.cfg")])
            .args(["--frames", "12", "--snr", "5,25", "--seed", "9"])
            .args(["--set", "n=16", "--set", "record_time=false", "--set", "batch=4"])
            .args(["--set", &format!("threads={threads}")])
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read_to_string(&path).unwrap());
    }
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("# threads")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&outputs[0]), strip(&outputs[1]));
    let rows = otsm::harness::parse_csv(&outputs[0]).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.frames == 12));
    assert!(rows[0].ber() >= rows[1].ber());
}

#[test]
fn invalid_configuration_exits_nonzero_with_every_error() {
    let out = sim()
        .args(["run", "--modem", "ofdm", "--csi", "estimated", "--set", "qam=8", "--set", "nonsense=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    for needle in ["nonsense", "QAM", "single_tap", "pilot"] {
        assert!(err.contains(needle), "missing `{needle}` in:\n{err}");
    }
}

#[test]
fn dry_run_prints_resolved_config() {
    let out = sim()
        .args(["run", "--config", &config_path("otsm_gs_estimated.cfg"), "--dry-run"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("csi = estimated"));
    assert!(text.contains("l_zp = 7"));
    assert!(text.contains("speed_kmh = 500"));
}

#[test]
fn compare_merges_schemes() {
    let out = sim()
        .args(["compare"])
        .args(["--config", &config_path("otsm_gs_perfect.cfg")])
        .args(["--config", &config_path("otfs_gs_perfect.cfg")])
        .args(["--config", &config_path("ofdm_single_tap.cfg")])
        .args(["--frames", "4", "--snr", "10", "--set", "n=16"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().find(|l| l.starts_with("snr_db")).unwrap();
    assert_eq!(header.split(',').count(), 1 + 3 * 9);
    assert!(header.contains("otfs_gs_iterative_perfect_fer"));
}

#[test]
fn every_shipped_config_is_valid() {
    for entry in std::fs::read_dir(format!("{}/configs", env!("CARGO_MANIFEST_DIR"))).unwrap() {
        let path = entry.unwrap().path();
        let cfg = otsm::harness::SimConfig::from_file(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(cfg.code_path.exists(), "{}", path.display());
    }
}
