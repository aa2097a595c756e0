//! End-to-end checks of the `opmag` binary: artifact layout, header formats,
//! byte-for-byte determinism of repeated and parallel runs, and the exit
//! codes scripts are allowed to rely on.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use opmag::config::ScenarioConfig;

fn opmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opmag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// A cheap seven-point scenario derived from the embedded one.
fn small_scenario() -> ScenarioConfig {
    let mut config = ScenarioConfig::preset("cs-100torr").unwrap();
    config.sweep.delta_min_hz = -1.0e9;
    config.sweep.delta_max_hz = 13.0e9;
    config.sweep.npoints = 7;
    config.outputs.populations = true;
    config
}

#[test]
fn presets_are_listed_and_printable_as_valid_json() {
    let out = opmag(&["presets"]);
    assert_success(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for name in ["cs-100torr", "cs-700torr", "fig5"] {
        assert!(stdout.lines().any(|l| l == name), "missing `{name}` in:\n{stdout}");
    }

    let out = opmag(&["presets", "--preset", "cs-700torr"]);
    assert_success(&out);
    let printed: ScenarioConfig =
        serde_json::from_slice(&out.stdout).expect("printed preset parses back");
    assert_eq!(printed.params.pressure_broadening_hz, 4.2e9);
}

#[test]
fn steady_prints_the_polarization() {
    let out = opmag(&["--preset", "cs-100torr", "steady", "--delta-hz=-1e8"]);
    assert_success(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let sz_line = stdout
        .lines()
        .find(|l| l.starts_with("steady <S_z>"))
        .unwrap_or_else(|| panic!("no steady line in:\n{stdout}"));
    let sz: f64 = sz_line.split_whitespace().last().unwrap().parse().unwrap();
    assert!(sz.abs() > 0.05 && sz.abs() <= 0.5, "implausible <S_z> = {sz}");
    assert!(stdout.contains("populations:"));
}

#[test]
fn response_writes_the_scan_it_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = opmag(&[
        "--preset",
        "fig5",
        "--out",
        dir.path().to_str().unwrap(),
        "response",
        "--delta-hz",
        "2.0e8",
    ]);
    assert_success(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("resonance centre"));
    assert!(stdout.contains("linewidth (HWHM)"));

    let csv = read(&dir.path().join("response_+2.000000e8.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("omega_hz,re_sx,im_sx"));
    let mut rows = 0;
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields.len(), 3);
        assert!(fields.iter().all(|v| v.is_finite()));
        rows += 1;
    }
    assert!(rows >= 100, "suspiciously short scan: {rows} rows");
}

#[test]
fn sweep_artifacts_are_deterministic_and_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scenario.json");
    fs::write(&config_path, small_scenario().to_json_pretty()).unwrap();
    let config = config_path.to_str().unwrap();

    let run = |out_dir: &Path, threads: &str| {
        let out = opmag(&[
            "--config",
            config,
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            threads,
            "sweep",
        ]);
        assert_success(&out);
    };

    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let parallel = dir.path().join("c");
    run(&first, "1");
    run(&second, "1");
    run(&parallel, "2");

    let sweep = read(&first.join("sweep.csv"));
    let mut lines = sweep.lines();
    assert_eq!(
        lines.next(),
        Some("delta_hz,sz,light_shift_hz,linewidth_hz,iterations,residual,status")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.ends_with(",ok")), "unexpected failures:\n{sweep}");
    assert!(!sweep.contains('\r'), "CSV must use bare newlines");

    let populations = read(&first.join("populations.csv"));
    assert!(populations.lines().count() == 8, "header plus one row per point");
    assert!(read(&first.join("plot.gp")).contains("plot"));

    for other in [&second, &parallel] {
        for name in ["sweep.csv", "populations.csv", "plot.gp"] {
            assert_eq!(
                fs::read(first.join(name)).unwrap(),
                fs::read(other.join(name)).unwrap(),
                "{name} differs between identical runs ({:?})",
                other.file_name().unwrap()
            );
        }
    }
}

#[test]
fn exit_codes_separate_usage_solver_and_io_failures() {
    // No scenario selected: a configuration error.
    let out = opmag(&["sweep"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no scenario selected"));

    // Unknown preset: same class.
    let out = opmag(&["--preset", "does-not-exist", "steady"]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed JSON: same class.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ this is not json").unwrap();
    let out = opmag(&["--config", bad.to_str().unwrap(), "steady"]);
    assert_eq!(out.status.code(), Some(2));

    // Missing file: an I/O error.
    let out = opmag(&["--config", "/definitely/not/here.json", "steady"]);
    assert_eq!(out.status.code(), Some(4));

    // --config and --preset conflict at the argument parser.
    let out = opmag(&[
        "--config",
        bad.to_str().unwrap(),
        "--preset",
        "fig5",
        "steady",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
