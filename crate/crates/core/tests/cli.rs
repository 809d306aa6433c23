// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qdemon::cli::{preset, CalibrationReport, ExperimentConfig, OneOrMany, PrepSpec, PrepTag, SweepSpec};
use qdemon::cli::{Artifact, FAST_N_TRUNC};
use qdemon::tomography::{ReconstructionConfig, TomographyGrid};
use qdemon::DeviceParams;

fn qdemon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdemon")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        device: DeviceParams::default().with_n_trunc(6),
        prep: OneOrMany::Many(vec![PrepSpec::Tag(PrepTag::Excited), PrepSpec::Temperature { t_target: 0.3 }]),
        alpha_in: SweepSpec::List(vec![0.0, 0.1]),
        outputs: vec![Artifact::Summary, Artifact::Trajectory, Artifact::WorkTable],
        ..Default::default()
    }
}

fn run_in(dir: &Path, config: &Path, sub: &str, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out];
    args.extend_from_slice(extra);
    qdemon(&args)
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"alpha_in\": [0.1,\n   }\n").unwrap();
    let o = run_in(dir.path(), &path, "simulate", &[]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("column"), "{msg}");
}

#[test]
fn missing_config_and_unknown_preset_exit_2() {
    assert_eq!(qdemon(&["simulate"]).status.code(), Some(2));
    assert_eq!(qdemon(&["presets", "fig9"]).status.code(), Some(2));
    assert_eq!(qdemon(&["--jobs", "0", "presets"]).status.code(), Some(2));
}

#[test]
fn physics_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        prep: OneOrMany::One(PrepSpec::Temperature { t_target: 0.05 }),
        alpha_in: SweepSpec::Value(0.1),
        ..small_config()
    };
    let o = run_in(dir.path(), &write_config(dir.path(), &cfg), "simulate", &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("below the equilibrium temperature"));
}

#[test]
fn empty_sweep_is_a_warned_noop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { alpha_in: SweepSpec::List(vec![]), ..small_config() };
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");
    let o = run_in(&out, &config, "simulate", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).to_lowercase().contains("warn"), "{}", stderr(&o));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn fixed_step_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_config());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_in(out, &config, "simulate", &["--fixed-step", "1e-10", "--seed", "7"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (la, lb) = (listing(&a), listing(&b));
    assert!(la.len() >= 6, "{:?}", la.iter().map(|f| &f.0).collect::<Vec<_>>());
    assert_eq!(la, lb);
}

#[test]
fn preset_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = qdemon(&["presets", "figS4", "--fast", "--fixed-step", "1e-10", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(listing(&a), listing(&b));
}

#[test]
fn outputs_carry_version_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_config());
    let o = run_in(dir.path(), &config, "simulate", &["--fast"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let version = format!("qdemon {}", env!("CARGO_PKG_VERSION"));
    for (name, bytes) in listing(dir.path()) {
        let text = String::from_utf8(bytes).unwrap();
        if name.ends_with(".csv") {
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some(format!("# {version}").as_str()), "{name}");
            let cfg_line = lines.next().unwrap();
            let cfg = ExperimentConfig::from_json(cfg_line.strip_prefix("# config ").unwrap()).unwrap();
            assert!(cfg.fast_mode);
            assert_eq!(cfg.device.n_trunc, FAST_N_TRUNC.min(6), "{name}");
        } else if name.ends_with(".json") && name != "config.json" {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["header"]["version"], version.as_str(), "{name}");
            assert!(v["header"]["config"]["output_step"].is_number(), "{name}");
        }
    }
}

#[test]
fn calibration_report_round_trips_and_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        device: DeviceParams::default().with_n_trunc(16),
        alpha_in: SweepSpec::Range { start: 0.0, stop: 0.2, count: 7 },
        ..Default::default()
    };
    let o = run_in(dir.path(), &write_config(dir.path(), &cfg), "calibrate", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("calibration.json")).unwrap();
    let report = CalibrationReport::from_json(&text).unwrap();

    let bare = serde_json::to_string(&report).unwrap();
    assert_eq!(CalibrationReport::from_json(&bare).unwrap(), report);

    assert_eq!(report.alpha_table.len(), 7);
    assert!(report.alpha_table.windows(2).all(|w| w[1].sqrt_nbar > w[0].sqrt_nbar));
    let ratio = report.pi_amplitude_ideal / report.pi_amplitude_area_theorem;
    assert!((ratio - 1.0).abs() <= 1e-3, "ratio {ratio}");
    let g = &report.gain.model;
    assert!((g.g0 / report.true_gain.g0 - 1.0).abs() < 1e-6);
    assert_eq!(report.calibration().pi_amplitude, Some(report.pi_amplitude));
}

#[test]
fn fast_flag_shrinks_truncation_and_tomography_defaults() {
    let o = qdemon(&["presets", "fig4", "--print", "--fast"]);
    assert!(o.status.success());
    let cfg = ExperimentConfig::from_json(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert!(cfg.fast_mode);
    assert_eq!(cfg.effective_device().n_trunc, FAST_N_TRUNC);
    assert_eq!(cfg.tomography.grid(true), TomographyGrid::desk());
    assert_eq!(cfg.tomography.reconstruction(true), ReconstructionConfig::desk());

    let full = preset("fig4", false).unwrap().config;
    assert_eq!(full.effective_device().n_trunc, DeviceParams::default().n_trunc);
    assert_eq!(full.tomography.grid(false), TomographyGrid::full());
}

#[test]
fn presets_are_listed() {
    let o = qdemon(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["fig2", "fig3", "fig4", "figS1", "figS3", "figS4"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
    let v = qdemon(&["--version"]);
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
}
