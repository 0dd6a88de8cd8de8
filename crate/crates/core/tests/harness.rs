//! CLI and report plumbing: exit codes, determinism, plot round trip.

use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use stripspec::exec::ExecMode;
use stripspec::harness::{emit_plot_data, match_ordered, read_sweep_report, run_sweep, write_json, Config};

const BIN: &str = env!("CARGO_BIN_EXE_stripspec");

const SMALL: &str = "[sweep]\nn_strips = [4, 8]\neta = [0.4, 0.8]\nmodes = 2\n\
                     [solver]\nn_r = 40\naxial_per_strip = 24\n";

fn cli(args: &[&str], out: &Path) -> i32 {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RUST_LOG")
        .status()
        .expect("binary runs")
        .code()
        .expect("exit code")
}

fn small_config() -> Config {
    Config::parse(SMALL, Path::new("small.toml")).unwrap()
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[profile]\nn_strips = 0\n").unwrap();
    assert_eq!(cli(&["sweep", "--config", bad.to_str().unwrap()], dir.path()), 2);
    fs::write(&bad, "[solver]\nunknown = 1\n").unwrap();
    assert_eq!(cli(&["sweep", "--config", bad.to_str().unwrap()], dir.path()), 2);
    fs::write(&bad, "[profile\n").unwrap();
    assert_eq!(cli(&["sweep", "--config", bad.to_str().unwrap()], dir.path()), 2);
    let missing = dir.path().join("absent.toml");
    assert_eq!(cli(&["sweep", "--config", missing.to_str().unwrap()], dir.path()), 4);
    // output path below a regular file cannot be created
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(cli(&["limit-spectrum"], &blocker.join("sub")), 4);
    assert_eq!(cli(&["limit-spectrum", "--format", "csv"], dir.path()), 0);
    assert!(dir.path().join("limit_spectrum.csv").exists());
    assert!(!dir.path().join("limit_spectrum.json").exists());
    assert_eq!(cli(&["no-such-command"], dir.path()), 2);
}

#[test]
fn zero_strips_rejected_in_sweep_list() {
    let err = Config::parse("[sweep]\nn_strips = [8, 0]\n", Path::new("c.toml"))
        .and_then(|c| c.validate())
        .unwrap_err();
    assert!(err.to_string().contains("sweep.n_strips"), "{err}");
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .arg("limit-spectrum")
        .env("STRIPSPEC_OUT", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("limit_spectrum.json").exists());
}

#[test]
fn sweep_identical_across_modes_and_runs() {
    let cfg = small_config();
    let a = run_sweep(&cfg, ExecMode::Parallel).unwrap();
    let b = run_sweep(&cfg, ExecMode::Sequential).unwrap();
    let ja = serde_json::to_string(&a).unwrap();
    let jb = serde_json::to_string(&b).unwrap();
    assert_eq!(ja, jb);
    assert_eq!(a.points.len(), 4);
    assert_eq!(a.summary.failed_points, 0);
    assert!(a.summary.all_below_limit);
}

#[test]
fn cli_sweep_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let (o1, o2) = (dir.path().join("r1"), dir.path().join("r2"));
    assert_eq!(
        cli(&["sweep", "--config", cfg.to_str().unwrap(), "--jobs", "1"], &o1),
        0
    );
    assert_eq!(cli(&["sweep", "--config", cfg.to_str().unwrap()], &o2), 0);
    for f in ["sweep.json", "sweep.csv"] {
        assert_eq!(fs::read(o1.join(f)).unwrap(), fs::read(o2.join(f)).unwrap(), "{f}");
    }
    assert!(o1.join("sweep.meta.json").exists());
}

#[test]
fn plot_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = run_sweep(&small_config(), ExecMode::Parallel).unwrap();
    // timings live in the metadata file, not the report
    report.points.iter_mut().for_each(|p| p.wall_time_s = 0.0);
    let path = dir.path().join("report.json");
    write_json(&report, &path).unwrap();
    let back = read_sweep_report(&path).unwrap();
    assert_eq!(back, report);

    let files = emit_plot_data(&back, &dir.path().join("plots")).unwrap();
    assert_eq!(files.len(), 2);
    let text = fs::read_to_string(dir.path().join("plots/mode_n0_k1.dat")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), report.points.len());
    for (row, p) in rows.iter().zip(&report.points) {
        let m = p.modes.iter().find(|m| m.index == 1).unwrap();
        assert_eq!(row[0], p.epsilon);
        assert_eq!(row[1], p.eta);
        assert_eq!(row[2], m.gap);
        assert_eq!(row[3], m.predicted_gap.unwrap());
    }
}

#[test]
fn empty_report_gives_header_only_plots() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = run_sweep(&small_config(), ExecMode::Parallel).unwrap();
    report.points.clear();
    emit_plot_data(&report, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("mode_n0_k2.dat")).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#')));
}

#[test]
fn emit_plots_cli_reads_validate_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    assert_eq!(
        cli(
            &["validate", "--config", cfg.to_str().unwrap(), "--format", "json"],
            dir.path()
        ),
        0
    );
    let report = dir.path().join("validate.json");
    assert_eq!(
        cli(&["emit-plots", "--report", report.to_str().unwrap()], dir.path()),
        0
    );
    assert!(dir.path().join("plots/mode_n0_k2.dat").exists());
    let bogus = dir.path().join("bogus.json");
    fs::write(&bogus, "{}").unwrap();
    assert_eq!(cli(&["emit-plots", "--report", bogus.to_str().unwrap()], dir.path()), 2);
}

proptest! {
    // perturbations below half the smallest target gap never change the match
    #[test]
    fn matching_stable_under_small_perturbation(
        gaps in prop::collection::vec(0.1f64..3.0, 2..12),
        picks in prop::collection::vec(any::<bool>(), 12),
        noise in prop::collection::vec(-0.499f64..0.499, 12),
    ) {
        let mut targets = vec![1.0];
        for g in &gaps {
            targets.push(targets.last().unwrap() + g);
        }
        let min_gap = gaps.iter().cloned().fold(f64::MAX, f64::min);
        let chosen: Vec<usize> = (0..targets.len()).filter(|&i| picks[i] || i == 0).collect();
        let values: Vec<f64> = chosen.iter().map(|&i| targets[i] + noise[i] * min_gap).collect();
        prop_assert_eq!(match_ordered(&values, &targets), chosen);
    }
}
