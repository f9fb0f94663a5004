use std::fs;
use std::path::Path;

use ksgroove::checkpoint;
use ksgroove::config::{RunConfig, SweepConfig};
use ksgroove::experiment::{
    cmd_run, cmd_sweep, execute_run, read_csv_rows, RunOutcome, SERIES_HEADER, SWEEP_HEADER,
};

fn small() -> RunConfig {
    let mut c = RunConfig::default();
    c.groove.trunc_x1 = 4.0;
    c.groove.trunc_x3 = 4.0;
    c.grid.n = [8, 12, 12];
    c.integrator.t_end = 0.2;
    c.output.stride = 10;
    c
}

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, cfg.to_toml_string()).unwrap();
    p
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let full = small();
    let mut first = full.clone();
    first.integrator.t_end = 0.1;
    first.output.checkpoint_stride = 100;
    let ckpt = dir.path().join("half.ksg");

    let whole = execute_run(&full, None, None).unwrap();
    execute_run(&first, None, Some(&ckpt)).unwrap();
    let state = checkpoint::read(&ckpt).unwrap();
    assert_eq!(state.step_index, 100);
    let resumed = execute_run(&full, Some(state), None).unwrap();

    assert!(resumed.final_state.u.bitwise_eq(&whole.final_state.u));
    let tail: Vec<_> = whole.series.iter().filter(|r| r.step > 100).collect();
    assert_eq!(tail.len(), resumed.series.len());
    for (a, b) in tail.iter().zip(&resumed.series) {
        let key = |r: &ksgroove::diagnostics::EnergyRecord| {
            [r.t, r.energy, r.dissipation, r.grad, r.margin48, r.curl_res, r.outer_mass_frac, r.energy_t]
                .map(f64::to_bits)
        };
        assert_eq!(key(a), key(b));
    }
}

#[test]
fn series_rows_follow_stride() {
    let dir = tempfile::tempdir().unwrap();
    for stride in [1u64, 7, 10, 33] {
        let mut cfg = small();
        cfg.integrator.t_end = 0.1;
        cfg.output.stride = stride;
        let path = write_config(dir.path(), "c.toml", &cfg);
        let out = dir.path().join(format!("s{stride}"));
        let s = cmd_run(&path, &out, None).unwrap();
        let (header, rows) = read_csv_rows(&out.join("series.csv")).unwrap();
        assert_eq!(header, SERIES_HEADER);
        assert_eq!(rows.len() as u64, s.steps / stride + 1);
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.toml", &small());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_run(&path, &a, None).unwrap();
    cmd_run(&path, &b, None).unwrap();
    for f in ["series.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    let hash = summary["config_hash"].as_str().unwrap();
    let csv = fs::read_to_string(a.join("series.csv")).unwrap();
    assert!(csv.starts_with(&format!("# config_hash={hash}\n")));
}

#[test]
fn zero_amplitude_series_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.initial.amplitude = 0.0;
    let path = write_config(dir.path(), "c.toml", &cfg);
    let s = cmd_run(&path, dir.path(), None).unwrap();
    assert_eq!(s.outcome, RunOutcome::Completed);
    assert!(s.checks.iter().all(|c| c.pass));
    let (_, rows) = read_csv_rows(&dir.path().join("series.csv")).unwrap();
    for row in rows {
        for col in [1, 2, 3, 6, 8] {
            assert_eq!(row[col].parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn blowup_is_an_outcome_not_an_error() {
    let mut cfg = small();
    cfg.initial.amplitude = 1e4;
    let r = execute_run(&cfg, None, None).unwrap();
    assert_eq!(r.summary.outcome, RunOutcome::Blowup);
    assert!(!r.summary.pass);
    assert!(r.summary.error.is_some());
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let mut text = small().to_toml_string();
    text = text.replace("dt = 0.001", "dt = -0.001");
    fs::write(&path, text).unwrap();
    let out = dir.path().join("out");
    let err = cmd_run(&path, &out, None).unwrap_err();
    assert!(matches!(err, ksgroove::Error::Config(_)), "{err}");
    assert!(!out.exists());
}

#[test]
fn sweep_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = SweepConfig::threshold_map();
    s.template = small();
    s.template.integrator.t_end = 0.05;
    s.template.output.stride = 5;
    // Amplitude 1e3 blows up on this coarse grid.
    s.sweep.width = ksgroove::config::AxisSpec::Values { values: vec![2.0, 3.5] };
    s.sweep.epsilon = ksgroove::config::AxisSpec::Values { values: vec![1e-2, 1e3] };
    let path = dir.path().join("sweep.toml");
    fs::write(&path, s.to_toml_string()).unwrap();
    let report = cmd_sweep(&path, dir.path(), Some(2)).unwrap();
    let (header, rows) = read_csv_rows(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(header, SWEEP_HEADER);
    assert_eq!(rows.len(), 4);
    let labels: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    assert_eq!(labels, ["decayed", "blowup", "inadmissible", "inadmissible"]);
    assert!(rows[2][2].parse::<f64>().unwrap().is_nan());
    assert!(dir.path().join("sweep.json").exists());
    assert_eq!(report.cells.len(), 4);

    let other = dir.path().join("three");
    cmd_sweep(&path, &other, Some(3)).unwrap();
    for f in ["sweep.csv", "sweep.json"] {
        assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(other.join(f)).unwrap());
    }
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let default = RunConfig::load(&root.join("default.toml")).unwrap();
    let mut expected = RunConfig::default();
    expected.output.checkpoint_stride = 500;
    assert_eq!(default, expected);
    RunConfig::load(&root.join("small.toml")).unwrap();
    let map = SweepConfig::load(&root.join("threshold_map.toml")).unwrap();
    assert_eq!(map.cells(), SweepConfig::threshold_map().cells());
    assert_eq!(map.template, SweepConfig::threshold_map().template);
}
