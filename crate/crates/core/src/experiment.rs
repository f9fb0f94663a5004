//! Runs, sweeps, verification tiers and their on-disk artifacts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::checkpoint;
use crate::config::{CheckKind, RunConfig, SweepConfig};
use crate::convergence::{spatial_studies, temporal_study, ConvergenceStudy};
use crate::diagnostics::{
    check_decay_bound, check_energy_inequality, check_ut_decay, fit_decay, twin_run, CheckReport,
    DecayFit, EnergyRecord, Monitor, TwinReport,
};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField3};
use crate::grid::Grid;
use crate::groove::GrooveConstants;
use crate::integrator::{run, Integrator, IntegratorConfig, Observer, SimState, StepError, StepView};
use crate::lab::{run_batch, sharpness_probe, BatchReport, LabCheck, LabConfig, SharpnessPoint};

pub const SERIES_HEADER: [&str; 9] = [
    "t",
    "energy",
    "dissipation",
    "grad",
    "margin24",
    "margin48",
    "curl_res",
    "outer_mass",
    "E_t",
];

pub const SWEEP_HEADER: [&str; 6] = [
    "B",
    "epsilon",
    "margin48_at_0",
    "outcome",
    "fitted_rate",
    "bound_rate",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    Completed,
    Blowup,
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub outcome: RunOutcome,
    pub error: Option<String>,
    pub final_time: f64,
    pub steps: u64,
    pub admissible: bool,
    pub constants: GrooveConstants,
    pub energy0: f64,
    pub margin24_at_0: f64,
    pub margin48_at_0: f64,
    pub samples: usize,
    /// Inequality checks; empty for an inadmissible groove, where the
    /// estimates claim nothing.
    pub checks: Vec<CheckReport>,
    pub decay_fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub series: Vec<EnergyRecord>,
    pub final_state: SimState,
}

struct RunObserver<'a> {
    monitor: Monitor,
    skip_initial: bool,
    checkpoint: Option<(&'a Path, u64)>,
    checkpoint_error: Option<std::io::Error>,
}

impl Observer for RunObserver<'_> {
    fn observe(&mut self, view: StepView<'_>) {
        if view.prev.is_none() && self.skip_initial {
            return;
        }
        self.monitor.observe(StepView { ..view });
        if let Some((path, stride)) = self.checkpoint {
            let s = view.state;
            if view.prev.is_some() && s.step_index.is_multiple_of(stride) && self.checkpoint_error.is_none() {
                if let Err(Error::Io(e)) = checkpoint::write(path, s) {
                    self.checkpoint_error = Some(e);
                }
            }
        }
    }
}

fn outcome_of(err: &Option<StepError>) -> RunOutcome {
    match err {
        None => RunOutcome::Completed,
        Some(e) if e.is_blowup() => RunOutcome::Blowup,
        Some(_) => RunOutcome::SolverFailure,
    }
}

/// Samples usable by a log-linear fit: positive normal energies inside
/// `window`.
pub fn fit_series(series: &[EnergyRecord], window: [f64; 2]) -> Result<DecayFit> {
    let usable: Vec<EnergyRecord> = series
        .iter()
        .filter(|r| r.energy.is_normal() && r.energy > 0.0)
        .cloned()
        .collect();
    let hi = usable.last().map_or(window[1], |r| r.t.min(window[1]));
    fit_decay(&usable, [window[0], hi]).map(|mut f| {
        f.window = window;
        f
    })
}

/// Integrates `cfg` from its initial datum, or from `resume` when given.
/// A resumed run does not re-record the checkpointed state. Checkpoints go
/// to `checkpoint_path` every `output.checkpoint_stride` steps.
pub fn execute_run(
    cfg: &RunConfig,
    resume: Option<SimState>,
    checkpoint_path: Option<&Path>,
) -> Result<RunResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let c = GrooveConstants::raw(&cfg.groove)?;
    let integ = Integrator::new(&grid, &cfg.integrator)?;
    let resuming = resume.is_some();
    let state0 = match resume {
        Some(s) => {
            if !s.u.grid().same_shape(&grid) {
                return Err(Error::CorruptCheckpoint(
                    "checkpoint grid does not match the configuration".into(),
                ));
            }
            s
        }
        None => SimState::new(cfg.initial.build(&grid)?),
    };
    let mut obs = RunObserver {
        monitor: Monitor::with_proxy(c, cfg.output.stride, cfg.checks.ut_proxy),
        skip_initial: resuming,
        checkpoint: checkpoint_path
            .filter(|_| cfg.output.checkpoint_stride > 0)
            .map(|p| (p, cfg.output.checkpoint_stride)),
        checkpoint_error: None,
    };
    let (final_state, err) = run(&integ, state0, &mut obs);
    if let Some(e) = obs.checkpoint_error {
        return Err(Error::Io(e));
    }
    let series = obs.monitor.into_records();
    let summary = summarize(cfg, &c, &series, &final_state, &err)?;
    Ok(RunResult {
        summary,
        series,
        final_state,
    })
}

fn summarize(
    cfg: &RunConfig,
    c: &GrooveConstants,
    series: &[EnergyRecord],
    last: &SimState,
    err: &Option<StepError>,
) -> Result<RunSummary> {
    let first = series.first();
    let energy0 = first.map_or(f64::NAN, |r| r.energy);
    let tol = cfg.checks.rel_tol;
    let mut checks = Vec::new();
    let mut decay_fit = None;
    let mut fit_error = None;
    if c.is_admissible() && !series.is_empty() {
        for kind in &cfg.checks.enabled {
            match kind {
                CheckKind::EnergyInequality => checks.push(check_energy_inequality(series, c, tol)?),
                CheckKind::DecayBound => checks.push(check_decay_bound(series, c, tol)?),
                CheckKind::UtDecay => match check_ut_decay(series, c, tol) {
                    Ok(r) => {
                        checks.push(r.envelope);
                        checks.push(r.accumulated);
                    }
                    Err(e) => fit_error = Some(e.to_string()),
                },
                CheckKind::DecayFit => {}
            }
        }
    }
    if cfg.checks.enabled.contains(&CheckKind::DecayFit) {
        match fit_series(series, cfg.fit_window()) {
            Ok(f) => decay_fit = Some(f),
            Err(e) => fit_error = Some(e.to_string()),
        }
    }
    let outcome = outcome_of(err);
    Ok(RunSummary {
        config_hash: cfg.hash(),
        outcome,
        error: err.as_ref().map(|e| e.to_string()),
        final_time: last.time,
        steps: last.step_index,
        admissible: c.is_admissible(),
        constants: *c,
        energy0,
        margin24_at_0: first.map_or(f64::NAN, |r| r.margin24),
        margin48_at_0: first.map_or(f64::NAN, |r| r.margin48),
        samples: series.len(),
        pass: outcome == RunOutcome::Completed && checks.iter().all(|r| r.pass),
        checks,
        decay_fit,
        fit_error,
    })
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn hash_comment(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

/// Series CSV: a `# config_hash=` line, the header, one row per sample.
pub fn series_csv(hash: &str, series: &[EnergyRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SERIES_HEADER).map_err(csv_err)?;
    for r in series {
        w.write_record([
            num(r.t),
            num(r.energy),
            num(r.dissipation),
            num(r.grad),
            num(r.margin24),
            num(r.margin48),
            num(r.curl_res),
            num(r.outer_mass_frac),
            num(r.energy_t),
        ])
        .map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| csv_err(e.into_error().into()))?)
        .expect("csv output is utf-8");
    Ok(hash_comment(hash) + &body)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads the data rows of a series or sweep CSV, skipping comment lines.
pub fn read_csv_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)?;
    Ok((header, rows))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Artifact paths of a run inside `out_dir`.
pub struct RunArtifacts {
    pub series: PathBuf,
    pub summary: PathBuf,
    pub checkpoint: PathBuf,
}

impl RunArtifacts {
    pub fn new(cfg: &RunConfig, out_dir: &Path) -> Self {
        RunArtifacts {
            series: out_dir.join(&cfg.output.series),
            summary: out_dir.join(&cfg.output.summary),
            checkpoint: out_dir.join(&cfg.output.checkpoint),
        }
    }
}

/// Loads, validates and runs a configuration, writing the series CSV and
/// summary JSON into `out_dir`. With `resume`, continues from a checkpoint
/// and appends nothing: the series holds only the resumed part.
pub fn cmd_run(config_path: &Path, out_dir: &Path, resume: Option<&Path>) -> Result<RunSummary> {
    let cfg = RunConfig::load(config_path)?;
    let start = resume.map(checkpoint::read).transpose()?;
    fs::create_dir_all(out_dir)?;
    let paths = RunArtifacts::new(&cfg, out_dir);
    let result = execute_run(&cfg, start, Some(&paths.checkpoint))?;
    fs::write(&paths.series, series_csv(&result.summary.config_hash, &result.series)?)?;
    write_json(&paths.summary, &result.summary)?;
    Ok(result.summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellOutcome {
    Decayed,
    NotDecayedByTEnd,
    Blowup,
    Inadmissible,
    Error,
}

impl CellOutcome {
    pub fn label(self) -> &'static str {
        match self {
            CellOutcome::Decayed => "decayed",
            CellOutcome::NotDecayedByTEnd => "not-decayed-by-t_end",
            CellOutcome::Blowup => "blowup",
            CellOutcome::Inadmissible => "inadmissible",
            CellOutcome::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub width: f64,
    pub epsilon: f64,
    pub admissible: bool,
    pub energy0: f64,
    pub margin24_at_0: f64,
    pub margin48_at_0: f64,
    /// The label written to the map.
    pub outcome: CellOutcome,
    /// What the simulation did, also for inadmissible cells.
    pub observed: CellOutcome,
    pub fitted_rate: f64,
    pub r_squared: f64,
    pub bound_rate: f64,
    pub final_energy: f64,
    pub final_time: f64,
    pub error: Option<String>,
    pub config_hash: String,
}

fn run_cell(sweep: &SweepConfig, width: f64, epsilon: f64) -> SweepCell {
    let cfg = sweep.cell_config(width, epsilon);
    let admissible = width > 0.0 && width < std::f64::consts::PI;
    let mut cell = SweepCell {
        width,
        epsilon,
        admissible,
        energy0: f64::NAN,
        margin24_at_0: f64::NAN,
        margin48_at_0: f64::NAN,
        outcome: CellOutcome::Error,
        observed: CellOutcome::Error,
        fitted_rate: f64::NAN,
        r_squared: f64::NAN,
        bound_rate: f64::NAN,
        final_energy: f64::NAN,
        final_time: f64::NAN,
        error: None,
        config_hash: cfg.hash(),
    };
    match execute_run(&cfg, None, None) {
        Err(e) => cell.error = Some(e.to_string()),
        Ok(r) => {
            let s = &r.summary;
            cell.energy0 = s.energy0;
            cell.margin24_at_0 = s.margin24_at_0;
            cell.margin48_at_0 = s.margin48_at_0;
            if s.admissible {
                cell.bound_rate = s.constants.decay_rate;
            }
            cell.final_time = s.final_time;
            cell.final_energy = r.series.last().map_or(f64::NAN, |x| x.energy);
            if let Some(f) = &s.decay_fit {
                cell.fitted_rate = f.rate_lambda;
                cell.r_squared = f.r_squared;
            }
            cell.error = s.error.clone().or_else(|| s.fit_error.clone());
            cell.observed = match s.outcome {
                RunOutcome::Blowup => CellOutcome::Blowup,
                RunOutcome::SolverFailure => CellOutcome::Error,
                RunOutcome::Completed => {
                    if cell.final_energy < s.energy0 && cell.fitted_rate > 0.0 {
                        CellOutcome::Decayed
                    } else {
                        CellOutcome::NotDecayedByTEnd
                    }
                }
            };
        }
    }
    cell.outcome = if admissible {
        cell.observed
    } else {
        CellOutcome::Inadmissible
    };
    cell
}

/// Runs every cell on a pool of `threads` workers (the configured
/// parallelism when `None`). Cells are independent and returned in row-major
/// order, so the result does not depend on scheduling.
pub fn run_sweep(cfg: &SweepConfig, threads: Option<usize>) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(cfg.sweep.parallelism).max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let cells = cfg.cells();
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(b, e)| run_cell(cfg, b, e))
            .collect()
    }))
}

pub fn sweep_csv(hash: &str, cells: &[SweepCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for c in cells {
        let margin = if c.admissible { c.margin48_at_0 } else { f64::NAN };
        w.write_record([
            num(c.width),
            num(c.epsilon),
            num(margin),
            c.outcome.label().to_string(),
            num(c.fitted_rate),
            num(c.bound_rate),
        ])
        .map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| csv_err(e.into_error().into()))?)
        .expect("csv output is utf-8");
    Ok(hash_comment(hash) + &body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub cells: Vec<SweepCell>,
}

/// Writes the map CSV and a JSON sidecar with every per-cell detail.
pub fn cmd_sweep(config_path: &Path, out_dir: &Path, threads: Option<usize>) -> Result<SweepReport> {
    let cfg = SweepConfig::load(config_path)?;
    fs::create_dir_all(out_dir)?;
    let cells = run_sweep(&cfg, threads)?;
    let hash = cfg.hash();
    let csv_path = out_dir.join(&cfg.sweep.output);
    fs::write(&csv_path, sweep_csv(&hash, &cells)?)?;
    let report = SweepReport {
        config_hash: hash,
        cells,
    };
    write_json(&csv_path.with_extension("json"), &report)?;
    Ok(report)
}

/// Runs `a` and `b` in lockstep; they may differ only in their initial
/// data. Returns the contraction report and the monitored series of `a`.
pub fn twin_run_contraction(a: &RunConfig, b: &RunConfig) -> Result<(TwinReport, Vec<EnergyRecord>)> {
    a.validate()?;
    b.validate()?;
    let mut diffs = Vec::new();
    if a.groove != b.groove {
        diffs.push("groove");
    }
    if a.grid != b.grid {
        diffs.push("grid");
    }
    if a.integrator != b.integrator {
        diffs.push("integrator");
    }
    if a.checks != b.checks {
        diffs.push("checks");
    }
    if a.output.stride != b.output.stride {
        diffs.push("output.stride");
    }
    if !diffs.is_empty() {
        return Err(Error::ConfigMismatch(format!(
            "configurations differ in {}",
            diffs.join(", ")
        )));
    }
    let grid = a.grid()?;
    let c = GrooveConstants::raw(&a.groove)?;
    let integ = Integrator::new(&grid, &a.integrator)?;
    let ua = a.initial.build(&grid)?;
    let ub = b.initial.build(&grid)?;
    let mut monitor = Monitor::with_proxy(c, a.output.stride, a.checks.ut_proxy);
    let report = twin_run(&integ, ua, ub, &c, a.output.stride, a.checks.rel_tol, &mut monitor);
    Ok((report, monitor.into_records()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Quick,
    Full,
}

impl FromStr for Tier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Tier::Quick),
            "full" => Ok(Tier::Full),
            other => Err(Error::UnknownTier(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolCheck {
    pub steps: u64,
    /// Largest per-step deviation of the mode amplitude from the
    /// closed-form amplification factor, relative.
    pub worst_step_error: f64,
    pub solver_tol: f64,
    pub pass: bool,
}

/// A single Fourier mode in a periodic box under the linear scheme must be
/// multiplied by `1/(1 + dt(λ² − λ))` each step, `λ = (2 − 2cos kh)/h²`.
pub fn linear_symbol_check(steps: u64) -> Result<SymbolCheck> {
    let l = 2.0 * std::f64::consts::PI;
    let grid = Grid::periodic_box([l; 3], [16, 8, 8])?;
    let (m, h) = (3.0, grid.h[0]);
    let f = ScalarField::from_fn(&grid, |x1, _, _| (m * x1).sin());
    let z = ScalarField::zeros(&grid);
    let u0 = VectorField3::new(f.clone(), z.clone(), z)?;
    let mut cfg = IntegratorConfig::new(0.05, 0.05 * steps as f64);
    cfg.nonlinear = false;
    let integ = Integrator::new(&grid, &cfg)?;
    let lam = (2.0 - 2.0 * (m * h).cos()) / (h * h);
    let g = 1.0 / (1.0 + cfg.dt * (lam * lam - lam));
    let mut s = SimState::new(u0);
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let next = integ
            .step(&s)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        // Project onto the mode: roundoff in slower modes is not a symbol error.
        let amp = |u: &ScalarField| u.inner(&f) / f.inner(&f);
        let (a0, a1) = (amp(&s.u.comps[0]), amp(&next.u.comps[0]));
        worst = worst.max((a1 - g * a0).abs() / (g * a0).abs());
        s = next;
    }
    Ok(SymbolCheck {
        steps,
        worst_step_error: worst,
        solver_tol: cfg.solver_tol,
        pass: worst <= cfg.solver_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabSummary {
    pub check: LabCheck,
    pub total: usize,
    pub passed: usize,
    pub retried: usize,
    pub pass_fraction: f64,
    pub min_ratios: Vec<f64>,
    pub max_empirical_constant: Option<f64>,
}

impl From<&BatchReport> for LabSummary {
    fn from(b: &BatchReport) -> Self {
        LabSummary {
            check: b.check,
            total: b.total,
            passed: b.passed,
            retried: b.retried,
            pass_fraction: b.pass_fraction,
            min_ratios: b.min_ratios.clone(),
            max_empirical_constant: b.max_empirical_constant,
        }
    }
}

/// Fraction of seeds that must pass each lab check.
pub const LAB_PASS_FRACTION: f64 = 0.99;

/// Envelope lengths of the sharpness probe and the interval its last
/// first ratio must fall in.
pub const SHARPNESS_ENVELOPES: [f64; 4] = [8.0, 16.0, 32.0, 64.0];
pub const SHARPNESS_INTERVAL: [f64; 2] = [1.0, 1.05];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessSummary {
    pub points: Vec<SharpnessPoint>,
    pub monotone: bool,
    pub pass: bool,
}

pub fn sharpness_summary(width: f64) -> Result<SharpnessSummary> {
    let points = sharpness_probe(width, &SHARPNESS_ENVELOPES, 32, 48)?;
    let monotone = points.windows(2).all(|w| w[1].ratios[0] < w[0].ratios[0]);
    let last = points.last().map_or(f64::NAN, |p| p.ratios[0]);
    Ok(SharpnessSummary {
        monotone,
        pass: monotone && (SHARPNESS_INTERVAL[0]..=SHARPNESS_INTERVAL[1]).contains(&last),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tier: Tier,
    pub lab: Vec<LabSummary>,
    pub sharpness: SharpnessSummary,
    pub convergence: Vec<ConvergenceStudy>,
    pub linear_symbol: SymbolCheck,
    pub pass: bool,
}

pub fn lab_batches(seeds: u64, cfg: &LabConfig) -> Result<Vec<BatchReport>> {
    [LabCheck::Steklov, LabCheck::L4, LabCheck::GroovePoincare]
        .into_iter()
        .map(|c| run_batch(c, seeds, cfg))
        .collect()
}

/// Quick: 100 seeds and two refinements. Full: 1000 seeds and three.
pub fn cmd_verify_report(tier: Tier) -> Result<VerifyReport> {
    let (seeds, levels) = match tier {
        Tier::Quick => (100, 3),
        Tier::Full => (1000, 4),
    };
    let lab_cfg = LabConfig::default();
    let lab: Vec<LabSummary> = lab_batches(seeds, &lab_cfg)?.iter().map(LabSummary::from).collect();
    let sharpness = sharpness_summary(lab_cfg.groove.width)?;
    let mut convergence = spatial_studies([8, 12, 12], levels)?;
    convergence.push(temporal_study([8, 16, 16], 4e-3, 0.1, levels)?);
    let linear_symbol = linear_symbol_check(20)?;
    let pass = lab.iter().all(|l| l.pass_fraction >= LAB_PASS_FRACTION)
        && sharpness.pass
        && convergence.iter().all(|s| s.pass)
        && linear_symbol.pass;
    Ok(VerifyReport {
        tier,
        lab,
        sharpness,
        convergence,
        linear_symbol,
        pass,
    })
}

pub fn cmd_verify(tier: &str, out_dir: &Path) -> Result<VerifyReport> {
    let tier: Tier = tier.parse()?;
    let report = cmd_verify_report(tier)?;
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("verify.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabRun {
    pub batch: BatchReport,
    pub sharpness: Option<SharpnessSummary>,
}

pub fn cmd_lab(check: LabCheck, seeds: u64, out_dir: &Path) -> Result<LabRun> {
    let cfg = LabConfig::default();
    let batch = run_batch(check, seeds, &cfg)?;
    let sharpness = (check == LabCheck::GroovePoincare)
        .then(|| sharpness_summary(cfg.groove.width))
        .transpose()?;
    let out = LabRun { batch, sharpness };
    fs::create_dir_all(out_dir)?;
    let name = serde_json::to_value(check)?
        .as_str()
        .map(String::from)
        .unwrap_or_default();
    write_json(&out_dir.join(format!("lab-{name}.json")), &out)?;
    Ok(out)
}
