//! Energy functionals sampled along a run, discrete checks of the decay
//! inequalities, exponential fits and the twin-run contraction test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VectorField3;
use crate::groove::{estimate1_margin, smallness_margin, GrooveConstants};
use crate::grid::Bc;
use crate::integrator::{Integrator, Observer, SimState, StepError, StepView};
use crate::ops::{curl_residual, gradient, laplacian, SUPPORT_MARGIN};

/// Default relative tolerance of the inequality checks.
pub const DEFAULT_REL_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub step: u64,
    /// `E = Σⱼ‖u_j‖²`.
    pub energy: f64,
    /// `D = Σⱼ‖Δu_j‖²`.
    pub dissipation: f64,
    /// `G = Σⱼ‖∇u_j‖²`.
    pub grad: f64,
    pub margin24: f64,
    pub margin48: f64,
    pub curl_res: f64,
    /// Share of `E` carried by the outer support margin of a clamped axis 3.
    pub outer_mass_frac: f64,
    /// `Σⱼ‖u_{jt}‖²`.
    pub energy_t: f64,
    /// `Σⱼ‖Δu_{jt}‖²`.
    pub dissipation_t: f64,
    /// `∫₀ᵗ Σⱼ‖Δu_{jτ}‖² dτ`, accumulated every step.
    pub dissipation_t_integral: f64,
}

fn dissipation_of(u: &VectorField3) -> f64 {
    u.comps.iter().map(|c| laplacian(c).norm_l2_sq()).sum()
}

fn outer_mass_fraction(u: &VectorField3) -> f64 {
    let grid = u.grid();
    if grid.bc[2] != Bc::Clamped {
        return 0.0;
    }
    let total = u.energy();
    if total == 0.0 {
        return 0.0;
    }
    let cut = (1.0 - SUPPORT_MARGIN) * grid.extents()[2];
    let x3 = grid.coords(2);
    let d = grid.dims();
    let mut outer = 0.0;
    for comp in &u.comps {
        let v = comp.values();
        for i1 in 0..d[0] {
            for i2 in 0..d[1] {
                for (i3, &x) in x3.iter().enumerate() {
                    if x >= cut {
                        let q = v[grid.index(i1, i2, i3)];
                        outer += q * q;
                    }
                }
            }
        }
    }
    outer * grid.cell_volume() / total
}

fn margins(c: &GrooveConstants, energy: f64) -> (f64, f64) {
    if !c.is_admissible() {
        return (f64::NAN, f64::NAN);
    }
    (
        estimate1_margin(c, energy).unwrap_or(f64::NAN),
        smallness_margin(c, energy).unwrap_or(f64::NAN),
    )
}

/// Record of a state. The `u_t` fields are zero; [`sample_with_rate`] or
/// a [`Monitor`] fills them. Margins are NaN for an inadmissible groove.
pub fn sample(state: &SimState, c: &GrooveConstants) -> EnergyRecord {
    let u = &state.u;
    let energy = u.energy();
    let (margin24, margin48) = margins(c, energy);
    EnergyRecord {
        t: state.time,
        step: state.step_index,
        energy,
        dissipation: dissipation_of(u),
        grad: u.comps.iter().map(|f| gradient(f).energy()).sum(),
        margin24,
        margin48,
        curl_res: curl_residual(u),
        outer_mass_frac: outer_mass_fraction(u),
        energy_t: 0.0,
        dissipation_t: 0.0,
        dissipation_t_integral: 0.0,
    }
}

pub fn sample_with_rate(
    state: &SimState,
    c: &GrooveConstants,
    ut: &VectorField3,
    dissipation_t_integral: f64,
) -> EnergyRecord {
    EnergyRecord {
        energy_t: ut.energy(),
        dissipation_t: dissipation_of(ut),
        dissipation_t_integral,
        ..sample(state, c)
    }
}

/// How `u_t` is measured along a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UtProxy {
    /// `(uⁿ − uⁿ⁻¹)/dt`; at `t = 0`, where no previous state exists, the
    /// right-hand side is evaluated instead.
    #[default]
    Backward,
    /// Right-hand side evaluation at every sample.
    Rhs,
}

/// Observer that records an [`EnergyRecord`] every `stride` steps.
#[derive(Debug, Clone)]
pub struct Monitor {
    c: GrooveConstants,
    stride: u64,
    proxy: UtProxy,
    records: Vec<EnergyRecord>,
    dt_integral: f64,
}

impl Monitor {
    pub fn new(c: GrooveConstants, stride: u64) -> Self {
        Monitor::with_proxy(c, stride, UtProxy::Backward)
    }

    pub fn with_proxy(c: GrooveConstants, stride: u64, proxy: UtProxy) -> Self {
        Monitor {
            c,
            stride: stride.max(1),
            proxy,
            records: Vec::new(),
            dt_integral: 0.0,
        }
    }

    pub fn records(&self) -> &[EnergyRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EnergyRecord> {
        self.records
    }
}

impl Observer for Monitor {
    fn observe(&mut self, view: StepView<'_>) {
        let s = view.state;
        let dt = view.integrator.config().dt;
        let ut = match (self.proxy, view.prev) {
            (UtProxy::Backward, Some(p)) => s.u.sub(&p.u).scaled(1.0 / dt),
            _ => view.integrator.rhs(&s.u),
        };
        let on_sample = s.step_index.is_multiple_of(self.stride);
        if view.prev.is_some() {
            // right-endpoint rule: the backward difference belongs to tⁿ
            self.dt_integral += dt * dissipation_of(&ut);
        }
        if on_sample {
            self.records
                .push(sample_with_rate(s, &self.c, &ut, self.dt_integral));
        }
    }
}

/// Outcome of one inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    /// Largest violation relative to the reference value (absolute when
    /// the reference is zero). Nonpositive when the inequality holds.
    pub worst_violation: f64,
    /// Time of the worst sample.
    pub location: f64,
    pub first_violation: Option<f64>,
}

impl CheckReport {
    /// Builds a report from `(t, lhs, rhs)` triples; the inequality is
    /// `lhs ≤ (1 + rel_tol)·rhs`.
    fn from_triples<I>(name: &str, rel_tol: f64, triples: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        let mut worst = f64::NEG_INFINITY;
        let mut location = 0.0;
        let mut first = None;
        for (t, lhs, rhs) in triples {
            let v = if rhs > 0.0 { (lhs - rhs) / rhs } else { lhs - rhs };
            let violated = lhs > rhs + rel_tol * rhs.abs() || v.is_nan();
            if violated && first.is_none() {
                first = Some(t);
            }
            if v > worst || v.is_nan() {
                worst = v;
                location = t;
            }
        }
        CheckReport {
            name: name.to_string(),
            pass: first.is_none(),
            worst_violation: worst,
            location,
            first_violation: first,
        }
    }
}

fn nonempty(series: &[EnergyRecord]) -> Result<()> {
    if series.is_empty() {
        Err(Error::EmptySeries)
    } else {
        Ok(())
    }
}

/// Trapezoid running integral of `f` over the sample times.
fn running_trapezoid(series: &[EnergyRecord], f: impl Fn(&EnergyRecord) -> f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(series.len());
    out.push(0.0);
    for w in series.windows(2) {
        acc += 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1]));
        out.push(acc);
    }
    out
}

/// `E(t) + (θ/2)∫₀ᵗ D ≤ E(0)` at every sample.
pub fn check_energy_inequality(
    series: &[EnergyRecord],
    c: &GrooveConstants,
    rel_tol: f64,
) -> Result<CheckReport> {
    nonempty(series)?;
    let e0 = series[0].energy;
    let integral = running_trapezoid(series, |r| r.dissipation);
    Ok(CheckReport::from_triples(
        "energy-inequality",
        rel_tol,
        series
            .iter()
            .zip(&integral)
            .map(|(r, i)| (r.t, r.energy + 0.5 * c.theta * i, e0)),
    ))
}

/// `E(t) ≤ E(0)·exp(−a²θt/2)` at every sample.
pub fn check_decay_bound(
    series: &[EnergyRecord],
    c: &GrooveConstants,
    rel_tol: f64,
) -> Result<CheckReport> {
    nonempty(series)?;
    let (t0, e0) = (series[0].t, series[0].energy);
    Ok(CheckReport::from_triples(
        "decay-bound",
        rel_tol,
        series
            .iter()
            .map(|r| (r.t, r.energy, e0 * (-c.decay_rate * (r.t - t0)).exp())),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtDecayReport {
    pub envelope: CheckReport,
    pub accumulated: CheckReport,
}

impl UtDecayReport {
    pub fn pass(&self) -> bool {
        self.envelope.pass && self.accumulated.pass
    }
}

/// Exponential envelope and accumulated form of the `u_t` estimate, using
/// the `energy_t` and `dissipation_t_integral` columns.
pub fn check_ut_decay(
    series: &[EnergyRecord],
    c: &GrooveConstants,
    rel_tol: f64,
) -> Result<UtDecayReport> {
    if series.len() < 2 {
        return Err(Error::FitDomain(format!(
            "u_t checks need at least 2 samples, got {}",
            series.len()
        )));
    }
    let (t0, et0) = (series[0].t, series[0].energy_t);
    let envelope = CheckReport::from_triples(
        "ut-envelope",
        rel_tol,
        series
            .iter()
            .map(|r| (r.t, r.energy_t, et0 * (-c.decay_rate * (r.t - t0)).exp())),
    );
    let accumulated = CheckReport::from_triples(
        "ut-accumulated",
        rel_tol,
        series.iter().map(|r| {
            (
                r.t,
                r.energy_t + 0.5 * c.theta * r.dissipation_t_integral,
                et0,
            )
        }),
    );
    Ok(UtDecayReport {
        envelope,
        accumulated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate_lambda: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares line through `(t, ln E)` over samples with `t` in
/// `window`. `intercept` is `exp` of the fitted line at `t = 0`.
pub fn fit_decay(series: &[EnergyRecord], window: [f64; 2]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|r| r.t >= window[0] && r.t <= window[1])
        .map(|r| (r.t, r.energy))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::FitDomain(format!(
            "{} samples in [{}, {}], need {MIN_FIT_SAMPLES}",
            pts.len(),
            window[0],
            window[1]
        )));
    }
    if let Some(&(t, e)) = pts.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::FitDomain(format!("energy {e} at t = {t}")));
    }
    let n = pts.len() as f64;
    let (st, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(t, e)| (a + t, b + e.ln()));
    let (tm, ym) = (st / n, sy / n);
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, e) in &pts {
        let (dt, dy) = (t - tm, e.ln() - ym);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let b = ym - slope * tm;
    let ss_res: f64 = pts
        .iter()
        .map(|&(t, e)| (e.ln() - (b + slope * t)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecayFit {
        rate_lambda: -slope,
        intercept: b.exp(),
        r_squared,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinSample {
    pub t: f64,
    /// `Σⱼ‖w_j‖²` with `w = u − v`.
    pub w_energy: f64,
    /// `∫₀ᵗ Σᵢ(‖Δu_i‖² + ‖Δv_i‖²)`.
    pub dissipation_integral: f64,
    /// `W(0)·exp(C·dissipation_integral)`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinReport {
    pub name: String,
    pub pass: bool,
    pub worst_violation: f64,
    pub location: f64,
    pub gronwall_c: f64,
    /// Smallest `C` for which the envelope would hold at every sample.
    pub required_c: f64,
    pub identical_inputs: bool,
    /// Whether both runs agree bit for bit at every sample.
    pub bitwise_identical: bool,
    pub w0: f64,
    pub w_final: f64,
    pub samples: Vec<TwinSample>,
    pub error: Option<String>,
}

/// Grönwall constant of the difference estimate, `1/(θ a^{3/2})`.
pub fn gronwall_constant(c: &GrooveConstants) -> f64 {
    1.0 / (c.theta * c.a.powf(1.5))
}

/// Evolves `a0` and `b0` in lockstep with one integrator, sampling every
/// `stride` steps. `observer_a` sees every state of the first run.
pub fn twin_run<O: Observer>(
    integ: &Integrator,
    a0: VectorField3,
    b0: VectorField3,
    c: &GrooveConstants,
    stride: u64,
    rel_tol: f64,
    observer_a: &mut O,
) -> TwinReport {
    let stride = stride.max(1);
    let gc = gronwall_constant(c);
    let identical_inputs = a0.bitwise_eq(&b0);
    let mut a = SimState::new(a0);
    let mut b = SimState::new(b0);
    observer_a.observe(StepView {
        state: &a,
        prev: None,
        integrator: integ,
    });
    let w0 = b.u.sub(&a.u).energy();
    let dt = integ.config().dt;
    let mut d_prev = dissipation_of(&a.u) + dissipation_of(&b.u);
    let mut integral = 0.0;
    let mut bitwise = identical_inputs;
    let mut samples = vec![TwinSample {
        t: 0.0,
        w_energy: w0,
        dissipation_integral: 0.0,
        envelope: w0,
    }];
    let mut error: Option<StepError> = None;
    let total = integ.config().total_steps();
    while a.step_index < total {
        let (ra, rb) = rayon::join(|| integ.step(&a), || integ.step(&b));
        let (na, nb) = match (ra, rb) {
            (Ok(na), Ok(nb)) => (na, nb),
            (Err(e), _) | (_, Err(e)) => {
                error = Some(e);
                break;
            }
        };
        observer_a.observe(StepView {
            state: &na,
            prev: Some(&a),
            integrator: integ,
        });
        a = na;
        b = nb;
        let d_now = dissipation_of(&a.u) + dissipation_of(&b.u);
        integral += 0.5 * dt * (d_prev + d_now);
        d_prev = d_now;
        if a.step_index.is_multiple_of(stride) || a.step_index == total {
            bitwise &= a.u.bitwise_eq(&b.u);
            samples.push(TwinSample {
                t: a.time,
                w_energy: b.u.sub(&a.u).energy(),
                dissipation_integral: integral,
                envelope: w0 * (gc * integral).exp(),
            });
        }
    }
    let w_final = samples.last().map_or(w0, |s| s.w_energy);
    let mut report = CheckReport::from_triples(
        "twin-contraction",
        rel_tol,
        samples.iter().map(|s| (s.t, s.w_energy, s.envelope)),
    );
    if identical_inputs {
        report.pass = bitwise && samples.iter().all(|s| s.w_energy == 0.0);
    }
    let required_c = samples
        .iter()
        .filter(|s| s.w_energy > (1.0 + rel_tol) * w0)
        .map(|s| {
            if s.dissipation_integral > 0.0 && w0 > 0.0 {
                (s.w_energy / ((1.0 + rel_tol) * w0)).ln() / s.dissipation_integral
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    TwinReport {
        name: report.name,
        pass: report.pass && error.is_none(),
        worst_violation: report.worst_violation,
        location: report.location,
        gronwall_c: gc,
        required_c,
        identical_inputs,
        bitwise_identical: bitwise,
        w0,
        w_final,
        samples,
        error: error.map(|e| e.to_string()),
    }
}
