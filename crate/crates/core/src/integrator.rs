//! First-order IMEX time stepping: backward Euler on `Δ² + Δ`, forward
//! Euler on the nonlinearity,
//!
//! ```text
//! (I + dt(Δ_h² + Δ_h)) u_j^{n+1} = u_j^n − dt N_j(u^n).
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField3};
use crate::grid::Grid;
use crate::ops::{linear_operator, nonlinearity};
use crate::solver::{implicit_solve, ModalSolver, Preconditioner, SolverFailure};

/// Below this speed the explicit-transport restriction is not evaluated
/// as a division by zero.
pub const SPEED_FLOOR: f64 = 1e-12;

/// Upper bound on `dt`: the continuum symbol `k⁴ − k²` is bounded below by
/// `−1/4`, so `I + dt(Δ² + Δ)` stays positive for `dt < 4`.
pub const DT_MAX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: VectorField3,
    pub time: f64,
    pub step_index: u64,
}

impl SimState {
    pub fn new(u: VectorField3) -> Self {
        SimState {
            u,
            time: 0.0,
            step_index: 0,
        }
    }
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    200
}
fn default_cfl() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub solver_max_iter: usize,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub preconditioner: Preconditioner,
    /// Switches the explicit term off; used for linear oracle runs.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegratorConfig {
            dt,
            t_end,
            solver_tol: default_tol(),
            solver_max_iter: default_max_iter(),
            cfl_safety: default_cfl(),
            preconditioner: Preconditioner::Modal,
            nonlinear: true,
        }
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.dt > 0.0 && self.dt < DT_MAX) {
            v.push(format!("integrator.dt must satisfy 0 < dt < {DT_MAX}, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            v.push(format!("integrator.t_end must be finite and nonnegative, got {}", self.t_end));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-6) {
            v.push(format!("integrator.solver_tol must lie in (0, 1e-6], got {}", self.solver_tol));
        }
        if self.solver_max_iter == 0 {
            v.push("integrator.solver_max_iter must be at least 1".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            v.push(format!("integrator.cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Total number of steps from `t = 0` to `t_end`.
    pub fn total_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("component {component}: {failure}")]
    Solver {
        component: usize,
        step_index: u64,
        failure: SolverFailure,
    },
    #[error("non-finite state at step {step_index} (t = {time})")]
    Blowup { step_index: u64, time: f64 },
    #[error("dt = {dt} exceeds the transport limit {limit:.3e} at step {step_index} (max |u| = {speed:.3e})")]
    Cfl {
        step_index: u64,
        dt: f64,
        limit: f64,
        speed: f64,
    },
}

impl StepError {
    /// Blowups and transport-limit violations are physics outcomes; solver
    /// failures are numerical ones.
    pub fn is_blowup(&self) -> bool {
        matches!(self, StepError::Blowup { .. } | StepError::Cfl { .. })
    }
}

/// A configured stepper. Building it factors the implicit operator once.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: Grid,
    cfg: IntegratorConfig,
    modal: Option<ModalSolver>,
}

impl Integrator {
    pub fn new(grid: &Grid, cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let modal = match cfg.preconditioner {
            Preconditioner::Modal => ModalSolver::new(grid, cfg.dt),
            Preconditioner::None => None,
        };
        Ok(Integrator {
            grid: *grid,
            cfg: *cfg,
            modal,
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn implicit_solve(&self, rhs: &ScalarField) -> std::result::Result<ScalarField, SolverFailure> {
        implicit_solve(
            rhs,
            self.cfg.dt,
            self.cfg.solver_tol,
            self.cfg.solver_max_iter,
            self.modal.as_ref(),
        )
        .map(|(x, _)| x)
    }

    /// `−(Δ_h² + Δ_h)u − N(u)`, the semi-discrete time derivative.
    pub fn rhs(&self, u: &VectorField3) -> VectorField3 {
        let n = if self.cfg.nonlinear {
            Some(nonlinearity(u))
        } else {
            None
        };
        let comp = |j: usize| {
            let mut l = linear_operator(&u.comps[j]).scaled(-1.0);
            if let Some(n) = &n {
                l = l.add_scaled(-1.0, &n.comps[j]);
            }
            l
        };
        VectorField3 {
            comps: [comp(0), comp(1), comp(2)],
        }
    }

    pub fn step(&self, state: &SimState) -> std::result::Result<SimState, StepError> {
        let dt = self.cfg.dt;
        let next_index = state.step_index + 1;
        let rhs: VectorField3 = if self.cfg.nonlinear {
            let speed = state.u.max_speed();
            let limit = self.cfg.cfl_safety * self.grid.min_spacing() / speed.max(SPEED_FLOOR);
            if dt > limit {
                return Err(StepError::Cfl {
                    step_index: state.step_index,
                    dt,
                    limit,
                    speed,
                });
            }
            let n = nonlinearity(&state.u);
            VectorField3 {
                comps: [
                    state.u.comps[0].add_scaled(-dt, &n.comps[0]),
                    state.u.comps[1].add_scaled(-dt, &n.comps[1]),
                    state.u.comps[2].add_scaled(-dt, &n.comps[2]),
                ],
            }
        } else {
            state.u.clone()
        };
        let mut comps = Vec::with_capacity(3);
        for (j, r) in rhs.comps.iter().enumerate() {
            let x = self.implicit_solve(r).map_err(|failure| StepError::Solver {
                component: j,
                step_index: state.step_index,
                failure,
            })?;
            comps.push(x);
        }
        let [a, b, c]: [ScalarField; 3] = comps.try_into().expect("three components");
        let u = VectorField3 { comps: [a, b, c] };
        let time = state.time + dt;
        if !u.is_finite() {
            return Err(StepError::Blowup {
                step_index: next_index,
                time,
            });
        }
        Ok(SimState {
            u,
            time,
            step_index: next_index,
        })
    }
}

/// One-shot step; factors the implicit operator on every call.
pub fn step(state: &SimState, cfg: &IntegratorConfig) -> Result<std::result::Result<SimState, StepError>> {
    let integ = Integrator::new(state.u.grid(), cfg)?;
    Ok(integ.step(state))
}

/// What an observer sees after each step (and once for the initial state,
/// with `prev = None`).
pub struct StepView<'a> {
    pub state: &'a SimState,
    pub prev: Option<&'a SimState>,
    pub integrator: &'a Integrator,
}

pub trait Observer {
    fn observe(&mut self, view: StepView<'_>);
}

impl<F: FnMut(StepView<'_>)> Observer for F {
    fn observe(&mut self, view: StepView<'_>) {
        self(view)
    }
}

/// Steps from `state0` until `step_index` reaches `cfg.total_steps()`.
/// On a step error the last good state is returned with the error.
pub fn run<O: Observer>(
    integ: &Integrator,
    state0: SimState,
    observer: &mut O,
) -> (SimState, Option<StepError>) {
    let total = integ.cfg.total_steps();
    observer.observe(StepView {
        state: &state0,
        prev: None,
        integrator: integ,
    });
    let mut state = state0;
    while state.step_index < total {
        match integ.step(&state) {
            Ok(next) => {
                observer.observe(StepView {
                    state: &next,
                    prev: Some(&state),
                    integrator: integ,
                });
                state = next;
            }
            Err(e) => return (state, Some(e)),
        }
    }
    (state, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groove::GrooveSpec;
    use std::f64::consts::PI;

    #[test]
    fn config_invariants() {
        assert!(IntegratorConfig::new(1e-3, 1.0).validate().is_ok());
        let mut c = IntegratorConfig::new(4.0, -1.0);
        c.solver_tol = 1e-3;
        c.cfl_safety = 0.0;
        match c.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let g = Grid::groove(&GrooveSpec::new(2.0, 4.0, 4.0).unwrap(), [8, 8, 8]).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 0.1);
        let integ = Integrator::new(&g, &cfg).unwrap();
        let mut s = SimState::new(VectorField3::zeros(&g));
        for _ in 0..5 {
            s = integ.step(&s).unwrap();
        }
        assert_eq!(s.u.energy(), 0.0);
        assert_eq!(s.step_index, 5);
        assert!((s.time - 0.05).abs() < 1e-15);
    }

    #[test]
    fn linear_single_mode_decays_by_discrete_symbol() {
        let g = Grid::periodic_box([2.0 * PI, 2.0 * PI, 2.0 * PI], [16, 8, 8]).unwrap();
        let k = 1.0;
        let h = g.h[0];
        let mode = ScalarField::from_fn(&g, |x, _, _| (k * x).sin());
        let u = VectorField3::new(mode.clone(), mode.scaled(0.5), ScalarField::zeros(&g)).unwrap();
        let mut cfg = IntegratorConfig::new(0.05, 0.05);
        cfg.nonlinear = false;
        cfg.solver_tol = 1e-12;
        let next = step(&SimState::new(u.clone()), &cfg).unwrap().unwrap();
        let s2 = -(2.0 - 2.0 * (k * h).cos()) / (h * h);
        let factor = 1.0 / (1.0 + cfg.dt * (s2 * s2 + s2));
        let err = next.u.sub(&u.scaled(factor)).energy().sqrt() / (factor * u.energy().sqrt());
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn transport_limit_is_a_blowup_outcome() {
        let g = Grid::groove(&GrooveSpec::new(2.0, 4.0, 4.0).unwrap(), [8, 8, 8]).unwrap();
        let big = ScalarField::from_fn(&g, |_, _, _| 1e3);
        let u = VectorField3::new(big.clone(), big.clone(), big).unwrap();
        let integ = Integrator::new(&g, &IntegratorConfig::new(1e-2, 1.0)).unwrap();
        let e = integ.step(&SimState::new(u)).unwrap_err();
        assert!(e.is_blowup(), "{e}");
    }
}
