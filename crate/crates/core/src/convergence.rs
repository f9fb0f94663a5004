//! Refinement studies of the spatial operators and the time stepper.
//!
//! Manufactured fields are sums of separable products of finite
//! trigonometric series, so every derivative is exact.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::datum::InitialData;
use crate::error::Result;
use crate::field::{ScalarField, VectorField3};
use crate::grid::Grid;
use crate::groove::GrooveSpec;
use crate::integrator::{Integrator, IntegratorConfig, SimState};
use crate::ops::{bilaplacian, laplacian, nonlinearity};
use crate::solver::{implicit_solve, ModalSolver};

/// `Σₘ cₘ cos(mkx) + sₘ sin(mkx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trig {
    k: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Trig {
    pub fn constant(k: f64, c: f64) -> Self {
        Trig {
            k,
            cos: vec![c],
            sin: vec![0.0],
        }
    }

    pub fn cos_mode(k: f64, m: usize) -> Self {
        let mut t = Trig::constant(k, 0.0);
        t.set(m, 1.0, 0.0);
        t
    }

    pub fn sin_mode(k: f64, m: usize) -> Self {
        let mut t = Trig::constant(k, 0.0);
        t.set(m, 0.0, 1.0);
        t
    }

    /// `sinᵖ(kx)`.
    pub fn sin_pow(k: f64, p: u32) -> Self {
        (0..p).fold(Trig::constant(k, 1.0), |acc, _| acc.mul(&Trig::sin_mode(k, 1)))
    }

    fn set(&mut self, m: usize, c: f64, s: f64) {
        if self.cos.len() <= m {
            self.cos.resize(m + 1, 0.0);
            self.sin.resize(m + 1, 0.0);
        }
        self.cos[m] += c;
        self.sin[m] += s;
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(m, (c, s))| {
                let a = m as f64 * self.k * x;
                c * a.cos() + s * a.sin()
            })
            .sum()
    }

    pub fn deriv(&self) -> Self {
        let mut t = Trig::constant(self.k, 0.0);
        for (m, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = m as f64 * self.k;
            t.set(m, w * s, -w * c);
        }
        t
    }

    pub fn mul(&self, other: &Trig) -> Self {
        debug_assert_eq!(self.k, other.k);
        let mut t = Trig::constant(self.k, 0.0);
        for (m, (ca, sa)) in self.cos.iter().zip(&self.sin).enumerate() {
            for (n, (cb, sb)) in other.cos.iter().zip(&other.sin).enumerate() {
                let (sum, diff) = (m + n, m.abs_diff(n));
                // cos·cos, sin·sin, sin·cos product-to-sum rules
                t.set(sum, 0.5 * (ca * cb - sa * sb), 0.0);
                t.set(diff, 0.5 * (ca * cb + sa * sb), 0.0);
                t.set(sum, 0.0, 0.5 * (sa * cb + ca * sb));
                let sign = if m >= n { 1.0 } else { -1.0 };
                t.set(diff, 0.0, 0.5 * sign * (sa * cb - ca * sb));
            }
        }
        t
    }
}

/// `Σ Π_k f_k(x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Separable(pub Vec<[Trig; 3]>);

impl Separable {
    pub fn product(f: [Trig; 3]) -> Self {
        Separable(vec![f])
    }

    pub fn partial(&self, axis: usize) -> Self {
        Separable(
            self.0
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t[axis] = t[axis].deriv();
                    t
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &Separable) -> Self {
        Separable(self.0.iter().chain(&other.0).cloned().collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Separable(
            self.0
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t[0] = t[0].mul(&Trig::constant(t[0].k, s));
                    t
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Separable) -> Self {
        let mut terms = Vec::new();
        for a in &self.0 {
            for b in &other.0 {
                terms.push([a[0].mul(&b[0]), a[1].mul(&b[1]), a[2].mul(&b[2])]);
            }
        }
        Separable(terms)
    }

    pub fn laplacian(&self) -> Self {
        (0..3)
            .map(|k| self.partial(k).partial(k))
            .reduce(|a, b| a.add(&b))
            .expect("three axes")
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.0
            .iter()
            .map(|t| t[0].eval(x[0]) * t[1].eval(x[1]) * t[2].eval(x[2]))
            .sum()
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid, |a, b, c| self.eval([a, b, c]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub name: String,
    /// Cells across the bounded width (or steps per unit time) per level.
    pub resolutions: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub expected_order: f64,
    pub pass: bool,
}

impl ConvergenceStudy {
    fn new(name: &str, resolutions: Vec<f64>, errors: Vec<f64>, expected: f64, tol: f64) -> Self {
        let orders: Vec<f64> = errors
            .windows(2)
            .zip(resolutions.windows(2))
            .map(|(e, r)| (e[0] / e[1]).ln() / (r[1] / r[0]).ln())
            .collect();
        let pass = !orders.is_empty() && orders.iter().all(|o| (o - expected).abs() <= tol);
        ConvergenceStudy {
            name: name.into(),
            resolutions,
            errors,
            orders,
            expected_order: expected,
            pass,
        }
    }
}

pub const ORDER_TOL: f64 = 0.2;

/// Box `4 × 2 × 4` with `cos(πx₁/2)` along the periodic axis.
fn study_box() -> [f64; 3] {
    [4.0, 2.0, 4.0]
}

/// `cos(2πx₁/L₁)·sin⁴(πx₂/B)·sin⁴(πx₃/L₃)`, smooth across every wall.
pub fn manufactured_potential(extents: [f64; 3], x1_mode: usize) -> Separable {
    let [l1, b, l3] = extents;
    let a = if x1_mode == 0 {
        Trig::constant(2.0 * PI / l1, 1.0)
    } else {
        Trig::cos_mode(2.0 * PI / l1, x1_mode)
    };
    Separable::product([a, Trig::sin_pow(PI / b, 4), Trig::sin_pow(PI / l3, 4)])
}

fn rel_err(approx: &ScalarField, exact: &ScalarField) -> f64 {
    approx.sub(exact).norm_l2() / exact.norm_l2()
}

fn grid_at(extents: [f64; 3], base: [usize; 3], level: u32) -> Result<Grid> {
    let s = 1usize << level;
    Grid::new(
        extents,
        base.map(|n| n * s),
        [crate::grid::Bc::Periodic, crate::grid::Bc::Clamped, crate::grid::Bc::Clamped],
    )
}

/// Discrete `Δ`, `Δ²` and `N` against exact values of manufactured fields,
/// and the implicit solve against a manufactured solution, on `levels`
/// successive halvings of `h` starting from `base` cells.
pub fn spatial_studies(base: [usize; 3], levels: u32) -> Result<Vec<ConvergenceStudy>> {
    let ext = study_box();
    let phi = manufactured_potential(ext, 1);
    let lap = phi.laplacian();
    let bilap = lap.laplacian();
    let u: [Separable; 3] = [phi.partial(0), phi.partial(1), phi.partial(2)];
    let half_sq = u[0]
        .mul(&u[0])
        .add(&u[1].mul(&u[1]))
        .add(&u[2].mul(&u[2]))
        .scaled(0.5);
    let n_exact = half_sq.partial(1);

    // odd about the x₂ walls: exercises the clamped ghost closure
    let tau = 0.1;
    let target = manufactured_potential(ext, 0).partial(1);
    let t_lap = target.laplacian();
    let rhs = target.add(&t_lap.laplacian().add(&t_lap).scaled(tau));

    let mut e = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut res = Vec::new();
    for level in 0..levels {
        let g = grid_at(ext, base, level)?;
        res.push(g.n[1] as f64);
        let f = phi.sample(&g);
        e[0].push(rel_err(&laplacian(&f), &lap.sample(&g)));
        e[1].push(rel_err(&bilaplacian(&f), &bilap.sample(&g)));
        let uh = VectorField3::new(u[0].sample(&g), u[1].sample(&g), u[2].sample(&g))?;
        e[2].push(rel_err(&nonlinearity(&uh).comps[1], &n_exact.sample(&g)));

        let g1 = Grid::new(ext, [4, g.n[1], g.n[2]], g.bc)?;
        let modal = ModalSolver::new(&g1, tau);
        let (x, _) = implicit_solve(&rhs.sample(&g1), tau, 1e-11, 200, modal.as_ref())
            .map_err(|f| crate::error::Error::InvalidArgument(f.to_string()))?;
        e[3].push(rel_err(&x, &target.sample(&g1)));
    }
    let [a, b, c, d] = e;
    Ok(vec![
        ConvergenceStudy::new("laplacian", res.clone(), a, 2.0, ORDER_TOL),
        ConvergenceStudy::new("bilaplacian", res.clone(), b, 2.0, ORDER_TOL),
        ConvergenceStudy::new("nonlinearity", res.clone(), c, 2.0, ORDER_TOL),
        ConvergenceStudy::new("implicit-solve", res, d, 2.0, ORDER_TOL),
    ])
}

/// Nonlinear run to `t_end` with `dt₀/2ᵏ`, `k < levels`, against a
/// reference at `dt₀/2^{levels+3}`.
pub fn temporal_study(n: [usize; 3], dt0: f64, t_end: f64, levels: u32) -> Result<ConvergenceStudy> {
    let spec = GrooveSpec::new(2.0, 4.0, 4.0)?;
    let grid = Grid::groove(&spec, n)?;
    let datum = InitialData {
        amplitude: 0.05,
        ..InitialData::default()
    };
    let u0 = datum.build(&grid)?;
    let solve = |dt: f64| -> Result<VectorField3> {
        let mut cfg = IntegratorConfig::new(dt, t_end);
        cfg.solver_tol = 1e-12;
        let integ = Integrator::new(&grid, &cfg)?;
        let mut s = SimState::new(u0.clone());
        for _ in 0..cfg.total_steps() {
            s = integ
                .step(&s)
                .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
        }
        Ok(s.u)
    };
    let reference = solve(dt0 / (1u64 << (levels + 3)) as f64)?;
    let mut errors = Vec::new();
    let mut res = Vec::new();
    for k in 0..levels {
        let dt = dt0 / (1u64 << k) as f64;
        let u = solve(dt)?;
        errors.push((u.sub(&reference).energy() / reference.energy()).sqrt());
        res.push(1.0 / dt);
    }
    // the reference itself carries an O(dt_ref) error
    Ok(ConvergenceStudy::new("time-step", res, errors, 1.0, ORDER_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_algebra_matches_pointwise_evaluation() {
        let k = 0.7;
        let a = Trig::sin_pow(k, 3).mul(&Trig::cos_mode(k, 2));
        let d = a.deriv();
        for &x in &[0.1, 0.9, 2.3] {
            let s = (k * x).sin();
            let c2 = (2.0 * k * x).cos();
            assert!((a.eval(x) - s.powi(3) * c2).abs() < 1e-13);
            let exact = 3.0 * s * s * k * (k * x).cos() * c2 - s.powi(3) * 2.0 * k * (2.0 * k * x).sin();
            assert!((d.eval(x) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn sin4_expansion_matches_closed_form() {
        // sin⁴ = 3/8 − cos(2x)/2 + cos(4x)/8
        let t = Trig::sin_pow(1.0, 4);
        assert!((t.cos[0] - 0.375).abs() < 1e-15);
        assert!((t.cos[2] + 0.5).abs() < 1e-15);
        assert!((t.cos[4] - 0.125).abs() < 1e-15);
        assert!(t.sin.iter().all(|s| s.abs() < 1e-15));
    }

    #[test]
    fn spatial_orders_on_small_grids() {
        for s in spatial_studies([8, 12, 12], 3).unwrap() {
            assert!(s.pass, "{s:?}");
        }
    }
}
