//! Quadrature checks of the functional inequalities on seeded families of
//! test functions, with sharpness probes.
//!
//! All gradients are edge differences ([`norm_grad_edge`]), so that
//! `‖∇f‖² = −(f, Δ_h f)` holds exactly and the discrete Cauchy–Schwarz
//! chain `‖∇f‖⁴ ≤ ‖Δf‖²‖f‖²` is an identity of the scheme, not an
//! approximation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{pairwise_map_sum, ScalarField};
use crate::grid::{Bc, Grid};
use crate::groove::{steklov_constant, GrooveSpec};
use crate::ops::{laplacian, norm_grad_edge};

pub const DEFAULT_QUAD_TOL: f64 = 1e-3;

/// The constant of the three-dimensional `L⁴` interpolation inequality.
pub const L4_CONSTANT: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    SeparableSineBump,
    RandomFourierBump,
    WallConcentrated,
}

impl Family {
    pub const ALL: [Family; 3] = [
        Family::SeparableSineBump,
        Family::RandomFourierBump,
        Family::WallConcentrated,
    ];

    pub fn for_seed(seed: u64) -> Family {
        Family::ALL[(seed % 3) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub family: Family,
    pub seed: u64,
    pub amplitude: f64,
    pub grid: Grid,
}

fn sin2(x: f64) -> f64 {
    let s = x.sin();
    s * s
}

/// `sin²(π(x − c)/w)` on `[c, c + w]`, zero elsewhere.
fn window(x: f64, c: f64, w: f64) -> f64 {
    if x <= c || x >= c + w {
        0.0
    } else {
        sin2(PI * (x - c) / w)
    }
}

fn random_window(rng: &mut ChaCha8Rng, length: f64) -> (f64, f64) {
    let w = rng.gen_range(0.3..1.0) * length;
    let c = rng.gen_range(0.0..(length - w).max(f64::MIN_POSITIVE));
    (c, w)
}

/// Deterministic in the seed. Every family is a product of `sin²` wall
/// factors with compact windows in the unbounded directions, so values
/// and normal derivatives vanish on the clamped walls.
pub fn sample_test_function(spec: &TestFunctionSpec) -> ScalarField {
    let grid = &spec.grid;
    let [l1, b, l3] = grid.extents();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (c1, w1) = random_window(&mut rng, l1);
    let (c3, w3) = random_window(&mut rng, l3);
    let amp = spec.amplitude;
    match spec.family {
        Family::SeparableSineBump => {
            let m2 = rng.gen_range(1..=3) as f64;
            ScalarField::from_fn(grid, move |x1, x2, x3| {
                amp * window(x1, c1, w1) * sin2(m2 * PI * x2 / b) * window(x3, c3, w3)
            })
        }
        Family::RandomFourierBump => {
            let terms: Vec<([f64; 3], f64, f64)> = (0..6)
                .map(|_| {
                    (
                        [
                            rng.gen_range(0..4) as f64,
                            rng.gen_range(0..4) as f64,
                            rng.gen_range(0..4) as f64,
                        ],
                        rng.gen_range(0.0..2.0 * PI),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            ScalarField::from_fn(grid, move |x1, x2, x3| {
                let wall = window(x1, c1, w1) * sin2(PI * x2 / b) * window(x3, c3, w3);
                if wall == 0.0 {
                    return 0.0;
                }
                let s: f64 = terms
                    .iter()
                    .map(|&(k, ph, c)| {
                        c * (2.0 * PI * (k[0] * x1 / w1 + k[2] * x3 / w3) + PI * k[1] * x2 / b + ph)
                            .cos()
                    })
                    .sum();
                amp * wall * s
            })
        }
        Family::WallConcentrated => {
            let depth = rng.gen_range(0.05..0.3) * b;
            let far_wall = rng.gen_bool(0.5);
            ScalarField::from_fn(grid, move |x1, x2, x3| {
                let d = if far_wall { b - x2 } else { x2 };
                amp * window(x1, c1, w1) * sin2(PI * x2 / b) * (-d / depth).exp() * window(x3, c3, w3)
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteklovReport {
    /// `‖v_x‖²L²/(π²‖v‖²)`.
    pub ratio: f64,
    pub pass: bool,
}

/// `v` holds the interior values of a profile on `n + 1` equal intervals
/// of `(0, length)`; the end values are zero.
pub fn check_steklov(v: &[f64], length: f64, quad_tol: f64) -> Result<SteklovReport> {
    if v.is_empty() || !(length > 0.0) {
        return Err(Error::InvalidArgument(
            "profile needs interior nodes and a positive length".into(),
        ));
    }
    let h = length / (v.len() + 1) as f64;
    let norm = h * pairwise_map_sum(v.len(), &|i| v[i] * v[i]);
    if norm == 0.0 {
        return Err(Error::UndefinedRatio("zero profile".into()));
    }
    let at = |i: usize| if i == 0 || i > v.len() { 0.0 } else { v[i - 1] };
    let grad = pairwise_map_sum(v.len() + 1, &|e| {
        let d = at(e + 1) - at(e);
        d * d
    }) / h;
    let ratio = grad * length * length / (PI * PI * norm);
    Ok(SteklovReport {
        ratio,
        pass: ratio >= 1.0 - quad_tol,
    })
}

/// Seeded end-vanishing profile: a random polynomial times `x(L − x)` for
/// even seeds, a random sine series for odd ones.
pub fn steklov_profile(seed: u64, n: usize, length: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5354_454b);
    let h = length / (n + 1) as f64;
    let xs = (1..=n).map(|i| i as f64 * h);
    if seed.is_multiple_of(2) {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        xs.map(|x| {
            let s = x / length;
            x * (length - x) * c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
        })
        .collect()
    } else {
        let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        xs.map(|x| {
            c.iter()
                .enumerate()
                .map(|(k, &ck)| ck * ((k + 1) as f64 * PI * x / length).sin())
                .sum()
        })
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L4Report {
    /// `√2‖v‖^{1/4}‖∇v‖^{3/4} / ‖v‖_{L⁴}`.
    pub ratio: f64,
    /// `‖v‖_{L⁴} / (‖v‖^{1/4}‖∇v‖^{3/4})`, the constant this `v` needs.
    pub empirical_constant: f64,
    pub pass: bool,
}

pub fn check_l4(v: &ScalarField, quad_tol: f64) -> Result<L4Report> {
    let lhs = v.norm_l4();
    if lhs == 0.0 {
        return Err(Error::UndefinedRatio("zero function".into()));
    }
    let rhs_core = v.norm_l2().powf(0.25) * norm_grad_edge(v).powf(0.75);
    let empirical_constant = lhs / rhs_core;
    let ratio = L4_CONSTANT / empirical_constant;
    Ok(L4Report {
        ratio,
        empirical_constant,
        pass: ratio >= 1.0 - quad_tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroovePoincareReport {
    /// `‖∇f‖²/(a‖f‖²)`, `‖Δf‖²/(a²‖f‖²)`, `‖Δf‖²/(a‖∇f‖²)`.
    pub ratios: [f64; 3],
    /// `‖Δf‖²‖f‖²/‖∇f‖⁴`, at least 1 by Cauchy–Schwarz.
    pub cauchy_schwarz: f64,
    pub pass: bool,
}

pub fn check_groove_poincare(
    f: &ScalarField,
    spec: &GrooveSpec,
    quad_tol: f64,
) -> Result<GroovePoincareReport> {
    let grid = f.grid();
    if grid.bc[1] != Bc::Clamped || (grid.extents()[1] - spec.width).abs() > 1e-12 * spec.width {
        return Err(Error::InvalidArgument(
            "axis 2 of the grid must be the clamped groove width".into(),
        ));
    }
    let a = steklov_constant(spec)?;
    let n0 = f.norm_l2_sq();
    if n0 == 0.0 {
        return Err(Error::UndefinedRatio("zero function".into()));
    }
    let n1 = norm_grad_edge(f).powi(2);
    let n2 = laplacian(f).norm_l2_sq();
    let ratios = [n1 / (a * n0), n2 / (a * a * n0), n2 / (a * n1)];
    Ok(GroovePoincareReport {
        ratios,
        cauchy_schwarz: n2 * n0 / (n1 * n1),
        pass: ratios.iter().all(|&r| r >= 1.0 - quad_tol),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabCheck {
    Steklov,
    L4,
    GroovePoincare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub groove: GrooveSpec,
    pub n: [usize; 3],
    pub steklov_nodes: usize,
    pub quad_tol: f64,
    pub amplitude: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            groove: GrooveSpec::new(2.0, 4.0, 4.0).expect("valid default groove"),
            n: [24, 48, 24],
            steklov_nodes: 255,
            quad_tol: DEFAULT_QUAD_TOL,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabEntry {
    pub check: LabCheck,
    pub seed: u64,
    pub family: Option<Family>,
    pub ratios: Vec<f64>,
    pub pass: bool,
    /// Whether a failed first evaluation was repeated at doubled resolution.
    pub retried: bool,
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub check: LabCheck,
    pub total: usize,
    pub passed: usize,
    pub retried: usize,
    pub pass_fraction: f64,
    pub min_ratios: Vec<f64>,
    /// For the `L⁴` check: the largest constant any test function needed.
    pub max_empirical_constant: Option<f64>,
    pub entries: Vec<LabEntry>,
}

fn evaluate(check: LabCheck, seed: u64, cfg: &LabConfig, refine: u32) -> Result<(Option<Family>, Vec<f64>, bool)> {
    let scale = 1usize << refine;
    match check {
        LabCheck::Steklov => {
            let n = (cfg.steklov_nodes + 1) * scale - 1;
            let v = steklov_profile(seed, n, cfg.groove.width);
            let r = check_steklov(&v, cfg.groove.width, cfg.quad_tol)?;
            Ok((None, vec![r.ratio], r.pass))
        }
        LabCheck::L4 | LabCheck::GroovePoincare => {
            let grid = Grid::groove(&cfg.groove, cfg.n.map(|k| k * scale))?;
            let family = Family::for_seed(seed);
            let f = sample_test_function(&TestFunctionSpec {
                family,
                seed,
                amplitude: cfg.amplitude,
                grid,
            });
            if check == LabCheck::L4 {
                let r = check_l4(&f, cfg.quad_tol)?;
                Ok((Some(family), vec![r.ratio, r.empirical_constant], r.pass))
            } else {
                let r = check_groove_poincare(&f, &cfg.groove, cfg.quad_tol)?;
                let mut ratios = r.ratios.to_vec();
                ratios.push(r.cauchy_schwarz);
                let pass = r.pass && r.cauchy_schwarz >= 1.0 - cfg.quad_tol;
                Ok((Some(family), ratios, pass))
            }
        }
    }
}

fn entry(check: LabCheck, seed: u64, cfg: &LabConfig) -> Result<LabEntry> {
    let undefined = |family| LabEntry {
        check,
        seed,
        family,
        ratios: Vec::new(),
        pass: false,
        retried: false,
        undefined: true,
    };
    let (family, ratios, pass) = match evaluate(check, seed, cfg, 0) {
        Ok(r) => r,
        Err(Error::UndefinedRatio(_)) => return Ok(undefined(None)),
        Err(e) => return Err(e),
    };
    if pass {
        return Ok(LabEntry {
            check,
            seed,
            family,
            ratios,
            pass,
            retried: false,
            undefined: false,
        });
    }
    let (family, ratios, pass) = evaluate(check, seed, cfg, 1)?;
    Ok(LabEntry {
        check,
        seed,
        family,
        ratios,
        pass,
        retried: true,
        undefined: false,
    })
}

/// Evaluates `check` on seeds `0..seeds`, in parallel, retrying every
/// failure once at doubled resolution. Zero functions are reported as
/// undefined and counted neither as passes nor as failures.
pub fn run_batch(check: LabCheck, seeds: u64, cfg: &LabConfig) -> Result<BatchReport> {
    let entries: Vec<LabEntry> = (0..seeds)
        .into_par_iter()
        .map(|s| entry(check, s, cfg))
        .collect::<Result<_>>()?;
    let defined: Vec<&LabEntry> = entries.iter().filter(|e| !e.undefined).collect();
    let passed = defined.iter().filter(|e| e.pass).count();
    let width = defined.first().map_or(0, |e| e.ratios.len());
    let min_ratios = (0..width)
        .map(|k| defined.iter().map(|e| e.ratios[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let max_empirical_constant = (check == LabCheck::L4).then(|| {
        defined
            .iter()
            .map(|e| e.ratios[1])
            .fold(0.0, f64::max)
    });
    Ok(BatchReport {
        check,
        total: defined.len(),
        passed,
        retried: entries.iter().filter(|e| e.retried).count(),
        pass_fraction: if defined.is_empty() {
            0.0
        } else {
            passed as f64 / defined.len() as f64
        },
        min_ratios,
        max_empirical_constant,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessPoint {
    pub envelope: f64,
    pub ratios: [f64; 3],
    /// Closed-form continuum value of the first ratio.
    pub exact_ratio1: f64,
}

/// `sin(πx₂/B)·sin²(πx₁/ℓ)·sin²(πx₃/ℓ)` on grooves of length `ℓ` in both
/// unbounded directions, for each `ℓ` in `envelopes`. The first ratio
/// equals `1 + (8/3)(π/ℓ)²/a` in the continuum and tends to 1 from above.
pub fn sharpness_probe(width: f64, envelopes: &[f64], cells_per_envelope: usize, cells_across: usize) -> Result<Vec<SharpnessPoint>> {
    envelopes
        .iter()
        .map(|&l| {
            let spec = GrooveSpec::new(width, l, l)?;
            let grid = Grid::groove(&spec, [cells_per_envelope, cells_across, cells_per_envelope])?;
            let f = ScalarField::from_fn(&grid, |x1, x2, x3| {
                (PI * x2 / width).sin() * sin2(PI * x1 / l) * sin2(PI * x3 / l)
            });
            let r = check_groove_poincare(&f, &spec, DEFAULT_QUAD_TOL)?;
            let a = steklov_constant(&spec)?;
            Ok(SharpnessPoint {
                envelope: l,
                ratios: r.ratios,
                exact_ratio1: 1.0 + 8.0 / 3.0 * (PI / l).powi(2) / a,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lab_grid() -> (GrooveSpec, Grid) {
        let spec = GrooveSpec::new(2.0, 4.0, 4.0).unwrap();
        (spec, Grid::groove(&spec, [24, 48, 24]).unwrap())
    }

    #[test]
    fn steklov_sharp_and_second_mode() {
        let n = 999;
        let l = 3.0;
        let h = l / (n + 1) as f64;
        let s1: Vec<f64> = (1..=n).map(|i| (PI * i as f64 * h / l).sin()).collect();
        let s2: Vec<f64> = (1..=n).map(|i| (2.0 * PI * i as f64 * h / l).sin()).collect();
        let r1 = check_steklov(&s1, l, DEFAULT_QUAD_TOL).unwrap();
        let r2 = check_steklov(&s2, l, DEFAULT_QUAD_TOL).unwrap();
        assert!((r1.ratio - 1.0).abs() < 1e-5 && r1.pass);
        assert!((r2.ratio - 4.0).abs() < 1e-4);
    }

    #[test]
    fn steklov_parabola_matches_closed_form() {
        // v = x(L − x): ‖v'‖²L²/(π²‖v‖²) = (L³/3)L²/(π² L⁵/30) = 10/π²
        let n = 1999;
        let l = 2.0;
        let h = l / (n + 1) as f64;
        let v: Vec<f64> = (1..=n).map(|i| {
            let x = i as f64 * h;
            x * (l - x)
        }).collect();
        let r = check_steklov(&v, l, DEFAULT_QUAD_TOL).unwrap();
        assert!((r.ratio - 10.0 / (PI * PI)).abs() < 1e-6, "{}", r.ratio);
    }

    #[test]
    fn steklov_zero_profile_is_undefined() {
        assert!(matches!(
            check_steklov(&[0.0; 10], 1.0, 1e-3),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn random_profiles_satisfy_steklov() {
        for seed in 0..50 {
            let v = steklov_profile(seed, 255, 2.0);
            assert!(check_steklov(&v, 2.0, DEFAULT_QUAD_TOL).unwrap().pass, "seed {seed}");
        }
    }

    #[test]
    fn amplitude_zero_gives_zero_field() {
        let (_, grid) = lab_grid();
        for family in Family::ALL {
            let f = sample_test_function(&TestFunctionSpec { family, seed: 3, amplitude: 0.0, grid });
            assert_eq!(f.max_abs(), 0.0);
        }
    }

    #[test]
    fn same_seed_same_field() {
        let (_, grid) = lab_grid();
        let s = TestFunctionSpec { family: Family::RandomFourierBump, seed: 11, amplitude: 1.0, grid };
        assert_eq!(sample_test_function(&s), sample_test_function(&s));
    }

    #[test]
    fn test_functions_vanish_to_second_order_at_walls() {
        // the first interior value next to a wall is O(h²) relative to the peak
        let (_, grid) = lab_grid();
        let fine = grid.refined();
        for family in Family::ALL {
            for seed in 0..5 {
                let edge = |g: &Grid| {
                    let f = sample_test_function(&TestFunctionSpec { family, seed, amplitude: 1.0, grid: *g });
                    let d = g.dims();
                    let v = f.values();
                    let mut m = 0.0f64;
                    for i1 in 0..d[0] {
                        for i3 in 0..d[2] {
                            m = m.max(v[g.index(i1, 0, i3)].abs());
                            m = m.max(v[g.index(i1, d[1] - 1, i3)].abs());
                        }
                    }
                    m / f.max_abs()
                };
                let (c, f) = (edge(&grid), edge(&fine));
                assert!(c < 0.1, "{family:?} {seed} {c}");
                assert!(f < c / 3.0, "{family:?} {seed} {c} {f}");
            }
        }
    }

    #[test]
    fn separable_first_ratio_matches_closed_form() {
        // f = sin(πx₂/B)·sin²(πx₁/L₁)·sin²(πx₃/L₃): ratio₁ = 1 + (4/3)(π²/L₁² + π²/L₃²)/a
        let spec = GrooveSpec::new(2.0, 6.0, 5.0).unwrap();
        let grid = Grid::groove(&spec, [96, 128, 96]).unwrap();
        let f = ScalarField::from_fn(&grid, |x1, x2, x3| {
            (PI * x2 / 2.0).sin() * sin2(PI * x1 / 6.0) * sin2(PI * x3 / 5.0)
        });
        let r = check_groove_poincare(&f, &spec, DEFAULT_QUAD_TOL).unwrap();
        let a = PI * PI / 4.0;
        let exact = 1.0 + 4.0 / 3.0 * (PI * PI / 36.0 + PI * PI / 25.0) / a;
        assert!((r.ratios[0] - exact).abs() < 2e-3, "{} {exact}", r.ratios[0]);
        assert!(r.pass);
    }

    #[test]
    fn zero_function_is_undefined() {
        let (spec, grid) = lab_grid();
        let z = ScalarField::zeros(&grid);
        assert!(matches!(check_groove_poincare(&z, &spec, 1e-3), Err(Error::UndefinedRatio(_))));
        assert!(matches!(check_l4(&z, 1e-3), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn cauchy_schwarz_chain_holds() {
        let (spec, grid) = lab_grid();
        for seed in 0..30 {
            let f = sample_test_function(&TestFunctionSpec { family: Family::for_seed(seed), seed, amplitude: 1.0, grid });
            let r = check_groove_poincare(&f, &spec, DEFAULT_QUAD_TOL).unwrap();
            assert!(r.cauchy_schwarz >= 1.0 - 1e-12, "{seed}");
            assert!(r.pass, "{seed} {:?}", r.ratios);
        }
    }

    #[test]
    fn l4_default_bump_passes_and_is_scale_invariant() {
        let (_, grid) = lab_grid();
        let s = TestFunctionSpec { family: Family::SeparableSineBump, seed: 0, amplitude: 1.0, grid };
        let f = sample_test_function(&s);
        let r = check_l4(&f, DEFAULT_QUAD_TOL).unwrap();
        assert!(r.ratio > 1.0 && r.pass);
        let r3 = check_l4(&f.scaled(-3.5), DEFAULT_QUAD_TOL).unwrap();
        assert!((r3.ratio - r.ratio).abs() < 1e-12 * r.ratio);
    }

    #[test]
    fn l4_ratio_is_dilation_invariant() {
        // radial bump of radius R in a clamped cube; both sides scale as s^{3/4}
        let grid = Grid::new([8.0; 3], [96; 3], [Bc::Clamped; 3]).unwrap();
        let ratios: Vec<f64> = [0.5f64, 1.0, 2.0]
            .iter()
            .map(|&s| {
                let f = ScalarField::from_fn(&grid, |x1, x2, x3| {
                    let r2 = ((x1 - 4.0).powi(2) + (x2 - 4.0).powi(2) + (x3 - 4.0).powi(2)) / (1.5 * s).powi(2);
                    if r2 < 1.0 { (1.0 - r2).powi(3) } else { 0.0 }
                });
                check_l4(&f, DEFAULT_QUAD_TOL).unwrap().ratio
            })
            .collect();
        assert!((ratios[0] - ratios[1]).abs() < 1e-2 * ratios[1], "{ratios:?}");
        assert!((ratios[2] - ratios[1]).abs() < 1e-2 * ratios[1], "{ratios:?}");
    }

    #[test]
    fn sharpness_probe_tends_to_one_from_above() {
        let pts = sharpness_probe(2.0, &[8.0, 16.0, 32.0, 64.0], 32, 48).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].ratios[0] < w[0].ratios[0]);
        }
        let last = pts.last().unwrap();
        assert!(last.ratios[0] >= 1.0 && last.ratios[0] <= 1.05, "{:?}", last);
        for p in &pts {
            assert!((p.ratios[0] - p.exact_ratio1).abs() < 2e-3, "{p:?}");
        }
    }

    #[test]
    fn small_batch_passes() {
        let cfg = LabConfig::default();
        for check in [LabCheck::Steklov, LabCheck::L4, LabCheck::GroovePoincare] {
            let r = run_batch(check, 12, &cfg).unwrap();
            assert_eq!(r.total, 12);
            assert_eq!(r.passed, 12, "{check:?} {:?}", r.min_ratios);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn ratios_are_amplitude_invariant(seed in 0u64..1000, amp in 0.01f64..100.0) {
            let (spec, grid) = lab_grid();
            let family = Family::for_seed(seed);
            let f1 = sample_test_function(&TestFunctionSpec { family, seed, amplitude: 1.0, grid });
            let fa = sample_test_function(&TestFunctionSpec { family, seed, amplitude: amp, grid });
            let r1 = check_groove_poincare(&f1, &spec, 1e-3).unwrap();
            let ra = check_groove_poincare(&fa, &spec, 1e-3).unwrap();
            for k in 0..3 {
                prop_assert!((r1.ratios[k] - ra.ratios[k]).abs() < 1e-10 * r1.ratios[k]);
            }
        }
    }
}
