//! Initial potentials `φ₀` for the system's initial data `u₀ = ∇φ₀`.
//!
//! Wall factors are fourth powers of sines: `u₀` must vanish together with
//! its normal derivative on every clamped wall, which needs `φ₀`, `∂_nφ₀`
//! and `∂²_nφ₀` to vanish there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField3};
use crate::grid::Grid;
use crate::ops::{init_from_potential, SUPPORT_MARGIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DatumFamily {
    /// `ε sin(2πm₁x₁/L₁) · sin⁴(m₂πx₂/B) · sin⁴(m₃πx₃/(sL₃))`, the last
    /// factor cut off at `x₃ = sL₃`.
    #[default]
    SineBump,
    /// Seeded random trigonometric polynomial times the same wall factors.
    RandomBump,
}

fn default_amplitude() -> f64 {
    1e-2
}
fn default_modes() -> [u32; 3] {
    [1, 1, 1]
}
fn default_support() -> f64 {
    0.8
}
fn default_perturbation_mode() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub family: DatumFamily,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_modes")]
    pub modes: [u32; 3],
    #[serde(default)]
    pub seed: u64,
    /// Fraction `s` of `L₃` occupied by the support in `x₃`.
    #[serde(default = "default_support")]
    pub support_fraction: f64,
    /// Amplitude `δ` of an additive perturbation of the potential.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default = "default_perturbation_mode")]
    pub perturbation_mode: u32,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            family: DatumFamily::SineBump,
            amplitude: default_amplitude(),
            modes: default_modes(),
            seed: 0,
            support_fraction: default_support(),
            perturbation: 0.0,
            perturbation_mode: default_perturbation_mode(),
        }
    }
}

fn sin4(x: f64) -> f64 {
    let s = x.sin();
    let s2 = s * s;
    s2 * s2
}

impl InitialData {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !self.amplitude.is_finite() {
            v.push("initial.amplitude must be finite".into());
        }
        if !self.perturbation.is_finite() {
            v.push("initial.perturbation must be finite".into());
        }
        if self.modes.contains(&0) {
            v.push("initial.modes must be positive".into());
        }
        let smax = 1.0 - SUPPORT_MARGIN;
        if !(self.support_fraction > 0.0 && self.support_fraction <= smax) {
            v.push(format!(
                "initial.support_fraction must lie in (0, {smax}], got {}",
                self.support_fraction
            ));
        }
        v
    }

    /// Continuous potential as a closure over canonical coordinates.
    fn potential_fn(&self, extents: [f64; 3]) -> impl Fn(f64, f64, f64) -> f64 {
        let [l1, b, l3] = extents;
        let sl3 = self.support_fraction * l3;
        let [m1, m2, m3] = self.modes.map(|m| m as f64);
        let eps = self.amplitude;
        let delta = self.perturbation;
        let pm = self.perturbation_mode as f64;
        let family = self.family;
        let coeffs: Vec<(f64, f64, f64)> = {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            (0..4)
                .map(|_| {
                    (
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..2.0 * PI),
                        rng.gen_range(0.0..1.0),
                    )
                })
                .collect()
        };
        move |x1, x2, x3| {
            if x3 >= sl3 {
                return 0.0;
            }
            let wall = sin4(m2 * PI * x2 / b) * sin4(m3 * PI * x3 / sl3);
            let shape = match family {
                DatumFamily::SineBump => (2.0 * PI * m1 * x1 / l1).sin(),
                DatumFamily::RandomBump => coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, &(c, ph, tilt))| {
                        c * (2.0 * PI * k as f64 * x1 / l1 + ph).cos()
                            * (1.0 + tilt * (PI * x2 / b).sin() * (PI * x3 / sl3).cos())
                    })
                    .sum::<f64>(),
            };
            let base = sin4(PI * x2 / b) * sin4(PI * x3 / sl3);
            eps * wall * shape + delta * base * (2.0 * PI * pm * x1 / l1 + 0.3).cos()
        }
    }

    pub fn potential(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid, self.potential_fn(grid.extents()))
    }

    pub fn build(&self, grid: &Grid) -> Result<VectorField3> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::InvalidInitialData(v.join("; ")));
        }
        init_from_potential(&self.potential(grid))
    }

    /// `‖∇φ₀‖²` of the sine-bump datum (no perturbation), in closed form.
    pub fn sine_bump_energy(&self, extents: [f64; 3]) -> f64 {
        let [l1, b, l3] = extents;
        let sl3 = self.support_fraction * l3;
        let [m1, m2, m3] = self.modes.map(|m| m as f64);
        // ∫₀ᴸ sin⁸(mπx/L) = 35L/128 and ∫₀ᴸ (d/dx sin⁴(mπx/L))² = (5/8)(mπ/L)²L
        let i8 = |l: f64| 35.0 * l / 128.0;
        let d8 = |m: f64, l: f64| 0.625 * (m * PI / l).powi(2) * l;
        let k1 = 2.0 * PI * m1 / l1;
        self.amplitude.powi(2)
            * (l1 / 2.0)
            * (k1 * k1 * i8(b) * i8(sl3) + d8(m2, b) * i8(sl3) + i8(b) * d8(m3, sl3))
    }
}
