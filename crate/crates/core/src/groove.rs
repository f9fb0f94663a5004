//! Groove geometry and the closed-form stability constants.
//!
//! A groove is bounded in one direction (width `B`) and unbounded in the
//! other two. Computation always happens in the canonical orientation:
//! axis 1 is the full line (truncated to a periodic cell), axis 2 carries
//! the width and axis 3 is the half line (truncated with a clamped far end).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which physical axis carries the bounded width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Orientation {
    /// `x1 ∈ (0, L)`, `x2 ∈ ℝ`, `x3 ∈ ℝ⁺`.
    #[serde(rename = "x1")]
    BoundedX1,
    /// `x1 ∈ ℝ`, `x2 ∈ (0, B)`, `x3 ∈ ℝ⁺` (canonical).
    #[default]
    #[serde(rename = "x2")]
    BoundedX2,
    /// `x1 ∈ ℝ`, `x2 ∈ ℝ⁺`, `x3 ∈ (0, L)`.
    #[serde(rename = "x3")]
    BoundedX3,
}

impl Orientation {
    /// `perm[k]` is the physical axis playing canonical role `k`
    /// (0 = full line, 1 = bounded width, 2 = half line).
    ///
    /// Every permutation here is a transposition or the identity, so
    /// applying it twice is the identity.
    pub fn permutation(self) -> [usize; 3] {
        match self {
            Orientation::BoundedX1 => [1, 0, 2],
            Orientation::BoundedX2 => [0, 1, 2],
            Orientation::BoundedX3 => [0, 2, 1],
        }
    }

    /// Reorders a physical triple into canonical order (or back; the
    /// permutation is its own inverse).
    pub fn relabel<T: Copy>(self, v: [T; 3]) -> [T; 3] {
        let p = self.permutation();
        [v[p[0]], v[p[1]], v[p[2]]]
    }

    pub fn label(self) -> &'static str {
        match self {
            Orientation::BoundedX1 => "x1",
            Orientation::BoundedX2 => "x2",
            Orientation::BoundedX3 => "x3",
        }
    }
}

/// Continuous groove parameters, stored in canonical orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrooveSpec {
    /// Width `B` of the bounded direction.
    pub width: f64,
    /// Periodic cell length replacing the full line.
    pub trunc_x1: f64,
    /// Computational extent replacing the half line.
    pub trunc_x3: f64,
    #[serde(default)]
    pub orientation: Orientation,
}

impl GrooveSpec {
    pub fn new(width: f64, trunc_x1: f64, trunc_x3: f64) -> Result<Self> {
        let spec = GrooveSpec {
            width,
            trunc_x1,
            trunc_x3,
            orientation: Orientation::BoundedX2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("width", self.width),
            ("trunc_x1", self.trunc_x1),
            ("trunc_x3", self.trunc_x3),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bad.push(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(bad.join("; ")))
        }
    }

    /// `B < π`, strictly.
    pub fn admissible(&self) -> bool {
        self.width > 0.0 && self.width < PI
    }

    /// Canonical extents `[L1, B, L3]`.
    pub fn extents(&self) -> [f64; 3] {
        [self.trunc_x1, self.width, self.trunc_x3]
    }

    /// Extents along the physical axes `x1, x2, x3`.
    pub fn physical_extents(&self) -> [f64; 3] {
        self.orientation.relabel(self.extents())
    }

    /// Builds a spec from physical extents; the orientation decides which
    /// axis is the width and which are the truncated unbounded directions.
    pub fn from_physical_extents(extents: [f64; 3], orientation: Orientation) -> Result<Self> {
        let [l1, b, l3] = orientation.relabel(extents);
        let spec = GrooveSpec {
            width: b,
            trunc_x1: l1,
            trunc_x3: l3,
            orientation,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `a = π²/B²`, the groove Poincaré constant.
pub fn steklov_constant(spec: &GrooveSpec) -> Result<f64> {
    if !(spec.width.is_finite() && spec.width > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "width must be positive, got {}",
            spec.width
        )));
    }
    Ok(PI * PI / (spec.width * spec.width))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrooveConstants {
    /// `π²/B²`.
    pub a: f64,
    /// `1 − 1/a`.
    pub theta: f64,
    /// `a²θ/2`, the guaranteed exponential decay rate of `Σ‖u_j‖²`.
    pub decay_rate: f64,
}

impl GrooveConstants {
    /// Evaluates the formulas without the admissibility check. For
    /// `B ≥ π` the result has `theta ≤ 0` and carries no guarantee; it is
    /// only used for labeling inadmissible runs.
    pub fn raw(spec: &GrooveSpec) -> Result<Self> {
        let a = steklov_constant(spec)?;
        let theta = 1.0 - 1.0 / a;
        Ok(GrooveConstants {
            a,
            theta,
            decay_rate: a * a * theta / 2.0,
        })
    }

    pub fn is_admissible(&self) -> bool {
        self.theta > 0.0
    }

    /// Energy at which the 48-coefficient margin vanishes: `θ²a^{3/2}/48`.
    pub fn smallness_threshold(&self) -> f64 {
        self.theta * self.theta * self.a.powf(1.5) / 48.0
    }
}

/// Groove constants; errors unless `B < π`.
pub fn constants(spec: &GrooveSpec) -> Result<GrooveConstants> {
    spec.validate()?;
    if !spec.admissible() {
        return Err(Error::InadmissibleDomain(format!(
            "width B = {} violates B < π (θ = 1 − B²/π² must be positive)",
            spec.width
        )));
    }
    GrooveConstants::raw(spec)
}

fn check_energy(energy: f64) -> Result<()> {
    if energy.is_nan() || energy < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "energy must be nonnegative, got {energy}"
        )));
    }
    Ok(())
}

/// `θ − 48/(θ a^{3/2}) · E₀`; positive means the smallness hypothesis holds.
pub fn smallness_margin(c: &GrooveConstants, energy0: f64) -> Result<f64> {
    check_energy(energy0)?;
    Ok(c.theta - 48.0 / (c.theta * c.a.powf(1.5)) * energy0)
}

/// `θ − 24/(θ a^{3/2}) · E`, the bracket that must stay positive along the
/// flow for the first energy estimate.
pub fn estimate1_margin(c: &GrooveConstants, energy: f64) -> Result<f64> {
    check_energy(energy)?;
    Ok(c.theta - 24.0 / (c.theta * c.a.powf(1.5)) * energy)
}
