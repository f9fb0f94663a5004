//! Tensor-product grids.
//!
//! A periodic axis with `n` cells stores the nodes `x = i·h`, `i = 0..n`.
//! A clamped axis with `n` cells has wall nodes at `0` and `n·h` where the
//! field and its normal derivative vanish; only the `n − 1` interior nodes
//! `x = (i + 1)·h` are stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groove::GrooveSpec;

/// Boundary flavor of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Periodic,
    /// Value and normal derivative vanish at both ends.
    Clamped,
}

/// Smallest admissible cell count on a clamped axis.
pub const MIN_CLAMPED_CELLS: usize = 8;
/// Smallest cell count on a periodic axis (the 5-wide stencil must not
/// alias onto itself).
pub const MIN_PERIODIC_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: [usize; 3],
    pub h: [f64; 3],
    pub bc: [Bc; 3],
}

impl Grid {
    pub fn new(extents: [f64; 3], n: [usize; 3], bc: [Bc; 3]) -> Result<Self> {
        let mut bad = Vec::new();
        for k in 0..3 {
            if !(extents[k].is_finite() && extents[k] > 0.0) {
                bad.push(format!("axis {} extent must be positive", k + 1));
            }
            let min = match bc[k] {
                Bc::Periodic => MIN_PERIODIC_CELLS,
                Bc::Clamped => MIN_CLAMPED_CELLS,
            };
            if n[k] < min {
                bad.push(format!(
                    "axis {} needs at least {min} cells for {:?}, got {}",
                    k + 1,
                    bc[k],
                    n[k]
                ));
            }
        }
        if !bad.is_empty() {
            return Err(Error::InvalidGrid(bad.join("; ")));
        }
        let h = [
            extents[0] / n[0] as f64,
            extents[1] / n[1] as f64,
            extents[2] / n[2] as f64,
        ];
        Ok(Grid { n, h, bc })
    }

    /// Groove discretization: periodic in x1, clamped in x2 and x3.
    pub fn groove(spec: &GrooveSpec, n: [usize; 3]) -> Result<Self> {
        spec.validate()?;
        Grid::new(spec.extents(), n, [Bc::Periodic, Bc::Clamped, Bc::Clamped])
    }

    /// Fully periodic box, used only where discrete symbols are closed-form.
    pub fn periodic_box(extents: [f64; 3], n: [usize; 3]) -> Result<Self> {
        Grid::new(extents, n, [Bc::Periodic; 3])
    }

    pub fn extents(&self) -> [f64; 3] {
        [
            self.h[0] * self.n[0] as f64,
            self.h[1] * self.n[1] as f64,
            self.h[2] * self.n[2] as f64,
        ]
    }

    /// Number of stored (interior) nodes along axis `k`.
    pub fn interior(&self, k: usize) -> usize {
        match self.bc[k] {
            Bc::Periodic => self.n[k],
            Bc::Clamped => self.n[k] - 1,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.interior(0), self.interior(1), self.interior(2)]
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of every stored node (wall nodes carry zero values).
    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    pub fn coord(&self, k: usize, i: usize) -> f64 {
        match self.bc[k] {
            Bc::Periodic => i as f64 * self.h[k],
            Bc::Clamped => (i + 1) as f64 * self.h[k],
        }
    }

    /// Coordinates of stored nodes along axis `k`.
    pub fn coords(&self, k: usize) -> Vec<f64> {
        (0..self.interior(k)).map(|i| self.coord(k, i)).collect()
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        let d = self.dims();
        (i1 * d[1] + i2) * d[2] + i3
    }

    pub fn min_spacing(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.n == other.n && self.bc == other.bc && self.h == other.h
    }

    pub fn is_periodic_box(&self) -> bool {
        self.bc.iter().all(|b| *b == Bc::Periodic)
    }

    /// Half the grid resolution in every direction (twice the cells).
    pub fn refined(&self) -> Grid {
        let e = self.extents();
        Grid::new(e, [self.n[0] * 2, self.n[1] * 2, self.n[2] * 2], self.bc)
            .expect("refining a valid grid stays valid")
    }
}
