//! Discrete fields on a [`Grid`] and the quadrature used for every norm.
//!
//! Values are stored at interior nodes only, axis 1 outermost and axis 3
//! fastest. All reductions go through [`pairwise_sum`], whose summation tree
//! depends only on the number of terms, so results are bitwise reproducible
//! regardless of how the work is scheduled.

use crate::error::{Error, Result};
use crate::grid::Grid;

const PAIRWISE_BLOCK: usize = 128;
const PARALLEL_THRESHOLD: usize = 1 << 16;

/// Sum with a fixed binary tree over the index range.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_map_sum(values.len(), &|i| values[i])
}

/// `Σ term(i)` for `i in 0..n` using the same tree as [`pairwise_sum`].
pub fn pairwise_map_sum<F>(n: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn rec<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, term: &F) -> f64 {
        let len = hi - lo;
        if len <= PAIRWISE_BLOCK {
            let mut s = 0.0;
            for i in lo..hi {
                s += term(i);
            }
            return s;
        }
        let mid = lo + len / 2;
        if len >= PARALLEL_THRESHOLD {
            let (a, b) = rayon::join(|| rec(lo, mid, term), || rec(mid, hi, term));
            a + b
        } else {
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    if n == 0 {
        return 0.0;
    }
    rec(0, n, term)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: *grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for the grid, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField {
            grid: *grid,
            values,
        })
    }

    /// Samples `f(x1, x2, x3)` at the stored nodes.
    pub fn from_fn<F: Fn(f64, f64, f64) -> f64>(grid: &Grid, f: F) -> Self {
        let [x1, x2, x3] = [grid.coords(0), grid.coords(1), grid.coords(2)];
        let mut values = Vec::with_capacity(grid.len());
        for &a in &x1 {
            for &b in &x2 {
                for &c in &x3 {
                    values.push(f(a, b, c));
                }
            }
        }
        ScalarField {
            grid: *grid,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: f64, other: &ScalarField) -> ScalarField {
        debug_assert!(self.grid.same_shape(&other.grid));
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.add_scaled(-1.0, other)
    }

    /// Discrete `L²` inner product.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        debug_assert!(self.grid.same_shape(&other.grid));
        let (a, b) = (&self.values, &other.values);
        self.grid.cell_volume() * pairwise_map_sum(a.len(), &|i| a[i] * b[i])
    }

    /// `‖f‖²`.
    pub fn norm_l2_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    /// `‖f‖_{L⁴}`.
    pub fn norm_l4(&self) -> f64 {
        let v = &self.values;
        let s = pairwise_map_sum(v.len(), &|i| {
            let q = v[i] * v[i];
            q * q
        });
        (self.grid.cell_volume() * s).powf(0.25)
    }
}

/// The state `u = (u₁, u₂, u₃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3 {
    pub comps: [ScalarField; 3],
}

impl VectorField3 {
    pub fn new(u1: ScalarField, u2: ScalarField, u3: ScalarField) -> Result<Self> {
        if !(u1.grid.same_shape(&u2.grid) && u1.grid.same_shape(&u3.grid)) {
            return Err(Error::InvalidArgument(
                "vector components must share one grid".into(),
            ));
        }
        Ok(VectorField3 {
            comps: [u1, u2, u3],
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let z = ScalarField::zeros(grid);
        VectorField3 {
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }

    /// `max_x |u(x)|` (Euclidean length per node).
    pub fn max_speed(&self) -> f64 {
        let [a, b, c] = [
            self.comps[0].values(),
            self.comps[1].values(),
            self.comps[2].values(),
        ];
        let mut m = 0.0f64;
        for i in 0..a.len() {
            m = m.max((a[i] * a[i] + b[i] * b[i] + c[i] * c[i]).sqrt());
        }
        m
    }

    /// `Σⱼ ‖u_j‖²`.
    pub fn energy(&self) -> f64 {
        self.comps.iter().map(|c| c.norm_l2_sq()).sum()
    }

    pub fn sub(&self, other: &VectorField3) -> VectorField3 {
        VectorField3 {
            comps: [
                self.comps[0].sub(&other.comps[0]),
                self.comps[1].sub(&other.comps[1]),
                self.comps[2].sub(&other.comps[2]),
            ],
        }
    }

    pub fn scaled(&self, s: f64) -> VectorField3 {
        VectorField3 {
            comps: [
                self.comps[0].scaled(s),
                self.comps[1].scaled(s),
                self.comps[2].scaled(s),
            ],
        }
    }

    pub fn bitwise_eq(&self, other: &VectorField3) -> bool {
        self.comps.iter().zip(&other.comps).all(|(a, b)| {
            a.values.len() == b.values.len()
                && a.values
                    .iter()
                    .zip(&b.values)
                    .all(|(x, y)| x.to_bits() == y.to_bits())
        })
    }
}
