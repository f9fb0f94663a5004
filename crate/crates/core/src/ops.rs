//! Finite-difference operators, the K-S nonlinearity and the norms used by
//! the energy estimates.
//!
//! Every operator works on a ghost-extended copy of its input with two
//! extra layers per axis end. Periodic axes wrap. Clamped axes put the wall
//! node (value zero) in the first layer and an even mirror of the first
//! interior node in the second, so that the centered normal derivative at
//! the wall vanishes. Second-order stencils only ever see the wall layer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{pairwise_map_sum, ScalarField, VectorField3};
use crate::grid::{Bc, Grid};

const PAD: usize = 2;

/// A field padded with two ghost layers on each side of every axis.
#[derive(Debug, Clone)]
pub struct GhostExtension {
    data: Vec<f64>,
    edims: [usize; 3],
    dims: [usize; 3],
}

impl GhostExtension {
    /// For each extended index along one axis, the interior index it copies
    /// from, or `None` for a wall node.
    fn axis_map(m: usize, bc: Bc) -> Vec<Option<usize>> {
        (0..m + 2 * PAD)
            .map(|p| match bc {
                Bc::Periodic => Some((p + 2 * m - PAD) % m),
                Bc::Clamped => {
                    if p == 0 {
                        Some(0)
                    } else if p == 1 || p == m + 2 {
                        None
                    } else if p == m + 3 {
                        Some(m - 1)
                    } else {
                        Some(p - PAD)
                    }
                }
            })
            .collect()
    }

    pub fn new(f: &ScalarField) -> Self {
        let grid = f.grid();
        let dims = grid.dims();
        let edims = [dims[0] + 2 * PAD, dims[1] + 2 * PAD, dims[2] + 2 * PAD];
        let maps = [
            Self::axis_map(dims[0], grid.bc[0]),
            Self::axis_map(dims[1], grid.bc[1]),
            Self::axis_map(dims[2], grid.bc[2]),
        ];
        let v = f.values();
        let plane = edims[1] * edims[2];
        let mut data = vec![0.0; edims[0] * plane];
        data.par_chunks_mut(plane)
            .enumerate()
            .for_each(|(p1, out)| {
                let Some(i1) = maps[0][p1] else { return };
                for (p2, m2) in maps[1].iter().enumerate() {
                    let Some(i2) = *m2 else { continue };
                    let src = (i1 * dims[1] + i2) * dims[2];
                    let row = &mut out[p2 * edims[2]..(p2 + 1) * edims[2]];
                    for (p3, m3) in maps[2].iter().enumerate() {
                        if let Some(i3) = *m3 {
                            row[p3] = v[src + i3];
                        }
                    }
                }
            });
        GhostExtension { data, edims, dims }
    }

    pub fn strides(&self) -> [usize; 3] {
        [self.edims[1] * self.edims[2], self.edims[2], 1]
    }

    /// Extended index of interior node `(i1, i2, i3)`.
    #[inline]
    pub fn center(&self, i1: usize, i2: usize, i3: usize) -> usize {
        ((i1 + PAD) * self.edims[1] + i2 + PAD) * self.edims[2] + i3 + PAD
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Evaluates `kernel(data, center)` at every interior node.
    fn map<K>(&self, grid: &Grid, kernel: K) -> ScalarField
    where
        K: Fn(&[f64], usize) -> f64 + Sync,
    {
        let d = self.dims;
        let mut out = vec![0.0; d[0] * d[1] * d[2]];
        out.par_chunks_mut(d[1] * d[2])
            .enumerate()
            .for_each(|(i1, plane)| {
                for i2 in 0..d[1] {
                    let base = self.center(i1, i2, 0);
                    let row = &mut plane[i2 * d[2]..(i2 + 1) * d[2]];
                    for (i3, o) in row.iter_mut().enumerate() {
                        *o = kernel(&self.data, base + i3);
                    }
                }
            });
        ScalarField::from_values(grid, out).expect("kernel output matches grid")
    }
}

/// Centered difference along axis `k`.
pub fn derivative(f: &ScalarField, k: usize) -> ScalarField {
    let ext = GhostExtension::new(f);
    let s = ext.strides()[k];
    let inv = 0.5 / f.grid().h[k];
    ext.map(f.grid(), |u, c| (u[c + s] - u[c - s]) * inv)
}

/// Centered second-order gradient.
pub fn gradient(f: &ScalarField) -> VectorField3 {
    let ext = GhostExtension::new(f);
    let st = ext.strides();
    let h = f.grid().h;
    let comp = |k: usize| {
        let s = st[k];
        let inv = 0.5 / h[k];
        ext.map(f.grid(), |u, c| (u[c + s] - u[c - s]) * inv)
    };
    VectorField3 {
        comps: [comp(0), comp(1), comp(2)],
    }
}

/// 7-point Laplacian (Dirichlet walls on clamped axes).
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let ext = GhostExtension::new(f);
    let [s1, s2, s3] = ext.strides();
    let h = f.grid().h;
    let w = [1.0 / (h[0] * h[0]), 1.0 / (h[1] * h[1]), 1.0 / (h[2] * h[2])];
    ext.map(f.grid(), |u, c| {
        let uc = 2.0 * u[c];
        w[0] * (u[c - s1] - uc + u[c + s1])
            + w[1] * (u[c - s2] - uc + u[c + s2])
            + w[2] * (u[c - s3] - uc + u[c + s3])
    })
}

#[inline(always)]
fn fourth(u: &[f64], c: usize, s: usize) -> f64 {
    u[c - 2 * s] - 4.0 * u[c - s] + 6.0 * u[c] - 4.0 * u[c + s] + u[c + 2 * s]
}

#[inline(always)]
fn mixed(u: &[f64], c: usize, a: usize, b: usize) -> f64 {
    let row = |o: usize, sign: bool| {
        let cc = if sign { c + o } else { c - o };
        u[cc - b] - 2.0 * u[cc] + u[cc + b]
    };
    row(a, false) - 2.0 * (u[c - b] - 2.0 * u[c] + u[c + b]) + row(a, true)
}

/// Direct 25-point biharmonic: `Σ_k δ⁴_k + 2 Σ_{k<l} δ²_k δ²_l`, with the
/// clamped ghost rule on the fourth differences.
pub fn bilaplacian(f: &ScalarField) -> ScalarField {
    let ext = GhostExtension::new(f);
    let [s1, s2, s3] = ext.strides();
    let c = BiharmonicCoeffs::new(f.grid());
    ext.map(f.grid(), |u, i| c.apply(u, i, s1, s2, s3))
}

/// `Δ_h(Δ_h f)` with the walls reset to zero between the two applications.
/// Agrees with [`bilaplacian`] to round-off at nodes at least two cells from
/// a clamped wall, and everywhere on a periodic box.
pub fn bilaplacian_composed(f: &ScalarField) -> ScalarField {
    laplacian(&laplacian(f))
}

#[derive(Debug, Clone, Copy)]
struct BiharmonicCoeffs {
    q: [f64; 3],
    m12: f64,
    m13: f64,
    m23: f64,
    l: [f64; 3],
}

impl BiharmonicCoeffs {
    fn new(grid: &Grid) -> Self {
        let h2 = [grid.h[0] * grid.h[0], grid.h[1] * grid.h[1], grid.h[2] * grid.h[2]];
        BiharmonicCoeffs {
            q: [1.0 / (h2[0] * h2[0]), 1.0 / (h2[1] * h2[1]), 1.0 / (h2[2] * h2[2])],
            m12: 2.0 / (h2[0] * h2[1]),
            m13: 2.0 / (h2[0] * h2[2]),
            m23: 2.0 / (h2[1] * h2[2]),
            l: [1.0 / h2[0], 1.0 / h2[1], 1.0 / h2[2]],
        }
    }

    #[inline(always)]
    fn apply(&self, u: &[f64], c: usize, s1: usize, s2: usize, s3: usize) -> f64 {
        self.q[0] * fourth(u, c, s1)
            + self.q[1] * fourth(u, c, s2)
            + self.q[2] * fourth(u, c, s3)
            + self.m12 * mixed(u, c, s1, s2)
            + self.m13 * mixed(u, c, s1, s3)
            + self.m23 * mixed(u, c, s2, s3)
    }

    #[inline(always)]
    fn lap(&self, u: &[f64], c: usize, s1: usize, s2: usize, s3: usize) -> f64 {
        let uc = 2.0 * u[c];
        self.l[0] * (u[c - s1] - uc + u[c + s1])
            + self.l[1] * (u[c - s2] - uc + u[c + s2])
            + self.l[2] * (u[c - s3] - uc + u[c + s3])
    }
}

/// `(Δ_h² + Δ_h) f`, the linear part of the K-S operator.
pub fn linear_operator(f: &ScalarField) -> ScalarField {
    let ext = GhostExtension::new(f);
    let [s1, s2, s3] = ext.strides();
    let c = BiharmonicCoeffs::new(f.grid());
    ext.map(f.grid(), |u, i| {
        c.apply(u, i, s1, s2, s3) + c.lap(u, i, s1, s2, s3)
    })
}

/// `(I + dt(Δ_h² + Δ_h)) f`, the implicit-step operator.
pub fn implicit_operator(f: &ScalarField, dt: f64) -> ScalarField {
    let ext = GhostExtension::new(f);
    let [s1, s2, s3] = ext.strides();
    let c = BiharmonicCoeffs::new(f.grid());
    ext.map(f.grid(), |u, i| {
        u[i] + dt * (c.apply(u, i, s1, s2, s3) + c.lap(u, i, s1, s2, s3))
    })
}

/// `½ ∇(u₁² + u₂² + u₃²)`. Being the discrete gradient of a scalar, the
/// result is exactly curl-free at the discrete level.
pub fn nonlinearity(u: &VectorField3) -> VectorField3 {
    let grid = *u.grid();
    let [a, b, c] = [
        u.comps[0].values(),
        u.comps[1].values(),
        u.comps[2].values(),
    ];
    let s: Vec<f64> = (0..a.len())
        .map(|i| 0.5 * (a[i] * a[i] + b[i] * b[i] + c[i] * c[i]))
        .collect();
    let s = ScalarField::from_values(&grid, s).expect("same grid");
    gradient(&s)
}

/// `max_{i≠j} ‖D_j u_i − D_i u_j‖`.
pub fn curl_residual(u: &VectorField3) -> f64 {
    let mut worst = 0.0f64;
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let r = derivative(&u.comps[i], j).sub(&derivative(&u.comps[j], i));
        worst = worst.max(r.norm_l2());
    }
    worst
}

/// `‖∇f‖` through the centered gradient.
pub fn norm_grad(f: &ScalarField) -> f64 {
    let g = gradient(f);
    g.energy().sqrt()
}

/// `‖Δf‖`.
pub fn norm_lap(f: &ScalarField) -> f64 {
    laplacian(f).norm_l2()
}

/// `‖∇f‖` built from one-sided differences across every cell edge,
/// including the edges touching a clamped wall. Its square equals
/// `−(f, Δ_h f)` exactly, the discrete form of integration by parts.
pub fn norm_grad_edge(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let d = grid.dims();
    let v = f.values();
    let mut total = 0.0;
    for k in 0..3 {
        let m = d[k];
        let stride = match k {
            0 => d[1] * d[2],
            1 => d[2],
            _ => 1,
        };
        // Lines along axis k are indexed by the other two coordinates.
        let lines = grid.len() / m;
        let line_start = |l: usize| match k {
            0 => l,
            1 => (l / d[2]) * d[1] * d[2] + l % d[2],
            _ => l * d[2],
        };
        let edges = match grid.bc[k] {
            Bc::Periodic => m,
            Bc::Clamped => m + 1,
        };
        let bc = grid.bc[k];
        let sum = pairwise_map_sum(lines * edges, &|e| {
            let (l, j) = (e / edges, e % edges);
            let base = line_start(l);
            let at = |i: usize| v[base + i * stride];
            let diff = match bc {
                Bc::Periodic => at((j + 1) % m) - at(j),
                Bc::Clamped => {
                    let left = if j == 0 { 0.0 } else { at(j - 1) };
                    let right = if j == m { 0.0 } else { at(j) };
                    right - left
                }
            };
            diff * diff
        });
        total += sum * grid.cell_volume() / (grid.h[k] * grid.h[k]);
    }
    total.sqrt()
}

/// Fraction of a clamped axis-3 extent, measured from the far end, that
/// the initial potential must leave empty.
pub const SUPPORT_MARGIN: f64 = 0.1;

/// `u₀ = ∇φ₀`. On a groove grid `φ₀` must vanish on the outer
/// [`SUPPORT_MARGIN`] of the axis-3 extent.
pub fn init_from_potential(phi0: &ScalarField) -> Result<VectorField3> {
    if !phi0.is_finite() {
        return Err(Error::InvalidInitialData("potential is not finite".into()));
    }
    let grid = phi0.grid();
    if grid.bc[2] == Bc::Clamped {
        let l3 = grid.extents()[2];
        let cut = (1.0 - SUPPORT_MARGIN) * l3;
        let scale = phi0.max_abs();
        let d = grid.dims();
        let x3 = grid.coords(2);
        let v = phi0.values();
        for i1 in 0..d[0] {
            for i2 in 0..d[1] {
                for (i3, &x) in x3.iter().enumerate() {
                    if x >= cut && v[grid.index(i1, i2, i3)].abs() > 1e-12 * scale {
                        return Err(Error::InvalidInitialData(format!(
                            "potential support reaches x3 = {x:.4}, beyond {cut:.4} \
                             (the outer {}% of L3 = {l3} must stay empty)",
                            SUPPORT_MARGIN * 100.0
                        )));
                    }
                }
            }
        }
    }
    Ok(gradient(phi0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groove::GrooveSpec;
    use std::f64::consts::PI;

    fn groove(n: [usize; 3]) -> Grid {
        Grid::groove(&GrooveSpec::new(2.0, 4.0, 3.0).unwrap(), n).unwrap()
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn zero_in_zero_out() {
        let g = groove([8, 8, 8]);
        let z = ScalarField::zeros(&g);
        assert_eq!(gradient(&z).energy(), 0.0);
        assert_eq!(laplacian(&z).max_abs(), 0.0);
        assert_eq!(bilaplacian(&z).max_abs(), 0.0);
        let zv = VectorField3::zeros(&g);
        assert_eq!(nonlinearity(&zv).energy(), 0.0);
        assert_eq!(curl_residual(&zv), 0.0);
        assert_eq!(init_from_potential(&z).unwrap().energy(), 0.0);
    }

    #[test]
    fn constant_in_periodic_box_has_zero_derivatives() {
        let g = Grid::periodic_box([1.0, 2.0, 3.0], [6, 7, 8]).unwrap();
        let f = ScalarField::from_fn(&g, |_, _, _| 3.5);
        assert!(gradient(&f).energy() < 1e-28);
        let u = VectorField3::new(f.clone(), ScalarField::zeros(&g), ScalarField::zeros(&g)).unwrap();
        assert!(nonlinearity(&u).energy() < 1e-28);
    }

    #[test]
    fn laplacian_matches_discrete_symbol_in_periodic_box() {
        let (l1, n1) = (2.0, 16);
        let g = Grid::periodic_box([l1, 1.0, 1.0], [n1, 4, 4]).unwrap();
        let k = 2.0 * PI * 3.0 / l1;
        let h = g.h[0];
        let f = ScalarField::from_fn(&g, |x, _, _| (k * x).sin());
        let sigma = -(2.0 - 2.0 * (k * h).cos()) / (h * h);
        assert!(max_diff(&laplacian(&f), &f.scaled(sigma)) < 1e-12 * sigma.abs());
        assert!(max_diff(&bilaplacian(&f), &f.scaled(sigma * sigma)) < 1e-12 * sigma * sigma);
        assert!(max_diff(&bilaplacian_composed(&f), &bilaplacian(&f)) < 1e-11 * sigma * sigma);
    }

    #[test]
    fn stencils_are_exact_on_low_degree_polynomials_away_from_walls() {
        let g = groove([8, 24, 24]);
        let d = g.dims();
        let f2 = ScalarField::from_fn(&g, |_, y, _| y * y);
        let f3 = ScalarField::from_fn(&g, |_, y, z| y * y * y - 2.0 * z * z * z + y * z);
        let lap = laplacian(&f2);
        let bil = bilaplacian(&f3);
        for i1 in 0..d[0] {
            for i2 in 2..d[1] - 2 {
                for i3 in 2..d[2] - 2 {
                    let i = g.index(i1, i2, i3);
                    assert!((lap.values()[i] - 2.0).abs() < 1e-9);
                    assert!(bil.values()[i].abs() < 1e-6, "{}", bil.values()[i]);
                }
            }
        }
    }

    #[test]
    fn direct_and_composed_biharmonic_agree_away_from_walls() {
        let g = groove([8, 16, 16]);
        let f = ScalarField::from_fn(&g, |x, y, z| {
            (2.0 * PI * x / 4.0).cos() * (y * 1.3).sin() * (z * 0.7 + 0.2).cos()
        });
        let a = bilaplacian(&f);
        let b = bilaplacian_composed(&f);
        let d = g.dims();
        let scale = a.max_abs();
        for i1 in 0..d[0] {
            for i2 in 1..d[1] - 1 {
                for i3 in 1..d[2] - 1 {
                    let i = g.index(i1, i2, i3);
                    assert!((a.values()[i] - b.values()[i]).abs() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn clamped_biharmonic_end_row_has_diagonal_seven() {
        // one-dimensional check along x3 with x1 periodic and x2 clamped
        let g = groove([4, 8, 8]);
        let mut f = ScalarField::zeros(&g);
        let idx = g.index(0, 3, 0);
        f.values_mut()[idx] = 1.0;
        let b = bilaplacian(&f);
        let h = g.h;
        // 7/h3⁴ from the clamped end row plus 6/h1⁴ + 6/h2⁴ from the others
        // plus the mixed-term centers 2·4/(h_k² h_l²).
        let expect = 7.0 / h[2].powi(4)
            + 6.0 / h[0].powi(4)
            + 6.0 / h[1].powi(4)
            + 8.0 / (h[0] * h[0] * h[1] * h[1])
            + 8.0 / (h[0] * h[0] * h[2] * h[2])
            + 8.0 / (h[1] * h[1] * h[2] * h[2]);
        assert!((b.values()[idx] - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn nonlinearity_is_curl_free() {
        let g = groove([8, 12, 12]);
        let w = |t: f64| t.sin();
        let u = VectorField3::new(
            ScalarField::from_fn(&g, |x, y, z| w(x) * (y * 1.1).sin() * z.sin()),
            ScalarField::from_fn(&g, |x, y, z| (x + y).cos() * w(z)),
            ScalarField::from_fn(&g, |x, y, z| w(y) * (z + 0.5 * x).sin()),
        )
        .unwrap();
        let n = nonlinearity(&u);
        assert!(curl_residual(&n) < 1e-12 * n.energy().sqrt().max(1.0));
    }

    #[test]
    fn single_mode_nonlinearity_matches_symbol() {
        // u1 = sin(kx): component 1 is the centered difference of sin²(kx)/2
        // = (1 − cos 2kx)/4, i.e. sin(2kx)·sin(2kh)/(4h).
        let (l1, n1) = (2.0 * PI, 32);
        let g = Grid::periodic_box([l1, 1.0, 1.0], [n1, 4, 4]).unwrap();
        let k = 3.0;
        let h = g.h[0];
        let u = VectorField3::new(
            ScalarField::from_fn(&g, |x, _, _| (k * x).sin()),
            ScalarField::zeros(&g),
            ScalarField::zeros(&g),
        )
        .unwrap();
        let n = nonlinearity(&u);
        let expect = ScalarField::from_fn(&g, |x, _, _| {
            (2.0 * k * x).sin() * (2.0 * k * h).sin() / (4.0 * h)
        });
        assert!(max_diff(&n.comps[0], &expect) < 1e-13);
        assert!(n.comps[1].max_abs() < 1e-15 && n.comps[2].max_abs() < 1e-15);
    }

    #[test]
    fn edge_gradient_is_exact_integration_by_parts() {
        let g = groove([8, 10, 12]);
        let f = ScalarField::from_fn(&g, |x, y, z| {
            ((x * 1.7).cos() + 0.3) * (y * 2.1 + 0.4).sin() * (z * 0.9).cos()
        });
        let lhs = norm_grad_edge(&f).powi(2);
        let rhs = -f.inner(&laplacian(&f));
        assert!((lhs - rhs).abs() < 1e-11 * lhs);
    }

    #[test]
    fn support_margin_is_enforced() {
        let g = groove([8, 8, 20]);
        let l3 = 3.0;
        let ok = ScalarField::from_fn(&g, |_, _, z| if z < 0.8 * l3 { z * (0.8 * l3 - z) } else { 0.0 });
        assert!(init_from_potential(&ok).is_ok());
        let bad = ScalarField::from_fn(&g, |_, _, z| z * (l3 - z));
        assert!(matches!(init_from_potential(&bad), Err(Error::InvalidInitialData(_))));
    }
}
