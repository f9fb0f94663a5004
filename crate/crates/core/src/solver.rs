//! Implicit solve for `(I + dt(Δ_h² + Δ_h)) x = b`.
//!
//! The solve is a preconditioned conjugate-gradient iteration on the
//! stencil operator. The default preconditioner diagonalizes the periodic
//! axes with an orthonormal real Fourier basis and factors each mode's
//! operator on the clamped axes with a banded Cholesky decomposition. On a
//! groove grid this is the exact inverse, so the iteration converges in one
//! or two steps; the stencil residual is still what decides convergence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

use crate::field::{pairwise_map_sum, ScalarField};
use crate::grid::{Bc, Grid};
use crate::ops::implicit_operator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    #[default]
    Modal,
    None,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("implicit solve did not reach tolerance after {iterations} iterations (relative residual {residual:.3e})")]
pub struct SolverFailure {
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Lower-triangular banded Cholesky factor. Row `i` stores columns
/// `i − bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    /// Factors the symmetric matrix whose lower band is given by
    /// `entry(i, j)` for `j ≤ i`, `i − j ≤ bw`.
    pub fn factor<F: Fn(usize, usize) -> f64>(n: usize, bw: usize, entry: F) -> Option<Self> {
        let bw = bw.min(n.saturating_sub(1));
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                band[i * w + bw - (i - j)] = entry(i, j);
            }
        }
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let rj = j * w + bw - j;
            let mut d = band[rj + j];
            for k in lo..j {
                let l = band[rj + k];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            band[rj + j] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let ri = i * w + bw - i;
                let mut s = band[ri + j];
                for k in i.saturating_sub(bw).max(lo)..j {
                    s -= band[ri + k] * band[rj + k];
                }
                band[ri + j] = s / d;
            }
        }
        Some(BandCholesky { n, bw, band })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[ri + k] * x[k];
            }
            x[i] = s / self.band[ri + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.band[k * w + bw - k + i] * x[k];
            }
            x[i] = s / self.band[i * w + bw - i + i];
        }
    }
}

/// Orthonormal real Fourier basis of a periodic axis with `m` nodes:
/// `(matrix, eigenvalue of the 3-point Laplacian, wavenumber)` per column.
pub fn periodic_basis(m: usize, h: f64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut cols: Vec<(Vec<f64>, usize)> = Vec::with_capacity(m);
    let mf = m as f64;
    cols.push((vec![1.0 / mf.sqrt(); m], 0));
    for k in 1..=(m - 1) / 2 {
        let w = 2.0 * PI * k as f64 / mf;
        let s = (2.0 / mf).sqrt();
        cols.push(((0..m).map(|i| s * (w * i as f64).cos()).collect(), k));
        cols.push(((0..m).map(|i| s * (w * i as f64).sin()).collect(), k));
    }
    if m % 2 == 0 {
        let s = 1.0 / mf.sqrt();
        cols.push(((0..m).map(|i| if i % 2 == 0 { s } else { -s }).collect(), m / 2));
    }
    let mut mat = vec![0.0; m * m];
    let mut eig = Vec::with_capacity(m);
    let mut wav = Vec::with_capacity(m);
    for (c, (col, k)) in cols.into_iter().enumerate() {
        for i in 0..m {
            mat[i * m + c] = col[i];
        }
        let s = (PI * k as f64 / mf).sin();
        eig.push(-4.0 * s * s / (h * h));
        wav.push(k);
    }
    (mat, eig, wav)
}

/// Applies `mat` (or its transpose) along axis `axis` of a `dims` array.
fn transform_axis(data: &[f64], dims: [usize; 3], axis: usize, mat: &[f64], transpose: bool) -> Vec<f64> {
    let m = dims[axis];
    let before: usize = dims[..axis].iter().product();
    let after: usize = dims[axis + 1..].iter().product();
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(m * after)
        .zip(data.par_chunks(m * after))
        .take(before)
        .for_each(|(o, x)| {
            for c in 0..m {
                let dst = &mut o[c * after..(c + 1) * after];
                for i in 0..m {
                    // forward: x̂_c = Σ_i F[i][c] x_i ; inverse: x_i = Σ_c F[i][c] x̂_c
                    let coef = if transpose { mat[i * m + c] } else { mat[c * m + i] };
                    if coef == 0.0 {
                        continue;
                    }
                    let src = &x[i * after..(i + 1) * after];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += coef * s;
                    }
                }
            }
        });
    out
}

fn lap1d(i: usize, j: usize, h: f64) -> f64 {
    match i.abs_diff(j) {
        0 => -2.0 / (h * h),
        1 => 1.0 / (h * h),
        _ => 0.0,
    }
}

/// Fourth difference with the clamped ghost rule (end diagonal 7).
fn fourth1d(i: usize, j: usize, m: usize, h: f64) -> f64 {
    let h4 = h * h * h * h;
    match i.abs_diff(j) {
        0 if i == 0 || i == m - 1 => 7.0 / h4,
        0 => 6.0 / h4,
        1 => -4.0 / h4,
        2 => 1.0 / h4,
        _ => 0.0,
    }
}

/// Exact inverse of the implicit operator in the mixed Fourier/physical
/// basis. Requires the periodic axes to come first.
#[derive(Debug, Clone)]
pub struct ModalSolver {
    dims: [usize; 3],
    periodic: usize,
    bases: Vec<Vec<f64>>,
    block_len: usize,
    factor_of_block: Vec<usize>,
    factors: Vec<BandCholesky>,
}

impl ModalSolver {
    pub fn new(grid: &Grid, dt: f64) -> Option<Self> {
        let periodic = grid.bc.iter().take_while(|b| **b == Bc::Periodic).count();
        if grid.bc[periodic..].iter().any(|b| *b != Bc::Clamped) || periodic == 0 {
            return None;
        }
        let dims = grid.dims();
        let mut bases = Vec::new();
        let mut eigs = Vec::new();
        let mut wavs = Vec::new();
        for k in 0..periodic {
            let (m, e, w) = periodic_basis(dims[k], grid.h[k]);
            bases.push(m);
            eigs.push(e);
            wavs.push(w);
        }
        // Clamped axes padded to two with trivial unit axes.
        let clamped: Vec<usize> = (periodic..3).collect();
        let (da, ha) = if clamped.len() == 2 { (dims[clamped[0]], grid.h[clamped[0]]) } else { (1, 1.0) };
        let (db, hb) = match clamped.last() {
            Some(&k) => (dims[k], grid.h[k]),
            None => (1, 1.0),
        };
        let block_len = da * db;
        let bw = if da > 1 { 2 * db } else if db > 1 { 2 } else { 0 };
        let l1 = |i: usize, j: usize, m: usize, h: f64| if m == 1 { 0.0 } else { lap1d(i, j, h) };
        let q1 = |i: usize, j: usize, m: usize, h: f64| if m == 1 { 0.0 } else { fourth1d(i, j, m, h) };

        let nblocks: usize = dims[..periodic].iter().product();
        let mut key_to_factor: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut factor_symbols: Vec<f64> = Vec::new();
        let mut factor_of_block = Vec::with_capacity(nblocks);
        for blk in 0..nblocks {
            let mut rem = blk;
            let mut idx = vec![0; periodic];
            for k in (0..periodic).rev() {
                idx[k] = rem % dims[k];
                rem /= dims[k];
            }
            let key: Vec<usize> = (0..periodic).map(|k| wavs[k][idx[k]]).collect();
            let symbol: f64 = (0..periodic).map(|k| eigs[k][idx[k]]).sum();
            let next = factor_symbols.len();
            let id = *key_to_factor.entry(key).or_insert_with(|| {
                factor_symbols.push(symbol);
                next
            });
            factor_of_block.push(id);
        }
        let factors: Option<Vec<BandCholesky>> = factor_symbols
            .par_iter()
            .map(|&s| {
                let diag = 1.0 + dt * (s * s + s);
                BandCholesky::factor(block_len, bw, |r, c| {
                    let (ia, ib) = (r / db, r % db);
                    let (ja, jb) = (c / db, c % db);
                    let ia_eq = (ia == ja) as u8 as f64;
                    let ib_eq = (ib == jb) as u8 as f64;
                    let la = l1(ia, ja, da, ha);
                    let lb = l1(ib, jb, db, hb);
                    diag * ia_eq * ib_eq
                        + dt * (q1(ia, ja, da, ha) * ib_eq
                            + ia_eq * q1(ib, jb, db, hb)
                            + (2.0 * s + 1.0) * (la * ib_eq + ia_eq * lb)
                            + 2.0 * la * lb)
                })
            })
            .collect();
        Some(ModalSolver {
            dims,
            periodic,
            bases,
            block_len,
            factor_of_block,
            factors: factors?,
        })
    }

    pub fn distinct_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn apply_inverse(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        for k in 0..self.periodic {
            x = transform_axis(&x, self.dims, k, &self.bases[k], true);
        }
        x.par_chunks_mut(self.block_len)
            .zip(self.factor_of_block.par_iter())
            .for_each(|(blk, &f)| self.factors[f].solve_in_place(blk));
        for k in (0..self.periodic).rev() {
            x = transform_axis(&x, self.dims, k, &self.bases[k], false);
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_map_sum(a.len(), &|i| a[i] * b[i])
}

/// Solves `(I + dt(Δ_h² + Δ_h)) x = rhs` to relative residual `tol`.
pub fn implicit_solve(
    rhs: &ScalarField,
    dt: f64,
    tol: f64,
    max_iter: usize,
    precond: Option<&ModalSolver>,
) -> Result<(ScalarField, SolveStats), SolverFailure> {
    let grid = *rhs.grid();
    let b = rhs.values();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((ScalarField::zeros(&grid), SolveStats { iterations: 0, residual: 0.0 }));
    }
    let apply = |v: &[f64]| {
        let f = ScalarField::from_values(&grid, v.to_vec()).expect("same grid");
        implicit_operator(&f, dt).into_values()
    };
    let prec = |r: &[f64]| match precond {
        Some(m) => m.apply_inverse(r),
        None => r.to_vec(),
    };

    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut last_true = f64::INFINITY;
    // Outer loop restarts from the true residual if the recurrence drifted.
    while iterations < max_iter {
        let mut z = prec(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut converged = false;
        while iterations < max_iter {
            let ap = apply(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            let rel = dot(&r, &r).sqrt() / bnorm;
            history.push(rel);
            if rel <= tol {
                converged = true;
                break;
            }
            z = prec(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let ax = apply(&x);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let true_rel = dot(&r, &r).sqrt() / bnorm;
        if converged && true_rel <= tol {
            let x = ScalarField::from_values(&grid, x).expect("same grid");
            return Ok((x, SolveStats { iterations, residual: true_rel }));
        }
        history.push(true_rel);
        // a restart that does not halve the true residual has hit the
        // rounding floor of the operator
        if !converged || true_rel > 0.5 * last_true {
            return Err(SolverFailure { iterations, residual: true_rel, history });
        }
        last_true = true_rel;
    }
    let residual = history.last().copied().unwrap_or(f64::NAN);
    Err(SolverFailure { iterations, residual, history })
}
