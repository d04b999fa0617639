//! Twisted difference operators.
//!
//! Sections of the degree-`δ` bundle are transported along grid links by
//! Peierls phases: the x-link at height `y_j` carries `exp(2πi δ y_j h)`, and
//! the y-link is trivial except across the seam `j = N-1 -> 0`, where it
//! carries `exp(-2πi δ x_i)`. Every plaquette then has holonomy
//! `exp(-2πi δ h²)`, so the whole torus carries net holonomy `exp(-2πi δ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{ConformalExponent, FieldError, FormType, TorusGrid, TwistedField, Weights};

/// Normalization of `∂̄` in the unit coframe: on real functions at `δ = 0`,
/// `‖∂̄ f‖² = ⟨f, L f⟩` with `L` the curvature Laplacian.
pub const DBAR_SCALE: f64 = 0.282_094_791_773_878_14; // 1 / (2 sqrt(pi))

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Link phases of the degree-`twist` bundle on a grid.
#[derive(Debug, Clone)]
pub struct Links {
    n: usize,
    /// x-link phase at row `j`.
    px: Vec<Complex64>,
    /// seam phase for the y-link at column `i`.
    seam: Vec<Complex64>,
}

impl Links {
    pub fn new(grid: TorusGrid, twist: i64) -> Self {
        let n = grid.n();
        let h = grid.h();
        let d = twist as f64;
        let px = (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * d * grid.y(j) * h)).collect();
        let seam = (0..n).map(|i| Complex64::from_polar(1.0, -2.0 * PI * d * grid.x(i))).collect();
        Links { n, px, seam }
    }

    /// `(S_x f)(i, j) = U_x(j) f(i+1, j)`.
    pub fn fwd_x(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let src = &f[((i + 1) % n) * n..][..n];
            for j in 0..n {
                row[j] = self.px[j] * src[j];
            }
        });
    }

    /// `(S_x^† f)(i, j) = conj(U_x(j)) f(i-1, j)`.
    pub fn bwd_x(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let src = &f[((i + n - 1) % n) * n..][..n];
            for j in 0..n {
                row[j] = self.px[j].conj() * src[j];
            }
        });
    }

    /// `(S_y f)(i, j) = f(i, j+1)`, with the seam phase at `j = N-1`.
    pub fn fwd_y(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let src = &f[i * n..][..n];
            row[..n - 1].copy_from_slice(&src[1..]);
            row[n - 1] = self.seam[i] * src[0];
        });
    }

    /// `(S_y^† f)(i, j) = f(i, j-1)`, with the conjugate seam phase at `j = 0`.
    pub fn bwd_y(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let src = &f[i * n..][..n];
            row[1..].copy_from_slice(&src[..n - 1]);
            row[0] = self.seam[i].conj() * src[n - 1];
        });
    }

    /// Phase picked up by transporting around the plaquette with lower-left
    /// corner `(i, j)`: x forward, y forward, x back, y back.
    pub fn plaquette_holonomy(&self, i: usize, j: usize) -> Complex64 {
        let n = self.n;
        let mut delta = vec![Complex64::new(0.0, 0.0); n * n];
        delta[i * n + j] = Complex64::new(1.0, 0.0);
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        let mut b = a.clone();
        // S_y^† S_x^† S_y S_x applied to the delta at (i, j) lands back on (i, j)
        self.bwd_y(&delta, &mut a);
        self.bwd_x(&a, &mut b);
        self.fwd_y(&b, &mut a);
        self.fwd_x(&a, &mut b);
        b[i * n + j]
    }
}

/// The twisted Cauchy–Riemann operator `∂̄` on sections of degree `twist`,
/// forward differences: `c ((S_x - 1) / h + i (S_y - 1) / h)`.
#[derive(Debug, Clone)]
pub struct Dbar {
    grid: TorusGrid,
    twist: i64,
    links: Links,
}

impl Dbar {
    pub fn new(grid: TorusGrid, twist: i64) -> Self {
        Dbar { grid, twist, links: Links::new(grid, twist) }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn links(&self) -> &Links {
        &self.links
    }

    /// Raw sample-level application.
    pub fn apply_raw(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n2 = f.len();
        let mut sx = vec![Complex64::new(0.0, 0.0); n2];
        let mut sy = sx.clone();
        self.links.fwd_x(f, &mut sx);
        self.links.fwd_y(f, &mut sy);
        let k = DBAR_SCALE / self.grid.h();
        sx.iter()
            .zip(&sy)
            .zip(f)
            .map(|((a, b), v)| k * ((a - v) + I * (b - v)))
            .collect()
    }

    /// Flat adjoint, `c ((S_x^† - 1) / h - i (S_y^† - 1) / h)`.
    pub fn apply_adj_raw(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n2 = f.len();
        let mut sx = vec![Complex64::new(0.0, 0.0); n2];
        let mut sy = sx.clone();
        self.links.bwd_x(f, &mut sx);
        self.links.bwd_y(f, &mut sy);
        let k = DBAR_SCALE / self.grid.h();
        sx.iter()
            .zip(&sy)
            .zip(f)
            .map(|((a, b), v)| k * ((a - v) - I * (b - v)))
            .collect()
    }

    /// `e^{-w} D^†(e^{w} t)`, the adjoint for the metric weighted by `e^{w}`.
    pub fn apply_weighted_adj_raw(&self, t: &[Complex64], w: &Weights) -> Vec<Complex64> {
        let wt: Vec<Complex64> = t.iter().zip(&w.values).map(|(z, e)| z * e).collect();
        let mut out = self.apply_adj_raw(&wt);
        for (z, e) in out.iter_mut().zip(&w.values) {
            *z /= e;
        }
        out
    }

    fn check(&self, f: &TwistedField, form: FormType) -> Result<(), FieldError> {
        if f.grid != self.grid {
            return Err(FieldError::GridMismatch);
        }
        if f.twist != self.twist {
            return Err(FieldError::TwistMismatch { expected: self.twist, found: f.twist });
        }
        if f.form != form {
            return Err(FieldError::FormMismatch { expected: form, found: f.form });
        }
        Ok(())
    }

    pub fn apply(&self, f: &TwistedField) -> Result<TwistedField, FieldError> {
        self.check(f, FormType::Function)?;
        Ok(TwistedField {
            grid: self.grid,
            twist: self.twist,
            form: FormType::ZeroOneForm,
            values: self.apply_raw(&f.values),
        })
    }

    pub fn apply_adj(&self, t: &TwistedField, w: &Weights) -> Result<TwistedField, FieldError> {
        self.check(t, FormType::ZeroOneForm)?;
        Ok(TwistedField {
            grid: self.grid,
            twist: self.twist,
            form: FormType::Function,
            values: self.apply_weighted_adj_raw(&t.values, w),
        })
    }

    /// `iΛ∂` for the weighted metric, built from centered differences:
    /// `-c e^{-w} (∂_x - i ∂_y)(e^{w} t)`. Agrees with the weighted adjoint of
    /// `∂̄` up to discretization error.
    pub fn i_lambda_partial(&self, t: &TwistedField, w: &Weights) -> Result<TwistedField, FieldError> {
        self.check(t, FormType::ZeroOneForm)?;
        let n2 = t.values.len();
        let wt: Vec<Complex64> = t.values.iter().zip(&w.values).map(|(z, e)| z * e).collect();
        let mut fx = vec![Complex64::new(0.0, 0.0); n2];
        let mut bx = fx.clone();
        let mut fy = fx.clone();
        let mut by = fx.clone();
        self.links.fwd_x(&wt, &mut fx);
        self.links.bwd_x(&wt, &mut bx);
        self.links.fwd_y(&wt, &mut fy);
        self.links.bwd_y(&wt, &mut by);
        let k = -DBAR_SCALE / (2.0 * self.grid.h());
        let values = (0..n2)
            .map(|m| k * ((fx[m] - bx[m]) - I * (fy[m] - by[m])) / w.values[m])
            .collect();
        Ok(TwistedField { grid: self.grid, twist: self.twist, form: FormType::Function, values })
    }
}

/// Twisted `∂̄` of a section.
pub fn dbar(f: &TwistedField) -> Result<TwistedField, FieldError> {
    Dbar::new(f.grid, f.twist).apply(f)
}

/// Weighted formal adjoint of `∂̄` on (0,1)-forms.
pub fn dbar_adj(t: &TwistedField, w: &Weights) -> Result<TwistedField, FieldError> {
    Dbar::new(t.grid, t.twist).apply_adj(t, w)
}

/// Curvature Laplacian `L = -Δ / (4π)` (five-point stencil), positive
/// semidefinite with exactly zero row sums. With this sign the curvature of
/// `K e^u` is `d + L u`.
pub fn laplacian_raw(grid: TorusGrid, u: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let k = 1.0 / (grid.h() * grid.h() * 4.0 * PI);
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let c = &u[i * n..][..n];
        let up = &u[((i + 1) % n) * n..][..n];
        let dn = &u[((i + n - 1) % n) * n..][..n];
        for j in 0..n {
            let l = c[(j + n - 1) % n];
            let r = c[(j + 1) % n];
            row[j] = k * (4.0 * c[j] - up[j] - dn[j] - l - r);
        }
    });
    out
}

pub fn laplacian(u: &ConformalExponent) -> Vec<f64> {
    laplacian_raw(u.grid, &u.values)
}

/// `∫ f dA` over the torus.
pub fn integrate(grid: TorusGrid, f: &[f64]) -> f64 {
    grid.integrate(f)
}

/// Pointwise `iΛF` of `K e^u`: `d + L u`.
pub fn curvature(u: &ConformalExponent) -> Vec<f64> {
    let d = u.degree as f64;
    laplacian(u).into_iter().map(|v| d + v).collect()
}
