//! The modified Donaldson functional in gauge coordinates and its variations
//! along geodesics of the space of hermitian metrics.
//!
//! ```text
//! M = Σ_i [ ½⟨u_i, L u_i⟩ + (d_i - tau_i) ∫u_i ] + ∫ |phi|^2 e^{u1-u2} - ∫ |phi0|^2
//! ```
//!
//! with `phi = phi0 + ∂̄ beta`. Its gradient in `(u1, u2)` is the residual pair.

use num_complex::Complex64;

use super::residual::residual_parts;
use super::spec::ProblemSpec;
use super::state::{HistoryEntry, SolverState};
use super::SolverError;
use crate::torus::{laplacian_raw, Dbar, FieldError, TorusGrid, TwistedField};

/// A metric relative to the background: log-densities and the off-diagonal gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinates {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub beta: Vec<Complex64>,
}

impl Coordinates {
    pub fn background(grid: TorusGrid) -> Self {
        Coordinates { u1: vec![0.0; grid.len()], u2: vec![0.0; grid.len()], beta: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn of_state(state: &SolverState) -> Self {
        Coordinates { u1: state.u1.values.clone(), u2: state.u2.values.clone(), beta: state.beta.values.clone() }
    }

    fn lerp(&self, other: &Coordinates, t: f64) -> Coordinates {
        let l = |a: &f64, b: &f64| a + t * (b - a);
        Coordinates {
            u1: self.u1.iter().zip(&other.u1).map(|(a, b)| l(a, b)).collect(),
            u2: self.u2.iter().zip(&other.u2).map(|(a, b)| l(a, b)).collect(),
            beta: self.beta.iter().zip(&other.beta).map(|(a, b)| a + (b - a) * t).collect(),
        }
    }
}

/// Hermitian endomorphism `S = [[s1, off], [conj(off), s2]]` in the
/// unitary frame of the current metric; the geodesic is `Q^† e^{tS} Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    /// Section of the same twist as `beta`.
    pub off: Vec<Complex64>,
}

struct Context<'a> {
    grid: TorusGrid,
    degrees: (f64, f64),
    taus: (f64, f64),
    phi0: &'a [Complex64],
    dbar: Dbar,
}

impl<'a> Context<'a> {
    fn new(spec: &ProblemSpec, phi0: &'a TwistedField) -> Result<Self, SolverError> {
        if phi0.grid != spec.grid {
            return Err(FieldError::GridMismatch.into());
        }
        if phi0.twist != spec.twist() {
            return Err(FieldError::TwistMismatch { expected: spec.twist(), found: phi0.twist }.into());
        }
        Ok(Context {
            grid: spec.grid,
            degrees: (spec.d1 as f64, spec.d2 as f64),
            taus: spec.taus_f64(),
            phi0: &phi0.values,
            dbar: Dbar::new(spec.grid, spec.twist()),
        })
    }

    fn check(&self, c: &Coordinates) -> Result<(), SolverError> {
        let n = self.grid.len();
        for len in [c.u1.len(), c.u2.len(), c.beta.len()] {
            if len != n {
                return Err(FieldError::LengthMismatch { expected: n, found: len }.into());
            }
        }
        Ok(())
    }

    fn phi(&self, beta: &[Complex64]) -> Vec<Complex64> {
        let db = self.dbar.apply_raw(beta);
        self.phi0.iter().zip(&db).map(|(a, b)| a + b).collect()
    }

    fn value(&self, c: &Coordinates) -> f64 {
        let phi = self.phi(&c.beta);
        let (d1, d2) = self.degrees;
        let (t1, t2) = self.taus;
        let l1 = laplacian_raw(self.grid, &c.u1);
        let l2 = laplacian_raw(self.grid, &c.u2);
        let dens: Vec<f64> = (0..self.grid.len())
            .map(|k| {
                0.5 * (c.u1[k] * l1[k] + c.u2[k] * l2[k])
                    + (d1 - t1) * c.u1[k]
                    + (d2 - t2) * c.u2[k]
                    + phi[k].norm_sqr() * (c.u1[k] - c.u2[k]).exp()
                    - self.phi0[k].norm_sqr()
            })
            .collect();
        self.grid.integrate(&dens)
    }

    /// `(R1, R2, 2 ∂̄^†(e^w phi))`, the gradient in `(u1, u2, beta)`.
    fn gradient(&self, c: &Coordinates) -> (Vec<f64>, Vec<f64>, Vec<Complex64>, Vec<Complex64>) {
        let phi = self.phi(&c.beta);
        let sq: Vec<f64> = phi.iter().map(|z| z.norm_sqr()).collect();
        let r = residual_parts(self.grid, self.degrees, self.taus, &c.u1, &c.u2, &sq);
        let wphi: Vec<Complex64> = (0..phi.len()).map(|k| phi[k] * (2.0 * (c.u1[k] - c.u2[k]).exp())).collect();
        (r.first, r.second, self.dbar.apply_adj_raw(&wphi), phi)
    }
}

fn re_inner(grid: TorusGrid, a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum::<f64>() * grid.cell_area()
}

fn inner(grid: TorusGrid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * grid.cell_area()
}

/// `M` evaluated directly from its definition.
pub fn functional_closed_form(spec: &ProblemSpec, phi0: &TwistedField, c: &Coordinates) -> Result<f64, SolverError> {
    let ctx = Context::new(spec, phi0)?;
    ctx.check(c)?;
    Ok(ctx.value(c))
}

/// `M(to) - M(from)` by integrating the gradient along the straight segment
/// in coordinates, composite three-point Gauss–Legendre with `panels` panels.
pub fn path_increment(
    spec: &ProblemSpec,
    phi0: &TwistedField,
    from: &Coordinates,
    to: &Coordinates,
    panels: usize,
) -> Result<f64, SolverError> {
    let ctx = Context::new(spec, phi0)?;
    ctx.check(from)?;
    ctx.check(to)?;
    let g = ctx.grid;
    let du1: Vec<f64> = to.u1.iter().zip(&from.u1).map(|(a, b)| a - b).collect();
    let du2: Vec<f64> = to.u2.iter().zip(&from.u2).map(|(a, b)| a - b).collect();
    let db: Vec<Complex64> = to.beta.iter().zip(&from.beta).map(|(a, b)| a - b).collect();
    let panels = panels.max(1);
    let r = (0.6f64).sqrt() / 2.0;
    let nodes = [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)];
    let mut total = 0.0;
    for p in 0..panels {
        for &(x, wt) in &nodes {
            let t = (p as f64 + x) / panels as f64;
            let (r1, r2, gb, _) = ctx.gradient(&from.lerp(to, t));
            let rate = inner(g, &r1, &du1) + inner(g, &r2, &du2) + re_inner(g, &gb, &db);
            total += wt * rate / panels as f64;
        }
    }
    Ok(total)
}

/// Coordinates of `Q^† e^{tS} Q`, exactly, pointwise.
pub fn geodesic_point(c: &Coordinates, dir: &Direction, t: f64) -> Coordinates {
    let n = c.u1.len();
    let mut out = Coordinates { u1: Vec::with_capacity(n), u2: Vec::with_capacity(n), beta: Vec::with_capacity(n) };
    for k in 0..n {
        let (s1, s2, u) = (dir.s1[k], dir.s2[k], dir.off[k]);
        let m = 0.5 * (s1 + s2);
        let d = 0.5 * (s1 - s2);
        let r = (d * d + u.norm_sqr()).sqrt();
        let (ch, sh_r) = if r * t.abs() > 1e-8 { ((t * r).cosh(), (t * r).sinh() / r) } else { (1.0, t) };
        // common factor e^{tm} cancels in the ratio
        let e11 = ch + d * sh_r;
        let e12 = u * sh_r;
        let log_e11 = t * m + e11.ln();
        let w = c.u1[k] - c.u2[k];
        out.u1.push(c.u1[k] + log_e11);
        out.u2.push(c.u2[k] + t * (s1 + s2) - log_e11);
        out.beta.push(c.beta[k] - e12 * ((-0.5 * w).exp() / e11));
    }
    out
}

/// `(t, M)` pairs recorded by a run, `M` accumulated by path integration.
pub fn functional_trace(history: &[HistoryEntry]) -> Result<Vec<(f64, f64)>, SolverError> {
    if history.is_empty() {
        return Err(SolverError::EmptyHistory);
    }
    Ok(history.iter().map(|h| (h.time, h.functional)).collect())
}

/// `∫ u1`, the log-ratio term of the first block. Along a geodesic its first
/// and second derivatives are `∫ s1` and `∫ |off|^2`; in the determinant gauge
/// the parameter enters `M` only through `-alpha` times this term.
pub fn first_block_log_ratio(grid: TorusGrid, c: &Coordinates) -> f64 {
    grid.integrate(&c.u1)
}

/// `M` at the geodesic points `Q^† e^{tS} Q` for each `t`, evaluated directly.
pub fn functional_along_geodesic(
    spec: &ProblemSpec,
    phi0: &TwistedField,
    c: &Coordinates,
    dir: &Direction,
    ts: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let ctx = Context::new(spec, phi0)?;
    ctx.check(c)?;
    Ok(ts.iter().map(|&t| ctx.value(&geodesic_point(c, dir, t))).collect())
}

/// `d/dt M` at `t = 0` along the geodesic in direction `dir`.
pub fn first_variation(spec: &ProblemSpec, phi0: &TwistedField, c: &Coordinates, dir: &Direction) -> Result<f64, SolverError> {
    let ctx = Context::new(spec, phi0)?;
    ctx.check(c)?;
    let g = ctx.grid;
    let (r1, r2, gb, _) = ctx.gradient(c);
    let beta_dot: Vec<Complex64> = (0..g.len()).map(|k| -dir.off[k] * (-0.5 * (c.u1[k] - c.u2[k])).exp()).collect();
    Ok(inner(g, &r1, &dir.s1) + inner(g, &r2, &dir.s2) + re_inner(g, &gb, &beta_dot))
}

/// `d²/dt² M` at `t = 0` along the geodesic, by the exact chain rule for the
/// discrete functional.
pub fn second_variation(spec: &ProblemSpec, phi0: &TwistedField, c: &Coordinates, dir: &Direction) -> Result<f64, SolverError> {
    let ctx = Context::new(spec, phi0)?;
    ctx.check(c)?;
    let g = ctx.grid;
    let n = g.len();
    let (r1, r2, _, phi) = ctx.gradient(c);
    let w: Vec<f64> = (0..n).map(|k| c.u1[k] - c.u2[k]).collect();
    let beta_1: Vec<Complex64> = (0..n).map(|k| -dir.off[k] * (-0.5 * w[k]).exp()).collect();
    let beta_2: Vec<Complex64> = (0..n).map(|k| -dir.off[k] * ((dir.s2[k] - dir.s1[k]) * (-0.5 * w[k]).exp())).collect();
    let db1 = ctx.dbar.apply_raw(&beta_1);
    let db2 = ctx.dbar.apply_raw(&beta_2);
    let ls1 = laplacian_raw(g, &dir.s1);
    let ls2 = laplacian_raw(g, &dir.s2);
    let dens: Vec<f64> = (0..n)
        .map(|k| {
            let ew = w[k].exp();
            let wd = dir.s1[k] - dir.s2[k];
            let u2 = dir.off[k].norm_sqr();
            dir.s1[k] * ls1[k] + dir.s2[k] * ls2[k] + (r1[k] - r2[k]) * u2
                + ew * phi[k].norm_sqr() * wd * wd
                + 4.0 * ew * wd * (phi[k].conj() * db1[k]).re
                + 2.0 * ew * db1[k].norm_sqr()
                + 2.0 * ew * (phi[k].conj() * db2[k]).re
        })
        .collect();
    Ok(g.integrate(&dens))
}

/// The second variation written as `‖[∂̄_E, σ]‖²_H - alpha ∫|off|²`, with
/// `σ = Q^{-1} S Q` the direction as an endomorphism of the holomorphic
/// extension. Agrees with [`second_variation`] up to discretization error.
pub fn second_variation_connection(
    spec: &ProblemSpec,
    phi0: &TwistedField,
    c: &Coordinates,
    dir: &Direction,
) -> Result<f64, SolverError> {
    let ctx = Context::new(spec, phi0)?;
    ctx.check(c)?;
    let g = ctx.grid;
    let n = g.len();
    let delta = spec.twist();
    let mut s11 = Vec::with_capacity(n);
    let mut s12 = Vec::with_capacity(n);
    let mut s21 = Vec::with_capacity(n);
    let mut s22 = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = (dir.s1[k], dir.s2[k]);
        let u = dir.off[k];
        let beta = c.beta[k];
        let eh = (0.5 * (c.u1[k] - c.u2[k])).exp();
        let low = u.conj() * eh;
        s11.push(Complex64::new(a, 0.0) + beta * low);
        s12.push(beta * (b - a) + u / eh - beta * beta * low);
        s21.push(low);
        s22.push(Complex64::new(b, 0.0) - low * beta);
    }
    let d0 = Dbar::new(g, 0);
    let dm = Dbar::new(g, -delta);
    let ds11 = d0.apply_raw(&s11);
    let ds22 = d0.apply_raw(&s22);
    let ds12 = ctx.dbar.apply_raw(&s12);
    let ds21 = dm.apply_raw(&s21);
    let phi0 = ctx.phi0;
    let dens: Vec<f64> = (0..n)
        .map(|k| {
            let a11 = ds11[k] + phi0[k] * s21[k];
            let a12 = ds12[k] + phi0[k] * s22[k] - s11[k] * phi0[k];
            let a21 = ds21[k];
            let a22 = ds22[k] - s21[k] * phi0[k];
            let ea = c.u1[k].exp();
            let hb = -c.beta[k] * ea;
            let hc = c.u2[k].exp() + hb.norm_sqr() / ea;
            hermitian_norm_sq([[a11, a12], [a21, a22]], ea, hb, hc) - spec.alpha_f64() * dir.off[k].norm_sqr()
        })
        .collect();
    Ok(g.integrate(&dens))
}

/// `Tr(A H^{-1} A^† H)` for `H = [[a, b], [conj(b), c]]`.
fn hermitian_norm_sq(m: [[Complex64; 2]; 2], a: f64, b: Complex64, c: f64) -> f64 {
    let h = [[Complex64::new(a, 0.0), b], [b.conj(), Complex64::new(c, 0.0)]];
    let det = a * c - b.norm_sqr();
    let hinv = [[Complex64::new(c / det, 0.0), -b / det], [-b.conj() / det, Complex64::new(a / det, 0.0)]];
    let mul = |x: [[Complex64; 2]; 2], y: [[Complex64; 2]; 2]| {
        let mut z = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        z
    };
    let adj = [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]];
    let p = mul(mul(mul(m, hinv), adj), h);
    (p[0][0] + p[1][1]).re
}
