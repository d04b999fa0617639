//! Harmonic (0,1)-forms: weighted projection and kernel counting.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Dbar, FieldError, FormType, TorusGrid, TwistedField, Weights, DBAR_SCALE};

/// Relative residual at which the projection solve stops.
pub const PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Projection {
    /// `phi0 + dbar(beta)`, weighted-coclosed.
    pub field: TwistedField,
    pub beta: TwistedField,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Diagonal of `D^† W D`.
fn normal_diagonal(op: &Dbar, w: &Weights) -> Vec<f64> {
    let g = op.grid();
    let n = g.n();
    let k = super::ops::DBAR_SCALE * super::ops::DBAR_SCALE / (g.h() * g.h());
    (0..g.len())
        .map(|m| {
            let (i, j) = (m / n, m % n);
            let left = g.idx((i + n - 1) % n, j);
            let below = g.idx(i, (j + n - 1) % n);
            k * (2.0 * w.values[m] + w.values[left] + w.values[below])
        })
        .collect()
}

/// Preconditioned conjugate gradients on `D^† W D beta = rhs`, starting from
/// `x0`. Converged once the residual is below `tol` relative to the larger of
/// `|rhs|` and `scale`; the floor keeps the iteration from chasing rounding
/// noise into the exact null space of `D` when `rhs` is nearly zero.
pub(crate) fn solve_normal(
    op: &Dbar,
    w: &Weights,
    rhs: &[Complex64],
    x0: Option<&[Complex64]>,
    tol: f64,
    scale: f64,
) -> Result<(Vec<Complex64>, usize, f64), FieldError> {
    let apply = |x: &[Complex64]| {
        let dx = op.apply_raw(x);
        let wdx: Vec<Complex64> = dx.iter().zip(&w.values).map(|(z, e)| z * e).collect();
        op.apply_adj_raw(&wdx)
    };
    let diag = normal_diagonal(op, w);
    let bnorm = norm(rhs).max(scale);
    let n2 = rhs.len();
    let mut x = x0.map_or_else(|| vec![Complex64::new(0.0, 0.0); n2], |v| v.to_vec());
    if bnorm == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); n2], 0, 0.0));
    }
    let ax = apply(&x);
    let mut r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<Complex64> = r.iter().zip(&diag).map(|(v, d)| v / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let max_iter = 20 * n2.max(100);
    let mut rel = norm(&r) / bnorm;
    for it in 0..max_iter {
        if rel < tol {
            return Ok((x, it, rel));
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap).re;
        if pap <= 0.0 {
            return Err(FieldError::SolveFailed { iterations: it, residual: rel });
        }
        let a = rz / pap;
        for m in 0..n2 {
            x[m] += a * p[m];
            r[m] -= a * ap[m];
        }
        rel = norm(&r) / bnorm;
        for m in 0..n2 {
            z[m] = r[m] / diag[m];
        }
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for m in 0..n2 {
            p[m] = z[m] + beta * p[m];
        }
    }
    if rel < tol {
        return Ok((x, max_iter, rel));
    }
    Err(FieldError::SolveFailed { iterations: max_iter, residual: rel })
}

/// Weighted harmonic representative of the class of `phi0`: the minimizer of
/// `‖phi0 + ∂̄ beta‖_W` over sections `beta`.
pub fn harmonic_project(phi0: &TwistedField, w: &Weights) -> Result<Projection, FieldError> {
    harmonic_project_from(phi0, w, None, PROJECTION_TOL)
}

/// As [`harmonic_project`], warm-started from `beta0` with a custom tolerance.
pub fn harmonic_project_from(
    phi0: &TwistedField,
    w: &Weights,
    beta0: Option<&TwistedField>,
    tol: f64,
) -> Result<Projection, FieldError> {
    if phi0.form != FormType::ZeroOneForm {
        return Err(FieldError::FormMismatch { expected: FormType::ZeroOneForm, found: phi0.form });
    }
    if w.values.len() != phi0.values.len() {
        return Err(FieldError::LengthMismatch { expected: phi0.values.len(), found: w.values.len() });
    }
    let op = Dbar::new(phi0.grid, phi0.twist);
    let wphi: Vec<Complex64> = phi0.values.iter().zip(&w.values).map(|(z, e)| -z * e).collect();
    let rhs = op.apply_adj_raw(&wphi);
    // size of D^† applied to a generic field of the magnitude of W phi0
    let scale = 2.0 * DBAR_SCALE / phi0.grid.h() * norm(&wphi);
    let (beta, iterations, residual) = solve_normal(&op, w, &rhs, beta0.map(|b| b.values.as_slice()), tol, scale)?;
    let dbeta = op.apply_raw(&beta);
    let field = phi0.like(phi0.values.iter().zip(&dbeta).map(|(a, b)| a + b).collect());
    let beta = TwistedField { grid: phi0.grid, twist: phi0.twist, form: FormType::Function, values: beta };
    Ok(Projection { field, beta, iterations, residual })
}

/// Count of harmonic (0,1)-forms of a given twist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicDimension {
    pub twist: i64,
    /// Modes with singular value of `∂̄^†` below the null threshold.
    pub near_null: usize,
    /// Near-null modes that are smooth at the grid scale.
    pub resolved: usize,
    /// `-δ` for `δ < 0`, `1` for `δ = 0`, `0` for `δ > 0`.
    pub expected: usize,
    /// Smallest singular values of `∂̄` seen by the iteration, ascending.
    pub smallest_singular_values: Vec<f64>,
    /// Covariant-Laplacian Rayleigh quotients of the near-null modes, ascending.
    pub roughness: Vec<f64>,
}

pub const NULL_SINGULAR_THRESHOLD: f64 = 1e-3;

/// Expected dimension of the harmonic (0,1)-forms of degree `twist` on an elliptic curve.
pub fn expected_harmonic_dimension(twist: i64) -> usize {
    match twist {
        t if t < 0 => (-t) as usize,
        0 => 1,
        _ => 0,
    }
}

/// Count of the cokernel of `∂̄`. A square difference operator has index
/// zero, so grid-scale doubler modes appear alongside the genuine harmonic
/// forms; modes whose covariant-Laplacian Rayleigh quotient exceeds `N²` are
/// discarded as unresolved.
///
/// The near-null space of `∂̄ ∂̄^†` is found by block inverse iteration on a
/// dense Cholesky factor of the slightly shifted Gram matrix; the block grows
/// until it visibly extends past the null space.
pub fn harmonic_dimension(grid: TorusGrid, twist: i64) -> HarmonicDimension {
    let n2 = grid.len();
    let op = Dbar::new(grid, twist);
    let mut gram = DMatrix::<Complex64>::zeros(n2, n2);
    let mut e = vec![Complex64::new(0.0, 0.0); n2];
    for k in 0..n2 {
        e[k] = Complex64::new(1.0, 0.0);
        let col = op.apply_raw(&op.apply_adj_raw(&e));
        e[k] = Complex64::new(0.0, 0.0);
        for (m, v) in col.into_iter().enumerate() {
            gram[(m, k)] = v;
        }
    }
    let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    let shift = 1e-2 * NULL_SINGULAR_THRESHOLD * NULL_SINGULAR_THRESHOLD;
    let mut shifted = gram.clone();
    for k in 0..n2 {
        shifted[(k, k)] += shift;
    }
    let chol = shifted.cholesky().expect("shifted Gram matrix is positive definite");

    let threshold = NULL_SINGULAR_THRESHOLD * NULL_SINGULAR_THRESHOLD;
    let mut block = 2 * twist.unsigned_abs() as usize + 6;
    let (ritz, vectors) = loop {
        // deterministic, generic starting block
        let mut x = DMatrix::<Complex64>::from_fn(n2, block, |m, c| {
            let t = (m as f64 + 0.5) * (c as f64 * 0.618_033_988_75 + 0.377) * 12.9898;
            Complex64::new(t.sin(), (1.7 * t).cos())
        });
        for _ in 0..4 {
            x = chol.solve(&x).qr().q();
        }
        let small = x.adjoint() * &gram * &x;
        let small = (&small + small.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(small);
        let above = eig.eigenvalues.iter().filter(|&&l| l >= threshold).count();
        if above >= 2 || block >= n2 {
            break (eig.eigenvalues, &x * eig.eigenvectors);
        }
        block = (2 * block).min(n2);
    };
    let mut order: Vec<usize> = (0..ritz.len()).collect();
    order.sort_by(|&a, &b| ritz[a].total_cmp(&ritz[b]));
    let smallest_singular_values: Vec<f64> = order.iter().map(|&k| ritz[k].max(0.0).sqrt()).collect();
    let null: Vec<usize> = order.iter().copied().take_while(|&k| ritz[k] < threshold).collect();

    let links = op.links();
    let h2 = grid.h() * grid.h();
    let cov_lap = |v: &[Complex64]| {
        let mut out: Vec<Complex64> = v.iter().map(|z| z * 4.0).collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); n2];
        for f in [Links::fwd_x, Links::bwd_x, Links::fwd_y, Links::bwd_y] {
            f(links, v, &mut buf);
            out.iter_mut().zip(&buf).for_each(|(o, b)| *o -= b);
        }
        out.iter_mut().for_each(|o| *o /= h2);
        out
    };
    let k = null.len();
    let basis: Vec<Vec<Complex64>> = null
        .iter()
        .map(|&c| vectors.column(c).iter().copied().collect())
        .collect();
    let images: Vec<Vec<Complex64>> = basis.iter().map(|v| cov_lap(v)).collect();
    let mut small = DMatrix::<Complex64>::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            small[(a, b)] = dot(&basis[a], &images[b]);
        }
    }
    let mut roughness: Vec<f64> = if k > 0 {
        // hermitize against rounding
        let sym = (&small + small.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
    } else {
        Vec::new()
    };
    roughness.sort_by(f64::total_cmp);
    let cutoff = (grid.n() * grid.n()) as f64;
    let resolved = roughness.iter().filter(|&&r| r < cutoff).count();
    HarmonicDimension {
        twist,
        near_null: k,
        resolved,
        expected: expected_harmonic_dimension(twist),
        smallest_singular_values,
        roughness,
    }
}

use super::ops::Links;
