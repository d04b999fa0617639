//! Independent damped-Newton solve of the same discrete system.
//!
//! With the gauge `u1 + u2 = 0` the pair of equations collapses to one scalar
//! equation for `w = u1 - u2`:
//!
//! ```text
//! F(w) = L w + 2 |phi|^2 e^w + (d1 - d2) - alpha = 0
//! ```
//!
//! alternated with harmonic re-projection of `phi` for the weights `e^w`.

use super::residual::residual;
use super::spec::ProblemSpec;
use super::state::SolverState;
use super::SolverError;
use crate::torus::fft::PeriodicSolver;
use crate::torus::{harmonic_project_from, laplacian_raw, TorusGrid, PROJECTION_TOL};

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub state: SolverState,
    pub converged: bool,
    /// Outer (Newton + projection) iterations.
    pub iterations: usize,
    pub sup_residual: f64,
}

fn scalar_residual(grid: TorusGrid, w: &[f64], phi_sq: &[f64], shift: f64) -> Vec<f64> {
    let lw = laplacian_raw(grid, w);
    (0..w.len()).map(|k| lw[k] + 2.0 * phi_sq[k] * w[k].exp() + shift).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// CG on `(L + diag(c)) x = b`, preconditioned by `(mean(c) + L)^{-1}`.
fn solve_jacobian(grid: TorusGrid, pre: &PeriodicSolver, c: &[f64], b: &[f64]) -> Vec<f64> {
    let mean_c = c.iter().sum::<f64>() / c.len() as f64;
    let apply = |x: &[f64]| {
        let lx = laplacian_raw(grid, x);
        lx.iter().zip(c).zip(x).map(|((l, ci), xi)| l + ci * xi).collect::<Vec<f64>>()
    };
    let precond = |r: &[f64]| pre.solve(mean_c, 1.0, r);
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let bnorm = dot(b, b).sqrt();
    for _ in 0..500 {
        if dot(&r, &r).sqrt() <= 1e-12 * bnorm {
            break;
        }
        let ap = apply(&p);
        let a = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += a * p[k];
            r[k] -= a * ap[k];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    x
}

/// Damped Newton with alternating harmonic projection, from the background
/// metric. Fails if the Higgs field vanishes identically away from the split
/// boundary (the Jacobian is then singular).
pub fn newton_solve(spec: &ProblemSpec, tolerance: f64, max_iterations: usize) -> Result<NewtonReport, SolverError> {
    let grid = spec.grid;
    let mut state = SolverState::initial(spec)?;
    let pre = PeriodicSolver::new(grid);
    let shift = (spec.d1 - spec.d2) as f64 - spec.alpha_f64();
    let mut w = vec![0.0; grid.len()];
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let p = harmonic_project_from(&state.phi0, &crate::torus::Weights::from_log(&w), Some(&state.beta), PROJECTION_TOL)?;
        state.set_beta(p.beta);
        let phi_sq = state.phi.pointwise_norm_sq();
        let f = scalar_residual(grid, &w, &phi_sq, shift);
        let fs = sup(&f);
        if !fs.is_finite() {
            return Err(SolverError::NonFinite { iteration: iterations });
        }
        if fs < tolerance {
            converged = true;
            break;
        }
        if iterations >= max_iterations {
            break;
        }
        let c: Vec<f64> = (0..w.len()).map(|k| 2.0 * phi_sq[k] * w[k].exp()).collect();
        if c.iter().all(|&v| v == 0.0) {
            return Err(SolverError::Inconsistent("Newton Jacobian is singular: Higgs field vanishes".into()));
        }
        let dw = solve_jacobian(grid, &pre, &c, &f);
        let f_norm = dot(&f, &f);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a - lambda * b).collect();
            let ft = scalar_residual(grid, &trial, &phi_sq, shift);
            if dot(&ft, &ft) < f_norm || lambda < 1e-4 {
                w = trial;
                break;
            }
            lambda *= 0.5;
        }
        iterations += 1;
    }
    state.u1.values = w.iter().map(|v| 0.5 * v).collect();
    state.u2.values = w.iter().map(|v| -0.5 * v).collect();
    state.iteration = iterations;
    let sup_residual = residual(&state, spec).sup_norm;
    Ok(NewtonReport { state, converged, iterations, sup_residual })
}
