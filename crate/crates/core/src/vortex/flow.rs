//! Semi-implicit gradient flow for the coupled vortex equations.
//!
//! Each step moves the log-densities along `-(R1, R2)` with the Laplacian
//! treated implicitly; the Higgs field is periodically re-projected onto the
//! weighted harmonic representative of its class, which minimizes the
//! functional over the off-diagonal gauge. The functional increment of every
//! step is integrated along the segment and must be non-positive.

use serde::{Deserialize, Serialize};

use super::functional::{path_increment, Coordinates};
use super::residual::{residual, Residual};
use super::spec::ProblemSpec;
use super::state::{HistoryEntry, SolverState};
use super::SolverError;
use crate::torus::fft::PeriodicSolver;
use crate::torus::{harmonic_project_from, laplacian_raw, PROJECTION_TOL};

/// Gauss–Legendre panels for the per-step functional increment.
const INCREMENT_PANELS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Converged,
    Diverged,
    /// Iteration budget exhausted with neither test met.
    Indeterminate,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::Diverged => "diverged",
            Outcome::Indeterminate => "indeterminate",
        }
    }
}

/// What one accepted step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub step: f64,
    /// Rejected attempts before acceptance.
    pub halvings: usize,
    pub functional_increment: f64,
    pub projected: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub outcome: Outcome,
    pub state: SolverState,
    pub residual: Residual,
    pub iterations: usize,
    /// `max_t sup |u1 - u2|` seen during the run.
    pub max_log_weight: f64,
    /// `max_t |∫(R1 + R2)|`, the conservation defect.
    pub max_trace_integral: f64,
    pub total_halvings: usize,
}

impl SolveReport {
    pub fn history(&self) -> &[HistoryEntry] {
        &self.state.history
    }
}

fn sup_log_weight(state: &SolverState) -> f64 {
    state.u1.values.iter().zip(&state.u2.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

fn reproject(state: &mut SolverState) -> Result<(), SolverError> {
    let w = state.weights();
    let p = harmonic_project_from(&state.phi0, &w, Some(&state.beta), PROJECTION_TOL)?;
    state.set_beta(p.beta);
    Ok(())
}

/// One accepted flow step, halving the step until the functional does not
/// increase. Fails with [`SolverError::StepTooLarge`] below the minimum step.
pub fn flow_step(state: &mut SolverState, spec: &ProblemSpec, solver: &PeriodicSolver) -> Result<StepInfo, SolverError> {
    let grid = spec.grid;
    let r = residual(state, spec);
    let l1 = laplacian_raw(grid, &state.u1.values);
    let l2 = laplacian_raw(grid, &state.u2.values);
    let project = (state.iteration + 1).is_multiple_of(spec.flow.projection_interval);
    let before = Coordinates::of_state(state);
    let scale = 1e-12 * state.functional.abs().max(1.0);
    let mut halvings = 0;
    loop {
        let dt = state.step;
        let mut trial = state.clone();
        let rhs1: Vec<f64> = (0..grid.len()).map(|k| state.u1.values[k] - dt * (r.first[k] - l1[k])).collect();
        let rhs2: Vec<f64> = (0..grid.len()).map(|k| state.u2.values[k] - dt * (r.second[k] - l2[k])).collect();
        trial.u1.values = solver.solve(1.0, dt, &rhs1);
        trial.u2.values = solver.solve(1.0, dt, &rhs2);
        trial.fix_gauge();
        if project {
            reproject(&mut trial)?;
        }
        let finite = trial.is_finite();
        let inc = if finite {
            path_increment(spec, &state.phi0, &before, &Coordinates::of_state(&trial), INCREMENT_PANELS)?
        } else {
            f64::NAN
        };
        if finite && inc <= scale {
            trial.functional += inc;
            trial.time += dt;
            trial.iteration += 1;
            *state = trial;
            return Ok(StepInfo { step: dt, halvings, functional_increment: inc, projected: project });
        }
        halvings += 1;
        state.step *= 0.5;
        if state.step < spec.flow.min_step {
            return Err(SolverError::StepTooLarge { iteration: state.iteration, step: state.step });
        }
    }
}

fn record(state: &mut SolverState, r: &Residual) {
    let entry = HistoryEntry {
        iteration: state.iteration,
        time: state.time,
        sup_residual: r.sup_norm,
        l2_residual: r.l2_norm,
        functional: state.functional,
        sup_s: state.sup_s(),
        step: state.step,
    };
    state.history.push(entry);
}

/// Run the flow from the background metric.
pub fn solve(spec: &ProblemSpec) -> Result<SolveReport, SolverError> {
    let state = SolverState::initial(spec)?;
    solve_from(spec, state)
}

/// Run the flow from a given state (e.g. a loaded snapshot).
pub fn solve_from(spec: &ProblemSpec, mut state: SolverState) -> Result<SolveReport, SolverError> {
    spec.validate()?;
    let solver = PeriodicSolver::new(spec.grid);
    if state.iteration == 0 && state.beta.values.iter().all(|z| z.norm_sqr() == 0.0) {
        reproject(&mut state)?;
    }
    let mut r = residual(&state, spec);
    record(&mut state, &r);
    let mut max_trace = r.trace_integral.abs();
    let mut max_w = sup_log_weight(&state);
    let mut total_halvings = 0;
    let outcome = loop {
        if r.sup_norm < spec.flow.tolerance {
            break Outcome::Converged;
        }
        if state.iteration >= spec.flow.max_iterations {
            break Outcome::Indeterminate;
        }
        let info = match flow_step(&mut state, spec, &solver) {
            Ok(info) => info,
            Err(SolverError::StepTooLarge { .. }) if !state.is_finite() => break Outcome::Diverged,
            Err(e) => return Err(e),
        };
        total_halvings += info.halvings;
        // regrow the step after a clean acceptance
        if info.halvings == 0 {
            state.step = (state.step * 1.25).min(spec.flow.step);
        }
        max_w = max_w.max(sup_log_weight(&state));
        if !state.is_finite() || max_w > spec.flow.divergence_threshold {
            r = residual(&state, spec);
            record(&mut state, &r);
            break Outcome::Diverged;
        }
        r = residual(&state, spec);
        record(&mut state, &r);
        max_trace = max_trace.max(r.trace_integral.abs());
        if !info.projected {
            // only a freshly projected state is tested for convergence
            r.sup_norm = r.sup_norm.max(spec.flow.tolerance);
        }
    };
    let r = residual(&state, spec);
    Ok(SolveReport { outcome, residual: r, iterations: state.iteration, max_log_weight: max_w, max_trace_integral: max_trace, total_halvings, state })
}
