//! Coupling-parameter sweeps comparing flow outcomes with the algebraic verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::{solve, Outcome};
use super::spec::ProblemSpec;
use super::SolverError;
use crate::chamber::{classify_extension, DivisorData};
use crate::stability::{Rational, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: Rational,
    pub outcome: Outcome,
    pub verdict: Status,
    pub iterations: usize,
    pub sup_residual: f64,
    /// `sup |∫(R1 + R2)|` over the recorded history.
    pub max_trace_integral: f64,
    pub functional_monotone: bool,
    pub max_log_weight: f64,
    /// Converged exactly when stable.
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.agrees)
    }

    /// Disagreements only occur next to a change of verdict, i.e. the two
    /// status boundaries coincide within one sweep step.
    pub fn boundary_within_one_step(&self) -> bool {
        let n = self.rows.len();
        (0..n).filter(|&i| !self.rows[i].agrees).all(|i| {
            let v = self.rows[i].verdict;
            (i > 0 && self.rows[i - 1].verdict != v) || (i + 1 < n && self.rows[i + 1].verdict != v)
        })
    }

    pub fn indeterminate_count(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome == Outcome::Indeterminate).count()
    }
}

/// Solve `base` at each `alpha` (independent instances, run in parallel),
/// sorted by `alpha`, and classify the extension with the given divisor data.
pub fn sweep(base: &ProblemSpec, alphas: &[Rational], div: &DivisorData) -> Result<SweepReport, SolverError> {
    let mut alphas = alphas.to_vec();
    alphas.sort();
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let mut spec = base.clone();
            spec.alpha = alpha;
            let verdict = classify_extension(spec.d1, spec.d2, div, alpha)?.verdict.status;
            let rep = solve(&spec)?;
            let h = rep.history();
            let functional_monotone =
                h.windows(2).all(|p| p[1].functional <= p[0].functional + 1e-12 * p[0].functional.abs().max(1.0));
            Ok(SweepRow {
                alpha,
                outcome: rep.outcome,
                verdict,
                iterations: rep.iterations,
                sup_residual: rep.residual.sup_norm,
                max_trace_integral: rep.residual.trace_integral.abs().max(rep.max_trace_integral),
                functional_monotone,
                max_log_weight: rep.max_log_weight,
                agrees: (rep.outcome == Outcome::Converged) == (verdict == Status::Stable),
            })
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    Ok(SweepReport { rows })
}
