//! Stability certificates read off a solution, and the exact filtration
//! diagnostic `Q`.

use serde::{Deserialize, Serialize};

use super::residual::residual;
use super::spec::{to_f64, ProblemSpec};
use super::state::SolverState;
use super::SolverError;
use crate::stability::{int, theta, AlphaParam, Rational, StabilityError, SubobjectWitness};

/// Integrated Chern–Weil balance for one witness at a given metric:
/// `theta + slack = r1' rho1 + r2' rho2`, where `slack` collects the
/// non-negative geometric terms (second fundamental forms and the part of the
/// Higgs field not preserved by the witness) and `rho_i = ∫R_i / 2π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub witness: SubobjectWitness,
    pub theta: Rational,
    pub slack: f64,
    /// `theta + slack`; zero at an exact solution.
    pub identity_defect: f64,
    /// `r1' rho1 + r2' rho2`; equals `identity_defect` up to rounding.
    pub residual_charge: f64,
    /// `‖phi‖_H^2 / 2π`.
    pub higgs_energy: f64,
}

impl Certificate {
    /// `theta < 0`, i.e. the witness does not destabilize.
    pub fn certifies_stability(&self) -> bool {
        self.theta < int(0)
    }
}

/// Evaluate the balance for each witness. Fails with
/// [`SolverError::Inconsistent`] when a slack is below `-tolerance`.
pub fn stability_certificate(
    state: &SolverState,
    spec: &ProblemSpec,
    witnesses: &[SubobjectWitness],
    tolerance: f64,
) -> Result<Vec<Certificate>, SolverError> {
    let pair = spec.pair();
    let params = AlphaParam::new(spec.alpha, &pair).to_tuple();
    let grid = spec.grid;
    let area = grid.total_area();
    let w = state.weights();
    let higgs_energy = state.phi.weighted_norm_sq(&w) / area;
    let r = residual(state, spec);
    let rho1 = grid.integrate(&r.first) / area;
    let rho2 = grid.integrate(&r.second) / area;
    let (d1, d2) = (spec.d1 as f64, spec.d2 as f64);
    witnesses
        .iter()
        .map(|wit| {
            wit.validate(&pair)?;
            let (r1, r2) = (wit.r1() as f64, wit.r2() as f64);
            let degree_gap = r1 * d1 + r2 * d2 - to_f64(wit.d1()) - to_f64(wit.d2());
            let slack = degree_gap + higgs_energy * (r1 - r2);
            let th = theta(&params, wit);
            if slack < -tolerance {
                return Err(SolverError::Inconsistent(format!(
                    "negative slack {slack:e} for witness {wit:?} (theta = {th})"
                )));
            }
            Ok(Certificate {
                witness: *wit,
                theta: th,
                slack,
                identity_defect: to_f64(th) + slack,
                residual_charge: r1 * rho1 + r2 * rho2,
                higgs_energy,
            })
        })
        .collect()
}

/// The filtration diagnostic, computed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDiagnostic {
    pub q: Rational,
    /// `r mu(E) - r1 tau1 - r2 tau2`; zero by the parameter constraint.
    pub constraint_term: Rational,
    /// `theta` of each filtration step.
    pub thetas: Vec<Rational>,
}

/// `Q = lambda_top (r mu(E) - r1 tau1 - r2 tau2) - Σ gap_i theta_i` for a
/// filtration by the given witnesses with positive eigenvalue gaps.
/// Positive whenever every step has `theta < 0`.
pub fn q_diagnostic(
    spec: &ProblemSpec,
    filtration: &[SubobjectWitness],
    gaps: &[Rational],
    top_eigenvalue: Rational,
) -> Result<QDiagnostic, SolverError> {
    if gaps.len() != filtration.len() {
        return Err(SolverError::InvalidSpec(format!(
            "{} gaps for a filtration of length {}",
            gaps.len(),
            filtration.len()
        )));
    }
    if gaps.iter().any(|g| *g <= int(0)) {
        return Err(StabilityError::NonPositiveGap.into());
    }
    let pair = spec.pair();
    let params = AlphaParam::new(spec.alpha, &pair).to_tuple();
    let constraint_term = pair.total_degree() - params.tau1 * int(pair.e1.rank as i128) - params.tau2 * int(pair.e2.rank as i128);
    let mut q = top_eigenvalue * constraint_term;
    let mut thetas = Vec::with_capacity(filtration.len());
    for (wit, gap) in filtration.iter().zip(gaps) {
        wit.validate(&pair)?;
        let th = theta(&params, wit);
        q -= *gap * th;
        thetas.push(th);
    }
    Ok(QDiagnostic { q, constraint_term, thetas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chamber::{admissible_witnesses_line_case, DivisorData};
    use crate::stability::rat;
    use crate::torus::TorusGrid;
    use crate::vortex::PhiSeed;

    #[test]
    fn split_boundary_is_equality_case() {
        let g = TorusGrid::new(16).unwrap();
        let spec = ProblemSpec::new(-1, 0, rat(-1, 1), g).with_seed(PhiSeed::Zero);
        let s = SolverState::initial(&spec).unwrap();
        let ws = admissible_witnesses_line_case(-1, 0, &DivisorData::new(-1)).unwrap();
        let c = stability_certificate(&s, &spec, &ws[..1], 1e-8).unwrap();
        assert_eq!(c[0].theta, int(0));
        assert_eq!(c[0].slack, 0.0);
    }

    #[test]
    fn q_is_positive_for_stable_step() {
        let g = TorusGrid::new(16).unwrap();
        let spec = ProblemSpec::new(-1, 0, rat(-1, 2), g);
        let ws = admissible_witnesses_line_case(-1, 0, &DivisorData::new(-1)).unwrap();
        let q = q_diagnostic(&spec, &ws[..1], &[rat(1, 1)], rat(3, 1)).unwrap();
        assert_eq!(q.constraint_term, int(0));
        assert_eq!(q.q, rat(1, 4));
        assert!(q_diagnostic(&spec, &ws[..1], &[int(0)], int(1)).is_err());
    }
}
