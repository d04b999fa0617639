//! The rank-2 metric on the extension assembled from the line-bundle pieces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::residual::residual;
use super::spec::ProblemSpec;
use super::state::SolverState;
use super::SolverError;
use crate::torus::FormType;

/// Pointwise `iΛF_H` of the extension in the split frame, compared with
/// `diag(tau1, tau2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank2Report {
    /// `sup |iΛF_11 - tau1|`, `sup |iΛF_22 - tau2|`.
    pub diagonal_deviation: (f64, f64),
    /// `sup |iΛ∂φ|_H`, the discrete co-closedness defect of the Higgs field.
    pub off_diagonal_deviation: f64,
    /// `∫ tr iΛF_H / 2π`; equals `d1 + d2`.
    pub total_degree: f64,
    /// `ππ^*` for `π = (0, sqrt(-alpha))`; only for `alpha <= 0`.
    pub pi_pi_star: Option<f64>,
    /// `sup |iΛF_H - π^*π - tau1 I|` on the diagonal; only for `alpha <= 0`.
    pub triple_equation_deviation: Option<f64>,
}

impl Rank2Report {
    pub fn sup_deviation(&self) -> f64 {
        self.diagonal_deviation.0.max(self.diagonal_deviation.1).max(self.off_diagonal_deviation)
    }
}

pub fn assemble_rank2(state: &SolverState, spec: &ProblemSpec) -> Result<Rank2Report, SolverError> {
    let grid = spec.grid;
    let (tau1, tau2) = spec.taus_f64();
    let r = residual(state, spec);
    // diagonal blocks iΛF_{H_i} ± |φ|²_H = R_i + tau_i
    let b11: Vec<f64> = r.first.iter().map(|v| v + tau1).collect();
    let b22: Vec<f64> = r.second.iter().map(|v| v + tau2).collect();
    let sup = |v: &[f64], t: f64| v.iter().fold(0.0f64, |m, x| m.max((x - t).abs()));
    let w = state.weights();
    debug_assert_eq!(state.phi.form, FormType::ZeroOneForm);
    let off = state.dbar.i_lambda_partial(&state.phi, &w)?;
    let off_dev = off
        .values
        .iter()
        .zip(&w.values)
        .fold(0.0f64, |m, (z, e): (&Complex64, &f64)| m.max(z.norm() * e.sqrt()));
    let trace: Vec<f64> = b11.iter().zip(&b22).map(|(a, b)| a + b).collect();
    let total_degree = grid.integrate(&trace) / grid.total_area();
    let alpha = spec.alpha_f64();
    let (pi_pi_star, triple) = if alpha <= 0.0 {
        let pp = (-alpha).sqrt().powi(2);
        // π^*π = diag(0, -alpha)
        let dev = sup(&b11, tau1).max(b22.iter().fold(0.0f64, |m, x| m.max((x + alpha - tau1).abs())));
        (Some(pp), Some(dev))
    } else {
        (None, None)
    };
    Ok(Rank2Report {
        diagonal_deviation: (sup(&b11, tau1), sup(&b22, tau2)),
        off_diagonal_deviation: off_dev,
        total_degree,
        pi_pi_star,
        triple_equation_deviation: triple,
    })
}
