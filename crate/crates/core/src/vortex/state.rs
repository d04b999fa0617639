use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spec::{canonical_harmonic_seed, PhiSeed, ProblemSpec};
use super::SolverError;
use crate::torus::{harmonic_project, ConformalExponent, Dbar, FormType, TwistedField, Weights};

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub time: f64,
    pub sup_residual: f64,
    pub l2_residual: f64,
    /// Functional relative to the background metric, by path integration.
    pub functional: f64,
    /// `sup |log(K^{-1} H)|`.
    pub sup_s: f64,
    pub step: f64,
}

/// Metric and Higgs field during the flow.
///
/// The metric is encoded as in the gauge-fixed picture: diagonal log-densities
/// `u1`, `u2` on the two line bundles plus the off-diagonal gauge `beta`, which
/// acts on the Higgs field as `phi = phi0 + ∂̄ beta`.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub u1: ConformalExponent,
    pub u2: ConformalExponent,
    /// Fixed class representative.
    pub phi0: TwistedField,
    pub beta: TwistedField,
    /// `phi0 + ∂̄ beta`.
    pub phi: TwistedField,
    /// `L^2` norm of the seed before normalization.
    pub seed_scale: f64,
    pub iteration: usize,
    pub time: f64,
    pub functional: f64,
    pub step: f64,
    pub history: Vec<HistoryEntry>,
    pub(crate) dbar: Dbar,
}

impl SolverState {
    pub fn initial(spec: &ProblemSpec) -> Result<Self, SolverError> {
        spec.validate()?;
        let grid = spec.grid;
        let twist = spec.twist();
        let (phi0, seed_scale) = match &spec.seed {
            PhiSeed::CanonicalHarmonic => canonical_harmonic_seed(grid, twist)?,
            PhiSeed::Zero => (TwistedField::zeros(grid, twist, FormType::ZeroOneForm), 0.0),
            PhiSeed::Field(f) => {
                let n = f.norm_sq().sqrt();
                if n > 0.0 {
                    (f.scaled(Complex64::new(1.0 / n, 0.0)), n)
                } else {
                    (f.clone(), 0.0)
                }
            }
        };
        Ok(SolverState {
            u1: ConformalExponent::zeros(grid, spec.d1),
            u2: ConformalExponent::zeros(grid, spec.d2),
            beta: TwistedField::zeros(grid, twist, FormType::Function),
            phi: phi0.clone(),
            phi0,
            seed_scale,
            iteration: 0,
            time: 0.0,
            functional: 0.0,
            step: spec.flow.step,
            history: Vec::new(),
            dbar: Dbar::new(grid, twist),
        })
    }

    pub fn dbar(&self) -> &Dbar {
        &self.dbar
    }

    pub fn set_beta(&mut self, beta: TwistedField) {
        let db = self.dbar.apply_raw(&beta.values);
        self.phi = self.phi0.like(self.phi0.values.iter().zip(&db).map(|(a, b)| a + b).collect());
        self.beta = beta;
    }

    /// `w = u1 - u2`.
    pub fn log_weight(&self) -> Vec<f64> {
        self.u1.values.iter().zip(&self.u2.values).map(|(a, b)| a - b).collect()
    }

    pub fn weights(&self) -> Weights {
        Weights::from_pair(&self.u1, &self.u2)
    }

    /// `∫ (u1 + u2)`; the flow keeps it at zero.
    pub fn gauge_defect(&self) -> f64 {
        let s: Vec<f64> = self.u1.values.iter().zip(&self.u2.values).map(|(a, b)| a + b).collect();
        self.u1.grid.integrate(&s)
    }

    pub(crate) fn fix_gauge(&mut self) {
        let grid = self.u1.grid;
        let s: Vec<f64> = self.u1.values.iter().zip(&self.u2.values).map(|(a, b)| a + b).collect();
        let shift = grid.mean(&s) / 2.0;
        self.u1.values.iter_mut().for_each(|v| *v -= shift);
        self.u2.values.iter_mut().for_each(|v| *v -= shift);
    }

    /// `sup |log(K^{-1} H)|` for the full rank-2 metric
    /// `H = [[a, -beta a], [-conj(beta) a, e^{u2} + |beta|^2 a]]`, `a = e^{u1}`.
    pub fn sup_s(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..self.u1.values.len() {
            let a = self.u1.values[k].exp();
            let b = self.beta.values[k] * a;
            let c = self.u2.values[k].exp() + self.beta.values[k].norm_sqr() * a;
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
            let lo = (a * c - b.norm_sqr()) / (mean + rad);
            m = m.max((mean + rad).ln().abs()).max(lo.ln().abs());
        }
        m
    }

    /// Relative residual of the least-squares solve `∂̄ x ≈ phi - phi0`: zero
    /// when the cumulative correction lies in the image of `∂̄`, i.e. the
    /// class of the Higgs field is unchanged.
    pub fn class_membership_residual(&self) -> Result<f64, SolverError> {
        let correction = self.phi0.sub(&self.phi);
        let size = correction.norm_sq().sqrt();
        if size == 0.0 {
            return Ok(0.0);
        }
        let p = harmonic_project(&correction, &Weights::flat(self.phi.grid))?;
        Ok(p.field.norm_sq().sqrt() / size)
    }

    pub fn is_finite(&self) -> bool {
        self.u1.values.iter().chain(&self.u2.values).all(|v| v.is_finite())
            && self.phi.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::rat;
    use crate::torus::TorusGrid;

    #[test]
    fn initial_state_is_background() {
        let g = TorusGrid::new(16).unwrap();
        let spec = ProblemSpec::new(-1, 0, rat(-1, 2), g);
        let s = SolverState::initial(&spec).unwrap();
        assert_eq!(s.sup_s(), 0.0);
        assert_eq!(s.gauge_defect(), 0.0);
        assert!((s.phi.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sup_s_of_diagonal_metric() {
        let g = TorusGrid::new(16).unwrap();
        let spec = ProblemSpec::new(-1, 0, rat(-1, 2), g).with_seed(PhiSeed::Zero);
        let mut s = SolverState::initial(&spec).unwrap();
        s.u1.values[3] = 0.7;
        s.u2.values[5] = -1.2;
        assert!((s.sup_s() - 1.2).abs() < 1e-12);
    }
}
