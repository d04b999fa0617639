use super::spec::ProblemSpec;
use super::state::SolverState;
use crate::torus::{laplacian_raw, TorusGrid};

/// Pointwise defect of the coupled vortex equations
///
/// ```text
/// R1 = d1 + L u1 + |phi|^2 e^{u1-u2} - tau1
/// R2 = d2 + L u2 - |phi|^2 e^{u1-u2} - tau2
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub sup_norm: f64,
    /// `(∫ R1^2 + R2^2)^{1/2}`.
    pub l2_norm: f64,
    /// `∫ (R1 + R2)`; vanishes identically up to rounding.
    pub trace_integral: f64,
}

pub fn residual(state: &SolverState, spec: &ProblemSpec) -> Residual {
    let (tau1, tau2) = spec.taus_f64();
    let density: Vec<f64> = state.phi.values.iter().map(|z| z.norm_sqr()).collect();
    residual_parts(
        spec.grid,
        (spec.d1 as f64, spec.d2 as f64),
        (tau1, tau2),
        &state.u1.values,
        &state.u2.values,
        &density,
    )
}

pub(crate) fn residual_parts(
    grid: TorusGrid,
    (d1, d2): (f64, f64),
    (tau1, tau2): (f64, f64),
    u1: &[f64],
    u2: &[f64],
    phi_sq: &[f64],
) -> Residual {
    let l1 = laplacian_raw(grid, u1);
    let l2 = laplacian_raw(grid, u2);
    let n2 = grid.len();
    let mut first = Vec::with_capacity(n2);
    let mut second = Vec::with_capacity(n2);
    for k in 0..n2 {
        let coupling = phi_sq[k] * (u1[k] - u2[k]).exp();
        first.push(d1 + l1[k] + coupling - tau1);
        second.push(d2 + l2[k] - coupling - tau2);
    }
    let sup_norm = first.iter().chain(&second).fold(0.0f64, |m, v| m.max(v.abs()));
    let sq: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a * a + b * b).collect();
    let sum: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a + b).collect();
    Residual { sup_norm, l2_norm: grid.integrate(&sq).sqrt(), trace_integral: grid.integrate(&sum), first, second }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::rat;
    use crate::vortex::PhiSeed;

    #[test]
    fn split_background_residual_is_constant() {
        let g = TorusGrid::new(16).unwrap();
        let spec = ProblemSpec::new(-1, 0, rat(-1, 2), g).with_seed(PhiSeed::Zero);
        let s = SolverState::initial(&spec).unwrap();
        let r = residual(&s, &spec);
        // d1 - tau1 = -1 + 3/4, d2 - tau2 = 1/4
        assert!(r.first.iter().all(|v| (v + 0.25).abs() < 1e-14));
        assert!(r.second.iter().all(|v| (v - 0.25).abs() < 1e-14));
        assert!((r.sup_norm - 0.25).abs() < 1e-14);
    }

    #[test]
    fn trace_integral_vanishes() {
        let g = TorusGrid::new(32).unwrap();
        let spec = ProblemSpec::new(-2, 1, rat(-1, 3), g);
        let mut s = SolverState::initial(&spec).unwrap();
        for (k, v) in s.u1.values.iter_mut().enumerate() {
            *v = (k as f64 * 0.37).sin();
        }
        let r = residual(&s, &spec);
        assert!(r.trace_integral.abs() < 1e-11, "{}", r.trace_integral);
    }
}
