use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::stability::{int, BundlePair, Rational};
use crate::torus::{harmonic_project, FormType, TorusGrid, TwistedField, Weights};

/// Initial Higgs-field representative.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSeed {
    /// Flat-harmonic part of the constant form, normalized to unit `L^2`.
    CanonicalHarmonic,
    /// The split extension.
    Zero,
    /// Explicit representative; normalized to unit `L^2` unless zero.
    Field(TwistedField),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowControls {
    /// Initial (and maximal) pseudo-time step.
    pub step: f64,
    pub max_iterations: usize,
    /// Sup-norm residual tolerance.
    pub tolerance: f64,
    /// Divergence once `sup |u1 - u2|` exceeds this.
    pub divergence_threshold: f64,
    /// Steps between harmonic re-projections of the Higgs field.
    pub projection_interval: usize,
    /// Step halving gives up below this.
    pub min_step: f64,
}

impl Default for FlowControls {
    fn default() -> Self {
        FlowControls {
            step: 0.25,
            max_iterations: 20_000,
            tolerance: 1e-6,
            divergence_threshold: 50.0,
            projection_interval: 10,
            min_step: 1e-6,
        }
    }
}

/// Line-bundle extension data `0 -> L1 -> E -> L2 -> 0` with the coupling
/// parameter, a grid and flow controls.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub d1: i64,
    pub d2: i64,
    pub alpha: Rational,
    pub grid: TorusGrid,
    pub seed: PhiSeed,
    pub flow: FlowControls,
}

impl ProblemSpec {
    pub fn new(d1: i64, d2: i64, alpha: Rational, grid: TorusGrid) -> Self {
        ProblemSpec { d1, d2, alpha, grid, seed: PhiSeed::CanonicalHarmonic, flow: FlowControls::default() }
    }

    pub fn with_seed(mut self, seed: PhiSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_flow(mut self, flow: FlowControls) -> Self {
        self.flow = flow;
        self
    }

    pub fn pair(&self) -> BundlePair {
        BundlePair::lines(self.d1 as i128, self.d2 as i128)
    }

    /// Degree of `Hom(L2, L1)`.
    pub fn twist(&self) -> i64 {
        self.d1 - self.d2
    }

    /// `tau1 = (d1 + d2 + alpha) / 2`.
    pub fn tau1(&self) -> Rational {
        (int((self.d1 + self.d2) as i128) + self.alpha) / int(2)
    }

    pub fn tau2(&self) -> Rational {
        self.tau1() - self.alpha
    }

    /// `tau1 + tau2 - (d1 + d2)`; zero by construction.
    pub fn trace_identity_defect(&self) -> Rational {
        self.tau1() + self.tau2() - int((self.d1 + self.d2) as i128)
    }

    pub fn taus_f64(&self) -> (f64, f64) {
        (to_f64(self.tau1()), to_f64(self.tau2()))
    }

    pub fn alpha_f64(&self) -> f64 {
        to_f64(self.alpha)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let f = &self.flow;
        if !(f.step > 0.0 && f.step.is_finite()) || f.min_step <= 0.0 || f.min_step > f.step {
            return Err(SolverError::InvalidSpec(format!("bad step controls ({}, {})", f.step, f.min_step)));
        }
        let positive = |v: f64| v > 0.0; // false for NaN
        if !positive(f.tolerance) || !positive(f.divergence_threshold) || f.projection_interval == 0 {
            return Err(SolverError::InvalidSpec("tolerance, divergence threshold and projection interval must be positive".into()));
        }
        if let PhiSeed::Field(phi) = &self.seed {
            if phi.grid != self.grid || phi.twist != self.twist() || phi.form != FormType::ZeroOneForm {
                return Err(SolverError::InvalidSpec(format!(
                    "seed must be a (0,1)-form of twist {} on the problem grid",
                    self.twist()
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn to_f64(r: Rational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

/// Flat-harmonic projection of a fixed reference form of the given twist,
/// normalized to unit `L^2`. Returns the field and the norm before scaling.
///
/// The reference form is the constant for twist 0 and otherwise the
/// quasi-periodic Gaussian train `Σ_m e^{-2πi δ m x} g(y - m)`, which has
/// non-degenerate overlap with every harmonic mode.
pub fn canonical_harmonic_seed(grid: TorusGrid, twist: i64) -> Result<(TwistedField, f64), SolverError> {
    let reference = TwistedField::from_fn(grid, twist, FormType::ZeroOneForm, |x, y| {
        if twist == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let width = PI * twist.unsigned_abs() as f64;
        (-6..=6)
            .map(|m: i64| {
                let t = y - m as f64 - 0.3;
                Complex64::from_polar((-width * t * t).exp(), -2.0 * PI * (twist * m) as f64 * x)
            })
            .sum()
    });
    let p = harmonic_project(&reference, &Weights::flat(grid))?;
    let norm = p.field.norm_sq().sqrt();
    if norm < 1e-8 {
        return Err(SolverError::InvalidSpec(format!(
            "no harmonic representative for twist {twist} (projection norm {norm:e})"
        )));
    }
    Ok((p.field.scaled(Complex64::new(1.0 / norm, 0.0)), norm))
}
