use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FieldError, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormType {
    Function,
    /// Coefficient against the unit-length coframe `dz̄ / |dz̄|`.
    ZeroOneForm,
}

impl FormType {
    pub fn tag(&self) -> &'static str {
        match self {
            FormType::Function => "function",
            FormType::ZeroOneForm => "form01",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "function" => Some(FormType::Function),
            "form01" => Some(FormType::ZeroOneForm),
            _ => None,
        }
    }
}

/// Grid samples of a section of the degree-`twist` line bundle (or of a
/// (0,1)-form with values in it). Moving up one period in y multiplies by
/// `exp(-2 pi i twist x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedField {
    pub grid: TorusGrid,
    pub twist: i64,
    pub form: FormType,
    pub values: Vec<Complex64>,
}

impl TwistedField {
    pub fn zeros(grid: TorusGrid, twist: i64, form: FormType) -> Self {
        TwistedField { grid, twist, form, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: TorusGrid, twist: i64, form: FormType, values: Vec<Complex64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(TwistedField { grid, twist, form, values })
    }

    /// Sample `f(x, y)` on the fundamental domain. The caller is responsible
    /// for `f` obeying the quasi-periodicity of the twist.
    pub fn from_fn(grid: TorusGrid, twist: i64, form: FormType, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.n();
        let values = (0..n * n).map(|k| f(grid.x(k / n), grid.y(k % n))).collect();
        TwistedField { grid, twist, form, values }
    }

    pub fn like(&self, values: Vec<Complex64>) -> Self {
        TwistedField { grid: self.grid, twist: self.twist, form: self.form, values }
    }

    pub fn check_compatible(&self, other: &TwistedField) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        if self.twist != other.twist {
            return Err(FieldError::TwistMismatch { expected: self.twist, found: other.twist });
        }
        if self.form != other.form {
            return Err(FieldError::FormMismatch { expected: self.form, found: other.form });
        }
        Ok(())
    }

    /// `|s|^2` pointwise; periodic even though `s` is not.
    pub fn pointwise_norm_sq(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Flat `L^2` product, conjugate-linear in `self`.
    pub fn inner(&self, other: &TwistedField) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        s * self.grid.cell_area()
    }

    /// `L^2` product weighted by `exp(u1 - u2)`.
    pub fn weighted_inner(&self, other: &TwistedField, w: &Weights) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .zip(&w.values)
            .map(|((a, b), e)| a.conj() * b * e)
            .sum();
        s * self.grid.cell_area()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).re
    }

    pub fn weighted_norm_sq(&self, w: &Weights) -> f64 {
        self.weighted_inner(self, w).re
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.like(self.values.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &TwistedField) -> Self {
        self.like(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &TwistedField) -> Self {
        self.like(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Real log-density `u` of a hermitian metric `K e^u` on a degree-`degree`
/// line bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalExponent {
    pub grid: TorusGrid,
    pub degree: i64,
    pub values: Vec<f64>,
}

impl ConformalExponent {
    pub fn zeros(grid: TorusGrid, degree: i64) -> Self {
        ConformalExponent { grid, degree, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: TorusGrid, degree: i64, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = (0..n * n).map(|k| f(grid.x(k / n), grid.y(k % n))).collect();
        ConformalExponent { grid, degree, values }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Pointwise factor `exp(u1 - u2)` by which the hermitian metric on
/// `Hom(E2, E1)` differs from the background flat one.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub values: Vec<f64>,
}

impl Weights {
    pub fn flat(grid: TorusGrid) -> Self {
        Weights { values: vec![1.0; grid.len()] }
    }

    pub fn from_log(w: &[f64]) -> Self {
        Weights { values: w.iter().map(|v| v.exp()).collect() }
    }

    pub fn from_pair(u1: &ConformalExponent, u2: &ConformalExponent) -> Self {
        Weights { values: u1.values.iter().zip(&u2.values).map(|(a, b)| (a - b).exp()).collect() }
    }
}
