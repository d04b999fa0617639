use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::FieldError;

/// Uniform `N x N` grid on the unit square, carrying the flat metric scaled so
/// that the torus has total area `2 pi`.
///
/// Samples are stored row-major with the x index outermost: `values[i * N + j]`
/// sits at `(x, y) = (i / N, j / N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub const MIN_N: usize = 16;

    pub fn new(n: usize) -> Result<Self, FieldError> {
        if n < Self::MIN_N || !n.is_multiple_of(2) {
            return Err(FieldError::InvalidGrid(n));
        }
        Ok(TorusGrid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Measure of one cell: `2 pi / N^2`.
    pub fn cell_area(&self) -> f64 {
        2.0 * PI / (self.n * self.n) as f64
    }

    pub fn total_area(&self) -> f64 {
        2.0 * PI
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    /// `sum f * dA`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        // pairwise by rows keeps the rounding at the level Stokes checks need
        let rows: f64 = values.chunks(self.n).map(|r| r.iter().sum::<f64>()).sum();
        rows * self.cell_area()
    }

    pub fn mean(&self, values: &[f64]) -> f64 {
        self.integrate(values) / self.total_area()
    }
}
