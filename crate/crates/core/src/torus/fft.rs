//! Constant-coefficient solves `(a + s L) x = b` for the curvature Laplacian,
//! diagonalized by the 2-D discrete Fourier transform.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::TorusGrid;

pub struct PeriodicSolver {
    grid: TorusGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Eigenvalue of `L` at each frequency, same layout as the samples.
    symbol: Vec<f64>,
}

impl std::fmt::Debug for PeriodicSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicSolver").field("grid", &self.grid).finish()
    }
}

impl PeriodicSolver {
    pub fn new(grid: TorusGrid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let h2 = grid.h() * grid.h();
        let s = |k: usize| {
            let v = (PI * k as f64 / n as f64).sin();
            4.0 * v * v
        };
        let symbol = (0..n * n).map(|m| (s(m / n) + s(m % n)) / (h2 * 4.0 * PI)).collect();
        PeriodicSolver { grid, fwd, inv, symbol }
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        // along y (contiguous rows)
        plan.process(buf);
        // along x via transpose
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = buf[i * n + j];
            }
        }
        plan.process(&mut t);
        for i in 0..n {
            for j in 0..n {
                buf[i * n + j] = t[j * n + i];
            }
        }
    }

    /// Solve `(a + s L) x = b`. When `a = 0` the mean of `b` is dropped and
    /// the zero-mean solution returned.
    pub fn solve(&self, a: f64, s: f64, b: &[f64]) -> Vec<f64> {
        let n2 = self.grid.len();
        let mut buf: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        for (z, &lam) in buf.iter_mut().zip(&self.symbol) {
            let d = a + s * lam;
            *z = if d.abs() > 0.0 { *z / d } else { Complex64::new(0.0, 0.0) };
        }
        self.transform(&mut buf, &self.inv);
        let scale = 1.0 / n2 as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }
}
