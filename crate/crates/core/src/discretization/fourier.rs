//! Periodic FFTs over the position grid (1-D lines or 2-D squares).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub(crate) struct FourierEngine {
    dim: usize,
    n_x: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierEngine").field("dim", &self.dim).field("n_x", &self.n_x).finish()
    }
}

impl FourierEngine {
    pub fn new(dim: usize, n_x: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dim, n_x, forward: planner.plan_fft_forward(n_x), inverse: planner.plan_fft_inverse(n_x) }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.apply(&self.forward, buf);
    }

    /// Inverse transform including the `1 / n_cells` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.apply(&self.inverse, buf);
        let scale = 1.0 / buf.len() as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    fn apply(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.n_x;
        match self.dim {
            1 => fft.process(buf),
            2 => {
                // Rows are contiguous (c = ix + n * iy).
                fft.process(buf);
                let mut column = vec![Complex64::default(); n];
                for ix in 0..n {
                    for iy in 0..n {
                        column[iy] = buf[ix + n * iy];
                    }
                    fft.process(&mut column);
                    for iy in 0..n {
                        buf[ix + n * iy] = column[iy];
                    }
                }
            }
            _ => unreachable!("grid dimension is validated"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let engine = FourierEngine::new(2, 6);
        let orig: Vec<Complex64> = (0..36).map(|k| Complex64::new((k as f64).sin(), 0.0)).collect();
        let mut buf = orig.clone();
        engine.forward(&mut buf);
        engine.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
