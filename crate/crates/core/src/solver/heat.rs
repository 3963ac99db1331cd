use rustfft::num_complex::Complex64;

use crate::discretization::{FourierEngine, Grid};

/// Exact solution of `d_t rho = D Laplace rho` on the periodic grid, mode by
/// mode: `rho_hat(xi, t) = rho_hat(xi, 0) exp(-D |xi|^2 t)`.
#[derive(Clone, Debug)]
pub struct HeatReference {
    grid: Grid,
    fourier: FourierEngine,
    initial_hat: Vec<Complex64>,
    diffusion: f64,
}

impl HeatReference {
    pub fn new(grid: &Grid, rho_initial: &[f64], diffusion: f64) -> Self {
        assert_eq!(rho_initial.len(), grid.n_cells());
        let fourier = FourierEngine::new(grid.dim(), grid.n_x());
        let mut initial_hat: Vec<Complex64> = rho_initial.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        fourier.forward(&mut initial_hat);
        Self { grid: grid.clone(), fourier, initial_hat, diffusion }
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let dim = self.grid.dim();
        let mut buf: Vec<Complex64> = self
            .initial_hat
            .iter()
            .enumerate()
            .map(|(c, z)| {
                let xi = self.grid.wavevector(c);
                let k2: f64 = xi[..dim].iter().map(|x| x * x).sum();
                z * (-self.diffusion * k2 * t).exp()
            })
            .collect();
        self.fourier.inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// `int rho_0 dx`, constant in time.
    pub fn mass(&self) -> f64 {
        self.initial_hat[0].re * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn field(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..grid.n_cells()).map(|c| f(grid.position(c))).collect()
    }

    #[test]
    fn initial_time_and_single_mode() {
        let grid = Grid::new(1, 2.0 * PI, 32, 3, &[1.0]).unwrap();
        let rho = field(&grid, |x| 1.0 + 0.5 * (2.0 * x[0]).cos());
        let heat = HeatReference::new(&grid, &rho, 0.3);
        for (a, b) in heat.at(0.0).iter().zip(&rho) {
            assert!((a - b).abs() < 1e-14);
        }
        let t = 1.7;
        let decay = (-0.3f64 * 4.0 * t).exp();
        for (c, v) in heat.at(t).iter().enumerate() {
            let x = grid.position(c)[0];
            assert!((v - (1.0 + 0.5 * decay * (2.0 * x).cos())).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_and_mass() {
        let grid = Grid::new(2, 3.0, 8, 3, &[1.0]).unwrap();
        let heat = HeatReference::new(&grid, &vec![2.0; 64], 1.0);
        assert!(heat.at(5.0).iter().all(|v| (v - 2.0).abs() < 1e-14));
        let bump = field(&grid, |x| (-(x[0] - 1.5).powi(2) - (x[1] - 1.0).powi(2)).exp());
        let heat = HeatReference::new(&grid, &bump, 0.7);
        let m0 = heat.mass();
        for t in [0.0, 0.3, 10.0] {
            let m: f64 = heat.at(t).iter().sum::<f64>() * grid.cell_volume();
            assert!((m - m0).abs() < 1e-13 * m0);
        }
    }
}
