use std::f64::consts::PI;

use super::quadrature::gauss_hermite;
use super::DiscretizationError;

/// Uniform periodic position grid on `[0, L]^d` and per-species Gauss–Hermite
/// velocity nodes scaled to the Maxwellian of variance `theta_i`.
#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    box_size: f64,
    n_x: usize,
    quad_order: usize,
    /// Per light species, node-major velocity components (`n_vel * dim`).
    velocities: Vec<Vec<f64>>,
    /// Per light species, node weights summing to one.
    weights: Vec<Vec<f64>>,
    thetas: Vec<f64>,
}

impl Grid {
    pub fn new(
        dim: usize,
        box_size: f64,
        n_x: usize,
        quad_order: usize,
        thetas: &[f64],
    ) -> Result<Self, DiscretizationError> {
        if !(1..=2).contains(&dim) {
            return Err(DiscretizationError::UnsupportedDimension(dim));
        }
        if !(box_size.is_finite() && box_size > 0.0) {
            return Err(DiscretizationError::InvalidGrid(format!("box size {box_size} must be positive")));
        }
        if n_x < 2 {
            return Err(DiscretizationError::InvalidGrid(format!("n_x = {n_x}, need at least 2")));
        }
        if quad_order < 3 {
            // Fourth moments enter the transport estimates.
            return Err(DiscretizationError::InvalidGrid(format!(
                "quadrature order {quad_order} cannot integrate fourth moments, need at least 3"
            )));
        }
        let (x1, w1) = gauss_hermite(quad_order);
        let n_vel = quad_order.pow(dim as u32);
        let mut velocities = Vec::with_capacity(thetas.len());
        let mut weights = Vec::with_capacity(thetas.len());
        for &theta in thetas {
            let scale = theta.sqrt();
            let mut v = Vec::with_capacity(n_vel * dim);
            let mut w = Vec::with_capacity(n_vel);
            for q in 0..n_vel {
                let mut weight = 1.0;
                let mut rest = q;
                for _ in 0..dim {
                    let a = rest % quad_order;
                    rest /= quad_order;
                    v.push(scale * x1[a]);
                    weight *= w1[a];
                }
                w.push(weight);
            }
            velocities.push(v);
            weights.push(w);
        }
        Ok(Self { dim, box_size, n_x, quad_order, velocities, weights, thetas: thetas.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_size(&self) -> f64 {
        self.box_size
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn n_cells(&self) -> usize {
        self.n_x.pow(self.dim as u32)
    }

    /// Velocity nodes per light species (`Q^d`).
    pub fn n_vel(&self) -> usize {
        self.quad_order.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.box_size / self.n_x as f64
    }

    /// `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn velocity(&self, species: usize, node: usize) -> &[f64] {
        &self.velocities[species][node * self.dim..(node + 1) * self.dim]
    }

    pub fn weights(&self, species: usize) -> &[f64] {
        &self.weights[species]
    }

    /// Number of light species the velocity sets were built for.
    pub fn n_velocity_sets(&self) -> usize {
        self.thetas.len()
    }

    pub fn theta(&self, species: usize) -> f64 {
        self.thetas[species]
    }

    /// Largest velocity magnitude over all nodes.
    pub fn v_max(&self) -> f64 {
        self.velocities
            .iter()
            .flat_map(|v| v.chunks(self.dim))
            .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Position of cell `c` (left node, `c = ix + n_x * iy`).
    pub fn position(&self, c: usize) -> [f64; 2] {
        let h = self.spacing();
        let ix = c % self.n_x;
        let iy = c / self.n_x;
        [ix as f64 * h, iy as f64 * h]
    }

    /// Signed integer frequency of FFT index `m`.
    pub(crate) fn frequency(&self, m: usize) -> isize {
        let n = self.n_x;
        if m <= n / 2 {
            m as isize
        } else {
            m as isize - n as isize
        }
    }

    /// Wavevector of FFT cell index `c` for first-order derivatives: the
    /// Nyquist frequency is mapped to zero so that the discrete gradient is
    /// real and skew-adjoint.
    pub(crate) fn derivative_wavevector(&self, c: usize) -> [f64; 2] {
        let k0 = 2.0 * PI / self.box_size;
        let mut xi = [0.0; 2];
        let mut rest = c;
        for comp in xi.iter_mut().take(self.dim) {
            let m = rest % self.n_x;
            rest /= self.n_x;
            let nyquist = 2 * m == self.n_x;
            *comp = if nyquist { 0.0 } else { k0 * self.frequency(m) as f64 };
        }
        xi
    }

    /// Exact wavevector of FFT cell index `c` (Nyquist kept).
    pub(crate) fn wavevector(&self, c: usize) -> [f64; 2] {
        let k0 = 2.0 * PI / self.box_size;
        let mut xi = [0.0; 2];
        let mut rest = c;
        for comp in xi.iter_mut().take(self.dim) {
            let m = rest % self.n_x;
            rest /= self.n_x;
            *comp = k0 * self.frequency(m) as f64;
        }
        xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwellian_moments_per_species() {
        let thetas = [2.5, 1.0];
        for dim in [1, 2] {
            let grid = Grid::new(dim, 1.0, 4, 8, &thetas).unwrap();
            for (i, &theta) in thetas.iter().enumerate() {
                let w = grid.weights(i);
                let total: f64 = w.iter().sum();
                assert!((total - 1.0).abs() < 1e-13);
                let mut mean = [0.0; 2];
                let mut second = 0.0;
                let mut fourth = 0.0;
                for (q, wq) in w.iter().enumerate() {
                    let v = grid.velocity(i, q);
                    let v2: f64 = v.iter().map(|c| c * c).sum();
                    for a in 0..dim {
                        mean[a] += wq * v[a];
                    }
                    second += wq * v2;
                    fourth += wq * v2 * v2;
                }
                assert!(mean[0].abs() < 1e-13 && mean[1].abs() < 1e-13);
                assert!((second - dim as f64 * theta).abs() < 1e-12);
                // E|v|^4 = d(d+2) theta^2
                let expected = (dim * (dim + 2)) as f64 * theta * theta;
                assert!((fourth - expected).abs() < 1e-12 * expected.max(1.0), "{fourth} vs {expected}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Grid::new(3, 1.0, 4, 4, &[1.0]), Err(DiscretizationError::UnsupportedDimension(3))));
        assert!(Grid::new(1, 0.0, 4, 4, &[1.0]).is_err());
        assert!(Grid::new(1, 1.0, 1, 4, &[1.0]).is_err());
        assert!(Grid::new(1, 1.0, 4, 2, &[1.0]).is_err());
    }

    #[test]
    fn wavevectors() {
        let grid = Grid::new(1, 2.0 * PI, 8, 4, &[1.0]).unwrap();
        let xs: Vec<f64> = (0..8).map(|c| grid.derivative_wavevector(c)[0]).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 0.0, -3.0, -2.0, -1.0]);
        assert_eq!(grid.wavevector(4)[0], 4.0);
    }
}
