use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::discretization::{PhaseSpace, PhaseState};

/// Strang splitting for `eps^2 d_t f + eps T f = L f`: half a reaction step
/// (exact, per cell), a full free-transport step (exact, in Fourier), then
/// another half reaction step.
#[derive(Clone, Debug)]
pub struct Stepper {
    /// Row-major `exp((dt / 2 eps^2) G) - I`, applied as an increment.
    half_reaction: Vec<f64>,
    n_local: usize,
    transport_time: f64,
}

impl Stepper {
    pub fn new(space: &PhaseSpace, dt: f64, epsilon: f64) -> Self {
        let g = space.generator();
        let n = g.nrows();
        let e = (g * (0.5 * dt / (epsilon * epsilon))).exp() - DMatrix::identity(n, n);
        let e = annihilating(e, space.equilibrium_block(), space.mass_functional());
        let half_reaction = (0..n * n).map(|k| e[(k / n, k % n)]).collect();
        Self { half_reaction, n_local: n, transport_time: dt / epsilon }
    }

    /// Applies `exp((dt / 2 eps^2) G)` to every cell as `u + D u`.
    pub fn react(&self, state: &mut PhaseState) {
        let n = self.n_local;
        state.as_mut_slice().par_chunks_mut(n).for_each(|block| {
            let src = block.to_vec();
            for (r, dst) in block.iter_mut().enumerate() {
                let row = &self.half_reaction[r * n..(r + 1) * n];
                *dst += row.iter().zip(&src).map(|(a, b)| a * b).sum::<f64>();
            }
        });
    }

    pub fn step(&self, space: &PhaseSpace, state: &PhaseState) -> PhaseState {
        let mut s = state.clone();
        self.react(&mut s);
        let mut s = space.transport(&s, self.transport_time);
        self.react(&mut s);
        s
    }
}

/// Rank-one corrections making `D e = 0` and `m^T D = 0` hold to rounding
/// for the increment `D = E - I`.
fn annihilating(mut d: DMatrix<f64>, eq: &[f64], mass: &[f64]) -> DMatrix<f64> {
    let n = d.nrows();
    let me: f64 = mass.iter().zip(eq).map(|(a, b)| a * b).sum();
    let r: Vec<f64> = (0..n).map(|i| (0..n).map(|j| d[(i, j)] * eq[j]).sum::<f64>()).collect();
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] -= r[i] * mass[j] / me;
        }
    }
    let s: Vec<f64> = (0..n).map(|j| (0..n).map(|i| mass[i] * d[(i, j)]).sum::<f64>()).collect();
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] -= eq[i] * s[j] / me;
        }
    }
    d
}
