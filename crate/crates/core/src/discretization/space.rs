use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::fourier::FourierEngine;
use super::{DiscretizationError, Grid, PhaseState};
use crate::network::{EquilibriumProfile, ReactionNetwork};

/// Discrete phase space for a given network: the layout of a cell block,
/// the weighted inner product, and the transport and reaction operators.
///
/// All operators act on the `U`-representation (see [`PhaseState`]).
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    grid: Grid,
    n_light: usize,
    eta: Vec<f64>,
    outflow: Vec<f64>,
    rates: DMatrix<f64>,
    n_local: usize,
    /// Inner-product weight of every block entry: `eta_i w_q` (light) or `1 / eta_i` (heavy).
    ip_weight: Vec<f64>,
    /// Particle-count weight: `eta_i w_q` (light) or `1` (heavy).
    mass_weight: Vec<f64>,
    /// Block of the local equilibrium `F` with unit total density.
    equilibrium: Vec<f64>,
    derivative_xi: Vec<[f64; 2]>,
    fourier: FourierEngine,
}

impl PhaseSpace {
    pub fn new(net: &ReactionNetwork, eq: &EquilibriumProfile, grid: Grid) -> Result<Self, DiscretizationError> {
        let n = net.n_species();
        let n_light = net.n_light();
        if eq.eta.len() != n {
            return Err(DiscretizationError::Mismatch(format!(
                "equilibrium has {} species, network {n}",
                eq.eta.len()
            )));
        }
        if grid.n_velocity_sets() != n_light {
            return Err(DiscretizationError::Mismatch(format!(
                "grid carries {} velocity sets, network has {n_light} light species",
                grid.n_velocity_sets()
            )));
        }
        let n_vel = grid.n_vel();
        let n_local = n_light * n_vel + (n - n_light);
        let mut ip_weight = Vec::with_capacity(n_local);
        let mut mass_weight = Vec::with_capacity(n_local);
        let mut equilibrium = Vec::with_capacity(n_local);
        for i in 0..n_light {
            for &w in grid.weights(i) {
                ip_weight.push(eq.eta[i] * w);
                mass_weight.push(eq.eta[i] * w);
                equilibrium.push(1.0);
            }
        }
        for i in n_light..n {
            ip_weight.push(1.0 / eq.eta[i]);
            mass_weight.push(1.0);
            equilibrium.push(eq.eta[i]);
        }
        let derivative_xi = (0..grid.n_cells()).map(|c| grid.derivative_wavevector(c)).collect();
        let fourier = FourierEngine::new(grid.dim(), grid.n_x());
        Ok(Self {
            n_light,
            eta: eq.eta.clone(),
            outflow: eq.outflow.clone(),
            rates: net.rates().clone(),
            n_local,
            ip_weight,
            mass_weight,
            equilibrium,
            derivative_xi,
            fourier,
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_species(&self) -> usize {
        self.eta.len()
    }

    pub fn n_light(&self) -> usize {
        self.n_light
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Block index of light species `i`, velocity node `q`.
    pub fn light_entry(&self, i: usize, q: usize) -> usize {
        debug_assert!(i < self.n_light);
        i * self.grid.n_vel() + q
    }

    /// Block index of heavy species `i` (`i >= n_light`).
    pub fn heavy_entry(&self, i: usize) -> usize {
        debug_assert!(i >= self.n_light);
        self.n_light * self.grid.n_vel() + (i - self.n_light)
    }

    fn n_light_entries(&self) -> usize {
        self.n_light * self.grid.n_vel()
    }

    pub fn zeros(&self) -> PhaseState {
        PhaseState::zeros(self.grid.n_cells(), self.n_local)
    }

    /// Local equilibrium `rho(x) F`.
    pub fn local_equilibrium(&self, rho: impl Fn([f64; 2]) -> f64) -> PhaseState {
        let mut state = self.zeros();
        for c in 0..self.grid.n_cells() {
            let r = rho(self.grid.position(c));
            for (x, e) in state.cell_mut(c).iter_mut().zip(&self.equilibrium) {
                *x = r * e;
            }
        }
        state
    }

    /// Spatially constant local equilibrium with density `rho`.
    pub fn uniform_equilibrium(&self, rho: f64) -> PhaseState {
        self.local_equilibrium(|_| rho)
    }

    /// Per-species position densities of one cell block.
    pub fn species_densities(&self, block: &[f64]) -> Vec<f64> {
        let n_vel = self.grid.n_vel();
        let mut rho = Vec::with_capacity(self.n_species());
        for i in 0..self.n_light {
            let u = &block[i * n_vel..(i + 1) * n_vel];
            let s: f64 = u.iter().zip(self.grid.weights(i)).map(|(u, w)| u * w).sum();
            rho.push(self.eta[i] * s);
        }
        rho.extend_from_slice(&block[self.n_light_entries()..]);
        rho
    }

    fn block_density(&self, block: &[f64]) -> f64 {
        block.iter().zip(&self.mass_weight).map(|(x, w)| x * w).sum()
    }

    /// Total density `rho(x) = sum_j rho_j(x)` per cell.
    pub fn total_density(&self, state: &PhaseState) -> Vec<f64> {
        (0..state.n_cells()).map(|c| self.block_density(state.cell(c))).collect()
    }

    /// Total particle count `int rho dx`.
    pub fn mass(&self, state: &PhaseState) -> f64 {
        self.total_density(state).iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Particle current `J = sum_{i light} int v f_i dv` per cell.
    pub fn current(&self, state: &PhaseState) -> Vec<[f64; 2]> {
        let dim = self.grid.dim();
        (0..state.n_cells())
            .map(|c| {
                let block = state.cell(c);
                let mut j = [0.0; 2];
                for i in 0..self.n_light {
                    for (q, w) in self.grid.weights(i).iter().enumerate() {
                        let u = block[self.light_entry(i, q)];
                        let v = self.grid.velocity(i, q);
                        for a in 0..dim {
                            j[a] += self.eta[i] * w * v[a] * u;
                        }
                    }
                }
                j
            })
            .collect()
    }

    /// Weighted inner product of the space H.
    pub fn inner(&self, a: &PhaseState, b: &PhaseState) -> f64 {
        let s: f64 = a
            .as_slice()
            .chunks(self.n_local)
            .zip(b.as_slice().chunks(self.n_local))
            .map(|(x, y)| x.iter().zip(y).zip(&self.ip_weight).map(|((x, y), w)| w * x * y).sum::<f64>())
            .sum();
        s * self.grid.cell_volume()
    }

    pub fn norm2(&self, a: &PhaseState) -> f64 {
        self.inner(a, a)
    }

    /// Reaction operator `(L f)_i = sum_j (k_ij rho_j M_i - k_ji f_i)`.
    pub fn apply_l(&self, state: &PhaseState) -> PhaseState {
        let mut out = self.zeros();
        let n = self.n_species();
        let n_vel = self.grid.n_vel();
        out.as_mut_slice().par_chunks_mut(self.n_local).zip(state.as_slice().par_chunks(self.n_local)).for_each(
            |(dst, src)| {
                let rho = self.species_densities(src);
                for i in 0..n {
                    let gain: f64 = (0..n).map(|j| self.rates[(i, j)] * rho[j]).sum();
                    if i < self.n_light {
                        let g = gain / self.eta[i];
                        for q in 0..n_vel {
                            let e = i * n_vel + q;
                            dst[e] = g - self.outflow[i] * src[e];
                        }
                    } else {
                        let e = self.heavy_entry(i);
                        dst[e] = gain - self.outflow[i] * src[e];
                    }
                }
            },
        );
        out
    }

    /// Orthogonal projection `Pi f = rho F` onto local equilibria.
    pub fn project_pi(&self, state: &PhaseState) -> PhaseState {
        let mut out = self.zeros();
        for c in 0..state.n_cells() {
            let rho = self.block_density(state.cell(c));
            for (x, e) in out.cell_mut(c).iter_mut().zip(&self.equilibrium) {
                *x = rho * e;
            }
        }
        out
    }

    /// `(1 - Pi) f`.
    pub fn micro_part(&self, state: &PhaseState) -> PhaseState {
        state.difference(&self.project_pi(state))
    }

    /// Applies the multiplier `symbol(v . xi)` to every light field in
    /// Fourier space. Heavy entries are zeroed or copied through.
    fn light_multiplier(
        &self,
        state: &PhaseState,
        symbol: impl Fn(f64) -> Complex64 + Sync,
        heavy_zero: bool,
    ) -> PhaseState {
        let n_cells = state.n_cells();
        let n_local = self.n_local;
        let n_vel = self.grid.n_vel();
        let dim = self.grid.dim();
        let fields: Vec<Vec<f64>> = (0..self.n_light_entries())
            .into_par_iter()
            .map(|e| {
                let v = self.grid.velocity(e / n_vel, e % n_vel);
                let mut buf: Vec<Complex64> =
                    (0..n_cells).map(|c| Complex64::new(state.as_slice()[c * n_local + e], 0.0)).collect();
                self.fourier.forward(&mut buf);
                for (z, xi) in buf.iter_mut().zip(&self.derivative_xi) {
                    let s: f64 = (0..dim).map(|a| v[a] * xi[a]).sum();
                    *z *= symbol(s);
                }
                self.fourier.inverse(&mut buf);
                buf.into_iter().map(|z| z.re).collect()
            })
            .collect();
        let mut out = if heavy_zero { self.zeros() } else { state.clone() };
        for (e, field) in fields.iter().enumerate() {
            for (c, x) in field.iter().enumerate() {
                out.set(c, e, *x);
            }
        }
        out
    }

    /// Transport operator `(T f)_i = v . grad_x f_i` on light species, spectrally.
    pub fn apply_t(&self, state: &PhaseState) -> PhaseState {
        self.light_multiplier(state, |s| Complex64::new(0.0, s), true)
    }

    /// Exact free transport `f <- exp(-tau T) f`.
    pub fn transport(&self, state: &PhaseState, tau: f64) -> PhaseState {
        self.light_multiplier(state, |s| Complex64::from_polar(1.0, -tau * s), false)
    }

    /// `-<L f, f>` through the double-sum form
    /// `1/2 sum_ij k_ij eta_j int int M_i M_j' (U_i - U_j')^2 dv' dv dx`.
    pub fn dissipation(&self, state: &PhaseState) -> f64 {
        let n = self.n_species();
        let n_vel = self.grid.n_vel();
        let heavy_weight = [1.0];
        let per_cell: Vec<f64> = state
            .as_slice()
            .par_chunks(self.n_local)
            .map(|block| {
                let heavy_u: Vec<f64> = (self.n_light..n).map(|i| block[self.heavy_entry(i)] / self.eta[i]).collect();
                let nodes = |i: usize| -> (&[f64], &[f64]) {
                    if i < self.n_light {
                        (self.grid.weights(i), &block[i * n_vel..(i + 1) * n_vel])
                    } else {
                        (&heavy_weight, std::slice::from_ref(&heavy_u[i - self.n_light]))
                    }
                };
                let mut total = 0.0;
                for i in 0..n {
                    let (wi, ui) = nodes(i);
                    for j in 0..n {
                        let k = self.rates[(i, j)];
                        if k == 0.0 {
                            continue;
                        }
                        let (wj, uj) = nodes(j);
                        let mut s = 0.0;
                        for (a, wa) in ui.iter().zip(wi) {
                            for (b, wb) in uj.iter().zip(wj) {
                                s += wa * wb * (a - b) * (a - b);
                            }
                        }
                        total += k * self.eta[j] * s;
                    }
                }
                0.5 * total
            })
            .collect();
        per_cell.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `<A f, f> = -int u rho_f dx` with `(1 - dbar Laplace) u = div J`.
    pub fn a_form(&self, state: &PhaseState, dbar: f64) -> f64 {
        let dim = self.grid.dim();
        let n_cells = state.n_cells();
        let mut rho: Vec<Complex64> = self.total_density(state).into_iter().map(|r| Complex64::new(r, 0.0)).collect();
        self.fourier.forward(&mut rho);
        let current = self.current(state);
        let mut div = vec![Complex64::default(); n_cells];
        for a in 0..dim {
            let mut ja: Vec<Complex64> = current.iter().map(|j| Complex64::new(j[a], 0.0)).collect();
            self.fourier.forward(&mut ja);
            for ((d, z), xi) in div.iter_mut().zip(&ja).zip(&self.derivative_xi) {
                *d += Complex64::new(0.0, xi[a]) * z;
            }
        }
        let mut s = 0.0;
        for ((d, r), xi) in div.iter().zip(&rho).zip(&self.derivative_xi) {
            let k2: f64 = xi[..dim].iter().map(|x| x * x).sum();
            let u = d / (1.0 + dbar * k2);
            s += (u * r.conj()).re;
        }
        -s / n_cells as f64 * self.grid.cell_volume()
    }

    /// Modified entropy `||f||^2 / 2 + delta <A f, f>`.
    pub fn modified_entropy(&self, state: &PhaseState, dbar: f64, delta: f64) -> f64 {
        0.5 * self.norm2(state) + delta * self.a_form(state, dbar)
    }

    /// Reaction generator on one cell block: `d/dt block = G block`.
    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.n_species();
        let n_vel = self.grid.n_vel();
        let mut g = DMatrix::zeros(self.n_local, self.n_local);
        // Column contributions of species j to the densities rho_j.
        let density_coeffs = |j: usize| -> Vec<(usize, f64)> {
            if j < self.n_light {
                self.grid.weights(j).iter().enumerate().map(|(q, w)| (j * n_vel + q, self.eta[j] * w)).collect()
            } else {
                vec![(self.heavy_entry(j), 1.0)]
            }
        };
        for i in 0..n {
            let rows: Vec<(usize, f64)> = if i < self.n_light {
                (0..n_vel).map(|q| (i * n_vel + q, 1.0 / self.eta[i])).collect()
            } else {
                vec![(self.heavy_entry(i), 1.0)]
            };
            for &(r, scale) in &rows {
                for j in 0..n {
                    let k = self.rates[(i, j)];
                    if k == 0.0 {
                        continue;
                    }
                    for (col, coeff) in density_coeffs(j) {
                        g[(r, col)] += scale * k * coeff;
                    }
                }
                g[(r, r)] -= self.outflow[i];
            }
        }
        g
    }

    /// Inner-product weights of a block.
    pub fn block_weights(&self) -> &[f64] {
        &self.ip_weight
    }

    /// Particle-count functional of a block.
    pub fn mass_functional(&self) -> &[f64] {
        &self.mass_weight
    }

    /// Block of `F` (unit density).
    pub fn equilibrium_block(&self) -> &[f64] {
        &self.equilibrium
    }

    /// Smallest reconstructed `f_i(x, v_q)` relative to `max |f|`.
    pub fn min_relative_density(&self, state: &PhaseState) -> f64 {
        let dim = self.grid.dim() as i32;
        let n_vel = self.grid.n_vel();
        let maxwell: Vec<f64> = (0..self.n_light_entries())
            .map(|e| {
                let i = e / n_vel;
                let theta = self.grid.theta(i);
                let v2: f64 = self.grid.velocity(i, e % n_vel).iter().map(|x| x * x).sum();
                self.eta[i] * (2.0 * std::f64::consts::PI * theta).powf(-0.5 * dim as f64) * (-0.5 * v2 / theta).exp()
            })
            .collect();
        let mut min = f64::INFINITY;
        let mut max = 0.0f64;
        for block in state.as_slice().chunks(self.n_local) {
            for (e, x) in block.iter().enumerate() {
                let f = if e < maxwell.len() { maxwell[e] * x } else { *x };
                min = min.min(f);
                max = max.max(f.abs());
            }
        }
        if max == 0.0 {
            0.0
        } else {
            min / max
        }
    }
}
