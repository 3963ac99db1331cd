#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use kinflux::network::ReactionNetwork;
use kinflux::solver::{DomainMode, InitialCondition, SolverConfig};
use nalgebra::DMatrix;
use rand::Rng;

pub fn two_cycle() -> ReactionNetwork {
    ReactionNetwork::new(2, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap()
}

/// Edges 1->2, 2->3, 3->4, 4->1, 4->5, 3->5, 5->3 with unit rates.
pub fn five_species(n_light: usize) -> ReactionNetwork {
    let mut k = vec![vec![0.0; 5]; 5];
    for (a, b) in [(1, 2), (2, 3), (3, 4), (4, 1), (4, 5), (3, 5), (5, 3)] {
        k[b - 1][a - 1] = 1.0;
    }
    let thetas = (0..n_light).map(|i| 1.0 + 0.5 * (n_light - 1 - i) as f64).collect();
    ReactionNetwork::new(n_light, k, thetas).unwrap()
}

/// Random admissible network: `2 <= N <= max_n`, each edge present with
/// probability 1/2 and rate uniform in `[0.1, 2]`, redrawn until strongly
/// connected. Light species get `theta >= 1`, the last one exactly 1.
pub fn random_network(rng: &mut impl Rng, max_n: usize) -> ReactionNetwork {
    loop {
        let n = rng.gen_range(2..=max_n);
        let n_light = rng.gen_range(1..=n);
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i != j && rng.gen_bool(0.5) { rng.gen_range(0.1..2.0) } else { 0.0 }).collect())
            .collect();
        let mut thetas: Vec<f64> = (0..n_light).map(|_| rng.gen_range(1.0..4.0)).collect();
        thetas[n_light - 1] = 1.0;
        let net = ReactionNetwork::new(n_light, k, thetas).unwrap();
        if net.validate().is_ok() {
            return net;
        }
    }
}

/// Stationary state of `d rho/dt = A rho` by RK4 time stepping with
/// `h = 0.1 / max|A_ij|`: the one-step propagator is squared 60 times, i.e.
/// `2^60` steps, then the result is applied to the uniform distribution.
pub fn long_time_equilibrium(net: &ReactionNetwork) -> Vec<f64> {
    let n = net.n_species();
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { -net.outflow(i) } else { net.rate(i, j) });
    let h = 0.1 / a.amax();
    let ha = &a * h;
    let id = DMatrix::<f64>::identity(n, n);
    let ha2 = &ha * &ha;
    let ha3 = &ha2 * &ha;
    let ha4 = &ha3 * &ha;
    let mut p = id + &ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0;
    for _ in 0..60 {
        p = &p * &p;
    }
    let rho = p * nalgebra::DVector::from_element(n, 1.0 / n as f64);
    let total: f64 = rho.iter().sum();
    rho.iter().map(|x| x / total).collect()
}

pub fn torus_config(initial: InitialCondition) -> SolverConfig {
    SolverConfig {
        network: PathBuf::from("in-memory"),
        dim: 1,
        box_size: 2.0 * PI,
        n_x: 64,
        quad_order: 16,
        dt: 1e-3,
        t_end: 20.0,
        domain: DomainMode::Torus,
        epsilon: 1.0,
        initial,
        output_every: 100,
        nash_constant: None,
        eps_list: None,
    }
}

pub fn cosine(amplitude: f64) -> InitialCondition {
    InitialCondition::EquilibriumPerturbation { background: 1.0, amplitude, mode: 1 }
}
