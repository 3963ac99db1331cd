use std::f64::consts::PI;

use super::*;
use crate::network::{compute_equilibrium, ReactionNetwork};

fn two_cycle() -> ReactionNetwork {
    ReactionNetwork::new(2, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap()
}

fn five_species(n_light: usize) -> ReactionNetwork {
    let mut k = vec![vec![0.0; 5]; 5];
    for (from, to) in [(1, 2), (2, 3), (3, 4), (4, 1), (4, 5), (3, 5), (5, 3)] {
        k[to - 1][from - 1] = 1.0;
    }
    let thetas = (0..n_light).map(|i| 1.0 + 0.5 * (n_light - 1 - i) as f64).collect();
    ReactionNetwork::new(n_light, k, thetas).unwrap()
}

fn space(net: &ReactionNetwork, dim: usize, n_x: usize, q: usize) -> PhaseSpace {
    let eq = compute_equilibrium(net).unwrap();
    let grid = Grid::new(dim, 2.0 * PI, n_x, q, net.thetas()).unwrap();
    PhaseSpace::new(net, &eq, grid).unwrap()
}

/// Deterministic, non-smooth test field.
fn scrambled(space: &PhaseSpace, seed: u64) -> PhaseState {
    let mut state = space.zeros();
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    for v in state.as_mut_slice() {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        *v = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
    }
    state
}

#[test]
fn reaction_kills_local_equilibria() {
    for n_light in [1, 3, 5] {
        let net = five_species(n_light);
        let sp = space(&net, 1, 8, 4);
        let f = sp.local_equilibrium(|x| 1.0 + 0.3 * x[0].sin());
        assert!(sp.apply_l(&f).max_abs() < 1e-13);
    }
}

#[test]
fn reaction_on_two_cycle() {
    let net = two_cycle();
    let sp = space(&net, 1, 4, 4);
    let mut f = sp.zeros();
    for c in 0..4 {
        for q in 0..4 {
            f.set(c, sp.light_entry(0, q), 2.0);
        }
    }
    let lf = sp.apply_l(&f);
    for c in 0..4 {
        for q in 0..4 {
            assert!((lf.get(c, sp.light_entry(0, q)) + 2.0).abs() < 1e-13);
            assert!((lf.get(c, sp.light_entry(1, q)) - 2.0).abs() < 1e-13);
        }
    }
}

#[test]
fn reaction_conserves_mass_and_dissipates() {
    for n_light in [1, 2, 5] {
        let net = five_species(n_light);
        for dim in [1, 2] {
            let sp = space(&net, dim, 6, 3);
            let f = scrambled(&sp, n_light as u64 + 10 * dim as u64);
            let lf = sp.apply_l(&f);
            assert!(sp.mass(&lf).abs() < 1e-12);
            let direct = -sp.inner(&lf, &f);
            let double_sum = sp.dissipation(&f);
            assert!(double_sum >= 0.0);
            assert!((direct - double_sum).abs() < 1e-10 * double_sum.max(1.0), "{direct} vs {double_sum}");
        }
    }
}

#[test]
fn transport_of_constants_and_cosines() {
    let net = two_cycle();
    let sp = space(&net, 1, 16, 4);
    let f = sp.uniform_equilibrium(1.0);
    assert!(sp.apply_t(&f).max_abs() < 1e-13);

    let mut g = sp.zeros();
    for c in 0..16 {
        let x = sp.grid().position(c)[0];
        for q in 0..4 {
            g.set(c, sp.light_entry(0, q), x.cos());
        }
    }
    let tg = sp.apply_t(&g);
    for c in 0..16 {
        let x = sp.grid().position(c)[0];
        for q in 0..4 {
            let v = sp.grid().velocity(0, q)[0];
            assert!((tg.get(c, sp.light_entry(0, q)) + v * x.sin()).abs() < 1e-12);
            assert!(tg.get(c, sp.light_entry(1, q)).abs() < 1e-13);
        }
    }
}

#[test]
fn transport_is_skew_and_isometric() {
    for dim in [1, 2] {
        let net = five_species(3);
        let sp = space(&net, dim, 8, 3);
        let f = scrambled(&sp, 1);
        let g = scrambled(&sp, 2);
        let tf = sp.apply_t(&f);
        let tg = sp.apply_t(&g);
        let lhs = sp.inner(&tf, &g);
        let rhs = -sp.inner(&f, &tg);
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0));
        assert!(sp.inner(&tf, &f).abs() < 1e-11);
        let moved = sp.transport(&f, 0.37);
        assert!((sp.norm2(&moved) - sp.norm2(&f)).abs() < 1e-11 * sp.norm2(&f));
        assert!((sp.mass(&moved) - sp.mass(&f)).abs() < 1e-12);
    }
}

#[test]
fn projection_properties() {
    let net = five_species(2);
    let sp = space(&net, 2, 4, 3);
    let f = scrambled(&sp, 3);
    let pf = sp.project_pi(&f);
    let ppf = sp.project_pi(&pf);
    assert!(pf.difference(&ppf).max_abs() < 1e-13);
    let micro = sp.micro_part(&f);
    assert!(sp.inner(&micro, &pf).abs() < 1e-12);
    let total = sp.norm2(&f);
    assert!((sp.norm2(&pf) + sp.norm2(&micro) - total).abs() < 1e-12 * total);
    // ||F||^2 = sum eta_i = 1 per unit volume.
    let one = sp.uniform_equilibrium(1.0);
    assert!((sp.norm2(&one) - (2.0 * PI).powi(2)).abs() < 1e-10);
}

#[test]
fn a_form_is_bounded_by_half_the_norm() {
    for dim in [1, 2] {
        let net = five_species(5);
        let sp = space(&net, dim, 8, 4);
        for seed in 0..4 {
            let f = scrambled(&sp, seed);
            let a = sp.a_form(&f, 0.8);
            assert!(a.abs() <= 0.5 * sp.norm2(&f) + 1e-12);
        }
    }
}

#[test]
fn two_cycle_gap_is_one() {
    let net = two_cycle();
    let eq = compute_equilibrium(&net).unwrap();
    for q in [3, 5, 8] {
        let gap = spectral_gap(&net, &eq, 1, q).unwrap();
        assert!((gap - 1.0).abs() < 1e-10, "Q = {q}: {gap}");
    }
}

#[test]
fn gap_does_not_depend_on_resolution() {
    let net = five_species(5);
    let eq = compute_equilibrium(&net).unwrap();
    let reference = spectral_gap(&net, &eq, 1, 3).unwrap();
    for (dim, q) in [(1, 6), (2, 3), (2, 4)] {
        let gap = spectral_gap(&net, &eq, dim, q).unwrap();
        assert!((gap - reference).abs() < 1e-9, "d = {dim}, Q = {q}: {gap} vs {reference}");
    }
    assert!((reference - 0.5618).abs() < 1e-3, "{reference}");
}

#[test]
fn gap_of_asymmetric_light_pair_is_the_slower_outflow() {
    // k_21 = 1, k_12 = 3: the velocity relaxation of S_1 proceeds at K_1 = 1.
    let net = ReactionNetwork::new(2, vec![vec![0.0, 3.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
    let eq = compute_equilibrium(&net).unwrap();
    let gap = spectral_gap(&net, &eq, 1, 6).unwrap();
    assert!((gap - 1.0).abs() < 1e-10, "{gap}");
}

#[test]
fn rejects_mismatched_grid() {
    let net = two_cycle();
    let eq = compute_equilibrium(&net).unwrap();
    let grid = Grid::new(1, 1.0, 4, 4, &[1.0]).unwrap();
    assert!(matches!(PhaseSpace::new(&net, &eq, grid), Err(DiscretizationError::Mismatch(_))));
}
