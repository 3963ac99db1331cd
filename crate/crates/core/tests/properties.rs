mod common;

use std::collections::VecDeque;

use kinflux::certificates::{gamma2, gamma2_cycles, velocity_relaxation_rate};
use kinflux::network::{compute_equilibrium, shortest_paths, shortest_paths_with, PathSelection, ReactionNetwork};
use kinflux::spectral_gap;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_network;

fn network(seed: u64) -> ReactionNetwork {
    random_network(&mut ChaCha8Rng::seed_from_u64(seed), 6)
}

/// Hop distances from `from` by plain BFS over the rate matrix.
fn distances(net: &ReactionNetwork, from: usize) -> Vec<Option<usize>> {
    let n = net.n_species();
    let mut dist = vec![None; n];
    dist[from] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(j) = queue.pop_front() {
        for i in 0..n {
            if net.rate(i, j) > 0.0 && dist[i].is_none() {
                dist[i] = Some(dist[j].unwrap() + 1);
                queue.push_back(i);
            }
        }
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn equilibrium_balances_every_species(seed in any::<u64>()) {
        let net = network(seed);
        let eq = compute_equilibrium(&net).unwrap();
        prop_assert!((eq.eta.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        prop_assert!(eq.eta.iter().all(|e| *e > 0.0));
        prop_assert!(eq.residual(&net) <= 1e-12);
    }

    #[test]
    fn paths_are_minimal_and_valid(seed in any::<u64>()) {
        let net = network(seed);
        let eq = compute_equilibrium(&net).unwrap();
        for mode in [PathSelection::Lexicographic, PathSelection::MaxBottleneck] {
            let paths = shortest_paths_with(&net, &eq, mode).unwrap();
            for (to, from, p) in paths.iter() {
                prop_assert_eq!(Some(p.len()), distances(&net, from)[to]);
                prop_assert_eq!((p.nodes[0], *p.nodes.last().unwrap()), (from, to));
                prop_assert!(p.nodes.windows(2).all(|h| net.rate(h[1], h[0]) > 0.0));
                prop_assert!(p.mu > 0.0);
            }
        }
    }

    #[test]
    fn gap_lies_between_the_cycle_bound_and_velocity_relaxation(seed in any::<u64>()) {
        let net = network(seed);
        let eq = compute_equilibrium(&net).unwrap();
        let paths = shortest_paths(&net, &eq).unwrap();
        let gap = spectral_gap(&net, &eq, 1, 8).unwrap();
        prop_assert!(gap >= gamma2_cycles(&net, &eq, &paths) - 1e-8);
        prop_assert!(gap <= velocity_relaxation_rate(&net) + 1e-8);
    }

    #[test]
    fn rescaling_rates_rescales_rates_only(seed in any::<u64>(), c in 0.1f64..10.0) {
        let net = network(seed);
        let scaled = net.scaled(c);
        let (eq, eq_c) = (compute_equilibrium(&net).unwrap(), compute_equilibrium(&scaled).unwrap());
        for (a, b) in eq.eta.iter().zip(&eq_c.eta) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let (p, p_c) = (shortest_paths(&net, &eq).unwrap(), shortest_paths(&scaled, &eq_c).unwrap());
        prop_assert!((gamma2(&eq_c, &p_c) / gamma2(&eq, &p) - c).abs() < 1e-10 * c);
        let (g, g_c) = (spectral_gap(&net, &eq, 1, 6).unwrap(), spectral_gap(&scaled, &eq_c, 1, 6).unwrap());
        prop_assert!((g_c / g - c).abs() < 1e-8 * c);
    }

    #[test]
    fn gap_is_invariant_under_relabeling(seed in any::<u64>()) {
        let net = network(seed);
        let n = net.n_species();
        let nl = net.n_light();
        // Reverse the heavy species and swap the first two light ones, keeping
        // the light block first and the reference species last among them.
        let mut perm: Vec<usize> = (0..n).collect();
        perm[nl..].reverse();
        if nl >= 3 {
            perm.swap(0, 1);
        }
        let relabeled = net.permuted(&perm);
        let gap = |net: &ReactionNetwork| spectral_gap(net, &compute_equilibrium(net).unwrap(), 1, 6).unwrap();
        prop_assert!((gap(&net) - gap(&relabeled)).abs() < 1e-10);
    }
}

/// The cycle-free constant overshoots whenever one light species relaxes in
/// velocity faster than the others can exchange mass with it.
#[test]
fn plain_gamma2_is_not_a_lower_bound_in_general() {
    let net = ReactionNetwork::new(2, vec![vec![0.0, 3.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
    let eq = compute_equilibrium(&net).unwrap();
    let paths = shortest_paths(&net, &eq).unwrap();
    let gap = spectral_gap(&net, &eq, 1, 8).unwrap();
    assert!((gamma2(&eq, &paths) - 2.0).abs() < 1e-12);
    assert!((gap - 1.0).abs() < 1e-10);
    assert!(gamma2_cycles(&net, &eq, &paths) <= gap);
}
