//! Gauss–Hermite rules for the standard normal density.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights with `sum_q w_q p(x_q) = E[p(X)]`, `X ~ N(0, 1)`, exact
/// for polynomials of degree `<= 2n - 1`. Weights sum to one and the rule is
/// exactly symmetric about zero.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    // Golub–Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    let jacobi = DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(n);
    for x in &mut nodes {
        // Newton polish on the orthonormal recurrence, then Christoffel weight.
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_hermite(n, *x);
            *x -= p / dp;
        }
        let (_, _, sum_sq) = orthonormal_hermite(n, *x);
        weights.push(1.0 / sum_sq);
    }

    // Symmetrize: first moments vanish exactly.
    for k in 0..n / 2 {
        let m = n - 1 - k;
        let x = 0.5 * (nodes[m] - nodes[k]);
        let w = 0.5 * (weights[m] + weights[k]);
        nodes[k] = -x;
        nodes[m] = x;
        weights[k] = w;
        weights[m] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (nodes, weights)
}

/// Returns `(p_n(x), p_n'(x), sum_{m<n} p_m(x)^2)` for the orthonormal
/// polynomials `p_m = He_m / sqrt(m!)`.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum_sq = 0.0;
    for m in 0..n {
        sum_sq += cur * cur;
        let next = (x * cur - (m as f64).sqrt() * prev) / ((m + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    // p_n' = sqrt(n) p_{n-1}
    (cur, (n as f64).sqrt() * prev, sum_sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment(n: usize, k: i32) -> f64 {
        let (x, w) = gauss_hermite(n);
        x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum()
    }

    #[test]
    fn normal_moments() {
        // E[X^k] = (k-1)!! for even k.
        for n in [2, 3, 4, 8, 16, 32] {
            assert!((moment(n, 0) - 1.0).abs() < 1e-14);
            assert!(moment(n, 1).abs() < 1e-15);
            assert!((moment(n, 2) - 1.0).abs() < 1e-13, "n={n}");
            assert!(moment(n, 3).abs() < 1e-13);
            if n >= 3 {
                assert!((moment(n, 4) - 3.0).abs() < 1e-12, "n={n}");
            }
            if n >= 4 {
                assert!((moment(n, 6) - 15.0).abs() < 1e-11, "n={n}");
            }
        }
    }

    #[test]
    fn known_three_point_rule() {
        let (x, w) = gauss_hermite(3);
        let r3 = 3f64.sqrt();
        assert!((x[0] + r3).abs() < 1e-15 && x[1] == 0.0 && (x[2] - r3).abs() < 1e-15);
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-15 && (w[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_rule_is_not_exact_for_quartic() {
        assert!((moment(2, 4) - 1.0).abs() < 1e-14);
    }
}
