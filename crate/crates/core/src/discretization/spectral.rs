use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{DiscretizationError, Grid, PhaseSpace};
use crate::network::{EquilibriumProfile, ReactionNetwork};

/// Smallest value of `-<L f, f> / ||f||^2` over one position cell, restricted
/// to the orthogonal complement of the local equilibrium `F`.
///
/// The symmetric part of `-L` is assembled in the weighted inner product,
/// `F` is deflated exactly with a Householder basis of its complement, and the
/// remaining block is diagonalized densely.
pub fn spectral_gap(
    net: &ReactionNetwork,
    eq: &EquilibriumProfile,
    dim: usize,
    quad_order: usize,
) -> Result<f64, DiscretizationError> {
    let grid = Grid::new(dim, 1.0, 2, quad_order, net.thetas())?;
    let space = PhaseSpace::new(net, eq, grid)?;
    let gap = local_gap(&space);
    if gap <= 0.0 {
        return Err(DiscretizationError::NonPositiveGap(gap));
    }
    Ok(gap)
}

pub(crate) fn local_gap(space: &PhaseSpace) -> f64 {
    let g = space.generator();
    let n = g.nrows();
    let sqrt_w: Vec<f64> = space.block_weights().iter().map(|w| w.sqrt()).collect();
    // W^{1/2} (-(W G + G^T W) / 2) W^{-1/2} ... in orthonormal coordinates.
    let s = DMatrix::from_fn(n, n, |r, c| {
        let wg_rc = space.block_weights()[r] * g[(r, c)];
        let wg_cr = space.block_weights()[c] * g[(c, r)];
        -0.5 * (wg_rc + wg_cr) / (sqrt_w[r] * sqrt_w[c])
    });
    let mut e = DVector::from_iterator(n, space.equilibrium_block().iter().zip(&sqrt_w).map(|(x, w)| x * w));
    e /= e.norm();
    let basis = complement_basis(&e);
    let reduced = basis.transpose() * &s * &basis;
    let eig = SymmetricEigen::new(reduced);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Orthonormal basis (as columns) of the complement of the unit vector `e`,
/// taken from the Householder reflector mapping `e` to a coordinate axis.
fn complement_basis(e: &DVector<f64>) -> DMatrix<f64> {
    let n = e.len();
    let sign = if e[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = e.clone();
    u[0] += sign;
    let un = u.norm_squared();
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / un);
    h.columns(1, n - 1).into_owned()
}
