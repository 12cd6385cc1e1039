use super::functional::pow_abs;
use super::solver::NodalSolution;
use crate::elliptic::count_eigenvalues_below;
use crate::error::Result;
use crate::geometry::{nodal_components, Field};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorseRegion {
    WholeDomain,
    PositivePart,
    NegativePart,
}

/// Number of eigenvalues below `-tol` of `-Δ - p|u|^{p-1}` on `region`, with
/// Dirichlet conditions on the region's boundary.
///
/// Counted through the inertia of the shifted operator rather than by
/// computing the eigenvalues themselves.
pub fn morse_index(sol: &NodalSolution, region: MorseRegion, tol: f64) -> Result<usize> {
    let p = sol.p;
    let potential = sol.u.map(|v| p * pow_abs(v, p - 1.0));
    let mask = match region {
        MorseRegion::WholeDomain => None,
        MorseRegion::PositivePart => Some(sign_mask(&sol.u, 1)),
        MorseRegion::NegativePart => Some(sign_mask(&sol.u, -1)),
    };
    count_eigenvalues_below(&potential, mask.as_deref(), -tol)
}

/// Tolerance `10⁻³ ε_p⁻²`, relative to the operator's natural scale `p‖u‖∞^{p-1}`.
///
/// Continuous symmetries of the domain (rotations of the disk) give the
/// linearization an exact zero eigenvalue, which the lattice perturbs by
/// `O(h²)` in either direction; counting it would be a grid artifact.
pub fn default_morse_tolerance(sol: &NodalSolution) -> f64 {
    1e-3 * sol.p * pow_abs(sol.sup_plus, sol.p - 1.0)
}

/// Union of the nodal components of the given sign.
fn sign_mask(u: &Field, sign: i8) -> Vec<bool> {
    let mut mask = vec![false; u.len()];
    for comp in nodal_components(u, 0.0).into_iter().filter(|c| c.sign == sign) {
        for k in comp.nodes {
            mask[k] = true;
        }
    }
    mask
}
