//! Linear kernels: the cut-cell Laplacian, Poisson solves and Schrödinger eigenpairs.

mod eigen;
pub mod ldl;
mod operator;

pub use eigen::{
    count_eigenvalues_below, shifted_inertia, smallest_eigenpairs, smallest_eigenpairs_masked,
    EigenPair,
};
pub use operator::{
    apply_laplacian, dirichlet_energy, dirichlet_form, poisson_solve, poisson_solve_dirichlet,
};
pub(crate) use operator::{dirichlet_form_raw, laplacian_factor, neg_laplacian_raw, poisson_cg, LocalOperator};
