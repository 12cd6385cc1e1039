//! Energy, Nehari projections, the nodal solver and Morse indices.

mod functional;
mod morse;
mod solver;
mod test_function;

pub use functional::{
    energy, gradient_parts, nehari_alpha, nehari_defects, nonlinearity, pow_abs, power_integral,
    project_nodal_nehari, residual,
};
pub use morse::{default_morse_tolerance, morse_index, MorseRegion};
pub use solver::{
    nonlinearity_field, seed_field, solve_least_energy_nodal, NodalSolution, Seed, SolverOptions,
};
pub use test_function::{test_function, test_function_energy, test_function_scale, TestFunctionEnergy};
