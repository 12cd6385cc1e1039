use std::sync::Arc;

use super::functional::{
    check_exponent, energy, nehari_defects, nonlinearity, pde_residual, pow_abs,
    project_nodal_nehari,
};
use crate::elliptic::ldl::LdlFactor;
use crate::elliptic::{dirichlet_form_raw, laplacian_factor, poisson_cg, smallest_eigenpairs, LocalOperator};
use crate::error::{Error, Result};
use crate::geometry::{nodal_components, DomainSpec, Field, Grid, Point};

/// Starting point of the descent.
#[derive(Clone, Debug, Default)]
pub enum Seed {
    /// `x₁` times a positive bump vanishing on the boundary.
    #[default]
    Antisymmetric,
    /// Second Dirichlet eigenfunction of the grid.
    SecondEigenfunction,
    /// A previous solution on the same grid, typically at a nearby exponent.
    Continuation(Field),
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol_solve: f64,
    pub tol_nehari: f64,
    pub max_iters: usize,
    pub step: f64,
    pub init: Seed,
    /// Relative gradient size below which descent hands over to Newton polishing.
    pub newton_switch: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_solve: 1e-8,
            tol_nehari: 1e-10,
            max_iters: 2000,
            step: 1.0,
            init: Seed::Antisymmetric,
            newton_switch: 1e-3,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_solve > 0.0 && self.tol_nehari > 0.0) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::invalid(format!("step must lie in (0, 1], got {}", self.step)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.newton_switch > 0.0) {
            return Err(Error::invalid("newton_switch must be positive"));
        }
        Ok(())
    }
}

/// A converged least-energy nodal solution.
#[derive(Clone, Debug)]
pub struct NodalSolution {
    pub u: Field,
    pub p: f64,
    pub energy: f64,
    /// `H¹₀` norm of the Sobolev gradient, `‖(-Δ)^{-1}(-Δu - f(u))‖`.
    pub grad_norm: f64,
    /// Grid-scaled residual `h‖-Δu - f(u)‖₂`.
    pub residual: f64,
    pub x_plus: Point,
    pub x_minus: Point,
    pub sup_plus: f64,
    pub sup_minus: f64,
    pub iterations: usize,
    pub descent_iterations: usize,
    pub nodal_count: usize,
    /// Largest relative defect of the two nodal Nehari constraints.
    pub nehari_defect: f64,
    /// Energy before and after every accepted descent step.
    pub descent_steps: Vec<[f64; 2]>,
}

impl NodalSolution {
    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }
}

/// Initial field for `seed`, before projection.
pub fn seed_field(grid: &Arc<Grid>, seed: &Seed) -> Result<Field> {
    match seed {
        Seed::Antisymmetric => {
            let spec = grid.spec().clone();
            Field::from_fn(grid.clone(), move |x| x[0] * bump(&spec, x))
        }
        Seed::SecondEigenfunction => {
            let pairs = smallest_eigenpairs(&Field::zeros(grid.clone()), 2, 1e-8)?;
            Ok(pairs[1].vector.clone())
        }
        Seed::Continuation(prev) => {
            if prev.len() != grid.len() {
                return Err(Error::invalid("continuation seed lives on a different grid"));
            }
            Field::new(grid.clone(), prev.values().to_vec())
        }
    }
}

fn bump(spec: &DomainSpec, x: Point) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    match spec {
        DomainSpec::UnitDisk => 1.0 - r2,
        DomainSpec::Annulus { r_inner, r_outer } => {
            let r = r2.sqrt();
            (r - r_inner) * (r_outer - r)
        }
        DomainSpec::Rectangle { width, height } => {
            (0.25 * width * width - x[0] * x[0]) * (0.25 * height * height - x[1] * x[1])
        }
        DomainSpec::Polygon { .. } => spec.signed_distance(x).max(0.0),
    }
}

struct State {
    u: Vec<f64>,
    energy: f64,
    grad: Vec<f64>,
    grad_norm: f64,
    residual: f64,
}

fn evaluate(grid: &Arc<Grid>, u: Vec<f64>, p: f64) -> Result<State> {
    let field = Field::new(grid.clone(), u)?;
    let e = energy(&field, p)?;
    let r = pde_residual(&field, p);
    let h = grid.h();
    let residual = h * r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let grad = poisson_cg(grid, &r, 1e-12)?;
    let q: f64 = h * h * r.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>();
    if !(e.is_finite() && residual.is_finite() && q.is_finite()) {
        return Err(Error::Overflow("solver iterate".into()));
    }
    Ok(State { u: field.into_values(), energy: e, grad, grad_norm: q.max(0.0).sqrt(), residual })
}

fn sign_changing(u: &[f64]) -> bool {
    u.iter().any(|&v| v > 0.0) && u.iter().any(|&v| v < 0.0)
}

fn project(grid: &Arc<Grid>, u: Vec<f64>, p: f64, iterations: usize) -> Result<Vec<f64>> {
    if !sign_changing(&u) {
        return Err(Error::LostSignChange { iterations });
    }
    Ok(project_nodal_nehari(&Field::new(grid.clone(), u)?, p)?.into_values())
}

/// Least-energy nodal solution by projected Sobolev-gradient descent on the
/// nodal Nehari set, finished with Newton steps on `-Δu = |u|^{p-1}u`.
pub fn solve_least_energy_nodal(grid: &Arc<Grid>, p: f64, opts: &SolverOptions) -> Result<NodalSolution> {
    check_exponent(p)?;
    opts.validate()?;
    let seed = seed_field(grid, &opts.init)?;
    let u0 = project(grid, seed.into_values(), p, 0)?;
    let mut state = evaluate(grid, u0, p)?;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut step = opts.step;
    let fail = |reason, iterations, s: &State| Error::SolveFailed {
        reason,
        iterations,
        grad_norm: s.grad_norm,
        residual: s.residual,
        last_iterate: Box::new(Field::from_parts(grid.clone(), s.u.clone())),
    };

    let mut switch = opts.newton_switch;
    loop {
        descend(grid, p, opts, switch, &mut state, &mut history, &mut iterations, &mut step)?;
        if converged(&state, opts) {
            break;
        }
        match polish(grid, p, opts, &mut state, &mut iterations)? {
            Polish::Converged => break,
            Polish::LimitReached => return Err(fail("iteration limit reached", iterations, &state)),
            // a near-singular Jacobian (symmetry modes) needs a closer start
            Polish::Stalled if switch > 1e-12 && iterations < opts.max_iters => switch *= 1e-2,
            Polish::Stalled => return Err(fail("Newton stalled", iterations, &state)),
        }
    }
    let descent_iterations = history.len();

    finish(grid, p, state, iterations, descent_iterations, history, opts)
}

#[allow(clippy::too_many_arguments)]
fn descend(
    grid: &Arc<Grid>,
    p: f64,
    opts: &SolverOptions,
    switch: f64,
    state: &mut State,
    history: &mut Vec<[f64; 2]>,
    iterations: &mut usize,
    step: &mut f64,
) -> Result<()> {
    if !history.is_empty() {
        // Newton steps leave the nodal Nehari set
        let u = project(grid, std::mem::take(&mut state.u), p, *iterations)?;
        *state = evaluate(grid, u, p)?;
    }
    while *iterations < opts.max_iters {
        let scale = dirichlet_form_raw(grid, &state.u, &state.u).sqrt();
        if converged(state, opts) || state.grad_norm <= switch * scale {
            return Ok(());
        }
        *iterations += 1;
        let mut accepted = None;
        while *step >= 1e-10 {
            let trial: Vec<f64> = state.u.iter().zip(&state.grad).map(|(a, g)| a - *step * g).collect();
            if !sign_changing(&trial) {
                *step *= 0.5;
                continue;
            }
            let cand = evaluate(grid, project(grid, trial, p, *iterations)?, p)?;
            if cand.energy <= state.energy + 1e-14 * state.energy.abs() {
                accepted = Some(cand);
                break;
            }
            *step *= 0.5;
        }
        match accepted {
            Some(cand) => {
                history.push([state.energy, cand.energy]);
                *state = cand;
                *step = opts.step.min(2.0 * *step);
            }
            // energy is flat to rounding: only Newton can make progress
            None => {
                *step = opts.step;
                return Ok(());
            }
        }
    }
    Ok(())
}

enum Polish {
    Converged,
    Stalled,
    LimitReached,
}

/// Newton steps on the residual; the Jacobian shares the Laplacian's pattern.
fn polish(grid: &Arc<Grid>, p: f64, opts: &SolverOptions, state: &mut State, iterations: &mut usize) -> Result<Polish> {
    let symbolic = laplacian_factor(grid)?.symbolic().clone();
    while !converged(state, opts) {
        if *iterations >= opts.max_iters {
            return Ok(Polish::LimitReached);
        }
        *iterations += 1;
        let u = &state.u;
        let op = LocalOperator::assemble(grid, |k| -p * pow_abs(u[k], p - 1.0), None)?;
        let jac = match LdlFactor::factorize(&op.matrix, symbolic.clone()) {
            Ok(j) => j,
            Err(Error::ZeroPivot(_)) => return Ok(Polish::Stalled),
            Err(e) => return Err(e),
        };
        let r = pde_residual(&Field::from_parts(grid.clone(), u.clone()), p);
        let delta = jac.solve(&r);
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..12 {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a - t * d).collect();
            if sign_changing(&trial) {
                if let Ok(cand) = evaluate(grid, trial, p) {
                    if cand.residual < state.residual {
                        next = Some(cand);
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match next {
            Some(cand) => *state = cand,
            None => return Ok(Polish::Stalled),
        }
    }
    Ok(Polish::Converged)
}

fn converged(s: &State, opts: &SolverOptions) -> bool {
    s.grad_norm <= opts.tol_solve && s.residual <= opts.tol_solve
}

fn finish(
    grid: &Arc<Grid>,
    p: f64,
    state: State,
    iterations: usize,
    descent_iterations: usize,
    descent_steps: Vec<[f64; 2]>,
    opts: &SolverOptions,
) -> Result<NodalSolution> {
    // the Newton iterate is on the nodal Nehari set up to its residual; make it exact
    let projected = project(grid, state.u.clone(), p, iterations)?;
    let mut state = evaluate(grid, projected, p)?;
    if !converged(&state, opts) {
        return Err(Error::SolveFailed {
            reason: "final projection left the tolerance",
            iterations,
            grad_norm: state.grad_norm,
            residual: state.residual,
            last_iterate: Box::new(Field::from_parts(grid.clone(), state.u)),
        });
    }
    let mut u = Field::new(grid.clone(), std::mem::take(&mut state.u))?;
    let (imax, imin) = (u.argmax(), u.argmin());
    if -u.values()[imin] > u.values()[imax] {
        u = u.scaled(-1.0);
    }
    let (imax, imin) = (u.argmax(), u.argmin());
    let (dp, dm) = nehari_defects(&u, p)?;
    if dp.max(dm) > opts.tol_nehari {
        return Err(Error::SolveFailed {
            reason: "nodal Nehari constraints violated",
            iterations,
            grad_norm: state.grad_norm,
            residual: state.residual,
            last_iterate: Box::new(u),
        });
    }
    let nodal_count = nodal_components(&u, 0.0).len();
    Ok(NodalSolution {
        p,
        energy: state.energy,
        grad_norm: state.grad_norm,
        residual: state.residual,
        x_plus: grid.point(imax),
        x_minus: grid.point(imin),
        sup_plus: u.values()[imax],
        sup_minus: -u.values()[imin],
        iterations,
        descent_iterations,
        nodal_count,
        nehari_defect: dp.max(dm),
        descent_steps,
        u,
    })
}

/// Pointwise nonlinearity `|u|^{p-1}u` as a field.
pub fn nonlinearity_field(u: &Field, p: f64) -> Field {
    u.map(|v| nonlinearity(v, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::dirichlet_energy;
    use crate::geometry::build_grid;
    use crate::nehari::{morse_index, residual, MorseRegion};
    use std::sync::OnceLock;

    fn disk_solution() -> &'static NodalSolution {
        static SOL: OnceLock<NodalSolution> = OnceLock::new();
        SOL.get_or_init(|| {
            let g = build_grid(DomainSpec::UnitDisk, 129).unwrap();
            solve_least_energy_nodal(&g, 3.0, &SolverOptions::default()).unwrap()
        })
    }

    #[test]
    fn converges_at_p3_with_two_nodal_domains() {
        let s = disk_solution();
        assert!(s.grad_norm <= 1e-8 && s.residual <= 1e-8, "{} {}", s.grad_norm, s.residual);
        assert!((residual(&s.u, 3.0).unwrap() - s.residual).abs() < 1e-12);
        assert_eq!(s.nodal_count, 2);
        assert!(s.nehari_defect <= 1e-10);
        assert!(s.sup_plus >= s.sup_minus);
        assert_eq!(s.u.values()[s.u.argmax()], s.sup_plus);
    }

    #[test]
    fn antisymmetric_seed_stays_odd() {
        let s = disk_solution();
        assert!((s.sup_plus - s.sup_minus).abs() <= 1e-6 * s.sup_plus);
        assert!((s.x_plus[0] + s.x_minus[0]).abs() < 1e-12 && (s.x_plus[1] + s.x_minus[1]).abs() < 1e-12);
    }

    #[test]
    fn morse_indices_at_p3() {
        let s = disk_solution();
        let tol = crate::nehari::default_morse_tolerance(s);
        assert_eq!(morse_index(s, MorseRegion::WholeDomain, tol).unwrap(), 2);
        assert_eq!(morse_index(s, MorseRegion::PositivePart, tol).unwrap(), 1);
        assert_eq!(morse_index(s, MorseRegion::NegativePart, tol).unwrap(), 1);
        // the rotation mode sits just below zero on the lattice
        assert_eq!(morse_index(s, MorseRegion::WholeDomain, 0.0).unwrap(), 3);
    }

    #[test]
    fn energy_never_increases_and_matches_identity() {
        let s = disk_solution();
        assert!(!s.descent_steps.is_empty());
        for [before, after] in &s.descent_steps {
            assert!(after <= &(before + 1e-14 * before.abs()));
        }
        let identity = (0.5 - 1.0 / 4.0) * dirichlet_energy(&s.u);
        assert!((s.energy - identity).abs() <= 2e-10 * s.energy.abs());
    }

    #[test]
    fn second_eigenfunction_seed_reaches_same_energy() {
        // a simple second eigenvalue; on the disk its eigenspace is a rotation family
        let g = build_grid(DomainSpec::Rectangle { width: 2.0, height: 1.0 }, 97).unwrap();
        let opts = SolverOptions { init: Seed::SecondEigenfunction, ..Default::default() };
        let s = solve_least_energy_nodal(&g, 3.0, &opts).unwrap();
        let odd = solve_least_energy_nodal(&g, 3.0, &SolverOptions::default()).unwrap();
        assert_eq!(s.nodal_count, 2);
        assert!((s.energy - odd.energy).abs() <= 1e-6 * odd.energy, "{} {}", s.energy, odd.energy);
    }

    #[test]
    fn sup_norm_lower_bound_at_p5() {
        let g = disk_solution().grid().clone();
        let opts = SolverOptions { init: Seed::Continuation(disk_solution().u.clone()), ..Default::default() };
        let s = solve_least_energy_nodal(&g, 5.0, &opts).unwrap();
        assert_eq!(s.nodal_count, 2);
        assert!(s.sup_plus >= 5.7832f64.powf(0.25));
        assert!(s.sup_minus >= 5.7832f64.powf(0.25));
    }

    #[test]
    fn energy_refinement_is_second_order() {
        let e129 = disk_solution().energy;
        let run = |n| {
            let g = build_grid(DomainSpec::UnitDisk, n).unwrap();
            solve_least_energy_nodal(&g, 3.0, &SolverOptions::default()).unwrap().energy
        };
        let e65 = run(65);
        let e257 = run(257);
        let ratio = (e65 - e129).abs() / (e129 - e257).abs();
        assert!(ratio > 2.5, "ratio {ratio}: {e65} {e129} {e257}");
    }

    #[test]
    fn rejects_bad_options() {
        let g = disk_solution().grid().clone();
        let opts = SolverOptions { step: 1.5, ..Default::default() };
        assert!(solve_least_energy_nodal(&g, 3.0, &opts).is_err());
        assert!(solve_least_energy_nodal(&g, 1.0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn zero_field_has_no_negative_directions() {
        let g = disk_solution().grid().clone();
        let zero = Field::zeros(g);
        assert_eq!(crate::elliptic::count_eigenvalues_below(&zero, None, -1e-8).unwrap(), 0);
    }
}
