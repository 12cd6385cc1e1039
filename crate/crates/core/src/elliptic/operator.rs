use std::sync::Arc;

use super::ldl::{LdlFactor, SymCsc};
use crate::error::{Error, Result};
use crate::geometry::{Field, Grid, Point};

/// Raw `-Δ_h u` on interior nodes with zero Dirichlet ghosts.
pub(crate) fn neg_laplacian_raw(grid: &Grid, u: &[f64], out: &mut [f64]) {
    let ih2 = 1.0 / (grid.h() * grid.h());
    for k in 0..grid.len() {
        let mut acc = 0.0;
        for arm in grid.arms(k) {
            match arm.neighbor() {
                Some(nb) => acc += u[k] - u[nb],
                None => acc += u[k] / arm.theta,
            }
        }
        out[k] = acc * ih2;
    }
}

/// Cut-cell five-point `-Δu` with homogeneous Dirichlet data.
pub fn apply_laplacian(u: &Field) -> Field {
    let mut out = vec![0.0; u.len()];
    neg_laplacian_raw(u.grid(), u.values(), &mut out);
    Field::from_parts(u.grid().clone(), out)
}

/// Discrete Dirichlet form `h^2 <-Δu, v>` as an edge sum.
pub fn dirichlet_form(u: &Field, v: &Field) -> f64 {
    dirichlet_form_raw(u.grid(), u.values(), v.values())
}

pub(crate) fn dirichlet_form_raw(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 0..grid.len() {
        let arms = grid.arms(k);
        // each interior edge once via the +x and +y arms
        for a in [0usize, 2] {
            if let Some(nb) = arms[a].neighbor() {
                acc += (u[k] - u[nb]) * (v[k] - v[nb]);
            }
        }
        for arm in arms {
            if arm.is_ghost() {
                acc += u[k] * v[k] / arm.theta;
            }
        }
    }
    acc
}

/// Discrete `∫|∇u|^2`.
pub fn dirichlet_energy(u: &Field) -> f64 {
    dirichlet_form(u, u)
}

/// Operator `-Δ_h + diag(shift)` restricted to a node subset, with Dirichlet
/// conditions on the subset's complement.
pub(crate) struct LocalOperator {
    pub(crate) global: Vec<usize>,
    pub(crate) coords: Vec<[u32; 2]>,
    pub(crate) matrix: SymCsc,
}

impl LocalOperator {
    pub(crate) fn assemble(
        grid: &Grid,
        shift: impl Fn(usize) -> f64,
        mask: Option<&[bool]>,
    ) -> Result<Self> {
        let inside = |k: usize| mask.is_none_or(|m| m[k]);
        let mut local = vec![u32::MAX; grid.len()];
        let mut global = Vec::new();
        for k in 0..grid.len() {
            if inside(k) {
                local[k] = global.len() as u32;
                global.push(k);
            }
        }
        if global.is_empty() {
            return Err(Error::invalid("operator restricted to an empty node set"));
        }
        let ih2 = 1.0 / (grid.h() * grid.h());
        let mut col_ptr = Vec::with_capacity(global.len() + 1);
        let mut row_idx = Vec::with_capacity(5 * global.len());
        let mut values = Vec::with_capacity(5 * global.len());
        col_ptr.push(0);
        let mut coords = Vec::with_capacity(global.len());
        for (l, &k) in global.iter().enumerate() {
            let [i, j] = grid.lattice_coords(k);
            coords.push([i as u32, j as u32]);
            let mut diag = 0.0;
            let mut off: Vec<(u32, f64)> = Vec::with_capacity(4);
            for arm in grid.arms(k) {
                match arm.neighbor() {
                    Some(nb) if inside(nb) => {
                        diag += 1.0;
                        off.push((local[nb], -ih2));
                    }
                    Some(_) => diag += 1.0,
                    None => diag += 1.0 / arm.theta,
                }
            }
            off.push((l as u32, diag * ih2 + shift(k)));
            off.sort_unstable_by_key(|e| e.0);
            for (r, v) in off {
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(LocalOperator {
            matrix: SymCsc { n: global.len(), col_ptr, row_idx, values },
            global,
            coords,
        })
    }

    pub(crate) fn factorize(&self) -> Result<LdlFactor> {
        LdlFactor::new(&self.matrix, &self.coords)
    }

    pub(crate) fn scatter(&self, local: &[f64], len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (&k, &v) in self.global.iter().zip(local) {
            out[k] = v;
        }
        out
    }
}

/// Cached factorization of the Dirichlet Laplacian of `grid`.
pub(crate) fn laplacian_factor(grid: &Grid) -> Result<Arc<LdlFactor>> {
    if let Some(f) = grid.laplacian_factor.get() {
        return Ok(f.clone());
    }
    let op = LocalOperator::assemble(grid, |_| 0.0, None)?;
    let factor = Arc::new(op.factorize()?);
    // a concurrent initializer may have won; either result is identical
    let _ = grid.laplacian_factor.set(factor.clone());
    Ok(grid.laplacian_factor.get().cloned().unwrap_or(factor))
}

const CG_MAX_ITERS: usize = 200;

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Conjugate gradients on `-Δ_h w = rhs`, preconditioned by the sparse factor.
pub(crate) fn poisson_cg(grid: &Grid, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = grid.len();
    let bnorm = l2(rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let factor = laplacian_factor(grid)?;
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z = factor.solve(&r);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 0..CG_MAX_ITERS {
        neg_laplacian_raw(grid, &p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::NotConverged { what: "poisson CG", iterations: it, residual: l2(&r) / bnorm });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        // true residual guards against drift in the recurrence
        let mut true_r = vec![0.0; n];
        neg_laplacian_raw(grid, &x, &mut true_r);
        for k in 0..n {
            true_r[k] = rhs[k] - true_r[k];
        }
        let res = l2(&true_r) / bnorm;
        if res <= tol {
            return Ok(x);
        }
        r = true_r;
        z = factor.solve(&r);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let mut ax = vec![0.0; n];
    neg_laplacian_raw(grid, &x, &mut ax);
    let res = l2(&rhs.iter().zip(&ax).map(|(a, b)| a - b).collect::<Vec<_>>()) / bnorm;
    Err(Error::NotConverged { what: "poisson CG", iterations: CG_MAX_ITERS, residual: res })
}

/// Solve `-Δw = f` with `w = 0` on the boundary, to relative residual `tol`.
pub fn poisson_solve(f: &Field, tol: f64) -> Result<Field> {
    let w = poisson_cg(f.grid(), f.values(), tol)?;
    Field::new(f.grid().clone(), w)
}

/// Solve `-Δw = f` with `w = g` on the boundary (imposed at the cut-cell ghosts).
pub fn poisson_solve_dirichlet(
    f: &Field,
    boundary: impl Fn(Point) -> f64,
    tol: f64,
) -> Result<Field> {
    let grid = f.grid();
    let ih2 = 1.0 / (grid.h() * grid.h());
    let mut rhs = f.values().to_vec();
    for (k, r) in rhs.iter_mut().enumerate() {
        for (a, arm) in grid.arms(k).iter().enumerate() {
            if arm.is_ghost() {
                *r += boundary(grid.ghost_point(k, a)) * ih2 / arm.theta;
            }
        }
    }
    let w = poisson_cg(grid, &rhs, tol)?;
    Field::new(grid.clone(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn square(n: usize) -> Arc<Grid> {
        build_grid(DomainSpec::Rectangle { width: 1.0, height: 1.0 }, n).unwrap()
    }

    // unit square centered at the origin: sin(pi(x+1/2)) sin(pi(y+1/2)) = cos(pi x) cos(pi y)
    fn mode(x: Point) -> f64 {
        (PI * x[0]).cos() * (PI * x[1]).cos()
    }

    #[test]
    fn laplacian_of_zero() {
        let g = square(33);
        assert!(apply_laplacian(&Field::zeros(g)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_eigenmode() {
        for n in [33, 65] {
            let g = square(n);
            let u = Field::from_fn(g.clone(), mode).unwrap();
            let lu = apply_laplacian(&u);
            let h = g.h();
            let err = lu
                .values()
                .iter()
                .zip(u.values())
                .map(|(a, b)| (a - 2.0 * PI * PI * b).abs())
                .fold(0.0, f64::max);
            // truncation error pi^4 h^2 / 6
            assert!(err <= PI.powi(4) / 6.0 * h * h * 1.01, "n={n} err={err}");
        }
    }

    #[test]
    fn laplacian_of_constant_only_touches_boundary_rows() {
        let g = square(33);
        let one = Field::from_fn(g.clone(), |_| 1.0).unwrap();
        let lu = apply_laplacian(&one);
        for k in 0..g.len() {
            if g.is_near_boundary(k) {
                assert!(lu.values()[k] > 0.0);
            } else {
                assert_eq!(lu.values()[k], 0.0);
            }
        }
    }

    #[test]
    fn laplacian_is_symmetric() {
        let g = build_grid(DomainSpec::UnitDisk, 65).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let u = Field::new(g.clone(), (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let v = Field::new(g.clone(), (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let a = apply_laplacian(&u).dot(&v);
        let b = u.dot(&apply_laplacian(&v));
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
        assert!((dirichlet_form(&u, &v) - a).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn poisson_zero_rhs() {
        let g = square(33);
        let w = poisson_solve(&Field::zeros(g), 1e-10).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poisson_manufactured_solution() {
        let g = square(129);
        let f = Field::from_fn(g.clone(), |x| 2.0 * PI * PI * mode(x)).unwrap();
        let w = poisson_solve(&f, 1e-12).unwrap();
        let err = g
            .points()
            .zip(w.values())
            .map(|(x, v)| (v - mode(x)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "err={err}");
        let back = apply_laplacian(&w);
        let res: f64 = back.values().iter().zip(f.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-12 * l2(f.values()));
    }

    #[test]
    fn poisson_is_linear() {
        let g = build_grid(DomainSpec::UnitDisk, 65).unwrap();
        let tol = 1e-10;
        let f1 = Field::from_fn(g.clone(), |x| x[0] * x[0]).unwrap();
        let f2 = Field::from_fn(g.clone(), |x| (3.0f64 * x[1]).sin()).unwrap();
        let sum = Field::new(g.clone(), f1.values().iter().zip(f2.values()).map(|(a, b)| a + b).collect()).unwrap();
        let (w1, w2, w) = (poisson_solve(&f1, tol).unwrap(), poisson_solve(&f2, tol).unwrap(), poisson_solve(&sum, tol).unwrap());
        let scale = w.max_abs();
        for k in 0..g.len() {
            assert!((w.values()[k] - w1.values()[k] - w2.values()[k]).abs() <= 10.0 * tol * scale);
        }
    }

    #[test]
    fn dirichlet_data_reproduces_harmonic_function() {
        // x^2 - y^2 is harmonic; second-order cut-cell scheme on the disk
        let g = build_grid(DomainSpec::UnitDisk, 129).unwrap();
        let exact = |x: Point| x[0] * x[0] - x[1] * x[1] + 0.5 * x[0];
        let w = poisson_solve_dirichlet(&Field::zeros(g.clone()), exact, 1e-12).unwrap();
        let err = g.points().zip(w.values()).map(|(x, v)| (v - exact(x)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "err={err}");
    }
}
