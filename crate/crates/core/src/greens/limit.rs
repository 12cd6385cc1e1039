use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::kernel::{green_field_disk, GreenCache, GreenKernel};
use crate::error::{Error, Result};
use crate::geometry::{dist, DomainSpec, Field, Grid, Point};
use crate::nehari::NodalSolution;
use crate::pohozaev::normal_derivative;

/// Reading of `∂H/∂x_i(x, x)` in the stationarity system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationarityConvention {
    /// Partial derivative in the first slot of `H(·, x)`, evaluated at `x`.
    #[default]
    FirstSlot,
    /// Gradient of the Robin function `x ↦ H(x, x)`, twice the first-slot partial.
    RobinGradient,
}

/// `8π√e (G(·, x⁺) - G(·, x⁻))` on the grid.
pub fn green_difference_field(grid: &Arc<Grid>, x_plus: Point, x_minus: Point) -> Result<Field> {
    green_difference_with(grid, x_plus, x_minus, &GreenCache::new())
}

pub(crate) fn green_difference_with(grid: &Arc<Grid>, x_plus: Point, x_minus: Point, cache: &GreenCache) -> Result<Field> {
    if dist(x_plus, x_minus) == 0.0 {
        return Err(Error::invalid("concentration points must be distinct"));
    }
    let (gp, gm) = if matches!(grid.spec(), DomainSpec::UnitDisk) {
        (Arc::new(green_field_disk(grid, x_plus)?), Arc::new(green_field_disk(grid, x_minus)?))
    } else {
        (cache.get(grid, x_plus)?, cache.get(grid, x_minus)?)
    };
    let c = limit_constant();
    let vals = gp.values.values().iter().zip(gm.values.values()).map(|(a, b)| c * (a - b)).collect();
    Field::new(grid.clone(), vals)
}

/// `8π√e`.
pub fn limit_constant() -> f64 {
    8.0 * std::f64::consts::PI * 0.5f64.exp()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GreenComparison {
    pub rel_err_sup: f64,
    pub rel_err_l2: f64,
    pub nodes: usize,
}

/// Relative distance between `p u` and the limit field built on the solution's own
/// extrema, on the nodes at least `exclusion` away from both.
pub fn compare_pu_to_green(sol: &NodalSolution, exclusion: f64) -> Result<GreenComparison> {
    let grid = sol.grid();
    let limit = green_difference_field(grid, sol.x_plus, sol.x_minus)?;
    compare_to_field(sol, &limit, exclusion)
}

pub(crate) fn compare_to_field(sol: &NodalSolution, limit: &Field, exclusion: f64) -> Result<GreenComparison> {
    if !(exclusion > 0.0) {
        return Err(Error::invalid("exclusion radius must be positive"));
    }
    let grid = sol.grid();
    let (mut num_sup, mut den_sup, mut num2, mut count) = (0.0f64, 0.0f64, 0.0, 0);
    for (k, x) in grid.points().enumerate() {
        if dist(x, sol.x_plus) < exclusion || dist(x, sol.x_minus) < exclusion {
            continue;
        }
        let l = limit.values()[k];
        let d = sol.p * sol.u.values()[k] - l;
        num_sup = num_sup.max(d.abs());
        den_sup = den_sup.max(l.abs());
        num2 += d * d;
        count += 1;
    }
    if count == 0 || den_sup == 0.0 {
        return Err(Error::invalid("comparison set is empty"));
    }
    Ok(GreenComparison {
        rel_err_sup: num_sup / den_sup,
        rel_err_l2: (num2 / count as f64).sqrt() / den_sup,
        nodes: count,
    })
}

/// Net and absolute boundary flux `∮ ∂_ν f ds`, `∮ |∂_ν f| ds`.
pub fn boundary_flux(f: &Field) -> (f64, f64) {
    let mut net = 0.0;
    let mut abs = 0.0;
    for s in f.grid().boundary_segments() {
        let d = normal_derivative(f, s.point, s.normal);
        net += s.weight * d;
        abs += s.weight * d.abs();
    }
    (net, abs)
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryPair {
    pub x_plus: Point,
    pub x_minus: Point,
    pub residual: [f64; 4],
    pub convention: StationarityConvention,
    pub iterations: usize,
}

impl StationaryPair {
    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// The four left-hand sides
/// `∂_{x_i}G(x⁺, x⁻) - ∂_{x_i}H(x⁺, x⁺)` and `∂_{x_i}G(x⁻, x⁺) - ∂_{x_i}H(x⁻, x⁻)`,
/// by central differences in the first slot.
pub fn stationarity_residual(
    kernel: &GreenKernel,
    x_plus: Point,
    x_minus: Point,
    convention: StationarityConvention,
) -> Result<[f64; 4]> {
    let step = kernel.derivative_step();
    if !(kernel.contains(x_plus) && kernel.contains(x_minus)) {
        return Err(Error::invalid("stationarity points must be interior"));
    }
    if dist(x_plus, x_minus) < 10.0 * step {
        return Err(Error::invalid("stationarity points are too close together"));
    }
    let robin_factor = match convention {
        StationarityConvention::FirstSlot => 1.0,
        StationarityConvention::RobinGradient => 2.0,
    };
    let mut out = [0.0; 4];
    for (slot, (a, b)) in [(x_plus, x_minus), (x_minus, x_plus)].into_iter().enumerate() {
        for i in 0..2 {
            let mut fwd = a;
            let mut bwd = a;
            fwd[i] += step;
            bwd[i] -= step;
            let dg = (kernel.green(fwd, b)? - kernel.green(bwd, b)?) / (2.0 * step);
            let dh = (kernel.regular(fwd, a)? - kernel.regular(bwd, a)?) / (2.0 * step);
            out[2 * slot + i] = dg - robin_factor * dh;
        }
    }
    Ok(out)
}

/// Positive root of the stationarity system for pairs `±(d, 0)` on the unit disk:
/// `d⁴ + 4d² - 1 = 0` (first slot) or `3d⁴ + 6d² - 1 = 0` (Robin gradient).
pub fn disk_symmetric_root(convention: StationarityConvention) -> f64 {
    let (a, b): (f64, f64) = match convention {
        StationarityConvention::FirstSlot => (1.0, 4.0),
        StationarityConvention::RobinGradient => (3.0, 6.0),
    };
    // a s² + b s - 1 = 0 in s = d²
    let s = (-b + (b * b + 4.0 * a).sqrt()) / (2.0 * a);
    s.sqrt()
}

const NEWTON_MAX: usize = 100;

/// Damped Newton on the stationarity system with a finite-difference Jacobian.
///
/// Rotations of the disk leave the system invariant, so the Jacobian is solved
/// in the least-squares sense through its singular value decomposition.
pub fn solve_stationarity(
    kernel: &GreenKernel,
    init: (Point, Point),
    convention: StationarityConvention,
    tol: f64,
) -> Result<StationaryPair> {
    let pack = |v: &Vector4<f64>| ([v[0], v[1]], [v[2], v[3]]);
    let mut x = Vector4::new(init.0[0], init.0[1], init.1[0], init.1[1]);
    let eval = |v: &Vector4<f64>| -> Result<Vector4<f64>> {
        let (a, b) = pack(v);
        let r = stationarity_residual(kernel, a, b, convention)?;
        Ok(Vector4::from(r))
    };
    let mut r = eval(&x)?;
    let fd = kernel.derivative_step().max(1e-4);
    for it in 0..NEWTON_MAX {
        if r.norm() <= tol {
            let (a, b) = pack(&x);
            return Ok(StationaryPair { x_plus: a, x_minus: b, residual: r.into(), convention, iterations: it });
        }
        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += fd;
            xm[j] -= fd;
            let col = (eval(&xp)? - eval(&xm)?) / (2.0 * fd);
            jac.set_column(j, &col);
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-8 * svd.singular_values.max();
        let delta = svd.solve(&r, cutoff).map_err(|e| Error::invalid(format!("stationarity Jacobian: {e}")))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = x - t * delta;
            let (a, b) = pack(&cand);
            if kernel.contains(a) && kernel.contains(b) {
                if let Ok(rc) = eval(&cand) {
                    if rc.norm() < r.norm() {
                        x = cand;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let (a, b) = pack(&x);
    if r.norm() <= tol {
        return Ok(StationaryPair { x_plus: a, x_minus: b, residual: r.into(), convention, iterations: NEWTON_MAX });
    }
    Err(Error::NotConverged { what: "stationarity Newton", iterations: NEWTON_MAX, residual: r.norm() })
}

/// Sign changes of the normal derivative of `p u` around the boundary.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryContact {
    pub contact: bool,
    pub sign_changes: usize,
    /// Boundary points on either side of each sign change.
    pub locations: Vec<[Point; 2]>,
}

pub fn nodal_line_boundary_contact(sol: &NodalSolution) -> BoundaryContact {
    boundary_sign_changes(&sol.u.scaled(sol.p))
}

/// Count sign changes of `∂_ν f` along each boundary loop, skipping values
/// below `10⁻³` of the largest magnitude.
pub fn boundary_sign_changes(f: &Field) -> BoundaryContact {
    let grid = f.grid();
    let segs = grid.boundary_segments();
    let d: Vec<f64> = segs.iter().map(|s| normal_derivative(f, s.point, s.normal)).collect();
    let floor = 1e-3 * d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut locations = Vec::new();
    for range in grid.boundary_loops() {
        let kept: Vec<usize> = range.clone().filter(|&k| d[k].abs() > floor && d[k] != 0.0).collect();
        for (idx, &k) in kept.iter().enumerate() {
            let next = kept[(idx + 1) % kept.len()];
            if kept.len() > 1 && d[k].signum() != d[next].signum() {
                locations.push([segs[k].point, segs[next].point]);
            }
        }
    }
    BoundaryContact { contact: locations.len() >= 2, sign_changes: locations.len(), locations }
}
