//! Pohozaev identities as consistency checks on computed solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Field, Point};
use crate::nehari::{pow_abs, power_integral, NodalSolution};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PohozaevReport {
    /// `p²/(p+1) ∫|u|^{p+1}`.
    pub lhs: f64,
    /// `¼ ∮ ((x-c)·ν) (∂_ν(pu))² ds`.
    pub rhs: f64,
    pub rel_residual: f64,
}

/// Outward normal derivative of `u` at a boundary point with outward normal `nu`.
///
/// One-sided quadratic fit through `u = 0` on the boundary and two interior
/// samples at depths `2h` and `4h`, each obtained by bilinear interpolation.
pub fn normal_derivative(u: &Field, point: Point, nu: Point) -> f64 {
    let t1 = 2.0 * u.grid().h();
    let at = |t: f64| u.interpolate([point[0] - t * nu[0], point[1] - t * nu[1]]);
    let (u1, u2) = (at(t1), at(2.0 * t1));
    -(4.0 * u1 - u2) / (2.0 * t1)
}

/// Compare both sides of the global identity for `p u`, with `x` measured from `center`.
pub fn pohozaev_check(sol: &NodalSolution, center: Point) -> Result<PohozaevReport> {
    let p = sol.p;
    let lhs = p * p / (p + 1.0) * power_integral(&sol.u, p + 1.0)?;
    let rhs = 0.25 * boundary_moment(&sol.u, p, center);
    Ok(report(lhs, rhs))
}

pub(crate) fn boundary_moment(u: &Field, scale: f64, center: Point) -> f64 {
    u.grid()
        .boundary_segments()
        .iter()
        .map(|s| {
            let xn = (s.point[0] - center[0]) * s.normal[0] + (s.point[1] - center[1]) * s.normal[1];
            let d = scale * normal_derivative(u, s.point, s.normal);
            s.weight * xn * d * d
        })
        .sum()
}

fn report(lhs: f64, rhs: f64) -> PohozaevReport {
    let denom = lhs.abs().max(rhs.abs());
    let rel_residual = if denom == 0.0 { 0.0 } else { (lhs - rhs).abs() / denom };
    PohozaevReport { lhs, rhs, rel_residual }
}

/// The three circle integrals of the local identity on `∂B_R(center)` along axis `i`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BallPohozaev {
    /// `1/(p+1) ∮ |u|^{p+1} ν_i`.
    pub i1: f64,
    /// `∮ ∂_i u ∂_ν u`.
    pub i2: f64,
    /// `-½ ∮ |∇u|² ν_i`.
    pub i3: f64,
}

impl BallPohozaev {
    pub fn magnitude(&self) -> f64 {
        (self.i1 + self.i2 + self.i3).abs()
    }

    pub fn largest_term(&self) -> f64 {
        self.i1.abs().max(self.i2.abs()).max(self.i3.abs())
    }
}

const CIRCLE_POINTS: usize = 256;

/// Terms of the local identity obtained by testing the equation against `∂_i u` on a ball.
pub fn pohozaev_ball_terms(sol: &NodalSolution, center: Point, radius: f64, axis: usize) -> Result<BallPohozaev> {
    let grid = sol.grid();
    if axis > 1 {
        return Err(Error::invalid(format!("axis must be 0 or 1, got {axis}")));
    }
    if radius < 4.0 * grid.h() {
        return Err(Error::invalid("ball radius must be at least 4h"));
    }
    if !grid.spec().contains(center) || grid.distance_to_boundary(center) < radius {
        return Err(Error::invalid("ball is not contained in the domain"));
    }
    let p = sol.p;
    let [gx, gy] = sol.u.gradient();
    let ds = 2.0 * std::f64::consts::PI * radius / CIRCLE_POINTS as f64;
    let mut out = BallPohozaev { i1: 0.0, i2: 0.0, i3: 0.0 };
    for k in 0..CIRCLE_POINTS {
        let th = 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_POINTS as f64;
        let nu = [th.cos(), th.sin()];
        let x = [center[0] + radius * nu[0], center[1] + radius * nu[1]];
        let u = sol.u.interpolate(x);
        let g = [gx.interpolate(x), gy.interpolate(x)];
        let dnu = g[0] * nu[0] + g[1] * nu[1];
        out.i1 += ds * pow_abs(u, p + 1.0) / (p + 1.0) * nu[axis];
        out.i2 += ds * g[axis] * dnu;
        out.i3 -= ds * 0.5 * (g[0] * g[0] + g[1] * g[1]) * nu[axis];
    }
    Ok(out)
}

/// Magnitude of the local identity's residual; an exact solution gives 0.
pub fn pohozaev_ball_check(sol: &NodalSolution, center: Point, radius: f64, axis: usize) -> Result<f64> {
    Ok(pohozaev_ball_terms(sol, center, radius, axis)?.magnitude())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};

    #[test]
    fn normal_derivative_of_quadratic() {
        // u = 1 - |x|² has outward derivative -2 on the unit circle
        let g = build_grid(DomainSpec::UnitDisk, 129).unwrap();
        let u = Field::from_fn(g.clone(), |x| 1.0 - x[0] * x[0] - x[1] * x[1]).unwrap();
        for s in g.boundary_segments().iter().step_by(37) {
            let d = normal_derivative(&u, s.point, s.normal);
            assert!((d + 2.0).abs() < 2e-2, "{d}");
        }
    }

    #[test]
    fn boundary_moment_of_radial_function() {
        // ∮ (x·ν)(∂_ν u)² = 4·2π for u = 1 - |x|²
        let g = build_grid(DomainSpec::UnitDisk, 257).unwrap();
        let u = Field::from_fn(g.clone(), |x| 1.0 - x[0] * x[0] - x[1] * x[1]).unwrap();
        let m = boundary_moment(&u, 1.0, [0.0, 0.0]);
        assert!((m / (8.0 * std::f64::consts::PI) - 1.0).abs() < 1e-2, "{m}");
    }

    #[test]
    fn report_of_zero() {
        let r = report(0.0, 0.0);
        assert_eq!(r.rel_residual, 0.0);
    }
}
