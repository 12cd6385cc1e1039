use std::sync::Arc;

use super::functional::{check_exponent, power_integral};
use crate::elliptic::dirichlet_energy;
use crate::error::{Error, Result};
use crate::geometry::{dist, Field, Grid, Point};

/// Discrete energies of the concentrating test function.
#[derive(Clone, Copy, Debug)]
pub struct TestFunctionEnergy {
    /// `∫|∇W|²`.
    pub grad: f64,
    /// `∫|W|^{p+1}`.
    pub power: f64,
    pub eps: f64,
    /// False when the bubble scale is below two grid spacings.
    pub resolved: bool,
}

/// Bubble scale `ε² = 1/(p e^{(p-1)/2})` of the test function.
pub fn test_function_scale(p: f64) -> f64 {
    (p * (0.5 * (p - 1.0)).exp()).recip().sqrt()
}

/// Smooth cutoff equal to 1 on `[0, r/2]` and 0 on `[r, ∞)`.
fn cutoff(t: f64, r: f64) -> f64 {
    let psi = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let tau = (t - 0.5 * r) / (0.5 * r);
    let (a, b) = (psi(1.0 - tau), psi(tau));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// `φ(x) √e (1 + z((x-a)/ε)/p)` with `z(y) = -2 log(1 + |y|²/8)`.
pub fn test_function(grid: &Arc<Grid>, a: Point, r: f64, p: f64) -> Result<Field> {
    check_exponent(p)?;
    if !(r > 0.0) || grid.distance_to_boundary(a) < r || !grid.spec().contains(a) {
        return Err(Error::invalid("the ball B(a, r) must lie inside the domain"));
    }
    let eps = test_function_scale(p);
    let sqrt_e = 0.5f64.exp();
    Field::from_fn(grid.clone(), |x| {
        let t = dist(x, a);
        let y2 = (t / eps).powi(2);
        let z = -2.0 * (y2 / 8.0).ln_1p();
        cutoff(t, r) * sqrt_e * (1.0 + z / p)
    })
}

pub fn test_function_energy(grid: &Arc<Grid>, a: Point, r: f64, p: f64) -> Result<TestFunctionEnergy> {
    let w = test_function(grid, a, r, p)?;
    let eps = test_function_scale(p);
    Ok(TestFunctionEnergy {
        grad: dirichlet_energy(&w),
        power: power_integral(&w, p + 1.0)?,
        eps,
        resolved: eps >= 2.0 * grid.h(),
    })
}
