use std::f64::consts::PI;

use serde::Serialize;

use crate::asymptotics::limit_profile_mass;
use crate::elliptic::{poisson_solve, smallest_eigenpairs};
use crate::error::Result;
use crate::geometry::{build_grid, DomainSpec, Field};
use crate::greens::green_disk;

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> OracleCheck {
    OracleCheck { name, value, tolerance, pass: value <= tolerance }
}

/// First zero of the Bessel function `J₀`.
pub const J01: f64 = 2.404_825_557_695_773;

/// Manufactured Poisson problem on the unit square: L∞ error at `n`.
pub fn poisson_manufactured_error(n: usize) -> Result<f64> {
    let g = build_grid(DomainSpec::Rectangle { width: 1.0, height: 1.0 }, n)?;
    // centered square, so the eigenmode is cos(πx) cos(πy)
    let exact = |x: [f64; 2]| (PI * x[0]).cos() * (PI * x[1]).cos();
    let f = Field::from_fn(g.clone(), |x| 2.0 * PI * PI * exact(x))?;
    let w = poisson_solve(&f, 1e-12)?;
    Ok(g.points().zip(w.values()).map(|(x, v)| (v - exact(x)).abs()).fold(0.0, f64::max))
}

pub fn disk_lambda1(n: usize) -> Result<f64> {
    let g = build_grid(DomainSpec::UnitDisk, n)?;
    Ok(smallest_eigenpairs(&Field::zeros(g), 1, 1e-9)?[0].eigenvalue)
}

/// Largest `|G(x, y) - G(y, x)|` over a fixed set of pairs.
pub fn disk_green_asymmetry() -> Result<f64> {
    let pts = [[0.1, 0.2], [-0.5, 0.3], [0.7, -0.1], [0.0, -0.8], [0.33, 0.66], [-0.2, -0.2]];
    let mut worst = 0.0f64;
    for x in pts {
        for y in pts {
            if x != y {
                worst = worst.max((green_disk(x, y)?.0 - green_disk(y, x)?.0).abs());
            }
        }
    }
    Ok(worst)
}

pub fn run_verify() -> Result<Vec<OracleCheck>> {
    let e65 = poisson_manufactured_error(65)?;
    let e129 = poisson_manufactured_error(129)?;
    let order = (e65 / e129).log2();
    let l1 = disk_lambda1(257)?;
    let mass_err = [8f64.sqrt(), 10.0, 1000.0]
        .iter()
        .map(|&r| (limit_profile_mass(r) / (8.0 * PI * r * r / (8.0 + r * r)) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        check("poisson_linf_error_n129", e129, 1e-3),
        check("poisson_order_deficit", (1.9 - order).max(0.0), 0.0),
        check("disk_lambda1_rel_error", (l1 / (J01 * J01) - 1.0).abs(), 5e-3),
        check("liouville_mass_rel_error", mass_err, 1e-3),
        check("disk_green_asymmetry", disk_green_asymmetry()?, 1e-12),
    ])
}
