use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::elliptic::poisson_solve_dirichlet;
use crate::error::{Error, Result};
use crate::geometry::{dist, norm, DomainSpec, Field, Grid, Point};

const INV_2PI: f64 = 0.5 / PI;

/// `(G(x, y), H(x, y))` for the unit disk by the method of images.
pub fn green_disk(x: Point, y: Point) -> Result<(f64, f64)> {
    if norm(x) > 1.0 || norm(y) >= 1.0 {
        return Err(Error::invalid("green_disk needs |x| <= 1 and |y| < 1"));
    }
    let h = regular_disk(x, y);
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::invalid("green_disk is singular at x = y"));
    }
    Ok((-INV_2PI * r.ln() + h, h))
}

/// `H(x, y) = (1/4π) log(|x|²|y|² - 2x·y + 1)`, the image term.
pub(crate) fn regular_disk(x: Point, y: Point) -> f64 {
    let xx = x[0] * x[0] + x[1] * x[1];
    let yy = y[0] * y[0] + y[1] * y[1];
    let xy = x[0] * y[0] + x[1] * y[1];
    0.5 * INV_2PI * (xx * yy - 2.0 * xy + 1.0).ln()
}

/// Robin function `H(x, x) = (1/2π) log(1 - |x|²)` of the unit disk.
pub fn robin_disk(x: Point) -> Result<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 >= 1.0 {
        return Err(Error::invalid("robin_disk needs |x| < 1"));
    }
    Ok(INV_2PI * (-r2).ln_1p())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenMethod {
    AnalyticDisk,
    Numeric,
}

/// `G(·, y)` and its regular part on a grid.
#[derive(Clone, Debug)]
pub struct GreenField {
    pub source: Point,
    pub values: Field,
    pub h_values: Field,
    pub method: GreenMethod,
}

/// Singular part `-(1/2π) log|x - y|`, capped at the source node.
fn singular(x: Point, y: Point, h: f64) -> f64 {
    -INV_2PI * dist(x, y).max(0.5 * h).ln()
}

/// Green's function of the grid's domain with source `y`: the regular part is the
/// discrete harmonic extension of `(1/2π) log|x - y|` from the boundary.
///
/// At a node coinciding with `y` the singular part is capped at distance `h/2`.
pub fn green_numeric(grid: &Arc<Grid>, y: Point) -> Result<GreenField> {
    if !grid.spec().contains(y) || grid.distance_to_boundary(y) < 2.0 * grid.h() {
        return Err(Error::invalid("Green source must be interior, at least 2h from the boundary"));
    }
    let zero = Field::zeros(grid.clone());
    let h_values = poisson_solve_dirichlet(&zero, |x| INV_2PI * dist(x, y).ln(), 1e-12)?;
    let h = grid.h();
    let values = Field::from_fn(grid.clone(), |x| singular(x, y, h))?;
    let values = values.with_values(values.values().iter().zip(h_values.values()).map(|(a, b)| a + b).collect())?;
    Ok(GreenField { source: y, values, h_values, method: GreenMethod::Numeric })
}

/// Closed-form Green field for the unit disk.
pub fn green_field_disk(grid: &Arc<Grid>, y: Point) -> Result<GreenField> {
    if !matches!(grid.spec(), DomainSpec::UnitDisk) {
        return Err(Error::invalid("analytic Green field requires the unit disk"));
    }
    if norm(y) >= 1.0 {
        return Err(Error::invalid("Green source must lie inside the disk"));
    }
    let h = grid.h();
    let h_values = Field::from_fn(grid.clone(), |x| regular_disk(x, y))?;
    let values = Field::from_fn(grid.clone(), |x| singular(x, y, h) + regular_disk(x, y))?;
    Ok(GreenField { source: y, values, h_values, method: GreenMethod::AnalyticDisk })
}

/// Numeric Green fields keyed by grid and source; insertion is serialized.
#[derive(Default)]
pub struct GreenCache {
    entries: RwLock<HashMap<(usize, [u64; 2]), (std::sync::Weak<Grid>, Arc<GreenField>)>>,
}

impl GreenCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, grid: &Arc<Grid>, y: Point) -> Result<Arc<GreenField>> {
        let key = (Arc::as_ptr(grid) as usize, [y[0].to_bits(), y[1].to_bits()]);
        if let Some((g, f)) = self.entries.read().expect("green cache poisoned").get(&key) {
            if g.upgrade().is_some_and(|g| Arc::ptr_eq(&g, grid)) {
                return Ok(f.clone());
            }
        }
        let field = Arc::new(green_numeric(grid, y)?);
        self.entries
            .write()
            .expect("green cache poisoned")
            .insert(key, (Arc::downgrade(grid), field.clone()));
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("green cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluation of `G` and `H` either in closed form (disk) or from cached grid fields.
pub enum GreenKernel {
    Disk,
    Numeric { grid: Arc<Grid>, cache: GreenCache },
}

impl GreenKernel {
    /// Closed form on the unit disk, numeric Green fields elsewhere.
    pub fn for_grid(grid: &Arc<Grid>) -> Self {
        if matches!(grid.spec(), DomainSpec::UnitDisk) {
            GreenKernel::Disk
        } else {
            GreenKernel::numeric(grid)
        }
    }

    pub fn numeric(grid: &Arc<Grid>) -> Self {
        GreenKernel::Numeric { grid: grid.clone(), cache: GreenCache::new() }
    }

    pub fn contains(&self, x: Point) -> bool {
        match self {
            GreenKernel::Disk => norm(x) < 1.0,
            GreenKernel::Numeric { grid, .. } => grid.spec().contains(x) && grid.distance_to_boundary(x) >= 2.0 * grid.h(),
        }
    }

    /// Step for first-slot central differences.
    pub fn derivative_step(&self) -> f64 {
        match self {
            GreenKernel::Disk => 1e-5,
            GreenKernel::Numeric { grid, .. } => 2.0 * grid.h(),
        }
    }

    pub fn green(&self, x: Point, y: Point) -> Result<f64> {
        match self {
            GreenKernel::Disk => Ok(green_disk(x, y)?.0),
            GreenKernel::Numeric { grid, cache } => Ok(cache.get(grid, y)?.values.interpolate(x)),
        }
    }

    pub fn regular(&self, x: Point, y: Point) -> Result<f64> {
        match self {
            GreenKernel::Disk => Ok(regular_disk(x, y)),
            GreenKernel::Numeric { grid, cache } => Ok(cache.get(grid, y)?.h_values.interpolate(x)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::apply_laplacian;
    use crate::geometry::build_grid;
    use rand::{Rng, SeedableRng};

    fn random_interior(rng: &mut impl Rng) -> Point {
        let r = 0.95 * rng.random_range(0.0f64..1.0).sqrt();
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        [r * t.cos(), r * t.sin()]
    }

    #[test]
    fn center_source() {
        let (g, h) = green_disk([0.5, 0.0], [0.0, 0.0]).unwrap();
        assert!((g - 0.11032).abs() < 1e-5);
        assert_eq!(h, 0.0);
    }

    #[test]
    fn vanishes_on_the_circle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y = random_interior(&mut rng);
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (g, _) = green_disk([t.cos(), t.sin()], y).unwrap();
            assert!(g.abs() < 1e-12);
        }
        assert!(green_disk([1.2, 0.0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn symmetric_in_its_arguments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let (x, y) = (random_interior(&mut rng), random_interior(&mut rng));
            let (a, _) = green_disk(x, y).unwrap();
            let (b, _) = green_disk(y, x).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn robin_function() {
        assert_eq!(robin_disk([0.0, 0.0]).unwrap(), 0.0);
        let x = [0.5f64.sqrt(), 0.0];
        assert!((robin_disk(x).unwrap() + 0.11032).abs() < 1e-5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = random_interior(&mut rng);
            assert!((robin_disk(x).unwrap() - regular_disk(x, x)).abs() < 1e-10);
        }
        let mut prev = f64::INFINITY;
        for k in 0..100 {
            let v = robin_disk([0.0, k as f64 / 100.0]).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(robin_disk([1.0, 0.0]).is_err());
    }

    #[test]
    fn numeric_matches_images() {
        let g = build_grid(DomainSpec::UnitDisk, 257).unwrap();
        let y = [0.3, 0.2];
        let f = green_numeric(&g, y).unwrap();
        let mut err = 0.0f64;
        for (k, x) in g.points().enumerate() {
            if dist(x, y) >= 0.05 {
                err = err.max((f.values.values()[k] - green_disk(x, y).unwrap().0).abs());
            }
        }
        assert!(err <= 5e-3, "{err}");
        // trace and harmonicity of the regular part
        for k in 0..g.len() {
            if g.is_near_boundary(k) {
                assert!(f.values.values()[k].abs() <= 2.0 * g.h(), "{}", f.values.values()[k]);
            }
        }
        let lap = apply_laplacian(&f.h_values);
        for (k, x) in g.points().enumerate() {
            if g.distance_to_boundary(x) > 0.1 {
                assert!(lap.values()[k].abs() < 1e-6);
            }
        }
    }

    #[test]
    fn numeric_symmetry_on_a_rectangle() {
        let g = build_grid(DomainSpec::Rectangle { width: 2.0, height: 1.0 }, 129).unwrap();
        let cache = GreenCache::new();
        let (x, y) = ([0.31, -0.12], [-0.45, 0.2]);
        let a = cache.get(&g, y).unwrap().values.interpolate(x);
        let b = cache.get(&g, x).unwrap().values.interpolate(y);
        assert!((a - b).abs() < 20.0 * g.h() * g.h(), "{a} {b}");
        let again = cache.get(&g, y).unwrap();
        assert!(Arc::ptr_eq(&again, &cache.get(&g, y).unwrap()));
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn numeric_rejects_near_boundary_source() {
        let g = build_grid(DomainSpec::UnitDisk, 65).unwrap();
        assert!(green_numeric(&g, [0.99, 0.0]).is_err());
    }
}
