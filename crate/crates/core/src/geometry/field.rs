use std::io::Write;
use std::sync::Arc;

use super::domain::Point;
use super::grid::{Grid, DIRECTIONS};
use crate::error::{Error, Result};

/// Real-valued grid function on the interior nodes; zero on the boundary.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish_non_exhaustive()
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} values for {} interior nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Overflow(format!("field value at node {k} is {}", values[k])));
        }
        Ok(Field { grid, values })
    }

    /// Construct without the finiteness scan; callers guarantee the invariants.
    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl FnMut(Point) -> f64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Field> {
        Field::new(self.grid.clone(), values)
    }

    /// h^2-weighted inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        h2 * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// h^2-weighted L2 norm.
    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First node (row-major) attaining the maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        best
    }

    /// First node (row-major) attaining the minimum.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = k;
            }
        }
        best
    }

    /// Lattice value with zero outside the interior.
    fn lattice_value(&self, i: i64, j: i64) -> f64 {
        self.grid.lattice_index_raw(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Bilinear interpolation, extending by zero outside the interior nodes.
    pub fn interpolate(&self, x: Point) -> f64 {
        let g = &self.grid;
        let (fx, fy) = ((x[0] + g.half_extent()) / g.h(), (x[1] + g.half_extent()) / g.h());
        let (i0, j0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - i0, fy - j0);
        let (i0, j0) = (i0 as i64, j0 as i64);
        let v00 = self.lattice_value(i0, j0);
        let v10 = self.lattice_value(i0 + 1, j0);
        let v01 = self.lattice_value(i0, j0 + 1);
        let v11 = self.lattice_value(i0 + 1, j0 + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// Whether all four corners of the lattice cell containing `x` are interior.
    pub fn cell_is_interior(&self, x: Point) -> bool {
        let g = &self.grid;
        let i0 = ((x[0] + g.half_extent()) / g.h()).floor() as i64;
        let j0 = ((x[1] + g.half_extent()) / g.h()).floor() as i64;
        [(0, 0), (1, 0), (0, 1), (1, 1)]
            .iter()
            .all(|(a, b)| g.lattice_index_raw(i0 + a, j0 + b).is_some())
    }

    /// Nodal gradient by (non-uniform) central differences, using zero Dirichlet
    /// values at the cut-cell ghost points.
    pub fn gradient(&self) -> [Field; 2] {
        let g = &self.grid;
        let h = g.h();
        let mut gx = vec![0.0; self.len()];
        let mut gy = vec![0.0; self.len()];
        for k in 0..self.len() {
            let arms = g.arms(k);
            let u0 = self.values[k];
            let arm_val = |a: usize| -> (f64, f64) {
                let arm = arms[a];
                match arm.neighbor() {
                    Some(nb) => (self.values[nb], h),
                    None => (0.0, arm.theta * h),
                }
            };
            for (axis, out) in [(0usize, &mut gx), (1usize, &mut gy)] {
                let (up, dp) = arm_val(2 * axis);
                let (um, dm) = arm_val(2 * axis + 1);
                debug_assert!(DIRECTIONS[2 * axis][axis] == 1);
                out[k] = (up - u0) / dp * dm / (dp + dm) + (u0 - um) / dm * dp / (dp + dm);
            }
        }
        [
            Field::from_parts(g.clone(), gx),
            Field::from_parts(g.clone(), gy),
        ]
    }

    /// CSV dump with `x,y,value` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,y,value")?;
        for (x, v) in self.grid.points().zip(&self.values) {
            writeln!(w, "{},{},{}", x[0], x[1], v)?;
        }
        Ok(())
    }
}

/// Positive and negative parts: `u+ = max(u, 0)`, `u- = min(u, 0)`.
pub fn split_signs(u: &Field) -> (Field, Field) {
    (u.map(|v| v.max(0.0)), u.map(|v| v.min(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};
    use proptest::prelude::*;

    fn disk(n: usize) -> Arc<Grid> {
        build_grid(DomainSpec::UnitDisk, n).unwrap()
    }

    #[test]
    fn split_of_zero_is_zero() {
        let u = Field::zeros(disk(17));
        let (p, m) = split_signs(&u);
        assert!(p.values().iter().chain(m.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn split_two_values() {
        let g = disk(17);
        let mut vals = vec![0.0; g.len()];
        vals[0] = 1.0;
        vals[1] = -2.0;
        let (p, m) = split_signs(&Field::new(g, vals).unwrap());
        assert_eq!((p.values()[0], p.values()[1]), (1.0, 0.0));
        assert_eq!((m.values()[0], m.values()[1]), (0.0, -2.0));
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = disk(17);
        assert!(Field::new(g.clone(), vec![0.0; 3]).is_err());
        let mut v = vec![0.0; g.len()];
        v[2] = f64::NAN;
        assert!(Field::new(g, v).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_linears() {
        let g = disk(65);
        let u = Field::from_fn(g.clone(), |x| 1.0 + 2.0 * x[0] - x[1]).unwrap();
        for k in (0..g.len()).step_by(37) {
            let x = g.point(k);
            assert!((u.interpolate(x) - u.values()[k]).abs() < 1e-14);
        }
        let x = [0.1234, -0.2345];
        assert!((u.interpolate(x) - (1.0 + 2.0 * x[0] - x[1])).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = disk(129);
        let u = Field::from_fn(g.clone(), |x| 1.0 - x[0] * x[0] - x[1] * x[1]).unwrap();
        let [gx, gy] = u.gradient();
        for k in 0..g.len() {
            let x = g.point(k);
            assert!((gx.values()[k] + 2.0 * x[0]).abs() < 1e-10);
            assert!((gy.values()[k] + 2.0 * x[1]).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn split_identity_and_idempotence(vals in proptest::collection::vec(-5.0f64..5.0, 1..50)) {
            let g = disk(33);
            let mut full = vec![0.0; g.len()];
            full[..vals.len()].copy_from_slice(&vals);
            let u = Field::new(g, full).unwrap();
            let (p, m) = split_signs(&u);
            for k in 0..u.len() {
                prop_assert_eq!(p.values()[k] + m.values()[k], u.values()[k]);
            }
            let (pp, pm) = split_signs(&p);
            prop_assert_eq!(pp.values(), p.values());
            prop_assert!(pm.values().iter().all(|&v| v == 0.0));
        }
    }
}
