use std::sync::{Arc, OnceLock};

use super::domain::{BoundarySegment, DomainSpec, Point};
use crate::elliptic::ldl::LdlFactor;
use crate::error::{Error, Result};

pub const MIN_NODES: usize = 17;

/// Nodes closer than this fraction of `h` to the boundary are treated as boundary nodes.
const MIN_DEPTH: f64 = 1e-3;

pub(crate) const NO_NEIGHBOR: u32 = u32::MAX;

/// Stencil arm directions: +x, -x, +y, -y.
pub const DIRECTIONS: [[i64; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];

/// One arm of the 5-point stencil. Either an interior neighbor, or a Dirichlet
/// ghost at distance `theta * h` along the arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arm {
    pub(crate) neighbor: u32,
    pub theta: f64,
}

impl Arm {
    pub fn neighbor(&self) -> Option<usize> {
        (self.neighbor != NO_NEIGHBOR).then_some(self.neighbor as usize)
    }

    pub fn is_ghost(&self) -> bool {
        self.neighbor == NO_NEIGHBOR
    }
}

/// Uniform node-centered lattice over `[-L, L]^2` restricted to the domain.
pub struct Grid {
    spec: DomainSpec,
    n: usize,
    h: f64,
    half_extent: f64,
    lattice: Vec<u32>,
    nodes: Vec<[u32; 2]>,
    arms: Vec<[Arm; 4]>,
    boundary: Vec<BoundarySegment>,
    loops: Vec<std::ops::Range<usize>>,
    pub(crate) laplacian_factor: OnceLock<Arc<LdlFactor>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("spec", &self.spec)
            .field("n", &self.n)
            .field("h", &self.h)
            .field("nodes", &self.nodes.len())
            .finish_non_exhaustive()
    }
}

pub fn build_grid(spec: DomainSpec, n: usize) -> Result<Arc<Grid>> {
    Grid::new(spec, n).map(Arc::new)
}

impl Grid {
    pub fn new(spec: DomainSpec, n: usize) -> Result<Self> {
        spec.validate()?;
        if n < MIN_NODES {
            return Err(Error::invalid(format!("grid needs n >= {MIN_NODES}, got {n}")));
        }
        if n > 8193 {
            return Err(Error::invalid(format!("grid size {n} too large")));
        }
        let half_extent = spec.half_extent();
        let h = 2.0 * half_extent / (n - 1) as f64;
        let coord = |i: usize| -half_extent + i as f64 * h;

        let mut lattice = vec![NO_NEIGHBOR; n * n];
        let mut nodes = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let x = [coord(i), coord(j)];
                if spec.signed_distance(x) > MIN_DEPTH * h {
                    lattice[j * n + i] = nodes.len() as u32;
                    nodes.push([i as u32, j as u32]);
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::invalid("domain contains no interior nodes at this resolution"));
        }

        let arms = nodes
            .iter()
            .map(|&[i, j]| {
                let a = [coord(i as usize), coord(j as usize)];
                let mut out = [Arm { neighbor: NO_NEIGHBOR, theta: 1.0 }; 4];
                for (arm, d) in out.iter_mut().zip(DIRECTIONS) {
                    let (ni, nj) = (i as i64 + d[0], j as i64 + d[1]);
                    let in_range = ni >= 0 && nj >= 0 && (ni as usize) < n && (nj as usize) < n;
                    if in_range {
                        let k = lattice[nj as usize * n + ni as usize];
                        if k != NO_NEIGHBOR {
                            arm.neighbor = k;
                            continue;
                        }
                    }
                    let b = [a[0] + d[0] as f64 * h, a[1] + d[1] as f64 * h];
                    arm.theta = if spec.contains(b) {
                        // excluded near-boundary node: boundary sits at the node
                        1.0
                    } else {
                        spec.crossing_fraction(a, b).clamp(MIN_DEPTH, 1.0)
                    };
                }
                out
            })
            .collect();

        let mut boundary = Vec::new();
        let mut loops = Vec::new();
        for lp in spec.boundary_loops(h) {
            let start = boundary.len();
            boundary.extend(lp);
            loops.push(start..boundary.len());
        }

        Ok(Grid {
            spec,
            n,
            h,
            half_extent,
            lattice,
            nodes,
            arms,
            boundary,
            loops,
            laplacian_factor: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lattice_coords(&self, k: usize) -> [usize; 2] {
        let [i, j] = self.nodes[k];
        [i as usize, j as usize]
    }

    pub fn lattice_coordinate(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.h
    }

    pub fn point(&self, k: usize) -> Point {
        let [i, j] = self.lattice_coords(k);
        [self.lattice_coordinate(i), self.lattice_coordinate(j)]
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Dense index of lattice node `(i, j)` if it is interior.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n {
            return None;
        }
        let k = self.lattice[j * self.n + i];
        (k != NO_NEIGHBOR).then_some(k as usize)
    }

    pub fn arms(&self, k: usize) -> &[Arm; 4] {
        &self.arms[k]
    }

    /// Diagonal stencil weight (times h^2) of the cut-cell Laplacian at node `k`.
    pub fn diagonal_weight(&self, k: usize) -> f64 {
        self.arms[k]
            .iter()
            .map(|a| if a.is_ghost() { 1.0 / a.theta } else { 1.0 })
            .sum()
    }

    /// Ghost location of arm `a` of node `k`.
    pub fn ghost_point(&self, k: usize, a: usize) -> Point {
        let x = self.point(k);
        let t = self.arms[k][a].theta * self.h;
        let d = DIRECTIONS[a];
        [x[0] + d[0] as f64 * t, x[1] + d[1] as f64 * t]
    }

    /// Whether any stencil arm of node `k` touches the boundary.
    pub fn is_near_boundary(&self, k: usize) -> bool {
        self.arms[k].iter().any(Arm::is_ghost)
    }

    pub fn boundary_segments(&self) -> &[BoundarySegment] {
        &self.boundary
    }

    /// Closed boundary loops as ranges into `boundary_segments`.
    pub fn boundary_loops(&self) -> &[std::ops::Range<usize>] {
        &self.loops
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary.iter().map(|s| s.weight).sum()
    }

    pub fn interior_area(&self) -> f64 {
        self.h * self.h * self.len() as f64
    }

    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        self.spec.signed_distance(x)
    }

    /// Interior node nearest to `x`, if its lattice cell is interior.
    pub fn nearest_node(&self, x: Point) -> Option<usize> {
        let fi = ((x[0] + self.half_extent) / self.h).round();
        let fj = ((x[1] + self.half_extent) / self.h).round();
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        self.index(fi as usize, fj as usize)
    }

    pub(crate) fn lattice_index_raw(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 {
            return None;
        }
        self.index(i as usize, j as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_node_count_matches_area() {
        let g = Grid::new(DomainSpec::UnitDisk, 129).unwrap();
        let h = 2.0 / 128.0;
        let expected = PI / (h * h);
        assert!((g.len() as f64 - expected).abs() < 0.02 * expected);
        assert!((g.boundary_length() - 2.0 * PI).abs() < 0.02 * 2.0 * PI);
    }

    #[test]
    fn rectangle_perimeter() {
        let g = Grid::new(DomainSpec::Rectangle { width: 2.0, height: 1.0 }, 65).unwrap();
        assert!((g.boundary_length() - 6.0).abs() < 0.02 * 6.0);
        // nodes on the edges y = +-0.5 are boundary, not interior
        for x in g.points() {
            assert!(x[1].abs() < 0.5 && x[0].abs() < 1.0);
        }
    }

    #[test]
    fn annulus_mask() {
        let g = Grid::new(DomainSpec::Annulus { r_inner: 0.5, r_outer: 1.0 }, 257).unwrap();
        for x in g.points() {
            let r = x[0].hypot(x[1]);
            assert!(r > 0.5 && r < 1.0);
        }
    }

    #[test]
    fn cut_cell_fractions_in_range() {
        let g = Grid::new(DomainSpec::UnitDisk, 33).unwrap();
        let mut ghosts = 0;
        for k in 0..g.len() {
            for (a, arm) in g.arms(k).iter().enumerate() {
                assert!(arm.theta > 0.0 && arm.theta <= 1.0);
                if arm.is_ghost() {
                    ghosts += 1;
                    let b = g.ghost_point(k, a);
                    assert!((b[0].hypot(b[1]) - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(ghosts > 0);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::new(DomainSpec::UnitDisk, 9).is_err());
    }

    #[test]
    fn classification_is_deterministic() {
        let a = Grid::new(DomainSpec::UnitDisk, 65).unwrap();
        let b = Grid::new(DomainSpec::UnitDisk, 65).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.arms, b.arms);
    }

    #[test]
    fn area_estimate_converges_under_refinement() {
        let area = |n| Grid::new(DomainSpec::UnitDisk, n).unwrap().interior_area();
        let (a65, a129) = (area(65), area(129));
        let h = 2.0 / 64.0;
        assert!((a65 - a129).abs() < 4.0 * h);
    }
}
