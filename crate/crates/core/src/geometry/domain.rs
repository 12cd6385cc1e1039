use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Bounded planar domain, centered at the coordinate origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    UnitDisk,
    Rectangle { width: f64, height: f64 },
    Annulus { r_inner: f64, r_outer: f64 },
    /// Simple counterclockwise polygon.
    Polygon { vertices: Vec<Point> },
}

/// A point on the boundary with its outward unit normal and arc-length weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment {
    pub point: Point,
    pub normal: Point,
    pub weight: f64,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            DomainSpec::UnitDisk => Ok(()),
            DomainSpec::Rectangle { width, height } => {
                positive(*width, "rectangle width")?;
                positive(*height, "rectangle height")
            }
            DomainSpec::Annulus { r_inner, r_outer } => {
                positive(*r_inner, "annulus inner radius")?;
                positive(*r_outer, "annulus outer radius")?;
                if r_inner >= r_outer {
                    return Err(Error::invalid(format!(
                        "annulus needs r_inner < r_outer, got {r_inner} >= {r_outer}"
                    )));
                }
                Ok(())
            }
            DomainSpec::Polygon { vertices } => validate_polygon(vertices),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, DomainSpec::UnitDisk | DomainSpec::Annulus { .. })
    }

    /// Half side of the smallest origin-centered square containing the domain.
    pub fn half_extent(&self) -> f64 {
        match self {
            DomainSpec::UnitDisk => 1.0,
            DomainSpec::Rectangle { width, height } => 0.5 * width.max(*height),
            DomainSpec::Annulus { r_outer, .. } => *r_outer,
            DomainSpec::Polygon { vertices } => vertices
                .iter()
                .map(|v| v[0].abs().max(v[1].abs()))
                .fold(0.0, f64::max),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            DomainSpec::UnitDisk => PI,
            DomainSpec::Rectangle { width, height } => width * height,
            DomainSpec::Annulus { r_inner, r_outer } => PI * (r_outer * r_outer - r_inner * r_inner),
            DomainSpec::Polygon { vertices } => signed_area(vertices),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            DomainSpec::UnitDisk => 2.0 * PI,
            DomainSpec::Rectangle { width, height } => 2.0 * (width + height),
            DomainSpec::Annulus { r_inner, r_outer } => 2.0 * PI * (r_inner + r_outer),
            DomainSpec::Polygon { vertices } => edges(vertices).map(|(a, b)| dist(a, b)).sum(),
        }
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        match self {
            DomainSpec::UnitDisk => 1.0 - norm(x),
            DomainSpec::Rectangle { width, height } => {
                let dx = 0.5 * width - x[0].abs();
                let dy = 0.5 * height - x[1].abs();
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    -(dx.min(0.0).hypot(dy.min(0.0)))
                }
            }
            DomainSpec::Annulus { r_inner, r_outer } => {
                let r = norm(x);
                (r - r_inner).min(r_outer - r)
            }
            DomainSpec::Polygon { vertices } => {
                let d = edges(vertices)
                    .map(|(a, b)| point_segment_distance(x, a, b))
                    .fold(f64::INFINITY, f64::min);
                if polygon_contains(vertices, x) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// Fraction `t` in (0, 1] of the first boundary crossing on the segment
    /// from the interior point `a` to the exterior point `b`.
    pub fn crossing_fraction(&self, a: Point, b: Point) -> f64 {
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        match self {
            DomainSpec::UnitDisk => circle_exit(a, b, 1.0).unwrap_or(1.0),
            DomainSpec::Annulus { r_inner, r_outer } => {
                let outer = circle_exit(a, b, *r_outer).unwrap_or(f64::INFINITY);
                let inner = circle_entry(a, b, *r_inner).unwrap_or(f64::INFINITY);
                outer.min(inner).min(1.0)
            }
            _ => {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.contains(at(mid)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Boundary discretized into closed loops of segments with spacing near `spacing`.
    /// Loops are traversed counterclockwise with respect to the domain interior on the left.
    pub fn boundary_loops(&self, spacing: f64) -> Vec<Vec<BoundarySegment>> {
        match self {
            DomainSpec::UnitDisk => vec![circle_loop(1.0, spacing, true)],
            DomainSpec::Annulus { r_inner, r_outer } => vec![
                circle_loop(*r_outer, spacing, true),
                circle_loop(*r_inner, spacing, false),
            ],
            DomainSpec::Rectangle { width, height } => {
                let (w, h) = (0.5 * width, 0.5 * height);
                let corners = vec![[-w, -h], [w, -h], [w, h], [-w, h]];
                vec![polygon_loop(&corners, spacing)]
            }
            DomainSpec::Polygon { vertices } => vec![polygon_loop(vertices, spacing)],
        }
    }
}

fn validate_polygon(vertices: &[Point]) -> Result<()> {
    if vertices.len() < 3 {
        return Err(Error::invalid("polygon needs at least 3 vertices"));
    }
    if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::invalid("polygon vertices must be finite"));
    }
    let area = signed_area(vertices);
    if area.abs() < 1e-14 {
        return Err(Error::invalid("polygon has zero area"));
    }
    if area < 0.0 {
        return Err(Error::invalid("polygon vertices must be counterclockwise"));
    }
    let m = vertices.len();
    for i in 0..m {
        let (a, b) = (vertices[i], vertices[(i + 1) % m]);
        if dist(a, b) == 0.0 {
            return Err(Error::invalid("polygon has a repeated vertex"));
        }
        for j in (i + 1)..m {
            let adjacent = j == i + 1 || (i == 0 && j == m - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % m]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::invalid(format!(
                    "polygon is self-intersecting (edges {i} and {j})"
                )));
            }
        }
    }
    Ok(())
}

fn circle_loop(radius: f64, spacing: f64, outer: bool) -> Vec<BoundarySegment> {
    let m = ((2.0 * PI * radius / spacing).ceil() as usize).max(16);
    let dtheta = 2.0 * PI / m as f64;
    (0..m)
        .map(|k| {
            // inner loops run clockwise so the domain stays on the left
            let theta = if outer { k as f64 * dtheta } else { -(k as f64) * dtheta };
            let (s, c) = theta.sin_cos();
            let sign = if outer { 1.0 } else { -1.0 };
            BoundarySegment {
                point: [radius * c, radius * s],
                normal: [sign * c, sign * s],
                weight: radius * dtheta,
            }
        })
        .collect()
}

fn polygon_loop(vertices: &[Point], spacing: f64) -> Vec<BoundarySegment> {
    let mut out = Vec::new();
    for (a, b) in edges(vertices) {
        let len = dist(a, b);
        let m = ((len / spacing).ceil() as usize).max(1);
        let normal = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        for k in 0..m {
            let t = (k as f64 + 0.5) / m as f64;
            out.push(BoundarySegment {
                point: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                normal,
                weight: len / m as f64,
            });
        }
    }
    out
}

fn quadratic_roots(a: Point, b: Point, radius: f64) -> Option<(f64, f64)> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = 2.0 * (a[0] * d[0] + a[1] * d[1]);
    let qc = a[0] * a[0] + a[1] * a[1] - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 || qa == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (qb + qb.signum() * sq);
    let (r1, r2) = if q != 0.0 { (q / qa, qc / q) } else { (0.0, 0.0) };
    Some((r1.min(r2), r1.max(r2)))
}

fn circle_exit(a: Point, b: Point, radius: f64) -> Option<f64> {
    let (_, t) = quadratic_roots(a, b, radius)?;
    (t > 0.0 && t <= 1.0 + 1e-12).then_some(t.min(1.0))
}

fn circle_entry(a: Point, b: Point, radius: f64) -> Option<f64> {
    let (t, _) = quadratic_roots(a, b, radius)?;
    (t > 0.0 && t <= 1.0 + 1e-12).then_some(t.min(1.0))
}

pub(crate) fn edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let m = vertices.len();
    (0..m).map(move |i| (vertices[i], vertices[(i + 1) % m]))
}

fn signed_area(vertices: &[Point]) -> f64 {
    0.5 * edges(vertices)
        .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
        .sum::<f64>()
}

fn polygon_contains(vertices: &[Point], x: Point) -> bool {
    let mut inside = false;
    for (a, b) in edges(vertices) {
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if x[0] < xc {
                inside = !inside;
            }
        }
    }
    inside
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

pub fn norm(x: Point) -> f64 {
    x[0].hypot(x[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn point_segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return dist(x, a);
    }
    let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(x, [a[0] + t * d[0], a[1] + t * d[1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_specs() {
        assert!(DomainSpec::Rectangle { width: 0.0, height: 1.0 }.validate().is_err());
        assert!(DomainSpec::Annulus { r_inner: 1.0, r_outer: 0.5 }.validate().is_err());
        let bowtie = DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        assert!(bowtie.validate().is_err());
        let clockwise = DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
        };
        assert!(clockwise.validate().is_err());
        let triangle = DomainSpec::Polygon {
            vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.0, 0.5]],
        };
        assert!(triangle.validate().is_ok());
    }

    #[test]
    fn crossing_on_disk_is_exact() {
        let t = DomainSpec::UnitDisk.crossing_fraction([0.9, 0.0], [1.1, 0.0]);
        assert!((t - 0.5).abs() < 1e-14);
        let annulus = DomainSpec::Annulus { r_inner: 0.5, r_outer: 1.0 };
        let t = annulus.crossing_fraction([0.6, 0.0], [0.4, 0.0]);
        assert!((t - 0.5).abs() < 1e-14);
    }

    #[test]
    fn crossing_by_bisection_on_polygon() {
        let square = DomainSpec::Rectangle { width: 1.0, height: 1.0 };
        let t = square.crossing_fraction([0.45, 0.0], [0.55, 0.0]);
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn boundary_weights_sum_to_perimeter() {
        for spec in [
            DomainSpec::UnitDisk,
            DomainSpec::Rectangle { width: 2.0, height: 1.0 },
            DomainSpec::Annulus { r_inner: 0.5, r_outer: 1.0 },
        ] {
            let total: f64 = spec.boundary_loops(0.01).iter().flatten().map(|s| s.weight).sum();
            assert!((total - spec.perimeter()).abs() < 1e-9 * spec.perimeter());
        }
    }

    #[test]
    fn outward_normals_point_out() {
        let annulus = DomainSpec::Annulus { r_inner: 0.5, r_outer: 1.0 };
        for seg in annulus.boundary_loops(0.05).iter().flatten() {
            let probe = [seg.point[0] + 1e-3 * seg.normal[0], seg.point[1] + 1e-3 * seg.normal[1]];
            assert!(!annulus.contains(probe));
        }
    }
}
