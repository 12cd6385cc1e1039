use std::collections::VecDeque;

use super::domain::{point_segment_distance, Point};
use super::field::Field;

/// A 4-connected component of `{|u| > threshold}` with constant sign.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalComponent {
    pub sign: i8,
    pub nodes: Vec<usize>,
}

/// 4-connected components of `{|u| > threshold}`, labeled by sign, ordered by
/// their first node in row-major order.
pub fn nodal_components(u: &Field, threshold: f64) -> Vec<NodalComponent> {
    let g = u.grid();
    let vals = u.values();
    let sign_of = |v: f64| -> i8 {
        if v > threshold {
            1
        } else if v < -threshold {
            -1
        } else {
            0
        }
    };
    let mut label = vec![usize::MAX; vals.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..vals.len() {
        let s = sign_of(vals[start]);
        if s == 0 || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut nodes = Vec::new();
        label[start] = id;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            nodes.push(k);
            for arm in g.arms(k) {
                if let Some(nb) = arm.neighbor() {
                    if label[nb] == usize::MAX && sign_of(vals[nb]) == s {
                        label[nb] = id;
                        queue.push_back(nb);
                    }
                }
            }
        }
        nodes.sort_unstable();
        out.push(NodalComponent { sign: s, nodes });
    }
    out
}

/// Mask of the nodes belonging to one component.
pub fn component_mask(len: usize, component: &NodalComponent) -> Vec<bool> {
    let mut mask = vec![false; len];
    for &k in &component.nodes {
        mask[k] = true;
    }
    mask
}

pub type Segment = [Point; 2];

/// Zero level set of `u` by marching squares with linear edge interpolation,
/// over lattice cells whose four corners are interior nodes.
pub fn zero_level_set(u: &Field) -> Vec<Segment> {
    let g = u.grid();
    let vals = u.values();
    let mut segments = Vec::new();
    for k in 0..g.len() {
        let [i, j] = g.lattice_coords(k);
        let (Some(k10), Some(k01), Some(k11)) =
            (g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1))
        else {
            continue;
        };
        // corners counterclockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
        let idx = [k, k10, k11, k01];
        let v = idx.map(|c| vals[c]);
        let p = idx.map(|c| g.point(c));
        let case = v
            .iter()
            .enumerate()
            .fold(0u8, |acc, (b, &val)| acc | (((val > 0.0) as u8) << b));
        if case == 0 || case == 15 {
            continue;
        }
        let cross = |e: usize| -> Point {
            let (a, b) = (e, (e + 1) % 4);
            let t = v[a] / (v[a] - v[b]);
            [p[a][0] + t * (p[b][0] - p[a][0]), p[a][1] + t * (p[b][1] - p[a][1])]
        };
        // edges e connect corner e and e+1
        let crossing_edges: Vec<usize> =
            (0..4).filter(|&e| (v[e] > 0.0) != (v[(e + 1) % 4] > 0.0)).collect();
        match crossing_edges.len() {
            2 => segments.push([cross(crossing_edges[0]), cross(crossing_edges[1])]),
            4 => {
                // saddle: resolve with the cell average
                let center_positive = v.iter().sum::<f64>() > 0.0;
                let corner0_positive = v[0] > 0.0;
                if center_positive == corner0_positive {
                    segments.push([cross(0), cross(1)]);
                    segments.push([cross(2), cross(3)]);
                } else {
                    segments.push([cross(3), cross(0)]);
                    segments.push([cross(1), cross(2)]);
                }
            }
            _ => {}
        }
    }
    segments
}

/// Distance from `x` to a polyline set; infinite when empty.
pub fn distance_to_segments(x: Point, segments: &[Segment]) -> f64 {
    segments
        .iter()
        .map(|s| point_segment_distance(x, s[0], s[1]))
        .fold(f64::INFINITY, f64::min)
}
