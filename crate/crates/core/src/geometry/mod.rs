//! Domains, the cut-cell lattice, grid functions and their level sets.

mod contour;
mod domain;
mod field;
mod grid;

pub use contour::{
    component_mask, distance_to_segments, nodal_components, zero_level_set, NodalComponent,
    Segment,
};
pub use domain::{dist, norm, point_segment_distance, BoundarySegment, DomainSpec, Point};
pub use field::{split_signs, Field};
pub use grid::{build_grid, Arm, Grid, DIRECTIONS, MIN_NODES};
