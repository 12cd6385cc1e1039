//! Green's function of the domain, the two-point limit field and its stationarity system.

mod kernel;
mod limit;

pub use kernel::{
    green_disk, green_field_disk, green_numeric, robin_disk, GreenCache, GreenField, GreenKernel,
    GreenMethod,
};
pub use limit::{
    boundary_flux, boundary_sign_changes, compare_pu_to_green, disk_symmetric_root,
    green_difference_field, limit_constant, nodal_line_boundary_contact, solve_stationarity,
    stationarity_residual, BoundaryContact, GreenComparison, StationarityConvention,
    StationaryPair,
};
