//! Finite-difference laboratory for least-energy nodal solutions of the planar
//! Lane-Emden problem `-Δu = |u|^{p-1} u`, `u = 0` on the boundary.

pub mod asymptotics;
pub mod cli;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod nehari;
pub mod pohozaev;

pub use error::{Error, Result};
