//! Blow-up rescaling and the scalar diagnostics tracked along a p-ladder.

mod diagnostics;
mod extrapolate;
mod profile;

pub use diagnostics::{diagnostics, DiagnosticsRecord, CSV_HEADER};
pub use extrapolate::{extrapolate, Extrapolation};
pub use profile::{
    blowup_scale, epsilon_p, limit_profile, limit_profile_mass, liouville_profile, rescale_profile,
    PeakSign, ProfileSample, RescaledProfile, PROFILE_SPACING,
};
