use serde::Serialize;

use crate::geometry::Point;
use crate::nehari::{pow_abs, NodalSolution};

/// `ε_p⁻² = p u(x⁺)^{p-1}` and the analogue `ε̃_p` built from the negative part.
pub fn epsilon_p(sol: &NodalSolution) -> (f64, f64) {
    (blowup_scale(sol.p, sol.sup_plus), blowup_scale(sol.p, sol.sup_minus))
}

pub fn blowup_scale(p: f64, sup: f64) -> f64 {
    (p * pow_abs(sup, p - 1.0)).recip().sqrt()
}

/// Liouville bubble `z(x) = -2 log(1 + |x|²/8)`.
pub fn limit_profile(x: Point) -> f64 {
    liouville_profile(x, 1.0)
}

/// `z_μ(x) = log(μ / (1 + μ|x|²/8)²)`.
pub fn liouville_profile(x: Point, mu: f64) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    mu.ln() - 2.0 * (mu * r2 / 8.0).ln_1p()
}

/// `∫_{|x|≤R} e^z` by Simpson's rule in the variable `v = log(1 + r²/8)`,
/// where the radial integrand becomes `8π e^{-v}`.
pub fn limit_profile_mass(radius: f64) -> f64 {
    let vmax = (radius * radius / 8.0).ln_1p();
    let n = 2000;
    let dv = vmax / n as f64;
    let f = |v: f64| 8.0 * std::f64::consts::PI * (-v).exp();
    let mut s = f(0.0) + f(vmax);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * dv);
    }
    s * dv / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakSign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileSample {
    pub y: Point,
    pub z_p: f64,
    /// Reference Liouville profile (with the fitted `μ` for the minus sign).
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RescaledProfile {
    pub sign: PeakSign,
    pub p: f64,
    pub eps: f64,
    pub center: Point,
    pub sample_radius: f64,
    pub requested_radius: f64,
    pub spacing: f64,
    pub resolved: bool,
    pub fitted_mu: Option<f64>,
    pub samples: Vec<ProfileSample>,
}

impl RescaledProfile {
    pub fn truncated(&self) -> bool {
        self.sample_radius < self.requested_radius
    }

    /// `sup |z_p - z|` over the samples.
    pub fn max_error(&self) -> f64 {
        self.samples.iter().map(|s| (s.z_p - s.z).abs()).fold(0.0, f64::max)
    }

    /// Sample at the rescaled origin.
    pub fn at_origin(&self) -> f64 {
        self.samples.iter().find(|s| s.y == [0.0, 0.0]).map_or(f64::NAN, |s| s.z_p)
    }
}

pub const PROFILE_SPACING: f64 = 0.25;

/// Rescale `u` around `x^±` by `ε_p`, normalized by `u(x⁺)`:
/// `z_p(y) = (p/u(x⁺)) (±u(x^± + ε_p y) - u(x⁺))`.
pub fn rescale_profile(sol: &NodalSolution, sign: PeakSign, radius: f64) -> RescaledProfile {
    let grid = sol.grid();
    let (eps, _) = epsilon_p(sol);
    let (center, s) = match sign {
        PeakSign::Plus => (sol.x_plus, 1.0),
        PeakSign::Minus => (sol.x_minus, -1.0),
    };
    let room = grid.distance_to_boundary(center) / eps;
    let sample_radius = radius.min(room);
    let m = (sample_radius / PROFILE_SPACING).floor() as i64;
    let scale = sol.p / sol.sup_plus;
    let z_at = |y: Point| {
        let x = [center[0] + eps * y[0], center[1] + eps * y[1]];
        scale * (s * sol.u.interpolate(x) - sol.sup_plus)
    };
    let fitted_mu = match sign {
        PeakSign::Plus => None,
        PeakSign::Minus => Some(z_at([0.0, 0.0]).exp()),
    };
    let mu = fitted_mu.unwrap_or(1.0);
    let mut samples = Vec::new();
    for j in -m..=m {
        for i in -m..=m {
            let y = [i as f64 * PROFILE_SPACING, j as f64 * PROFILE_SPACING];
            if y[0].hypot(y[1]) <= sample_radius {
                samples.push(ProfileSample { y, z_p: z_at(y), z: liouville_profile(y, mu) });
            }
        }
    }
    RescaledProfile {
        sign,
        p: sol.p,
        eps,
        center,
        sample_radius,
        requested_radius: radius,
        spacing: PROFILE_SPACING,
        resolved: eps >= 2.0 * grid.h(),
        fitted_mu,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn profile_values() {
        assert_eq!(limit_profile([0.0, 0.0]), 0.0);
        let x = [2.0, 2.0];
        assert!((limit_profile(x) + 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((limit_profile(x) + 1.38629).abs() < 1e-5);
    }

    #[test]
    fn profile_solves_liouville() {
        let h = 1e-3;
        for x in [[1.0, 0.0], [0.6, 0.8], [0.0, -1.0]] {
            let z = |a: f64, b: f64| limit_profile([a, b]);
            let lap = (z(x[0] + h, x[1]) + z(x[0] - h, x[1]) + z(x[0], x[1] + h) + z(x[0], x[1] - h)
                - 4.0 * z(x[0], x[1]))
                / (h * h);
            assert!((-lap - z(x[0], x[1]).exp()).abs() <= 1e-5);
        }
    }

    #[test]
    fn mass_matches_closed_form() {
        let closed = |r: f64| 8.0 * PI * r * r / (8.0 + r * r);
        for r in [8f64.sqrt(), 10.0, 1000.0, 1e-3] {
            assert!((limit_profile_mass(r) / closed(r) - 1.0).abs() < 1e-6, "{r}");
        }
        assert!((limit_profile_mass(8f64.sqrt()) - 4.0 * PI).abs() < 1e-9);
        assert!((limit_profile_mass(1000.0) - 8.0 * PI).abs() < 1e-2);
        let r0 = 1e-3;
        assert!((limit_profile_mass(r0) / (PI * r0 * r0) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn scale_arithmetic() {
        assert!((blowup_scale(10.0, 1.5) - 0.05100).abs() < 1e-5);
        assert!((blowup_scale(5.0, 1.0) - 0.44721).abs() < 1e-5);
    }

    #[test]
    fn liouville_family_contains_the_bubble() {
        assert_eq!(liouville_profile([0.3, 0.1], 1.0), limit_profile([0.3, 0.1]));
        assert!((liouville_profile([0.0, 0.0], 0.5) - 0.5f64.ln()).abs() < 1e-15);
    }
}
