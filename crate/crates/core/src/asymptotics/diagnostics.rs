use serde::Serialize;

use super::profile::epsilon_p;
use crate::error::Result;
use crate::geometry::{distance_to_segments, split_signs, Segment};
use crate::nehari::{
    default_morse_tolerance, gradient_parts, morse_index, power_integral, MorseRegion, NodalSolution,
};
use crate::pohozaev::pohozaev_check;

/// Scalar diagnostics of one solution, in CSV column order.
#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct DiagnosticsRecord {
    pub p: f64,
    pub pE: f64,
    pub pGrad: f64,
    pub pGradPlus: f64,
    pub pGradMinus: f64,
    pub sup_plus: f64,
    pub sup_minus: f64,
    pub K_p: f64,
    pub eps_p: f64,
    pub eps_tilde_p: f64,
    pub mass_plus: f64,
    pub mass_minus: f64,
    pub mass_plus_p: f64,
    pub mass_minus_p: f64,
    pub sep_boundary_plus: f64,
    pub sep_boundary_minus: f64,
    pub sep_nodal_plus: f64,
    pub sep_nodal_minus: f64,
    pub morse_whole: usize,
    pub morse_plus: usize,
    pub pohozaev_rel: f64,
    pub resolved: bool,
}

pub const CSV_HEADER: &str = "p,pE,pGrad,pGradPlus,pGradMinus,sup_plus,sup_minus,K_p,eps_p,eps_tilde_p,mass_plus,mass_minus,mass_plus_p,mass_minus_p,sep_boundary_plus,sep_boundary_minus,sep_nodal_plus,sep_nodal_minus,morse_whole,morse_plus,pohozaev_rel,resolved";

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let f = [
            self.p,
            self.pE,
            self.pGrad,
            self.pGradPlus,
            self.pGradMinus,
            self.sup_plus,
            self.sup_minus,
            self.K_p,
            self.eps_p,
            self.eps_tilde_p,
            self.mass_plus,
            self.mass_minus,
            self.mass_plus_p,
            self.mass_minus_p,
            self.sep_boundary_plus,
            self.sep_boundary_minus,
            self.sep_nodal_plus,
            self.sep_nodal_minus,
        ];
        let mut cols: Vec<String> = f.iter().map(|v| format!("{v}")).collect();
        cols.push(self.morse_whole.to_string());
        cols.push(self.morse_plus.to_string());
        cols.push(format!("{}", self.pohozaev_rel));
        cols.push(self.resolved.to_string());
        cols.join(",")
    }
}

/// Every scalar diagnostic of `sol`; `nodal_line` is the zero level set of `u`.
pub fn diagnostics(sol: &NodalSolution, nodal_line: &[Segment]) -> Result<DiagnosticsRecord> {
    let p = sol.p;
    let grid = sol.grid();
    let (gp, gm) = gradient_parts(&sol.u);
    let (eps, eps_tilde) = epsilon_p(sol);
    let (plus, minus) = split_signs(&sol.u);
    let sup = sol.sup_plus;
    let mass = |part| -> Result<(f64, f64)> {
        Ok((p * power_integral(part, p + 1.0)? / (sup * sup), p * power_integral(part, p)? / sup))
    };
    let (mass_plus, mass_plus_p) = mass(&plus)?;
    let (mass_minus, mass_minus_p) = mass(&minus)?;
    let tol = default_morse_tolerance(sol);
    Ok(DiagnosticsRecord {
        p,
        pE: p * sol.energy,
        pGrad: p * (gp + gm),
        pGradPlus: p * gp,
        pGradMinus: p * gm,
        sup_plus: sol.sup_plus,
        sup_minus: sol.sup_minus,
        K_p: p * (sol.sup_plus - sol.sup_minus),
        eps_p: eps,
        eps_tilde_p: eps_tilde,
        mass_plus,
        mass_minus,
        mass_plus_p,
        mass_minus_p,
        sep_boundary_plus: grid.distance_to_boundary(sol.x_plus) / eps,
        sep_boundary_minus: grid.distance_to_boundary(sol.x_minus) / eps,
        sep_nodal_plus: distance_to_segments(sol.x_plus, nodal_line) / eps,
        sep_nodal_minus: distance_to_segments(sol.x_minus, nodal_line) / eps,
        morse_whole: morse_index(sol, MorseRegion::WholeDomain, tol)?,
        morse_plus: morse_index(sol, MorseRegion::PositivePart, tol)?,
        pohozaev_rel: pohozaev_check(sol, [0.0, 0.0])?.rel_residual,
        resolved: grid.h() <= eps,
    })
}
