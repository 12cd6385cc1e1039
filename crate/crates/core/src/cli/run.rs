use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, SeedKind};
use crate::asymptotics::{
    diagnostics, extrapolate, rescale_profile, DiagnosticsRecord, Extrapolation, PeakSign,
    RescaledProfile,
};
use crate::elliptic::smallest_eigenpairs;
use crate::error::{Error, Result};
use crate::geometry::{build_grid, norm, zero_level_set, DomainSpec, Field, Grid, Point};
use crate::greens::{
    boundary_flux, boundary_sign_changes, compare_pu_to_green, disk_symmetric_root,
    green_difference_field, nodal_line_boundary_contact, solve_stationarity, GreenComparison,
    GreenKernel, StationarityConvention, StationaryPair,
};
use crate::nehari::{solve_least_energy_nodal, NodalSolution, Seed};
use crate::pohozaev::{pohozaev_ball_terms, pohozaev_check, BallPohozaev, PohozaevReport};

/// Checks on one converged solution beyond the CSV diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionChecks {
    pub energy: f64,
    pub residual: f64,
    pub grad_norm: f64,
    pub nehari_defect: f64,
    pub iterations: usize,
    pub nodal_count: usize,
    pub x_plus: Point,
    pub x_minus: Point,
    /// `λ₁^{1/(p-1)}`, the lower bound for both sup norms.
    pub sup_lower_bound: f64,
    pub profile_error_plus: f64,
    pub profile_error_minus: f64,
    pub profile_origin_plus: f64,
    pub profile_radius_used: f64,
    pub fitted_mu: f64,
    pub green: Option<GreenComparison>,
    pub pohozaev: PohozaevReport,
    /// Relative change of the boundary side when the center moves to `(0.1, 0)`.
    pub pohozaev_center_shift: f64,
    pub pohozaev_ball: Option<BallPohozaev>,
    pub pohozaev_ball_radius: f64,
    pub contact: bool,
    pub sign_changes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderEntry {
    pub p: f64,
    pub ok: bool,
    pub error: Option<String>,
    pub record: Option<DiagnosticsRecord>,
    pub checks: Option<SolutionChecks>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitEstimate {
    pub quantity: String,
    pub target: f64,
    pub target_label: String,
    pub fit: Option<Extrapolation>,
    pub rel_error: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedEnergy {
    pub seed: SeedKind,
    pub p: f64,
    pub energy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    pub convention: StationarityConvention,
    pub pair: Option<StationaryPair>,
    pub error: Option<String>,
    /// Symmetric-pair roots under both readings (unit disk only).
    pub root_first_slot: Option<f64>,
    pub root_robin_gradient: Option<f64>,
    /// `|x⁺|` at the largest solved exponent.
    pub observed_radius: Option<f64>,
    pub matching_convention: Option<StationarityConvention>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitFieldReport {
    pub x_plus: Point,
    pub x_minus: Point,
    pub sign_changes: usize,
    pub contact: bool,
    pub flux_net: f64,
    pub flux_abs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementRow {
    pub n: usize,
    pub p: f64,
    pub p_grad: Option<f64>,
    pub sup_plus: Option<f64>,
    pub resolved: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub domain: DomainSpec,
    pub smooth_domain: bool,
    pub n: usize,
    pub h: f64,
    pub lambda1: f64,
    pub p_fit_min: f64,
    pub entries: Vec<LadderEntry>,
    pub limits: Vec<LimitEstimate>,
    pub seed_energies: Vec<SeedEnergy>,
    pub stationarity: StationarityReport,
    pub limit_field: Option<LimitFieldReport>,
    pub refinement: Vec<RefinementRow>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub fields: Vec<(f64, Field)>,
    #[serde(skip)]
    pub profiles: Vec<RescaledProfile>,
}

impl Report {
    pub fn records(&self) -> impl Iterator<Item = &DiagnosticsRecord> {
        self.entries.iter().filter_map(|e| e.record.as_ref())
    }

    pub fn limit(&self, quantity: &str) -> Option<&LimitEstimate> {
        self.limits.iter().find(|l| l.quantity == quantity)
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.ok).count()
    }
}

fn seed_of(kind: SeedKind) -> Seed {
    match kind {
        SeedKind::Antisymmetric => Seed::Antisymmetric,
        SeedKind::SecondEigenfunction => Seed::SecondEigenfunction,
    }
}

/// Solve the ladder with continuation and assemble every diagnostic.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = build_grid(cfg.domain.clone(), cfg.n)?;
    let lambda1 = smallest_eigenpairs(&Field::zeros(grid.clone()), 1, 1e-9)?[0].eigenvalue;
    let mut warnings = Vec::new();
    if !cfg.domain.is_smooth() {
        warnings.push("domain has corners; the asymptotic theory assumes a smooth boundary".to_string());
    }

    let mut entries = Vec::new();
    let mut fields = Vec::new();
    let mut profiles = Vec::new();
    let mut last: Option<NodalSolution> = None;
    let mut last_good: Option<NodalSolution> = None;
    for &p in &cfg.p_ladder {
        let mut opts = cfg.solver_options();
        opts.init = match &last {
            Some(prev) => Seed::Continuation(prev.u.clone()),
            None => seed_of(cfg.seeds[0]),
        };
        match solve_least_energy_nodal(&grid, p, &opts).and_then(|sol| {
            let (entry, prof) = analyse(cfg, &sol, lambda1)?;
            Ok((sol, entry, prof))
        }) {
            Ok((sol, entry, prof)) => {
                if let Some(r) = &entry.record {
                    if !r.resolved {
                        warnings.push(format!("p = {p}: peak under-resolved (h > eps_p)"));
                    }
                }
                entries.push(entry);
                profiles.extend(prof);
                if cfg.dump_fields {
                    fields.push((p, sol.u.clone()));
                }
                last = Some(sol.clone());
                last_good = Some(sol);
            }
            Err(e) => {
                warnings.push(format!("p = {p}: solve failed: {e}"));
                entries.push(LadderEntry { p, ok: false, error: Some(e.to_string()), record: None, checks: None });
                last = last_good.clone();
            }
        }
    }

    let seed_energies = cfg
        .seeds
        .iter()
        .map(|&kind| {
            let p = cfg.p_ladder[0];
            let opts = ExperimentConfig { ..cfg.clone() }.solver_options();
            let opts = crate::nehari::SolverOptions { init: seed_of(kind), ..opts };
            match solve_least_energy_nodal(&grid, p, &opts) {
                Ok(s) => SeedEnergy { seed: kind, p, energy: Some(s.energy), error: None },
                Err(e) => SeedEnergy { seed: kind, p, energy: None, error: Some(e.to_string()) },
            }
        })
        .collect();

    let limits = limit_estimates(&entries, cfg.p_fit_min, &cfg.domain, cfg.stationarity_convention);
    let stationarity = stationarity_report(cfg, &grid, last_good.as_ref());
    let limit_field = match &last_good {
        Some(sol) => Some(limit_field_report(&grid, sol)?),
        None => None,
    };
    let refinement = refinement_rows(cfg)?;
    if entries.iter().all(|e| !e.ok) {
        return Err(Error::invalid("no exponent of the ladder could be solved"));
    }
    Ok(Report {
        domain: cfg.domain.clone(),
        smooth_domain: cfg.domain.is_smooth(),
        n: cfg.n,
        h: grid.h(),
        lambda1,
        p_fit_min: cfg.p_fit_min,
        entries,
        limits,
        seed_energies,
        stationarity,
        limit_field,
        refinement,
        warnings,
        fields,
        profiles,
    })
}

fn analyse(cfg: &ExperimentConfig, sol: &NodalSolution, lambda1: f64) -> Result<(LadderEntry, Vec<RescaledProfile>)> {
    let grid = sol.grid();
    let nodal_line = zero_level_set(&sol.u);
    let record = diagnostics(sol, &nodal_line)?;
    let plus = rescale_profile(sol, PeakSign::Plus, cfg.profile_radius);
    let minus = rescale_profile(sol, PeakSign::Minus, cfg.profile_radius);
    let green = compare_pu_to_green(sol, cfg.exclusion).ok();
    let pohozaev = pohozaev_check(sol, [0.0, 0.0])?;
    let shifted = pohozaev_check(sol, [0.1, 0.0])?;
    let ball_radius = (0.5 * grid.distance_to_boundary(sol.x_plus)).min(0.25);
    let ball = pohozaev_ball_terms(sol, sol.x_plus, ball_radius, 0).ok();
    let contact = nodal_line_boundary_contact(sol);
    let checks = SolutionChecks {
        energy: sol.energy,
        residual: sol.residual,
        grad_norm: sol.grad_norm,
        nehari_defect: sol.nehari_defect,
        iterations: sol.iterations,
        nodal_count: sol.nodal_count,
        x_plus: sol.x_plus,
        x_minus: sol.x_minus,
        sup_lower_bound: lambda1.powf(1.0 / (sol.p - 1.0)),
        profile_error_plus: plus.max_error(),
        profile_error_minus: minus.max_error(),
        profile_origin_plus: plus.at_origin(),
        profile_radius_used: plus.sample_radius,
        fitted_mu: minus.fitted_mu.unwrap_or(f64::NAN),
        green,
        pohozaev,
        pohozaev_center_shift: if pohozaev.rhs == 0.0 { 0.0 } else { (shifted.rhs - pohozaev.rhs).abs() / pohozaev.rhs.abs() },
        pohozaev_ball: ball,
        pohozaev_ball_radius: ball_radius,
        contact: contact.contact,
        sign_changes: contact.sign_changes,
    };
    Ok((
        LadderEntry { p: sol.p, ok: true, error: None, record: Some(record), checks: Some(checks) },
        vec![plus, minus],
    ))
}

/// Targets of the p → ∞ limits, fitted affinely in `1/p` over resolved records with `p ≥ p_fit_min`.
fn limit_estimates(
    entries: &[LadderEntry],
    p_fit_min: f64,
    domain: &DomainSpec,
    convention: StationarityConvention,
) -> Vec<LimitEstimate> {
    use std::f64::consts::{E, PI};
    let used: Vec<(&DiagnosticsRecord, &SolutionChecks)> = entries
        .iter()
        .filter_map(|e| Some((e.record.as_ref()?, e.checks.as_ref()?)))
        .filter(|(r, _)| r.resolved && r.p >= p_fit_min)
        .collect();
    let mut targets: Vec<(&str, f64, &str, Box<dyn Fn(&DiagnosticsRecord, &SolutionChecks) -> f64>)> = vec![
        ("pGrad", 16.0 * PI * E, "16*pi*e", Box::new(|r, _| r.pGrad)),
        ("pGradPlus", 8.0 * PI * E, "8*pi*e", Box::new(|r, _| r.pGradPlus)),
        ("pGradMinus", 8.0 * PI * E, "8*pi*e", Box::new(|r, _| r.pGradMinus)),
        ("pE", 8.0 * PI * E, "8*pi*e", Box::new(|r, _| r.pE)),
        ("sup_plus", E.sqrt(), "e^(1/2)", Box::new(|r, _| r.sup_plus)),
        ("sup_minus", E.sqrt(), "e^(1/2)", Box::new(|r, _| r.sup_minus)),
        ("mass_plus", 8.0 * PI, "8*pi", Box::new(|r, _| r.mass_plus)),
        ("mass_minus", 8.0 * PI, "8*pi", Box::new(|r, _| r.mass_minus)),
        ("mass_plus_p", 8.0 * PI, "8*pi", Box::new(|r, _| r.mass_plus_p)),
        ("mass_minus_p", 8.0 * PI, "8*pi", Box::new(|r, _| r.mass_minus_p)),
    ];
    if matches!(domain, DomainSpec::UnitDisk) {
        targets.push(("x_plus_radius", disk_symmetric_root(convention), "stationary radius", Box::new(|_, c| norm(c.x_plus))));
    }
    targets
        .into_iter()
        .map(|(name, target, label, get)| {
            let data: Vec<(f64, f64)> = used.iter().map(|(r, c)| (r.p, get(r, c))).collect();
            match extrapolate(&data) {
                Ok(fit) => LimitEstimate {
                    quantity: name.to_string(),
                    target,
                    target_label: label.to_string(),
                    rel_error: Some((fit.limit - target).abs() / target.abs()),
                    note: fit.poor_fit.then(|| "fit residual above 5% of the data range".to_string()),
                    fit: Some(fit),
                },
                Err(e) => LimitEstimate {
                    quantity: name.to_string(),
                    target,
                    target_label: label.to_string(),
                    fit: None,
                    rel_error: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn stationarity_report(cfg: &ExperimentConfig, grid: &Arc<Grid>, last: Option<&NodalSolution>) -> StationarityReport {
    let kernel = GreenKernel::for_grid(grid);
    let init = (cfg.stationarity_init[0], cfg.stationarity_init[1]);
    let (pair, error) = match solve_stationarity(&kernel, init, cfg.stationarity_convention, 1e-10) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let disk = matches!(cfg.domain, DomainSpec::UnitDisk);
    let first = disk.then(|| disk_symmetric_root(StationarityConvention::FirstSlot));
    let robin = disk.then(|| disk_symmetric_root(StationarityConvention::RobinGradient));
    let observed = last.map(|s| norm(s.x_plus));
    let matching = match (first, robin, observed) {
        (Some(a), Some(b), Some(r)) => Some(if (a - r).abs() <= (b - r).abs() {
            StationarityConvention::FirstSlot
        } else {
            StationarityConvention::RobinGradient
        }),
        _ => None,
    };
    StationarityReport {
        convention: cfg.stationarity_convention,
        pair,
        error,
        root_first_slot: first,
        root_robin_gradient: robin,
        observed_radius: observed,
        matching_convention: matching,
    }
}

fn limit_field_report(grid: &Arc<Grid>, sol: &NodalSolution) -> Result<LimitFieldReport> {
    let field = green_difference_field(grid, sol.x_plus, sol.x_minus)?;
    let contact = boundary_sign_changes(&field);
    let (flux_net, flux_abs) = boundary_flux(&field);
    Ok(LimitFieldReport {
        x_plus: sol.x_plus,
        x_minus: sol.x_minus,
        sign_changes: contact.sign_changes,
        contact: contact.contact,
        flux_net,
        flux_abs,
    })
}

fn refinement_rows(cfg: &ExperimentConfig) -> Result<Vec<RefinementRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.refinement {
        let grid = build_grid(cfg.domain.clone(), n)?;
        let mut last: Option<Field> = None;
        for &p in &cfg.p_ladder {
            let mut opts = cfg.solver_options();
            opts.init = match &last {
                Some(u) => Seed::Continuation(u.clone()),
                None => seed_of(cfg.seeds[0]),
            };
            match solve_least_energy_nodal(&grid, p, &opts) {
                Ok(s) => {
                    let (eps, _) = crate::asymptotics::epsilon_p(&s);
                    rows.push(RefinementRow {
                        n,
                        p,
                        p_grad: Some(p * crate::elliptic::dirichlet_energy(&s.u)),
                        sup_plus: Some(s.sup_plus),
                        resolved: Some(grid.h() <= eps),
                    });
                    last = Some(s.u);
                }
                Err(_) => rows.push(RefinementRow { n, p, p_grad: None, sup_plus: None, resolved: None }),
            }
        }
    }
    Ok(rows)
}
