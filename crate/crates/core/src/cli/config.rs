use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Point, MIN_NODES};
use crate::greens::StationarityConvention;
use crate::nehari::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Antisymmetric,
    SecondEigenfunction,
}

/// One experiment, read from a single JSON document. Every field except
/// `p_ladder` has a default.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    /// Nodes per axis; odd so that the lattice is symmetric about the origin.
    pub n: usize,
    /// Extra grid sizes on which the ladder is re-solved for a refinement table.
    pub refinement: Vec<usize>,
    /// Strictly increasing exponents, each above 1.
    pub p_ladder: Vec<f64>,
    /// The first seed starts the ladder; all seeds are solved cold at the first exponent.
    pub seeds: Vec<SeedKind>,
    pub tol_solve: f64,
    pub tol_nehari: f64,
    pub max_iters: usize,
    pub newton_switch: f64,
    /// Radius of the rescaled profile window.
    pub profile_radius: f64,
    /// Exclusion radius around the extrema in the Green comparison.
    pub exclusion: f64,
    /// Smallest exponent entering the `1/p` extrapolations.
    pub p_fit_min: f64,
    pub output_dir: PathBuf,
    pub stationarity_convention: StationarityConvention,
    pub stationarity_init: [Point; 2],
    /// Write solution fields and profiles as CSV.
    pub dump_fields: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainSpec::UnitDisk,
            n: 513,
            refinement: Vec::new(),
            p_ladder: Vec::new(),
            seeds: vec![SeedKind::Antisymmetric],
            tol_solve: 1e-8,
            tol_nehari: 1e-10,
            max_iters: 2000,
            newton_switch: 1e-3,
            profile_radius: 4.0,
            exclusion: 0.2,
            p_fit_min: 6.0,
            output_dir: PathBuf::from("out"),
            stationarity_convention: StationarityConvention::FirstSlot,
            stationarity_init: [[0.3, 0.0], [-0.3, 0.0]],
            dump_fields: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.p_ladder.is_empty() {
            return Err(Error::invalid("p_ladder must not be empty"));
        }
        if self.p_ladder.iter().any(|&p| !(p.is_finite() && p > 1.0)) {
            return Err(Error::invalid("every exponent must be finite and above 1"));
        }
        if self.p_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("p_ladder must be strictly increasing"));
        }
        for &n in std::iter::once(&self.n).chain(&self.refinement) {
            if n % 2 == 0 || n < MIN_NODES {
                return Err(Error::invalid(format!("grid size must be odd and at least {MIN_NODES}, got {n}")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if !(self.profile_radius > 0.0 && self.exclusion > 0.0) {
            return Err(Error::invalid("profile_radius and exclusion must be positive"));
        }
        self.solver_options().validate()
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol_solve: self.tol_solve,
            tol_nehari: self.tol_nehari,
            max_iters: self.max_iters,
            newton_switch: self.newton_switch,
            ..SolverOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(r#"{"p_ladder": [3, 4]}"#).unwrap();
        assert_eq!(c.n, 513);
        assert_eq!(c.domain, DomainSpec::UnitDisk);
        assert_eq!(c.profile_radius, 4.0);
    }

    #[test]
    fn rejects_bad_ladders_and_grids() {
        for bad in [
            r#"{"p_ladder": []}"#,
            r#"{"p_ladder": [3, 3]}"#,
            r#"{"p_ladder": [4, 3]}"#,
            r#"{"p_ladder": [1, 3]}"#,
            r#"{"p_ladder": [3], "n": 128}"#,
            r#"{"p_ladder": [3], "refinement": [64]}"#,
            r#"{"p_ladder": [3], "seeds": []}"#,
            r#"{"p_ladder": [3], "unknown": 1}"#,
            r#"{"p_ladder": [3], "domain": {"kind": "rectangle", "width": 0, "height": 1}}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn domain_and_convention_parse() {
        let c = ExperimentConfig::from_json(
            r#"{"p_ladder": [3], "domain": {"kind": "annulus", "r_inner": 0.5, "r_outer": 1}, "stationarity_convention": "robin_gradient"}"#,
        )
        .unwrap();
        assert_eq!(c.domain, DomainSpec::Annulus { r_inner: 0.5, r_outer: 1.0 });
        assert_eq!(c.stationarity_convention, StationarityConvention::RobinGradient);
    }
}
