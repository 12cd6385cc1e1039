use std::sync::OnceLock;

use nodal_lab::asymptotics::CSV_HEADER;
use nodal_lab::cli::{diagnostics_csv, emit_outputs, run_experiment, ExperimentConfig, LadderEntry, Report};
use nodal_lab::geometry::{build_grid, DomainSpec};
use nodal_lab::nehari::{solve_least_energy_nodal, NodalSolution, Seed, SolverOptions};
use nodal_lab::pohozaev::pohozaev_check;

fn small_report() -> &'static Report {
    static R: OnceLock<Report> = OnceLock::new();
    R.get_or_init(|| {
        let cfg = ExperimentConfig::from_json(r#"{"n": 97, "p_ladder": [3, 5], "exclusion": 0.3}"#).unwrap();
        run_experiment(&cfg).unwrap()
    })
}

fn disk_p3_257() -> &'static NodalSolution {
    static S: OnceLock<NodalSolution> = OnceLock::new();
    S.get_or_init(|| {
        let g = build_grid(DomainSpec::UnitDisk, 257).unwrap();
        solve_least_energy_nodal(&g, 3.0, &SolverOptions::default()).unwrap()
    })
}

#[test]
fn pohozaev_balance_at_p3() {
    let sol = disk_p3_257();
    let r = pohozaev_check(sol, [0.0, 0.0]).unwrap();
    assert!(r.rel_residual <= 0.02, "{r:?}");
}

#[test]
fn pohozaev_center_shift() {
    let sol = disk_p3_257();
    let a = pohozaev_check(sol, [0.0, 0.0]).unwrap();
    let b = pohozaev_check(sol, [0.2, -0.1]).unwrap();
    assert!((a.rhs - b.rhs).abs() <= 0.02 * a.rhs.abs(), "{a:?} {b:?}");
    assert!(b.rel_residual <= 0.02);
}

#[test]
fn continuation_matches_cold_start() {
    let g = build_grid(DomainSpec::UnitDisk, 97).unwrap();
    let opts = SolverOptions::default();
    let mut u = solve_least_energy_nodal(&g, 3.0, &opts).unwrap().u;
    for p in [4.0, 6.0] {
        u = solve_least_energy_nodal(&g, p, &SolverOptions { init: Seed::Continuation(u), ..opts.clone() }).unwrap().u;
    }
    let warm = solve_least_energy_nodal(&g, 8.0, &SolverOptions { init: Seed::Continuation(u), ..opts.clone() }).unwrap();
    let cold = solve_least_energy_nodal(&g, 8.0, &opts).unwrap();
    assert!((warm.energy - cold.energy).abs() <= 1e-6 * cold.energy, "{} vs {}", warm.energy, cold.energy);
}

#[test]
fn csv_header_and_rows() {
    let csv = diagnostics_csv(small_report());
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let cols = CSV_HEADER.split(',').count();
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
}

#[test]
fn failed_exponent_keeps_marked_row() {
    let mut report = small_report().clone();
    report.entries.push(LadderEntry { p: 7.0, ok: false, error: Some("stalled".into()), record: None, checks: None });
    let csv = diagnostics_csv(&report);
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("7,failed,"), "{last}");
    assert_eq!(report.failures(), 1);
}

#[test]
fn outputs_are_deterministic() {
    let cfg = ExperimentConfig::from_json(r#"{"n": 97, "p_ladder": [3, 5], "exclusion": 0.3}"#).unwrap();
    let again = run_experiment(&cfg).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = emit_outputs(small_report(), Some(&cfg), a.path()).unwrap();
    let mb = emit_outputs(&again, Some(&cfg), b.path()).unwrap();
    assert_eq!(ma.files.len(), mb.files.len());
    for f in &ma.files {
        let x = std::fs::read(a.path().join(&f.path)).unwrap();
        let y = std::fs::read(b.path().join(&f.path)).unwrap();
        assert!(x == y, "{} differs", f.path);
    }
    for name in ["diagnostics.csv", "report.json", "effective_config.json", "manifest.json", "profiles/p3_plus.csv", "fields/u_p5.csv"] {
        assert!(a.path().join(name).exists(), "missing {name}");
    }
}

#[test]
fn bad_config_is_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"p_ladder": [3], "bogus": 1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"p_ladder": [1]}"#).and_then(|c| c.validate()).is_err());
}
