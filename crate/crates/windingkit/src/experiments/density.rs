//! Paired sweeps for two plasma placements against each plasma's own Neumann field.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::TorusSurface;
use crate::targets::TargetField;
use crate::tikhonov::{InverseProblem, SweepRecord};

use super::common::{cws_basis, lambda_grid, plasma_problem, sweep_checks, sweep_table};
use super::config::ExperimentConfig;
use super::output::{Check, RunOutput};

#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    /// √(residual_l2_sq)/‖B_T‖_{L²(P)} at the smallest λ.
    pub final_relative_residual: f64,
    pub final_current_l2_sq: f64,
    pub target_l2_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensitySummary {
    pub lambda_tail: f64,
    pub case_a: CaseSummary,
    pub case_b: CaseSummary,
    /// case_a / case_b relative residual at the smallest λ.
    pub residual_ratio: f64,
    /// case_a / case_b current norm at the smallest λ.
    pub current_ratio: f64,
    /// residual_ratio ≥ 10 and current_ratio ≥ 10.
    pub case_a_not_dense: bool,
}

fn summarize(problem: &InverseProblem, tail: &SweepRecord) -> CaseSummary {
    let t = problem.target_norm_sq();
    CaseSummary {
        final_relative_residual: (tail.residual_l2_sq / t).sqrt(),
        final_current_l2_sq: tail.current_l2_sq,
        target_l2_sq: t,
    }
}

fn case_problem(cfg: &ExperimentConfig, basis: &crate::basis::CurrentBasis, plasma: &TorusSurface) -> Result<InverseProblem> {
    let target = TargetField::plasma_neumann(plasma, true).map_err(|e| Error::Config(e.to_string()))?;
    target
        .validate(&cfg.geometry.cws, plasma)
        .map_err(|e| Error::Config(e.to_string()))?;
    plasma_problem(cfg, basis, plasma, &target)
}

/// Relative residual case b must reach at the smallest λ.
pub const CASE_B_RESIDUAL_TOL: f64 = 1e-3;
/// Required case a / case b contrast in residual and in current norm.
pub const CONTRAST: f64 = 10.0;

pub fn density_checks(s: &DensitySummary) -> Vec<Check> {
    vec![
        Check::new(
            "density.case_b_residual",
            s.case_b.final_relative_residual <= CASE_B_RESIDUAL_TOL,
            format!("case b relative residual {:e} at λ {:e}", s.case_b.final_relative_residual, s.lambda_tail),
        ),
        Check::new(
            "density.residual_contrast",
            s.residual_ratio >= CONTRAST,
            format!("case a / case b relative residual {:e}", s.residual_ratio),
        ),
        Check::new(
            "density.current_contrast",
            s.current_ratio >= CONTRAST,
            format!("case a / case b current norm {:e}", s.current_ratio),
        ),
    ]
}

/// Both sweeps and their tail summary.
#[derive(Debug, Clone)]
pub struct DensityRun {
    pub case_a: Vec<SweepRecord>,
    pub case_b: Vec<SweepRecord>,
    pub summary: DensitySummary,
    /// Bound, monotonicity and optimality checks of both sweeps.
    pub sweep_checks: Vec<Check>,
}

pub fn compute(cfg: &ExperimentConfig) -> Result<DensityRun> {
    let (a, b) = match (&cfg.geometry.case_a, &cfg.geometry.case_b) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Config("density needs geometry.case_a and geometry.case_b".into())),
    };
    let basis = cws_basis(cfg)?;
    let pa = case_problem(cfg, &basis, a)?;
    let pb = case_problem(cfg, &basis, b)?;
    let sa = pa.factorize()?;
    let sb = pb.factorize()?;
    // One absolute λ grid for both cases, scaled by case b when not given explicitly.
    let grid = lambda_grid(cfg, &sb);
    let ra = sa.sweep(&grid)?;
    let rb = sb.sweep(&grid)?;
    let ta = ra.records.last().expect("nonempty grid");
    let tb = rb.records.last().expect("nonempty grid");
    let (ca, cb) = (summarize(&pa, ta), summarize(&pb, tb));
    let residual_ratio = ca.final_relative_residual / cb.final_relative_residual;
    let current_ratio = (ca.final_current_l2_sq / cb.final_current_l2_sq).sqrt();
    let summary = DensitySummary {
        lambda_tail: ta.lambda,
        case_a_not_dense: residual_ratio >= CONTRAST && current_ratio >= CONTRAST,
        case_a: ca,
        case_b: cb,
        residual_ratio,
        current_ratio,
    };
    let tol = cfg.lambda.optimality_tol;
    let mut checks = sweep_checks("density.case_a.", &ra, tol);
    checks.extend(sweep_checks("density.case_b.", &rb, tol));
    Ok(DensityRun {
        sweep_checks: checks,
        case_a: ra.records,
        case_b: rb.records,
        summary,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let DensityRun {
        case_a,
        case_b,
        summary,
        sweep_checks,
    } = compute(cfg)?;
    let mut out = RunOutput::default();
    for c in sweep_checks.into_iter().chain(density_checks(&summary)) {
        out.check(c);
    }
    out.add_csv("density_case_a.csv", &sweep_table(&case_a));
    out.add_csv("density_case_b.csv", &sweep_table(&case_b));
    out.add_json("density_summary.json", &summary)?;
    Ok(out)
}
