//! Tikhonov λ sweep for the configured plasma and target.

use crate::error::{Error, Result};

use super::common::{cws_basis, lambda_grid, plasma_problem, sweep_checks, sweep_table};
use super::config::ExperimentConfig;
use super::output::RunOutput;

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let plasma = cfg
        .geometry
        .plasma
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs geometry.plasma".into()))?;
    let spec = cfg
        .target
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a target".into()))?;
    let target = spec
        .resolve(&cfg.geometry.cws, plasma)
        .map_err(|e| Error::Config(e.to_string()))?;
    let basis = cws_basis(cfg)?;
    let problem = plasma_problem(cfg, &basis, plasma, &target)?;
    let solver = problem.factorize()?;
    let grid = lambda_grid(cfg, &solver);
    let sweep = solver.sweep(&grid)?;
    let mut out = RunOutput::default();
    out.add_csv("sweep.csv", &sweep_table(&sweep.records));
    for c in sweep_checks("sweep.", &sweep, cfg.lambda.optimality_tol) {
        out.check(c);
    }
    Ok(out)
}
