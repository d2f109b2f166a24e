//! Setup shared by the sweep and density commands.

use std::sync::Arc;

use crate::basis::CurrentBasis;
use crate::biot_savart::assemble_forward;
use crate::error::{Error, Result};
use crate::geometry::{SurfaceGrid, TorusSurface};
use crate::probes::{cluster_centers, solid_quadrature, FdClusters};
use crate::targets::TargetField;
use crate::tikhonov::{InverseProblem, SweepRecord, SweepResult, TikhonovSolver};

use super::config::{check_containment, ExperimentConfig};
use super::output::{Check, CsvTable};

pub const SWEEP_COLUMNS: [&str; 7] = [
    "lambda",
    "objective",
    "residual_l2_sq",
    "current_l2_sq",
    "bound_ratio",
    "c0_error",
    "c1_error",
];

pub fn cws_basis(cfg: &ExperimentConfig) -> Result<CurrentBasis> {
    let g = cfg.geometry.grid;
    let grid = SurfaceGrid::build(&cfg.geometry.cws, g.n_theta, g.n_phi, false).map_err(|e| Error::Config(e.to_string()))?;
    CurrentBasis::new(Arc::new(grid), &cfg.basis).map_err(|e| Error::Config(e.to_string()))
}

/// Inverse problem for `target` sampled on the volume quadrature of `plasma`, with FD clusters attached.
pub fn plasma_problem(
    cfg: &ExperimentConfig,
    basis: &CurrentBasis,
    plasma: &TorusSurface,
    target: &TargetField,
) -> Result<InverseProblem> {
    let p = &cfg.probes;
    check_containment(basis.grid(), plasma, p.guard)?;
    let probes = solid_quadrature(plasma, p.scale, p.counts)?;
    let forward = assemble_forward(basis, &probes, p.guard)?;
    if forward.guard_violations() > 0 {
        return Err(Error::Config(format!(
            "{} probes violate the near-surface guard",
            forward.guard_violations()
        )));
    }
    let b = target.sample(&probes.points);
    let clusters = FdClusters::new(cluster_centers(plasma, p.cluster_shrink, p.clusters), p.cluster_step)?;
    let cluster_probes = crate::probes::ProbeSet::unweighted(clusters.points());
    let cluster_forward = assemble_forward(basis, &cluster_probes, p.guard)?;
    let cluster_target = target.sample(&cluster_probes.points);
    InverseProblem::from_forward(&forward, basis.mass_matrix(), &b)?.with_clusters(
        clusters,
        &cluster_forward,
        &cluster_target,
    )
}

/// The configured λ grid, or the default relative grid of `solver`.
pub fn lambda_grid(cfg: &ExperimentConfig, solver: &TikhonovSolver<'_>) -> Vec<f64> {
    let l = &cfg.lambda;
    match &l.values {
        Some(v) => v.clone(),
        None => {
            let s = solver.normal_norm() / solver.mass_norm();
            crate::tikhonov::log_grid(l.high * s, l.low * s, l.points)
        }
    }
}

pub fn sweep_table(records: &[SweepRecord]) -> CsvTable {
    let mut t = CsvTable::new(&SWEEP_COLUMNS);
    for r in records {
        t.push(vec![
            r.lambda.into(),
            r.objective.into(),
            r.residual_l2_sq.into(),
            r.current_l2_sq.into(),
            r.bound_ratio.into(),
            r.c0_error.into(),
            r.c1_error.into(),
        ]);
    }
    t
}

/// Checks every sweep must pass: monotone C(λ) and ‖j_λ‖², bound ratio ≤ 1, optimality.
pub fn sweep_checks(prefix: &str, sweep: &SweepResult, optimality_tol: f64) -> Vec<Check> {
    let max_ratio = sweep.records.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
    let opt = sweep.max_optimality();
    vec![
        Check::new(
            &format!("{prefix}objective_monotone"),
            sweep.objective_violations.is_empty(),
            format!("violations at rows {:?}", sweep.objective_violations),
        ),
        Check::new(
            &format!("{prefix}current_monotone"),
            sweep.current_violations.is_empty(),
            format!("violations at rows {:?}", sweep.current_violations),
        ),
        Check::new(
            &format!("{prefix}bound_ratio"),
            max_ratio <= 1.0,
            format!("max bound_ratio {max_ratio:e}"),
        ),
        Check::new(
            &format!("{prefix}optimality"),
            opt <= optimality_tol,
            format!("max optimality residual {opt:e} (tolerance {optimality_tol:e})"),
        ),
    ]
}
