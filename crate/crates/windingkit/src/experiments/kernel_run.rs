//! Kernel construction, verification and forward-map nullspace analysis.

use std::sync::Arc;

use serde::Serialize;

use crate::basis::{BasisSpec, CurrentBasis};
use crate::biot_savart::{assemble_forward, DEFAULT_GUARD};
use crate::error::{Error, Result};
use crate::geometry::SurfaceGrid;
use crate::kernel::{gauge_difference, nullspace_svd, verify_kernel, KernelProblem};
use crate::layer::Assembly;
use crate::probes::interior_probes;

use super::config::ExperimentConfig;
use super::output::{Check, RunOutput};

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionReport {
    pub n: usize,
    pub pairing_value: f64,
    pub kernel_residual: f64,
    pub direct_relative_residual: f64,
    pub condition: f64,
    pub fp_iterations: usize,
    pub fp_converged: bool,
    pub fp_first_iterate_exact: bool,
    pub fp_monotone: bool,
    pub fp_direct_agreement: f64,
    pub fp_residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SvdReport {
    pub m_max: usize,
    pub basis_size: usize,
    pub gap_factor: f64,
    pub separated_count: usize,
    pub largest_gap_index: usize,
    pub cosine: f64,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub pairing_value: f64,
    pub kernel_residual: f64,
    pub iterations: usize,
    pub fp_residual_history: Vec<f64>,
    pub svd_spectrum: Vec<f64>,
    pub resolutions: Vec<ResolutionReport>,
    pub svd: Vec<SvdReport>,
    pub firm_nonexpansiveness_gap: f64,
}

fn resolution_report(cfg: &ExperimentConfig, n: usize) -> Result<ResolutionReport> {
    let kc = &cfg.kernel;
    let cws = &cfg.geometry.cws;
    let grid = Arc::new(SurfaceGrid::build(cws, n, n, false)?);
    let kp = KernelProblem::new(grid.clone(), Assembly::Auto)?;
    let direct = kp.solve_g_direct()?;
    let sol = kp.assemble_j0(&direct.g)?;
    let probes = interior_probes(cws, kc.probe_shrink, kc.probe_counts)?;
    let kernel_residual = verify_kernel(&grid, &sol, &probes.points)?;
    let fp = kp.solve_g_fixed_point(&kc.fixed_point)?;
    let first = {
        let mut one = kc.fixed_point.clone();
        one.max_iter = 1;
        kp.solve_g_fixed_point(&one)?
    };
    let history = fp.residuals();
    let lambda0 = kc.fixed_point.relaxation.at(0);
    let expected_first: Vec<f64> = kp.boundary_data().values.iter().map(|f| lambda0 * f).collect();
    Ok(ResolutionReport {
        n,
        pairing_value: sol.diagnostics.pairing_value,
        kernel_residual,
        direct_relative_residual: direct.relative_residual,
        condition: direct.condition,
        fp_iterations: fp.iterations(),
        fp_converged: fp.converged,
        fp_first_iterate_exact: first.g.values == expected_first,
        fp_monotone: history.windows(2).all(|w| w[1] <= (1.0 + kc.monotone_slack) * w[0]),
        fp_direct_agreement: gauge_difference(&grid, &fp.g, &direct.g)?,
        fp_residual_history: history,
    })
}

fn svd_report(cfg: &ExperimentConfig, kp: &KernelProblem, j0: &crate::geometry::VectorGridFunction, m_max: usize) -> Result<SvdReport> {
    let sc = &cfg.kernel.svd;
    let basis = CurrentBasis::new(kp.grid().clone(), &BasisSpec::new(m_max, m_max))?;
    let probes = crate::probes::solid_quadrature(&cfg.geometry.cws, sc.probe_shrink, sc.probe_counts)?;
    let forward = assemble_forward(&basis, &probes, DEFAULT_GUARD)?;
    let report = nullspace_svd(&basis, &forward, Some(j0), sc.gap_threshold)?;
    Ok(SvdReport {
        m_max,
        basis_size: basis.len(),
        gap_factor: report.gap_factor,
        separated_count: report.separated_count,
        largest_gap_index: report.largest_gap_index,
        cosine: report.cosine.unwrap_or(f64::NAN),
        spectrum: report.spectrum,
    })
}

/// Compute every kernel diagnostic for `cfg`.
pub fn report(cfg: &ExperimentConfig) -> Result<KernelReport> {
    let kc = &cfg.kernel;
    let cws = &cfg.geometry.cws;
    if !cws.is_axisymmetric() {
        return Err(Error::Config("the kernel command needs a rotationally symmetric winding surface".into()));
    }
    let resolutions = kc
        .resolutions
        .iter()
        .map(|&n| resolution_report(cfg, n))
        .collect::<Result<Vec<_>>>()?;

    let fne_grid = Arc::new(SurfaceGrid::build(cws, kc.fne_resolution, kc.fne_resolution, false)?);
    let fne = KernelProblem::new(fne_grid, Assembly::Auto)?.firm_nonexpansiveness_gap(kc.fne_pairs, cfg.seed)?;

    let sg = kc.svd.grid;
    let svd_grid = Arc::new(SurfaceGrid::build(cws, sg.n_theta, sg.n_phi, false)?);
    let svd_kp = KernelProblem::new(svd_grid, Assembly::Auto)?;
    let j0 = svd_kp.assemble_j0(&svd_kp.solve_g_direct()?.g)?.j0;
    let svd = kc
        .svd
        .m_max
        .iter()
        .map(|&m| svd_report(cfg, &svd_kp, &j0, m))
        .collect::<Result<Vec<_>>>()?;

    let first = &resolutions[0];
    Ok(KernelReport {
        pairing_value: first.pairing_value,
        kernel_residual: first.kernel_residual,
        iterations: first.fp_iterations,
        fp_residual_history: first.fp_residual_history.clone(),
        svd_spectrum: svd.last().map(|s| s.spectrum.clone()).unwrap_or_default(),
        resolutions,
        svd,
        firm_nonexpansiveness_gap: fne,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let report = report(cfg)?;
    let mut out = RunOutput::default();
    for c in kernel_checks(cfg, &report) {
        out.check(c);
    }
    out.add_json("kernel.json", &report)?;
    Ok(out)
}

pub fn kernel_checks(cfg: &ExperimentConfig, r: &KernelReport) -> Vec<Check> {
    let kc = &cfg.kernel;
    let mut checks = Vec::new();
    for res in &r.resolutions {
        checks.push(Check::new(
            &format!("kernel.pairing.n{}", res.n),
            (res.pairing_value + 1.0).abs() <= kc.pairing_tol,
            format!("pairing {:.12}", res.pairing_value),
        ));
        checks.push(Check::new(
            &format!("kernel.fixed_point.n{}", res.n),
            res.fp_converged && res.fp_monotone && res.fp_first_iterate_exact && res.fp_direct_agreement <= kc.agreement_tol,
            format!(
                "converged {} in {} iterations, monotone {}, first iterate exact {}, agreement {:e}",
                res.fp_converged, res.fp_iterations, res.fp_monotone, res.fp_first_iterate_exact, res.fp_direct_agreement
            ),
        ));
    }
    checks.push(Check::new(
        "kernel.residual",
        r.kernel_residual <= kc.residual_tol,
        format!("kernel residual {:e} at n={}", r.kernel_residual, r.resolutions[0].n),
    ));
    let ratios: Vec<f64> = r
        .resolutions
        .windows(2)
        .map(|w| w[0].kernel_residual / w[1].kernel_residual)
        .collect();
    checks.push(Check::new(
        "kernel.refinement",
        ratios.iter().all(|&q| q >= kc.refinement_ratio),
        format!("residual reduction factors {ratios:?}"),
    ));
    let sc = &kc.svd;
    let one_gap = r.svd.iter().all(|s| {
        s.gap_factor >= sc.gap_threshold && s.separated_count == 1 && s.largest_gap_index + 2 == s.spectrum.len()
    });
    let widening = r.svd.windows(2).all(|w| w[1].gap_factor > w[0].gap_factor);
    checks.push(Check::new(
        "kernel.svd_gap",
        one_gap && widening,
        format!(
            "gap factors {:?}",
            r.svd.iter().map(|s| (s.m_max, s.gap_factor, s.separated_count)).collect::<Vec<_>>()
        ),
    ));
    checks.push(Check::new(
        "kernel.svd_cosine",
        r.svd.iter().all(|s| s.cosine >= sc.cosine_min),
        format!("cosines {:?}", r.svd.iter().map(|s| s.cosine).collect::<Vec<_>>()),
    ));
    checks.push(Check::new(
        "kernel.firm_nonexpansive",
        r.firm_nonexpansiveness_gap <= kc.fne_tol,
        format!("largest normalized gap {:e}", r.firm_nonexpansiveness_gap),
    ));
    checks
}
