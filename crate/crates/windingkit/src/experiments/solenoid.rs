//! Uniform net poloidal current against the field e_φ/(2πρ) inside and 0 outside.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::basis::{net_poloidal_current, BasisSpec, CurrentBasis};
use crate::biot_savart::bs_field;
use crate::error::{Error, Result};
use crate::geometry::SurfaceGrid;
use crate::probes::interior_probes;
use crate::volume::HarmonicNeumannField;

use super::config::ExperimentConfig;
use super::output::{Cell, Check, CsvTable, RunOutput};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolenoidRow {
    pub n: usize,
    pub interior_rel_error: f64,
    pub exterior_rel_leakage: f64,
    pub net_poloidal_current: f64,
    pub zero_current_max: f64,
}

pub fn solenoid_row(cfg: &ExperimentConfig, n: usize) -> Result<SolenoidRow> {
    let cws = &cfg.geometry.cws;
    if !cws.is_axisymmetric() {
        return Err(Error::Config("the solenoid check needs a rotationally symmetric winding surface".into()));
    }
    let sc = &cfg.solenoid;
    let grid = Arc::new(SurfaceGrid::build(cws, n, n, false)?);
    let spec = BasisSpec {
        m_max: 0,
        n_max: 0,
        secular_poloidal: true,
        secular_toroidal: false,
    };
    let basis = CurrentBasis::new(grid.clone(), &spec)?;
    let j = basis.basis_current(0)?;
    let exact = HarmonicNeumannField::about(cws, 1.0 / (2.0 * PI));
    let probes = interior_probes(cws, sc.probe_shrink, sc.probe_counts)?;
    let b = bs_field(&grid, &j, &probes.points)?;
    let interior = probes
        .points
        .iter()
        .zip(&b)
        .map(|(&x, &v)| {
            let e = exact.eval(x);
            (v - e).norm() / e.norm()
        })
        .fold(0.0, f64::max);
    let scale = exact.strength / cws.major_radius;
    for &x in &sc.exterior {
        if cws.radial_margin(x) >= 0.0 {
            return Err(Error::Config(format!("exterior point {x:?} lies inside the winding surface")));
        }
    }
    let leak = bs_field(&grid, &j, &sc.exterior)?
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        / scale;
    let zero = bs_field(&grid, &grid.zero_vector(), &probes.points)?
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    Ok(SolenoidRow {
        n,
        interior_rel_error: interior,
        exterior_rel_leakage: leak,
        net_poloidal_current: net_poloidal_current(&grid, &j, 0)?,
        zero_current_max: zero,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sc = &cfg.solenoid;
    let rows = sc
        .resolutions
        .iter()
        .map(|&n| solenoid_row(cfg, n))
        .collect::<Result<Vec<_>>>()?;
    let mut table = CsvTable::new(&[
        "n_theta",
        "n_phi",
        "interior_rel_error",
        "exterior_rel_leakage",
        "net_poloidal_current",
        "zero_current_max",
    ]);
    for r in &rows {
        table.push(vec![
            r.n.into(),
            r.n.into(),
            r.interior_rel_error.into(),
            r.exterior_rel_leakage.into(),
            r.net_poloidal_current.into(),
            Cell::Num(r.zero_current_max),
        ]);
    }
    let mut out = RunOutput::default();
    out.add_csv("solenoid.csv", &table);
    let at = rows
        .iter()
        .find(|r| r.n == sc.check_resolution)
        .expect("validated check resolution");
    out.check(Check::new(
        "solenoid.interior",
        at.interior_rel_error <= sc.tol,
        format!("n={} relative error {:e}", at.n, at.interior_rel_error),
    ));
    out.check(Check::new(
        "solenoid.exterior",
        at.exterior_rel_leakage <= sc.tol,
        format!("n={} leakage {:e}", at.n, at.exterior_rel_leakage),
    ));
    out.check(Check::new(
        "solenoid.zero_current",
        rows.iter().all(|r| r.zero_current_max == 0.0),
        "zero current gives zero field",
    ));
    // Refinement must not increase the error beyond the rounding floor.
    let floor = 1e-12;
    let refines = rows
        .windows(2)
        .all(|w| w[1].interior_rel_error <= w[0].interior_rel_error.max(floor));
    out.check(Check::new(
        "solenoid.refinement",
        refines,
        format!(
            "errors {:?}",
            rows.iter().map(|r| r.interior_rel_error).collect::<Vec<_>>()
        ),
    ));
    Ok(out)
}
