//! Laplace single- and double-layer potentials on a toroidal surface.
//!
//! Off-surface evaluation uses the plain trapezoid rule. On-surface (trace)
//! operators use a locally corrected Nyström rule on the source grid itself:
//! the single layer drops the singular self term and adds an Epstein-zeta
//! correction, the double layer subtracts the density at the target so that
//! constants are reproduced exactly. Both are third order in the grid step.

mod operator;
pub mod zeta;

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;

pub use operator::{BoundaryOperator, OperatorSolver};
use operator::{Circulant, Storage};

use crate::error::{Error, Result};
use crate::geometry::{ScalarGridFunction, SurfaceGrid, VectorGridFunction};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Single,
    Double,
}

/// Storage choice for on-surface operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assembly {
    /// Block-circulant when the surface is rotationally symmetric, dense otherwise.
    #[default]
    Auto,
    Dense,
}

const FOUR_PI: f64 = 4.0 * PI;

/// Self-interaction weight of the corrected single layer at node `i`.
fn single_layer_self_weight(grid: &SurfaceGrid, i: usize) -> f64 {
    let (h_t, h_p) = grid.steps();
    let m = grid.metric[i];
    let g = [
        [m.g_tt * h_t * h_t, m.g_tp * h_t * h_p],
        [m.g_tp * h_t * h_p, m.g_pp * h_p * h_p],
    ];
    -h_t * h_p * zeta::epstein_zeta_half(g) * grid.jacobian[i] / FOUR_PI
}

fn single_layer_row(grid: &SurfaceGrid, i: usize, out: &mut [f64]) {
    let x = grid.nodes[i];
    for (k, o) in out.iter_mut().enumerate() {
        *o = if k == i {
            single_layer_self_weight(grid, i)
        } else {
            grid.area_weights[k] / (FOUR_PI * (x - grid.nodes[k]).norm())
        };
    }
}

fn double_layer_row(grid: &SurfaceGrid, i: usize, out: &mut [f64]) {
    let x = grid.nodes[i];
    let mut off = 0.0;
    for (k, o) in out.iter_mut().enumerate() {
        if k == i {
            continue;
        }
        let d = grid.nodes[k] - x;
        let r = d.norm();
        let v = grid.area_weights[k] * d.dot(grid.normals[k]) / (FOUR_PI * r * r * r);
        *o = v;
        off += v;
    }
    out[i] = 1.0 - off;
}

fn assemble(grid: &SurfaceGrid, assembly: Assembly, row: fn(&SurfaceGrid, usize, &mut [f64])) -> BoundaryOperator {
    let n = grid.len();
    let symmetric = grid.surface().is_axisymmetric() && assembly == Assembly::Auto;
    let storage = if symmetric {
        // Rows of the nodes with φ index 0 generate the whole matrix.
        let (nt, np) = (grid.n_theta(), grid.n_phi());
        let mut generator = vec![0.0; nt * n];
        generator
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out)| row(grid, i * np, out));
        Storage::Circulant(Circulant::new(nt, np, generator))
    } else {
        let mut rows = vec![0.0; n * n];
        rows.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out)| row(grid, i, out));
        Storage::Dense(Mat::from_fn(n, n, |i, k| rows[i * n + k]))
    };
    BoundaryOperator::new(grid.key(), n, storage)
}

/// On-surface single layer σ ↦ (1/4π)∫ σ(y)/|x−y| dσ(y) at the grid nodes.
pub fn single_layer_trace(grid: &SurfaceGrid, assembly: Assembly) -> BoundaryOperator {
    assemble(grid, assembly, single_layer_row)
}

/// Interior trace g ↦ K[g] + g/2 of the double layer w_Ω[g] at the grid nodes.
pub fn double_layer_trace(grid: &SurfaceGrid, assembly: Assembly) -> BoundaryOperator {
    assemble(grid, assembly, double_layer_row)
}

fn check_operator(op: &BoundaryOperator, grid: &SurfaceGrid, f: &ScalarGridFunction) -> Result<()> {
    grid.check(op.key())?;
    grid.check(f.key())
}

/// Apply an on-surface operator to a grid function.
pub fn apply_trace(op: &BoundaryOperator, grid: &SurfaceGrid, f: &ScalarGridFunction) -> Result<ScalarGridFunction> {
    check_operator(op, grid, f)?;
    grid.scalar(op.apply(&f.values)?)
}

/// Interior limit of w_Ω[g] on the surface, using a prebuilt [`double_layer_trace`].
pub fn double_layer_interior_trace(
    op: &BoundaryOperator,
    grid: &SurfaceGrid,
    g: &ScalarGridFunction,
) -> Result<ScalarGridFunction> {
    apply_trace(op, grid, g)
}

/// Componentwise on-surface single layer of a vector density.
pub fn single_layer_trace_vector(
    op: &BoundaryOperator,
    grid: &SurfaceGrid,
    density: &VectorGridFunction,
) -> Result<VectorGridFunction> {
    grid.check(op.key())?;
    grid.check(density.key())?;
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|k| op.apply(&density.component(k)))
        .collect::<Result<_>>()?;
    grid.vector(
        (0..grid.len())
            .map(|i| Vec3::new(comps[0][i], comps[1][i], comps[2][i]))
            .collect(),
    )
}

fn coincidence_tol(grid: &SurfaceGrid) -> f64 {
    1e-10 * grid.surface().minor_radius
}

fn check_target_off_nodes(grid: &SurfaceGrid, x: Vec3, r: f64) -> Result<()> {
    if r < coincidence_tol(grid) {
        Err(Error::Singular(format!("target {x:?} coincides with a source node")))
    } else {
        Ok(())
    }
}

/// Single layer (1/4π) Σ σ(y) w(y)/|x−y| at points off the source nodes.
pub fn single_layer(grid: &SurfaceGrid, density: &ScalarGridFunction, targets: &[Vec3]) -> Result<Vec<f64>> {
    grid.check(density.key())?;
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for k in 0..grid.len() {
                let r = (x - grid.nodes[k]).norm();
                check_target_off_nodes(grid, x, r)?;
                acc += density.values[k] * grid.area_weights[k] / r;
            }
            Ok(acc / FOUR_PI)
        })
        .collect()
}

/// Componentwise single layer of a vector density at points off the source nodes.
pub fn single_layer_vector(grid: &SurfaceGrid, density: &VectorGridFunction, targets: &[Vec3]) -> Result<Vec<Vec3>> {
    grid.check(density.key())?;
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = Vec3::ZERO;
            for k in 0..grid.len() {
                let r = (x - grid.nodes[k]).norm();
                check_target_off_nodes(grid, x, r)?;
                acc += density.values[k] * (grid.area_weights[k] / r);
            }
            Ok(acc / FOUR_PI)
        })
        .collect()
}

/// Double layer w_Ω[g](x) = (1/4π) Σ g(y) (y−x)·N(y)/|x−y|³ w(y) at points off the surface.
pub fn double_layer_w(grid: &SurfaceGrid, g: &ScalarGridFunction, targets: &[Vec3]) -> Result<Vec<f64>> {
    grid.check(g.key())?;
    let surface = grid.surface();
    targets
        .par_iter()
        .map(|&x| {
            if surface.radial_margin(x).abs() < coincidence_tol(grid) {
                return Err(Error::InvalidArgument(format!(
                    "target {x:?} lies on the surface; use the interior trace"
                )));
            }
            let mut acc = 0.0;
            for k in 0..grid.len() {
                let d = grid.nodes[k] - x;
                let r = d.norm();
                acc += g.values[k] * grid.area_weights[k] * d.dot(grid.normals[k]) / (r * r * r);
            }
            Ok(acc / FOUR_PI)
        })
        .collect()
}

/// Dense target × source matrix of a layer potential at off-surface points.
pub fn layer_matrix(grid: &SurfaceGrid, targets: &[Vec3], kind: LayerKind) -> Result<Mat<f64>> {
    let n = grid.len();
    let mut m = Mat::<f64>::zeros(targets.len(), n);
    for (t, &x) in targets.iter().enumerate() {
        for k in 0..n {
            let d = grid.nodes[k] - x;
            let r = d.norm();
            check_target_off_nodes(grid, x, r)?;
            m[(t, k)] = match kind {
                LayerKind::Single => grid.area_weights[k] / (FOUR_PI * r),
                LayerKind::Double => grid.area_weights[k] * d.dot(grid.normals[k]) / (FOUR_PI * r * r * r),
            };
        }
    }
    Ok(m)
}
