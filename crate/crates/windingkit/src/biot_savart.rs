//! Biot-Savart field of surface currents, the forward map over a current
//! basis, and the volume field BS_Ω(Γ) through its single-layer form.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::basis::{BasisElement, CurrentBasis, CurrentCoefficients, FourierMode, Parity};
use crate::error::{ensure_len, Error, Result};
use crate::geometry::{SurfaceGrid, VectorGridFunction};
use crate::layer::{self, BoundaryOperator};
use crate::probes::{FdClusters, ProbeSet, STENCIL_SIZE};
use crate::spectral::Fft2;
use crate::vec3::Vec3;
use crate::volume::HarmonicNeumannField;

/// Default near-surface guard, in local grid spacings.
pub const DEFAULT_GUARD: f64 = 2.0;

const FOUR_PI: f64 = 4.0 * PI;

/// A field value and whether the evaluation point violated the accuracy guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: Vec3,
    pub near_surface: bool,
}

fn raw_field(grid: &SurfaceGrid, j: &[Vec3], x: Vec3) -> Vec3 {
    let mut acc = Vec3::ZERO;
    for k in 0..grid.len() {
        let d = x - grid.nodes[k];
        let r = d.norm();
        acc += j[k].cross(d) * (grid.area_weights[k] / (r * r * r));
    }
    acc / FOUR_PI
}

/// (1/4π) Σ_y j(y) × (x−y)/|x−y|³ w(y), flagged when `x` is within `guard` spacings of a node.
pub fn bs_eval(grid: &SurfaceGrid, j: &VectorGridFunction, x: Vec3, guard: f64) -> Result<FieldSample> {
    grid.check(j.key())?;
    Ok(FieldSample {
        value: raw_field(grid, &j.values, x),
        near_surface: grid.violates_guard(x, guard),
    })
}

/// Field values at many points (no guard check).
pub fn bs_field(grid: &SurfaceGrid, j: &VectorGridFunction, points: &[Vec3]) -> Result<Vec<Vec3>> {
    grid.check(j.key())?;
    Ok(points.par_iter().map(|&x| raw_field(grid, &j.values, x)).collect())
}

/// Dense matrix of basis fields at probes: rows 3p..3p+3 hold the field of each basis column at probe p.
#[derive(Debug, Clone)]
pub struct ForwardMap {
    matrix: Mat<f64>,
    probes: ProbeSet,
    near_surface: Vec<bool>,
}

impl ForwardMap {
    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn probes(&self) -> &ProbeSet {
        &self.probes
    }

    pub fn n_basis(&self) -> usize {
        self.matrix.ncols()
    }

    /// Number of probes closer to the surface than the accuracy guard.
    pub fn guard_violations(&self) -> usize {
        self.near_surface.iter().filter(|&&b| b).count()
    }

    /// Row weights (probe weight repeated for the three components).
    pub fn row_weights(&self) -> Vec<f64> {
        self.probes.weights.iter().flat_map(|&w| [w, w, w]).collect()
    }

    pub fn apply(&self, c: &CurrentCoefficients) -> Result<Vec<Vec3>> {
        ensure_len(self.n_basis(), c.len())?;
        let cm = Mat::from_fn(c.len(), 1, |i, _| c.0[i]);
        let y = &self.matrix * &cm;
        Ok((0..self.probes.len())
            .map(|p| Vec3::new(y[(3 * p, 0)], y[(3 * p + 1, 0)], y[(3 * p + 2, 0)]))
            .collect())
    }
}

/// Assemble the forward map by a per-probe 2D FFT over the grid.
///
/// Writing j = ∂_θΦ·U + ∂_φΦ·V with U = N×∇θ and V = N×∇φ, the field at x of
/// the potential e^{i(mθ−nφ)} is Σ_y e^{i(mθ−nφ)}(im·U×K − in·V×K) with K the
/// Biot-Savart kernel vector, i.e. a single 2D DFT of U×K and V×K per probe.
pub fn assemble_forward(basis: &CurrentBasis, probes: &ProbeSet, guard: f64) -> Result<ForwardMap> {
    let grid = basis.grid().as_ref();
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let n = grid.len();
    let (u, v): (Vec<Vec3>, Vec<Vec3>) = (0..n)
        .map(|k| {
            let (a, b, c) = grid.metric[k].inverse();
            let grad_t = grid.tangent_theta[k] * a + grid.tangent_phi[k] * b;
            let grad_p = grid.tangent_theta[k] * b + grid.tangent_phi[k] * c;
            (grid.normals[k].cross(grad_t), grid.normals[k].cross(grad_p))
        })
        .unzip();
    let fft = Fft2::new(nt, np);
    let elements = basis.elements();
    let nb = elements.len();
    let rows: Vec<(Vec<f64>, bool)> = probes
        .points
        .par_iter()
        .map(|&x| {
            // Pack U×K + i·V×K per component; split afterwards by conjugate symmetry.
            let mut packed: [Vec<Complex64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
            for k in 0..n {
                let d = x - grid.nodes[k];
                let r = d.norm();
                let kv = d * (grid.area_weights[k] / (FOUR_PI * r * r * r));
                let p = u[k].cross(kv);
                let q = v[k].cross(kv);
                for c in 0..3 {
                    packed[c].push(Complex64::new(p[c], q[c]));
                }
            }
            for buf in packed.iter_mut() {
                fft.forward(buf);
            }
            let split = |c: usize, kt: usize, kp: usize| -> (Complex64, Complex64) {
                let z = packed[c][kt * np + kp];
                let zm = packed[c][((nt - kt) % nt) * np + (np - kp) % np].conj();
                let p_hat = (z + zm) * 0.5;
                let q_hat = (z - zm) * Complex64::new(0.0, -0.5);
                (p_hat, q_hat)
            };
            let mut out = vec![0.0; 3 * nb];
            for (col, e) in elements.iter().enumerate() {
                for c in 0..3 {
                    let value = match *e {
                        BasisElement::SecularPoloidal => -split(c, 0, 0).1.re / (2.0 * PI),
                        BasisElement::SecularToroidal => -split(c, 0, 0).0.re / (2.0 * PI),
                        BasisElement::Fourier(FourierMode { m, n: nn, parity }) => {
                            let kt = (-(m as i64)).rem_euclid(nt as i64) as usize;
                            let kp = (nn as i64).rem_euclid(np as i64) as usize;
                            let (p_hat, q_hat) = split(c, kt, kp);
                            let b = Complex64::new(0.0, 1.0) * (p_hat * m as f64 - q_hat * nn as f64);
                            match parity {
                                Parity::Cos => b.re,
                                Parity::Sin => b.im,
                            }
                        }
                    };
                    out[c * nb + col] = value;
                }
            }
            (out, grid.violates_guard(x, guard))
        })
        .collect();
    let matrix = Mat::from_fn(3 * probes.len(), nb, |r, col| rows[r / 3].0[(r % 3) * nb + col]);
    Ok(ForwardMap {
        matrix,
        probes: probes.clone(),
        near_surface: rows.iter().map(|r| r.1).collect(),
    })
}

/// Tangential density −N×Γ whose single layer is BS_Ω(Γ).
fn gamma_density(gamma: &HarmonicNeumannField, grid: &SurfaceGrid) -> Result<VectorGridFunction> {
    let values = grid
        .nodes
        .iter()
        .zip(&grid.normals)
        .map(|(&x, &nrm)| Ok(-nrm.cross(gamma.value(x)?)))
        .collect::<Result<Vec<_>>>()?;
    grid.vector(values)
}

/// BS_Ω(Γ) at off-surface points.
pub fn bs_volume_gamma(gamma: &HarmonicNeumannField, grid: &SurfaceGrid, targets: &[Vec3]) -> Result<Vec<Vec3>> {
    let density = gamma_density(gamma, grid)?;
    layer::single_layer_vector(grid, &density, targets)
}

/// BS_Ω(Γ) at the grid nodes, using the corrected on-surface single layer `slp`.
pub fn bs_volume_gamma_trace(
    gamma: &HarmonicNeumannField,
    grid: &SurfaceGrid,
    slp: &BoundaryOperator,
) -> Result<VectorGridFunction> {
    let density = gamma_density(gamma, grid)?;
    layer::single_layer_trace_vector(slp, grid, &density)
}

/// Error norms of a computed field against a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMetrics {
    /// Σ_p w_p |B − B_T|² (weighted L²(P) norm squared).
    pub residual_l2_sq: f64,
    /// max_p |B − B_T|.
    pub c0_error: f64,
    /// max over clusters of max(|e|, ‖∇e‖_F) with e = B − B_T; None without clusters.
    pub c1_error: Option<f64>,
}

/// Samples of a computed and a target field on the stencil points of `clusters`.
pub struct ClusterSamples<'a> {
    pub clusters: &'a FdClusters,
    pub computed: &'a [Vec3],
    pub target: &'a [Vec3],
}

pub fn field_metrics(
    computed: &[Vec3],
    target: &[Vec3],
    probes: &ProbeSet,
    clusters: Option<ClusterSamples<'_>>,
) -> Result<FieldMetrics> {
    ensure_len(probes.len(), computed.len())?;
    ensure_len(probes.len(), target.len())?;
    let mut residual = 0.0;
    let mut c0 = 0.0f64;
    for ((&b, &t), &w) in computed.iter().zip(target).zip(&probes.weights) {
        let e = b - t;
        residual += w * e.norm_sq();
        c0 = c0.max(e.norm());
    }
    let c1 = match clusters {
        None => None,
        Some(cs) => {
            let n = cs.clusters.len() * STENCIL_SIZE;
            ensure_len(n, cs.computed.len())?;
            ensure_len(n, cs.target.len())?;
            let err: Vec<Vec3> = cs.computed.iter().zip(cs.target).map(|(&a, &b)| a - b).collect();
            let mut worst = 0.0f64;
            for c in 0..cs.clusters.len() {
                let jac = cs.clusters.jacobian(&err, c);
                let frob = jac.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                worst = worst.max(frob).max(err[c * STENCIL_SIZE].norm());
            }
            Some(worst)
        }
    };
    if !residual.is_finite() {
        return Err(Error::InvalidArgument("field samples are not finite".into()));
    }
    Ok(FieldMetrics {
        residual_l2_sq: residual,
        c0_error: c0,
        c1_error: c1,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::basis::BasisSpec;
    use crate::geometry::TorusSurface;
    use crate::probes::{interior_probes, ProbeCounts};

    fn basis(n: usize, m_max: usize) -> CurrentBasis {
        let s = TorusSurface::new(3.0, 1.0).unwrap();
        let g = Arc::new(SurfaceGrid::build(&s, n, n, false).unwrap());
        CurrentBasis::new(g, &BasisSpec::new(m_max, m_max)).unwrap()
    }

    #[test]
    fn solenoid_field_at_tube_center() {
        let b = basis(64, 1);
        let j = b.basis_current(0).unwrap();
        let s = bs_eval(b.grid(), &j, Vec3::new(3.0, 0.0, 0.0), DEFAULT_GUARD).unwrap();
        let expect = 1.0 / (2.0 * PI * 3.0);
        assert!((s.value - Vec3::new(0.0, expect, 0.0)).norm() < 1e-6 * expect);
        assert!(!s.near_surface);
        let out = bs_eval(b.grid(), &j, Vec3::new(5.5, 0.0, 0.0), DEFAULT_GUARD).unwrap();
        assert!(out.value.norm() < 1e-6 * expect);
        let near = bs_eval(b.grid(), &j, Vec3::new(3.95, 0.0, 0.0), DEFAULT_GUARD).unwrap();
        assert!(near.near_surface);
    }

    #[test]
    fn forward_columns_match_direct_evaluation() {
        let b = basis(16, 3);
        let probes = interior_probes(b.grid().surface(), 0.5, ProbeCounts::new(2, 3, 4)).unwrap();
        let fm = assemble_forward(&b, &probes, DEFAULT_GUARD).unwrap();
        for k in 0..b.len() {
            let j = b.basis_current(k).unwrap();
            let direct = bs_field(b.grid(), &j, &probes.points).unwrap();
            let col = fm.apply(&CurrentCoefficients::unit(b.len(), k)).unwrap();
            for (a, c) in direct.iter().zip(&col) {
                assert!((*a - *c).norm() <= 1e-12 * (1.0 + a.norm()), "column {k}: {a:?} vs {c:?}");
            }
        }
    }

    #[test]
    fn constant_offset_metrics() {
        let s = TorusSurface::new(3.0, 1.0).unwrap();
        let probes = interior_probes(&s, 0.5, ProbeCounts::new(4, 16, 16)).unwrap();
        let zero = vec![Vec3::ZERO; probes.len()];
        let ez = vec![Vec3::Z; probes.len()];
        let m = field_metrics(&ez, &zero, &probes, None).unwrap();
        assert!((m.residual_l2_sq - probes.total_weight()).abs() < 1e-12 * probes.total_weight());
        assert_eq!(m.c0_error, 1.0);
        let same = field_metrics(&ez, &ez, &probes, None).unwrap();
        assert_eq!(same.residual_l2_sq, 0.0);
    }
}
