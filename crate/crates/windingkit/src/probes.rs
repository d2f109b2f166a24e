//! Volume probe sets inside a solid torus and finite-difference stencils.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusSurface;
use crate::vec3::Vec3;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for l in 2..=n {
                let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Tensor-product node counts (radial × poloidal × toroidal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCounts {
    pub radial: usize,
    pub poloidal: usize,
    pub toroidal: usize,
}

impl ProbeCounts {
    pub fn new(radial: usize, poloidal: usize, toroidal: usize) -> Self {
        ProbeCounts {
            radial,
            poloidal,
            toroidal,
        }
    }

    pub fn total(&self) -> usize {
        self.radial * self.poloidal * self.toroidal
    }
}

/// Evaluation points with volume quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl ProbeSet {
    /// Points without meaningful quadrature weights (unit weights).
    pub fn unweighted(points: Vec<Vec3>) -> Self {
        let weights = vec![1.0; points.len()];
        ProbeSet { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Probes filling the solid torus shrunk to `shrink` times its minor radius.
pub fn interior_probes(surface: &TorusSurface, shrink: f64, counts: ProbeCounts) -> Result<ProbeSet> {
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "shrink must lie in (0, 1), got {shrink}"
        )));
    }
    solid_quadrature(surface, shrink, counts)
}

/// Quadrature of the solid torus scaled radially by `scale ∈ (0, 1]`:
/// Gauss–Legendre in the radial fraction, midpoint trapezoid in both angles.
pub fn solid_quadrature(surface: &TorusSurface, scale: f64, counts: ProbeCounts) -> Result<ProbeSet> {
    surface.validate()?;
    if counts.radial == 0 || counts.poloidal == 0 || counts.toroidal == 0 {
        return Err(Error::InvalidArgument("probe counts must be positive".into()));
    }
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidArgument(format!("scale must lie in (0, 1], got {scale}")));
    }
    let (xs, ws) = gauss_legendre(counts.radial);
    let h_t = 2.0 * PI / counts.poloidal as f64;
    let h_p = 2.0 * PI / counts.toroidal as f64;
    let mut points = Vec::with_capacity(counts.total());
    let mut weights = Vec::with_capacity(counts.total());
    for (x, w) in xs.iter().zip(&ws) {
        let s = 0.5 * (x + 1.0) * scale;
        let w_s = 0.5 * w * scale;
        for i in 0..counts.poloidal {
            let theta = h_t * (i as f64 + 0.5);
            for j in 0..counts.toroidal {
                let phi = h_p * (j as f64 + 0.5);
                let [p, d_s, d_t, d_p] = surface.solid_local(s, theta, phi);
                let jac = d_s.dot(d_t.cross(d_p)).abs();
                points.push(surface.pose.apply(p));
                weights.push(jac * w_s * h_t * h_p);
            }
        }
    }
    Ok(ProbeSet { points, weights })
}

/// Central-difference stencils: per center the points c, c±h·e_x, c±h·e_y, c±h·e_z.
#[derive(Debug, Clone, PartialEq)]
pub struct FdClusters {
    pub centers: Vec<Vec3>,
    pub step: f64,
}

pub const STENCIL_SIZE: usize = 7;

impl FdClusters {
    pub fn new(centers: Vec<Vec3>, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("stencil step must be positive, got {step}")));
        }
        Ok(FdClusters { centers, step })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn points(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.centers.len() * STENCIL_SIZE);
        for &c in &self.centers {
            out.push(c);
            for k in 0..3 {
                let e = Vec3::axis(k) * self.step;
                out.push(c + e);
                out.push(c - e);
            }
        }
        out
    }

    /// Jacobian J[a][k] = ∂_k F_a at center `c` from stencil samples laid out as in `points`.
    pub fn jacobian(&self, samples: &[Vec3], c: usize) -> [[f64; 3]; 3] {
        let base = c * STENCIL_SIZE;
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let d = (samples[base + 1 + 2 * k] - samples[base + 2 + 2 * k]) / (2.0 * self.step);
            for (a, row) in jac.iter_mut().enumerate() {
                row[k] = d[a];
            }
        }
        jac
    }

    pub fn divergence(&self, samples: &[Vec3], c: usize) -> f64 {
        let j = self.jacobian(samples, c);
        j[0][0] + j[1][1] + j[2][2]
    }

    pub fn curl(&self, samples: &[Vec3], c: usize) -> Vec3 {
        let j = self.jacobian(samples, c);
        Vec3::new(j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1])
    }

    /// Second-order Laplacian of a scalar sampled on the stencil.
    pub fn laplacian(&self, samples: &[f64], c: usize) -> f64 {
        let base = c * STENCIL_SIZE;
        let centre = samples[base];
        (1..STENCIL_SIZE).map(|k| samples[base + k] - centre).sum::<f64>() / (self.step * self.step)
    }
}

/// Cluster centers spread through a shrunken solid torus: `count` points at half the
/// shrunken radius on a deterministic spiral in (θ, φ).
pub fn cluster_centers(surface: &TorusSurface, shrink: f64, count: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let theta = golden * k as f64;
            let phi = 2.0 * PI * (k as f64 + 0.5) / count as f64;
            let s = shrink * (0.25 + 0.5 * ((k % 3) as f64) / 2.0);
            surface.pose.apply(surface.solid_local(s, theta, phi)[0])
        })
        .collect()
}
