//! The harmonic Neumann field of an axisymmetric solid torus and its L² norm.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusSurface;
use crate::probes::{solid_quadrature, ProbeCounts};
use crate::vec3::Vec3;

/// Field c·e_φ/ρ circulating about an axis line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicNeumannField {
    pub axis_point: Vec3,
    pub axis_dir: Vec3,
    pub strength: f64,
}

/// Relative distance from the axis below which the field counts as singular.
const AXIS_TOL: f64 = 1e-12;

impl HarmonicNeumannField {
    pub fn new(axis_point: Vec3, axis_dir: Vec3, strength: f64) -> Result<Self> {
        let len = axis_dir.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidArgument("axis direction must be nonzero".into()));
        }
        Ok(HarmonicNeumannField {
            axis_point,
            axis_dir: axis_dir / len,
            strength,
        })
    }

    /// The field about the symmetry axis of `surface`.
    pub fn about(surface: &TorusSurface, strength: f64) -> Self {
        let (p, d) = surface.axis();
        HarmonicNeumannField {
            axis_point: p,
            axis_dir: d,
            strength,
        }
    }

    /// Offset from the axis (perpendicular component) of `x`.
    fn radial_offset(&self, x: Vec3) -> Vec3 {
        let d = x - self.axis_point;
        d - self.axis_dir * d.dot(self.axis_dir)
    }

    pub fn value(&self, x: Vec3) -> Result<Vec3> {
        let r = self.radial_offset(x);
        let rho_sq = r.norm_sq();
        let scale = (x - self.axis_point).norm().max(1.0);
        if rho_sq.sqrt() <= AXIS_TOL * scale {
            return Err(Error::Singular(format!("point {x:?} lies on the field axis")));
        }
        Ok(self.axis_dir.cross(r) * (self.strength / rho_sq))
    }

    /// Like [`value`](Self::value) for points already known to be off the axis.
    pub fn eval(&self, x: Vec3) -> Vec3 {
        let r = self.radial_offset(x);
        self.axis_dir.cross(r) * (self.strength / r.norm_sq())
    }

    pub fn distance_from_axis(&self, x: Vec3) -> f64 {
        self.radial_offset(x).norm()
    }
}

/// ‖e_φ/ρ‖²_{L²(Ω)} for the unperturbed solid torus: 4π²(R0 − √(R0² − a²)).
pub fn unit_gamma_norm_sq_closed_form(major_radius: f64, minor_radius: f64) -> f64 {
    4.0 * PI * PI * (major_radius - (major_radius * major_radius - minor_radius * minor_radius).sqrt())
}

const NORM_COUNTS: ProbeCounts = ProbeCounts {
    radial: 24,
    poloidal: 64,
    toroidal: 64,
};

/// ‖c·e_φ/ρ‖²_{L²(Ω)} about the axis of `surface`. Closed form when the shape is an
/// exact torus (any pose), volume quadrature otherwise.
pub fn gamma_l2_volume_norm(surface: &TorusSurface, strength: f64) -> Result<f64> {
    surface.validate()?;
    if !surface.is_perturbed() {
        return Ok(strength * strength * unit_gamma_norm_sq_closed_form(surface.major_radius, surface.minor_radius));
    }
    gamma_l2_volume_norm_quadrature(surface, strength)
}

/// Volume-quadrature evaluation of the same norm, used for perturbed shapes and as a cross-check.
pub fn gamma_l2_volume_norm_quadrature(surface: &TorusSurface, strength: f64) -> Result<f64> {
    let q = solid_quadrature(surface, 1.0, NORM_COUNTS)?;
    let field = HarmonicNeumannField::about(surface, strength);
    Ok(q
        .points
        .iter()
        .zip(&q.weights)
        .map(|(&x, w)| field.eval(x).norm_sq() * w)
        .sum())
}

/// Harmonic Neumann field of `surface` scaled to unit L²(Ω) norm.
pub fn normalize_gamma(surface: &TorusSurface) -> Result<HarmonicNeumannField> {
    let norm_sq = gamma_l2_volume_norm(surface, 1.0)?;
    Ok(HarmonicNeumannField::about(surface, 1.0 / norm_sq.sqrt()))
}
