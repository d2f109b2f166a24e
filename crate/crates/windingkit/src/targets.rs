//! Analytic harmonic target fields.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusSurface;
use crate::vec3::Vec3;
use crate::volume::{gamma_l2_volume_norm, HarmonicNeumannField};

pub const DEFAULT_LOOP_SEGMENTS: usize = 512;

fn default_strength() -> f64 {
    1.0
}

fn default_segments() -> usize {
    DEFAULT_LOOP_SEGMENTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetField {
    /// strength·e_φ/ρ about an axis line.
    AzimuthalWire {
        axis_point: Vec3,
        axis_dir: Vec3,
        #[serde(default = "default_strength")]
        strength: f64,
    },
    /// (x − x0)/|x − x0|³.
    PointSource { center: Vec3 },
    /// Filamentary loop by the trapezoid rule over `segments` points.
    CircularLoop {
        center: Vec3,
        axis: Vec3,
        radius: f64,
        current: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    /// Harmonic Neumann field of a rotationally symmetric plasma torus.
    PlasmaNeumann { field: HarmonicNeumannField },
}

impl TargetField {
    pub fn azimuthal_wire(axis_point: Vec3, axis_dir: Vec3) -> Result<Self> {
        let f = HarmonicNeumannField::new(axis_point, axis_dir, 1.0)?;
        Ok(TargetField::AzimuthalWire {
            axis_point: f.axis_point,
            axis_dir: f.axis_dir,
            strength: 1.0,
        })
    }

    pub fn point_source(center: Vec3) -> Self {
        TargetField::PointSource { center }
    }

    pub fn circular_loop(center: Vec3, axis: Vec3, radius: f64, current: f64) -> Result<Self> {
        let t = TargetField::CircularLoop {
            center,
            axis,
            radius,
            current,
            segments: DEFAULT_LOOP_SEGMENTS,
        };
        t.check_parameters()?;
        Ok(t)
    }

    /// Field c·e_φ/ρ about the plasma's own axis; unit L²(P) norm when `normalized`.
    pub fn plasma_neumann(plasma: &TorusSurface, normalized: bool) -> Result<Self> {
        if !plasma.is_axisymmetric() {
            return Err(Error::InvalidGeometry("plasma must be rotationally symmetric".into()));
        }
        let strength = if normalized {
            1.0 / gamma_l2_volume_norm(plasma, 1.0)?.sqrt()
        } else {
            1.0
        };
        Ok(TargetField::PlasmaNeumann {
            field: HarmonicNeumannField::about(plasma, strength),
        })
    }

    fn check_parameters(&self) -> Result<()> {
        match self {
            TargetField::AzimuthalWire { axis_dir, .. } if axis_dir.norm() == 0.0 => {
                Err(Error::InvalidArgument("axis direction must be nonzero".into()))
            }
            TargetField::CircularLoop {
                axis, radius, segments, ..
            } => {
                if axis.norm() == 0.0 || !(*radius > 0.0) || *segments < 3 {
                    Err(Error::InvalidArgument(
                        "loop needs a nonzero axis, positive radius and at least 3 segments".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Check that the singular set of the field misses the closed plasma and, for a
    /// point source, that the source lies inside the winding surface.
    pub fn validate(&self, cws: &TorusSurface, plasma: &TorusSurface) -> Result<()> {
        self.check_parameters()?;
        match self {
            TargetField::AzimuthalWire {
                axis_point, axis_dir, ..
            } => check_line_misses(plasma, *axis_point, *axis_dir),
            TargetField::PlasmaNeumann { field } => check_line_misses(plasma, field.axis_point, field.axis_dir),
            TargetField::PointSource { center } => {
                if !cws.contains(*center) {
                    Err(Error::InvalidGeometry(format!("point source {center:?} lies outside Ω")))
                } else if plasma.radial_margin(*center) >= 0.0 {
                    Err(Error::InvalidGeometry(format!("point source {center:?} lies in the plasma")))
                } else {
                    Ok(())
                }
            }
            TargetField::CircularLoop {
                center,
                axis,
                radius,
                segments,
                ..
            } => {
                if loop_points(*center, *axis, *radius, *segments)
                    .iter()
                    .any(|&(y, _)| plasma.radial_margin(y) >= 0.0)
                {
                    Err(Error::InvalidGeometry("loop passes through the plasma".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn eval(&self, x: Vec3) -> Vec3 {
        match self {
            TargetField::AzimuthalWire {
                axis_point,
                axis_dir,
                strength,
            } => HarmonicNeumannField {
                axis_point: *axis_point,
                axis_dir: axis_dir.normalized(),
                strength: *strength,
            }
            .eval(x),
            TargetField::PointSource { center } => {
                let d = x - *center;
                let r = d.norm();
                d / (r * r * r)
            }
            TargetField::CircularLoop {
                center,
                axis,
                radius,
                current,
                segments,
            } => {
                let pts = loop_points(*center, *axis, *radius, *segments);
                let mut acc = Vec3::ZERO;
                for (y, dl) in pts {
                    let d = x - y;
                    let r = d.norm();
                    acc += dl.cross(d) / (r * r * r);
                }
                acc * (*current / (4.0 * PI))
            }
            TargetField::PlasmaNeumann { field } => field.eval(x),
        }
    }

    pub fn sample(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.par_iter().map(|&x| self.eval(x)).collect()
    }
}

/// Loop nodes with their line elements dl.
fn loop_points(center: Vec3, axis: Vec3, radius: f64, segments: usize) -> Vec<(Vec3, Vec3)> {
    let n = axis.normalized();
    let helper = if n.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let u = n.cross(helper).normalized();
    let v = n.cross(u);
    let h = 2.0 * PI / segments as f64;
    (0..segments)
        .map(|k| {
            let (s, c) = (h * k as f64).sin_cos();
            (center + (u * c + v * s) * radius, (v * c - u * s) * (radius * h))
        })
        .collect()
}

fn check_line_misses(plasma: &TorusSurface, point: Vec3, dir: Vec3) -> Result<()> {
    let d = dir.normalized();
    let (center, _) = plasma.axis();
    let r_max = plasma.minor_radius + plasma.perturbation.iter().map(|m| m.amplitude.abs()).sum::<f64>();
    let r_min = (plasma.minor_radius - (r_max - plasma.minor_radius)).max(1e-3 * plasma.minor_radius);
    let reach = plasma.major_radius + r_max;
    // Closest approach of the line to the plasma centre, then scan the chord inside the bounding sphere.
    let t0 = (center - point).dot(d);
    let step = r_min / 32.0;
    let n = (2.0 * reach / step).ceil() as i64;
    for k in -n / 2..=n / 2 {
        let p = point + d * (t0 + step * k as f64);
        if plasma.radial_margin(p) >= 0.0 {
            return Err(Error::InvalidGeometry(format!("field axis meets the plasma near {p:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::probes::FdClusters;
    use crate::volume::gamma_l2_volume_norm_quadrature;

    fn harmonic_check(t: &TargetField, centers: Vec<Vec3>) {
        let cl = FdClusters::new(centers, 1e-4).unwrap();
        let vals = t.sample(&cl.points());
        for c in 0..cl.len() {
            let jac = cl.jacobian(&vals, c);
            let scale = jac.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            assert!(cl.divergence(&vals, c).abs() <= 1e-6 * scale);
            assert!(cl.curl(&vals, c).norm() <= 1e-6 * scale);
        }
    }

    fn probe_centers() -> Vec<Vec3> {
        (0..20)
            .map(|k| {
                let a = k as f64 * 0.7;
                Vec3::new(3.0 + 0.5 * a.cos(), 0.3 * a.sin(), 0.4 * (1.3 * a).cos())
            })
            .collect()
    }

    #[test]
    fn wire_values_and_circulation() {
        let t = TargetField::azimuthal_wire(Vec3::ZERO, Vec3::Z).unwrap();
        assert!((t.eval(Vec3::new(4.0, 0.0, 0.0)) - Vec3::new(0.0, 0.25, 0.0)).norm() < 1e-15);
        let n = 64;
        let circ: f64 = (0..n)
            .map(|k| {
                let p = 2.0 * PI * k as f64 / n as f64;
                let x = Vec3::new(4.0 * p.cos(), 4.0 * p.sin(), 0.0);
                let dl = Vec3::new(-p.sin(), p.cos(), 0.0) * (4.0 * 2.0 * PI / n as f64);
                t.eval(x).dot(dl)
            })
            .sum();
        assert!((circ - 2.0 * PI).abs() < 1e-12);
        harmonic_check(&t, probe_centers());
    }

    #[test]
    fn point_source_values_and_flux() {
        let x0 = Vec3::new(3.5, 0.0, 0.2);
        let t = TargetField::point_source(x0);
        let b = t.eval(x0 + Vec3::X * 2.0);
        assert!((b - Vec3::new(0.25, 0.0, 0.0)).norm() < 1e-15);
        // Flux through a small sphere by a product rule.
        let (nt, np) = (64, 64);
        let r = 0.05;
        let (z, w) = crate::probes::gauss_legendre(nt);
        let mut flux = 0.0;
        for (ct, wt) in z.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for j in 0..np {
                let p = 2.0 * PI * j as f64 / np as f64;
                let n = Vec3::new(st * p.cos(), st * p.sin(), *ct);
                flux += t.eval(x0 + n * r).dot(n) * r * r * wt * 2.0 * PI / np as f64;
            }
        }
        assert!((flux - 4.0 * PI).abs() < 1e-10);
        harmonic_check(&t, probe_centers());
    }

    #[test]
    fn point_source_placement_is_validated() {
        let cws = TorusSurface::new(3.0, 1.0).unwrap();
        let plasma = TorusSurface::new(3.0, 0.5).unwrap();
        assert!(TargetField::point_source(Vec3::new(3.7, 0.0, 0.0)).validate(&cws, &plasma).is_ok());
        assert!(TargetField::point_source(Vec3::new(3.2, 0.0, 0.0)).validate(&cws, &plasma).is_err());
        assert!(TargetField::point_source(Vec3::new(5.0, 0.0, 0.0)).validate(&cws, &plasma).is_err());
    }

    #[test]
    fn loop_matches_on_axis_formula_and_dipole_decay() {
        let (r, i) = (0.7, 2.0);
        let t = TargetField::circular_loop(Vec3::new(1.0, 2.0, 3.0), Vec3::Z, r, i).unwrap();
        for h in [0.0, 0.3, 1.5] {
            let b = t.eval(Vec3::new(1.0, 2.0, 3.0 + h));
            let exact = r * r * i / (2.0 * (r * r + h * h).powf(1.5));
            assert!((b.z - exact).abs() <= 1e-8 * exact);
            assert!(b.x.abs() + b.y.abs() <= 1e-8 * exact);
        }
        let zero = TargetField::circular_loop(Vec3::ZERO, Vec3::Z, r, 0.0).unwrap();
        assert_eq!(zero.eval(Vec3::new(0.3, 0.1, 0.2)), Vec3::ZERO);
        // On-axis dipole field m/(2π d³) with m = I·πr².
        let d = 50.0 * r;
        let b = t.eval(Vec3::new(1.0, 2.0, 3.0 + d)).z;
        let dipole = i * PI * r * r / (2.0 * PI * d * d * d);
        assert!((b - dipole).abs() <= 0.02 * dipole);
        harmonic_check(&t, probe_centers());
        assert!(TargetField::circular_loop(Vec3::ZERO, Vec3::ZERO, 1.0, 1.0).is_err());
    }

    #[test]
    fn plasma_field_is_tangent_and_normalized() {
        let pose = Pose::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.4, Vec3::new(3.0, 0.0, 0.0)).unwrap();
        let plasma = TorusSurface::new(0.4, 0.15).unwrap().with_pose(pose).unwrap();
        let t = TargetField::plasma_neumann(&plasma, true).unwrap();
        for k in 0..40 {
            let (th, ph) = (0.37 * k as f64, 0.91 * k as f64);
            let f = plasma.frame(th, ph);
            let n = f.d_phi.cross(f.d_theta).normalized();
            assert!(t.eval(f.position).dot(n).abs() <= 1e-12 * t.eval(f.position).norm());
        }
        let TargetField::PlasmaNeumann { field } = &t else { unreachable!() };
        let q = gamma_l2_volume_norm_quadrature(&plasma, field.strength).unwrap();
        assert!((q - 1.0).abs() <= 1e-6, "{q}");
        let raw = TargetField::plasma_neumann(&plasma, false).unwrap();
        let (c, axis) = plasma.axis();
        let u = axis.cross(Vec3::X).normalized();
        let v = axis.cross(u);
        let n = 128;
        let rad = 0.4;
        let circ: f64 = (0..n)
            .map(|k| {
                let p = 2.0 * PI * k as f64 / n as f64;
                let x = c + (u * p.cos() + v * p.sin()) * rad;
                let dl = (v * p.cos() - u * p.sin()) * (rad * 2.0 * PI / n as f64);
                raw.eval(x).dot(dl)
            })
            .sum();
        assert!((circ - 2.0 * PI).abs() < 1e-10, "{circ}");
        let cws = TorusSurface::new(3.0, 1.0).unwrap();
        assert!(t.validate(&cws, &plasma).is_ok());
    }

    #[test]
    fn axis_through_plasma_is_rejected() {
        let cws = TorusSurface::new(3.0, 1.0).unwrap();
        let plasma = TorusSurface::new(3.0, 0.5).unwrap();
        let through = TargetField::azimuthal_wire(Vec3::new(3.0, 0.0, 0.0), Vec3::Z).unwrap();
        assert!(through.validate(&cws, &plasma).is_err());
        let ok = TargetField::azimuthal_wire(Vec3::ZERO, Vec3::Z).unwrap();
        assert!(ok.validate(&cws, &plasma).is_ok());
    }

    #[test]
    fn self_metrics_vanish() {
        let t = TargetField::circular_loop(Vec3::ZERO, Vec3::X, 1.0, 1.0).unwrap();
        let pts = probe_centers();
        let b = t.sample(&pts);
        let probes = crate::probes::ProbeSet::unweighted(pts);
        let m = crate::biot_savart::field_metrics(&b, &b, &probes, None).unwrap();
        assert_eq!(m.residual_l2_sq, 0.0);
        assert_eq!(m.c0_error, 0.0);
    }
}
