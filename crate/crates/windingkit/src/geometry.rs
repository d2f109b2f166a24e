//! Toroidal surfaces, rigid poses and uniform periodic grids.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::spectral;
use crate::vec3::Vec3;

const ORTHONORMAL_TOL: f64 = 1e-12;

/// Rigid motion x ↦ R·x + t with R a proper rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: Vec3::ZERO,
        }
    }

    pub fn new(rotation: [[f64; 3]; 3], translation: Vec3) -> Result<Self> {
        let pose = Pose {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    /// Rotation by `angle` about the unit direction `axis` (Rodrigues), followed by `translation`.
    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Result<Self> {
        let len = axis.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidGeometry("rotation axis must be nonzero".into()));
        }
        let k = axis / len;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let rotation = [
            [c + k.x * k.x * t, k.x * k.y * t - k.z * s, k.x * k.z * t + k.y * s],
            [k.y * k.x * t + k.z * s, c + k.y * k.y * t, k.y * k.z * t - k.x * s],
            [k.z * k.x * t - k.y * s, k.z * k.y * t + k.x * s, c + k.z * k.z * t],
        ];
        Pose::new(rotation, translation)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if !dot.is_finite() || (dot - expect).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidGeometry(format!(
                        "pose rotation is not orthonormal (row {i}·row {j} = {dot})"
                    )));
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidGeometry(format!(
                "pose rotation has determinant {det}, expected +1"
            )));
        }
        let t = self.translation;
        if !(t.x.is_finite() && t.y.is_finite() && t.z.is_finite()) {
            return Err(Error::InvalidGeometry("pose translation is not finite".into()));
        }
        Ok(())
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn rotate_inverse(&self, v: Vec3) -> Vec3 {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * v.x + r[1][0] * v.y + r[2][0] * v.z,
            r[0][1] * v.x + r[1][1] * v.y + r[2][1] * v.z,
            r[0][2] * v.x + r[1][2] * v.y + r[2][2] * v.z,
        )
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotate(p) + self.translation
    }

    pub fn apply_inverse(&self, p: Vec3) -> Vec3 {
        self.rotate_inverse(p - self.translation)
    }

    /// The pose `self ∘ inner`.
    pub fn compose(&self, inner: &Pose) -> Pose {
        let mut rotation = [[0.0; 3]; 3];
        for (i, row) in rotation.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.rotation[i][k] * inner.rotation[k][j]).sum();
            }
        }
        Pose {
            rotation,
            translation: self.apply(inner.translation),
        }
    }
}

/// Shape mode `amplitude·cos(mθ − nφ)` added to the minor radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMode {
    pub m: i32,
    pub n: i32,
    pub amplitude: f64,
}

/// A (possibly perturbed, possibly posed) torus
/// x(θ,φ) = pose(((R0 + r cosθ)cosφ, (R0 + r cosθ)sinφ, r sinθ)), r = a + Σ amp·cos(mθ − nφ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSurface {
    pub major_radius: f64,
    pub minor_radius: f64,
    #[serde(default)]
    pub perturbation: Vec<ShapeMode>,
    #[serde(default)]
    pub pose: Pose,
}

/// Position and coordinate tangents at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFrame {
    pub position: Vec3,
    pub d_theta: Vec3,
    pub d_phi: Vec3,
}

/// Tube coordinates of a point relative to a torus: distance from the
/// circular core, poloidal angle and toroidal angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeCoords {
    pub radius: f64,
    pub theta: f64,
    pub phi: f64,
}

impl TorusSurface {
    pub fn new(major_radius: f64, minor_radius: f64) -> Result<Self> {
        let s = TorusSurface {
            major_radius,
            minor_radius,
            perturbation: Vec::new(),
            pose: Pose::identity(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_perturbation(mut self, modes: Vec<ShapeMode>) -> Result<Self> {
        self.perturbation = modes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_pose(mut self, pose: Pose) -> Result<Self> {
        self.pose = pose;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (r0, a) = (self.major_radius, self.minor_radius);
        if !(r0.is_finite() && a.is_finite() && a > 0.0 && r0 > a) {
            return Err(Error::InvalidGeometry(format!(
                "need R0 > a > 0, got R0 = {r0}, a = {a}"
            )));
        }
        let total: f64 = self.perturbation.iter().map(|m| m.amplitude.abs()).sum();
        if !total.is_finite() || a + total >= r0 || a - total <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "perturbation amplitudes (Σ|amp| = {total}) must keep 0 < r < R0"
            )));
        }
        self.pose.validate()
    }

    pub fn is_perturbed(&self) -> bool {
        self.perturbation.iter().any(|m| m.amplitude != 0.0)
    }

    /// True when the shape is invariant under rotation about its own axis.
    pub fn is_axisymmetric(&self) -> bool {
        self.perturbation
            .iter()
            .all(|m| m.n == 0 || m.amplitude == 0.0)
    }

    /// Symmetry axis in world coordinates as (point, unit direction).
    pub fn axis(&self) -> (Vec3, Vec3) {
        (self.pose.translation, self.pose.rotate(Vec3::Z))
    }

    /// Minor radius r(θ,φ) and its partial derivatives.
    pub fn radial(&self, theta: f64, phi: f64) -> (f64, f64, f64) {
        let mut r = self.minor_radius;
        let (mut r_t, mut r_p) = (0.0, 0.0);
        for mode in &self.perturbation {
            let arg = mode.m as f64 * theta - mode.n as f64 * phi;
            let (s, c) = arg.sin_cos();
            r += mode.amplitude * c;
            r_t -= mode.amplitude * mode.m as f64 * s;
            r_p += mode.amplitude * mode.n as f64 * s;
        }
        (r, r_t, r_p)
    }

    /// Point of the solid torus at scaled tube radius `s·r(θ,φ)` in local coordinates,
    /// with the three partial derivatives in (s, θ, φ).
    pub(crate) fn solid_local(&self, s: f64, theta: f64, phi: f64) -> [Vec3; 4] {
        let (r, r_t, r_p) = self.radial(theta, phi);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let e_r = Vec3::new(cp, sp, 0.0);
        let e_p = Vec3::new(-sp, cp, 0.0);
        let radial_dir = e_r * ct + Vec3::Z * st;
        let poloidal_dir = e_r * (-st) + Vec3::Z * ct;
        let rho = self.major_radius + s * r * ct;
        let x = e_r * rho + Vec3::Z * (s * r * st);
        let d_s = radial_dir * r;
        let d_t = radial_dir * (s * r_t) + poloidal_dir * (s * r);
        let d_p = radial_dir * (s * r_p) + e_p * rho;
        [x, d_s, d_t, d_p]
    }

    pub fn point(&self, theta: f64, phi: f64) -> Vec3 {
        self.frame(theta, phi).position
    }

    pub fn frame(&self, theta: f64, phi: f64) -> SurfaceFrame {
        let [x, _, d_t, d_p] = self.solid_local(1.0, theta, phi);
        SurfaceFrame {
            position: self.pose.apply(x),
            d_theta: self.pose.rotate(d_t),
            d_phi: self.pose.rotate(d_p),
        }
    }

    pub fn tube_coords(&self, p: Vec3) -> TubeCoords {
        let q = self.pose.apply_inverse(p);
        let rho = q.x.hypot(q.y);
        let phi = q.y.atan2(q.x);
        let d = rho - self.major_radius;
        TubeCoords {
            radius: d.hypot(q.z),
            theta: q.z.atan2(d),
            phi,
        }
    }

    /// Positive inside, negative outside: the radial gap r(θ,φ) − |tube offset|.
    /// Cross-sections are star-shaped about the core circle, so the sign is exact.
    pub fn radial_margin(&self, p: Vec3) -> f64 {
        let t = self.tube_coords(p);
        self.radial(t.theta, t.phi).0 - t.radius
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.radial_margin(p) > 0.0
    }

    /// Closed-form area 4π²R0a, valid without perturbation.
    pub fn unperturbed_area(&self) -> f64 {
        4.0 * PI * PI * self.major_radius * self.minor_radius
    }

    /// Closed-form volume 2π²R0a², valid without perturbation.
    pub fn unperturbed_volume(&self) -> f64 {
        2.0 * PI * PI * self.major_radius * self.minor_radius * self.minor_radius
    }

    fn fingerprint<H: Hasher>(&self, h: &mut H) {
        self.major_radius.to_bits().hash(h);
        self.minor_radius.to_bits().hash(h);
        for m in &self.perturbation {
            m.m.hash(h);
            m.n.hash(h);
            m.amplitude.to_bits().hash(h);
        }
        for row in &self.pose.rotation {
            for v in row {
                v.to_bits().hash(h);
            }
        }
        for k in 0..3 {
            self.pose.translation[k].to_bits().hash(h);
        }
    }
}

/// Identity of a grid; grid functions carry it so that mixing grids is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridKey(u64);

/// First fundamental form at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub g_tt: f64,
    pub g_tp: f64,
    pub g_pp: f64,
}

impl Metric {
    pub fn det(&self) -> f64 {
        self.g_tt * self.g_pp - self.g_tp * self.g_tp
    }

    /// Contravariant components (g^θθ, g^θφ, g^φφ).
    pub fn inverse(&self) -> (f64, f64, f64) {
        let d = self.det();
        (self.g_pp / d, -self.g_tp / d, self.g_tt / d)
    }
}

/// Uniform tensor grid on a torus with trapezoidal area weights.
/// Node (i, j) sits at θ_i = 2π(i+s)/n_θ, φ_j = 2π(j+s)/n_φ and has flat index i·n_φ + j.
#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    surface: TorusSurface,
    n_theta: usize,
    n_phi: usize,
    staggered: bool,
    key: GridKey,
    pub nodes: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub tangent_theta: Vec<Vec3>,
    pub tangent_phi: Vec<Vec3>,
    pub metric: Vec<Metric>,
    /// |∂_θx × ∂_φx| per node.
    pub jacobian: Vec<f64>,
    pub area_weights: Vec<f64>,
}

impl SurfaceGrid {
    pub fn build(surface: &TorusSurface, n_theta: usize, n_phi: usize, staggered: bool) -> Result<Self> {
        surface.validate()?;
        for (name, n) in [("n_theta", n_theta), ("n_phi", n_phi)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be even and at least 8, got {n}"
                )));
            }
        }
        let shift = if staggered { 0.5 } else { 0.0 };
        let (h_t, h_p) = (2.0 * PI / n_theta as f64, 2.0 * PI / n_phi as f64);
        let count = n_theta * n_phi;
        let mut grid = SurfaceGrid {
            surface: surface.clone(),
            n_theta,
            n_phi,
            staggered,
            key: GridKey(0),
            nodes: Vec::with_capacity(count),
            normals: Vec::with_capacity(count),
            tangent_theta: Vec::with_capacity(count),
            tangent_phi: Vec::with_capacity(count),
            metric: Vec::with_capacity(count),
            jacobian: Vec::with_capacity(count),
            area_weights: Vec::with_capacity(count),
        };
        for i in 0..n_theta {
            let theta = h_t * (i as f64 + shift);
            for j in 0..n_phi {
                let phi = h_p * (j as f64 + shift);
                let f = surface.frame(theta, phi);
                // ∂_θx × ∂_φx points into the solid, so the outward normal is the reverse.
                let c = f.d_phi.cross(f.d_theta);
                let jac = c.norm();
                grid.nodes.push(f.position);
                grid.normals.push(c / jac);
                grid.tangent_theta.push(f.d_theta);
                grid.tangent_phi.push(f.d_phi);
                grid.metric.push(Metric {
                    g_tt: f.d_theta.norm_sq(),
                    g_tp: f.d_theta.dot(f.d_phi),
                    g_pp: f.d_phi.norm_sq(),
                });
                grid.jacobian.push(jac);
                grid.area_weights.push(jac * h_t * h_p);
            }
        }
        let mut h = DefaultHasher::new();
        surface.fingerprint(&mut h);
        n_theta.hash(&mut h);
        n_phi.hash(&mut h);
        staggered.hash(&mut h);
        grid.key = GridKey(h.finish());
        Ok(grid)
    }

    pub fn surface(&self) -> &TorusSurface {
        &self.surface
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_staggered(&self) -> bool {
        self.staggered
    }

    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn steps(&self) -> (f64, f64) {
        (2.0 * PI / self.n_theta as f64, 2.0 * PI / self.n_phi as f64)
    }

    /// Parameter values (θ, φ) of node `idx`.
    pub fn angles(&self, idx: usize) -> (f64, f64) {
        let shift = if self.staggered { 0.5 } else { 0.0 };
        let (h_t, h_p) = self.steps();
        let (i, j) = (idx / self.n_phi, idx % self.n_phi);
        (h_t * (i as f64 + shift), h_p * (j as f64 + shift))
    }

    pub fn total_area(&self) -> f64 {
        self.area_weights.iter().sum()
    }

    /// Local grid spacing at a node: the longer of the two coordinate steps.
    pub fn spacing(&self, idx: usize) -> f64 {
        let (h_t, h_p) = self.steps();
        (self.metric[idx].g_tt.sqrt() * h_t).max(self.metric[idx].g_pp.sqrt() * h_p)
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.len()).map(|i| self.spacing(i)).fold(0.0, f64::max)
    }

    /// True if `x` is closer than `factor` local spacings to some node.
    pub fn violates_guard(&self, x: Vec3, factor: f64) -> bool {
        (0..self.len()).any(|i| (x - self.nodes[i]).norm() < factor * self.spacing(i))
    }

    pub fn nearest_node_distance(&self, x: Vec3) -> f64 {
        self.nodes
            .iter()
            .map(|&y| (x - y).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.area_weights)
            .map(|(v, w)| v * w)
            .sum()
    }

    pub fn scalar(&self, values: Vec<f64>) -> Result<ScalarGridFunction> {
        ensure_len(self.len(), values.len())?;
        Ok(ScalarGridFunction {
            key: self.key,
            values,
        })
    }

    pub fn scalar_from_fn(&self, f: impl Fn(f64, f64, Vec3) -> f64) -> ScalarGridFunction {
        let values = (0..self.len())
            .map(|idx| {
                let (t, p) = self.angles(idx);
                f(t, p, self.nodes[idx])
            })
            .collect();
        ScalarGridFunction {
            key: self.key,
            values,
        }
    }

    pub fn vector(&self, values: Vec<Vec3>) -> Result<VectorGridFunction> {
        ensure_len(self.len(), values.len())?;
        Ok(VectorGridFunction {
            key: self.key,
            values,
        })
    }

    pub fn zero_vector(&self) -> VectorGridFunction {
        VectorGridFunction {
            key: self.key,
            values: vec![Vec3::ZERO; self.len()],
        }
    }

    pub(crate) fn check(&self, key: GridKey) -> Result<()> {
        if key == self.key {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// L²(S) inner product of two vector fields on this grid.
    pub fn vector_inner(&self, a: &VectorGridFunction, b: &VectorGridFunction) -> Result<f64> {
        self.check(a.key)?;
        self.check(b.key)?;
        Ok(a
            .values
            .iter()
            .zip(&b.values)
            .zip(&self.area_weights)
            .map(|((u, v), w)| u.dot(*v) * w)
            .sum())
    }

    pub fn scalar_l2_norm(&self, f: &ScalarGridFunction) -> Result<f64> {
        self.check(f.key)?;
        Ok(f
            .values
            .iter()
            .zip(&self.area_weights)
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt())
    }

    /// Surface gradient ∇_S f = g^{ij} ∂_j f ∂_i x with spectral partial derivatives.
    pub fn surface_gradient(&self, f: &ScalarGridFunction) -> Result<VectorGridFunction> {
        self.check(f.key)?;
        if self.staggered {
            return Err(Error::InvalidArgument(
                "surface gradient requires a plain grid".into(),
            ));
        }
        let (d_t, d_p) = spectral::partial_derivatives(&f.values, self.n_theta, self.n_phi);
        let values = (0..self.len())
            .map(|i| self.gradient_from_partials(i, d_t[i], d_p[i]))
            .collect();
        Ok(VectorGridFunction {
            key: self.key,
            values,
        })
    }

    /// Tangent vector g^{ij} ∂_j f ∂_i x from the coordinate partials at a node.
    pub fn gradient_from_partials(&self, idx: usize, f_t: f64, f_p: f64) -> Vec3 {
        let (gi_tt, gi_tp, gi_pp) = self.metric[idx].inverse();
        let a = gi_tt * f_t + gi_tp * f_p;
        let b = gi_tp * f_t + gi_pp * f_p;
        self.tangent_theta[idx] * a + self.tangent_phi[idx] * b
    }
}

/// One scalar per node of a specific grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGridFunction {
    key: GridKey,
    pub values: Vec<f64>,
}

impl ScalarGridFunction {
    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn mean(&self, grid: &SurfaceGrid) -> Result<f64> {
        grid.check(self.key)?;
        Ok(grid.integrate(&self.values) / grid.total_area())
    }
}

/// One vector per node of a specific grid (typically a tangent surface current).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorGridFunction {
    key: GridKey,
    pub values: Vec<Vec3>,
}

impl VectorGridFunction {
    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn scaled(&self, s: f64) -> VectorGridFunction {
        VectorGridFunction {
            key: self.key,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &VectorGridFunction) -> Result<VectorGridFunction> {
        if self.key != other.key {
            return Err(Error::GridMismatch);
        }
        Ok(VectorGridFunction {
            key: self.key,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> TorusSurface {
        TorusSurface::new(3.0, 1.0).unwrap()
    }

    #[test]
    fn first_node_on_outer_equator() {
        let g = SurfaceGrid::build(&torus(), 16, 16, false).unwrap();
        assert!((g.nodes[0] - Vec3::new(4.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((g.normals[0] - Vec3::X).norm() < 1e-15);
    }

    #[test]
    fn area_matches_closed_form() {
        let s = torus();
        let g = SurfaceGrid::build(&s, 64, 64, false).unwrap();
        let rel = (g.total_area() - s.unperturbed_area()).abs() / s.unperturbed_area();
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn staggered_and_plain_areas_agree() {
        let s = torus()
            .with_perturbation(vec![ShapeMode { m: 2, n: 1, amplitude: 0.1 }])
            .unwrap();
        let a = SurfaceGrid::build(&s, 32, 32, false).unwrap().total_area();
        let b = SurfaceGrid::build(&s, 32, 32, true).unwrap().total_area();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn normals_are_unit_outward_and_orthogonal() {
        let s = torus();
        let g = SurfaceGrid::build(&s, 16, 24, false).unwrap();
        for i in 0..g.len() {
            let n = g.normals[i];
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert!(n.dot(g.tangent_theta[i]).abs() < 1e-10);
            assert!(n.dot(g.tangent_phi[i]).abs() < 1e-10);
            let (_, phi) = g.angles(i);
            let core = Vec3::new(3.0 * phi.cos(), 3.0 * phi.sin(), 0.0);
            assert!(n.dot(g.nodes[i] - core) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TorusSurface::new(1.0, 1.0).is_err());
        assert!(TorusSurface::new(3.0, -1.0).is_err());
        assert!(torus()
            .with_perturbation(vec![ShapeMode { m: 1, n: 0, amplitude: 1.5 }])
            .is_err());
        assert!(SurfaceGrid::build(&torus(), 6, 16, false).is_err());
        assert!(SurfaceGrid::build(&torus(), 16, 15, false).is_err());
        let bad = Pose {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
            translation: Vec3::ZERO,
        };
        assert!(torus().with_pose(bad).is_err());
    }

    #[test]
    fn gradient_of_sin_theta_has_analytic_magnitude() {
        let g = SurfaceGrid::build(&torus(), 64, 64, false).unwrap();
        let f = g.scalar_from_fn(|t, _, _| t.sin());
        let grad = g.surface_gradient(&f).unwrap();
        for i in 0..g.len() {
            let (t, _) = g.angles(i);
            assert!((grad.values[i].norm() - t.cos().abs()).abs() < 1e-8);
            assert!(grad.values[i].dot(g.normals[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = SurfaceGrid::build(&torus(), 16, 16, false).unwrap();
        let f = g.scalar(vec![1.0; g.len()]).unwrap();
        let grad = g.surface_gradient(&f).unwrap();
        assert!(grad.values.iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn foreign_grid_function_is_rejected() {
        let a = SurfaceGrid::build(&torus(), 16, 16, false).unwrap();
        let b = SurfaceGrid::build(&torus(), 16, 16, true).unwrap();
        let f = b.scalar(vec![0.0; b.len()]).unwrap();
        assert!(matches!(a.surface_gradient(&f), Err(Error::GridMismatch)));
    }

    #[test]
    fn contains_and_margin() {
        let s = torus();
        assert!(s.contains(Vec3::new(3.0, 0.0, 0.0)));
        assert!(!s.contains(Vec3::new(4.5, 0.0, 0.0)));
        assert!((s.radial_margin(Vec3::new(0.0, 3.5, 0.0)) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn axis_angle_pose_is_proper_rotation() {
        let p = Pose::from_axis_angle(Vec3::new(1.0, 2.0, -0.5), 0.7, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let v = Vec3::new(0.3, -1.0, 2.0);
        assert!((p.apply_inverse(p.apply(v)) - v).norm() < 1e-14);
    }
}
