//! Divergence-free surface currents j = N × ∇_S Φ from current potentials,
//! plus the two secular (net loop current) sheets of a genus-one surface.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::geometry::{ScalarGridFunction, SurfaceGrid, VectorGridFunction};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

/// Potential cos(mθ − nφ) or sin(mθ − nφ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FourierMode {
    pub m: i32,
    pub n: i32,
    pub parity: Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisElement {
    /// Potential −φ/2π: unit net current the short way round, field +e_φ/(2πρ) inside.
    SecularPoloidal,
    /// Potential −θ/2π: unit net current the long way round.
    SecularToroidal,
    Fourier(FourierMode),
}

impl BasisElement {
    /// (∂_θΦ, ∂_φΦ) of the element's potential.
    pub fn potential_partials(&self, theta: f64, phi: f64) -> (f64, f64) {
        match *self {
            BasisElement::SecularPoloidal => (0.0, -1.0 / (2.0 * PI)),
            BasisElement::SecularToroidal => (-1.0 / (2.0 * PI), 0.0),
            BasisElement::Fourier(FourierMode { m, n, parity }) => {
                let (m, n) = (m as f64, n as f64);
                let (s, c) = (m * theta - n * phi).sin_cos();
                match parity {
                    Parity::Cos => (-m * s, n * s),
                    Parity::Sin => (m * c, -n * c),
                }
            }
        }
    }
}

impl fmt::Display for BasisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisElement::SecularPoloidal => write!(f, "secular_poloidal"),
            BasisElement::SecularToroidal => write!(f, "secular_toroidal"),
            BasisElement::Fourier(FourierMode { m, n, parity }) => {
                let p = match parity {
                    Parity::Cos => "cos",
                    Parity::Sin => "sin",
                };
                write!(f, "{p}({m},{n})")
            }
        }
    }
}

fn default_true() -> bool {
    true
}

/// Mode cutoffs and secular flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub m_max: usize,
    pub n_max: usize,
    #[serde(default = "default_true")]
    pub secular_poloidal: bool,
    #[serde(default = "default_true")]
    pub secular_toroidal: bool,
}

impl BasisSpec {
    pub fn new(m_max: usize, n_max: usize) -> Self {
        BasisSpec {
            m_max,
            n_max,
            secular_poloidal: true,
            secular_toroidal: true,
        }
    }

    /// Elements in canonical order: secular first, then Fourier by (m, n, parity).
    pub fn elements(&self) -> Vec<BasisElement> {
        let mut out = Vec::new();
        if self.secular_poloidal {
            out.push(BasisElement::SecularPoloidal);
        }
        if self.secular_toroidal {
            out.push(BasisElement::SecularToroidal);
        }
        let n_max = self.n_max as i32;
        for m in 0..=self.m_max as i32 {
            for n in -n_max..=n_max {
                if m == 0 && n <= 0 {
                    continue;
                }
                for parity in [Parity::Cos, Parity::Sin] {
                    out.push(BasisElement::Fourier(FourierMode { m, n, parity }));
                }
            }
        }
        out
    }
}

/// Coefficients of a current in a [`CurrentBasis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentCoefficients(pub Vec<f64>);

impl CurrentCoefficients {
    pub fn zeros(n: usize) -> Self {
        CurrentCoefficients(vec![0.0; n])
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        CurrentCoefficients(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A finite current basis on a plain grid.
#[derive(Debug, Clone)]
pub struct CurrentBasis {
    grid: Arc<SurfaceGrid>,
    elements: Vec<BasisElement>,
}

impl CurrentBasis {
    pub fn new(grid: Arc<SurfaceGrid>, spec: &BasisSpec) -> Result<Self> {
        if grid.is_staggered() {
            return Err(Error::InvalidArgument("current basis requires a plain grid".into()));
        }
        if 2 * spec.m_max >= grid.n_theta() || 2 * spec.n_max >= grid.n_phi() {
            return Err(Error::InvalidArgument(format!(
                "mode cutoffs (m_max {}, n_max {}) must stay below half the grid size ({}×{})",
                spec.m_max,
                spec.n_max,
                grid.n_theta(),
                grid.n_phi()
            )));
        }
        Ok(CurrentBasis {
            grid,
            elements: spec.elements(),
        })
    }

    pub fn grid(&self) -> &Arc<SurfaceGrid> {
        &self.grid
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    fn current_of(&self, element: &BasisElement) -> Vec<Vec3> {
        let g = &*self.grid;
        (0..g.len())
            .map(|idx| {
                let (t, p) = g.angles(idx);
                let (f_t, f_p) = element.potential_partials(t, p);
                g.normals[idx].cross(g.gradient_from_partials(idx, f_t, f_p))
            })
            .collect()
    }

    pub fn basis_current(&self, index: usize) -> Result<VectorGridFunction> {
        let element = self.elements.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!("basis index {index} out of range (size {})", self.len()))
        })?;
        self.grid.vector(self.current_of(element))
    }

    pub fn synthesize(&self, coeffs: &CurrentCoefficients) -> Result<VectorGridFunction> {
        ensure_len(self.len(), coeffs.len())?;
        let g = &*self.grid;
        let values = (0..g.len())
            .map(|idx| {
                let (t, p) = g.angles(idx);
                let (mut f_t, mut f_p) = (0.0, 0.0);
                for (e, &c) in self.elements.iter().zip(&coeffs.0) {
                    if c != 0.0 {
                        let (a, b) = e.potential_partials(t, p);
                        f_t += c * a;
                        f_p += c * b;
                    }
                }
                g.normals[idx].cross(g.gradient_from_partials(idx, f_t, f_p))
            })
            .collect();
        g.vector(values)
    }

    /// Basis currents as the columns of a (3·nodes × len) matrix, rows scaled by `row_scale(node)`.
    fn current_matrix(&self, row_scale: impl Fn(usize) -> f64) -> Mat<f64> {
        let n = self.grid.len();
        let mut x = Mat::<f64>::zeros(3 * n, self.len());
        for (k, e) in self.elements.iter().enumerate() {
            for (idx, v) in self.current_of(e).into_iter().enumerate() {
                let s = row_scale(idx);
                for c in 0..3 {
                    x[(3 * idx + c, k)] = v[c] * s;
                }
            }
        }
        x
    }

    /// M_kl = ∫_S b_k · b_l dσ by grid quadrature.
    pub fn mass_matrix(&self) -> Mat<f64> {
        let w = &self.grid.area_weights;
        let x = self.current_matrix(|idx| w[idx].sqrt());
        let m = x.transpose() * &x;
        // Symmetrize exactly; the product is symmetric only up to rounding.
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// L²(S) projections ⟨b_k, j⟩ of a current onto each basis element.
    pub fn moments(&self, j: &VectorGridFunction) -> Result<Vec<f64>> {
        self.grid.check(j.key())?;
        let w = &self.grid.area_weights;
        Ok(self
            .elements
            .iter()
            .map(|e| {
                self.current_of(e)
                    .iter()
                    .zip(&j.values)
                    .zip(w)
                    .map(|((b, v), w)| b.dot(*v) * w)
                    .sum()
            })
            .collect())
    }

    /// Best L²(S) approximation of `j` in the span of the basis.
    pub fn project(&self, j: &VectorGridFunction) -> Result<CurrentCoefficients> {
        let rhs = self.moments(j)?;
        let m = self.mass_matrix();
        let llt = m
            .llt(faer::Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("mass matrix is not positive definite: {e:?}")))?;
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let c = llt.solve(&b);
        Ok(CurrentCoefficients((0..rhs.len()).map(|i| c[(i, 0)]).collect()))
    }
}

/// Net current crossing the toroidal circle θ = θ_i (the poloidal loop current),
/// oriented so that the secular poloidal element carries +1.
pub fn net_poloidal_current(grid: &SurfaceGrid, j: &VectorGridFunction, i_theta: usize) -> Result<f64> {
    grid.check(j.key())?;
    let (_, h_p) = grid.steps();
    let n_phi = grid.n_phi();
    Ok((0..n_phi)
        .map(|jj| {
            let idx = i_theta * n_phi + jj;
            j.values[idx].dot(grid.tangent_phi[idx].cross(grid.normals[idx]))
        })
        .sum::<f64>()
        * h_p)
}

/// Net current crossing the poloidal circle φ = φ_j (the toroidal loop current).
pub fn net_toroidal_current(grid: &SurfaceGrid, j: &VectorGridFunction, j_phi: usize) -> Result<f64> {
    grid.check(j.key())?;
    let (h_t, _) = grid.steps();
    let n_phi = grid.n_phi();
    Ok((0..grid.n_theta())
        .map(|i| {
            let idx = i * n_phi + j_phi;
            j.values[idx].dot(grid.tangent_theta[idx].cross(grid.normals[idx]))
        })
        .sum::<f64>()
        * h_t)
}

/// Weak surface divergence pairing ∫_S j · ∇_S φ dσ against a test function.
pub fn weak_divergence(grid: &SurfaceGrid, j: &VectorGridFunction, test: &ScalarGridFunction) -> Result<f64> {
    grid.check(j.key())?;
    let grad = grid.surface_gradient(test)?;
    grid.vector_inner(j, &grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TorusSurface;

    fn setup(n: usize, m_max: usize) -> CurrentBasis {
        let s = TorusSurface::new(3.0, 1.0).unwrap();
        let g = Arc::new(SurfaceGrid::build(&s, n, n, false).unwrap());
        CurrentBasis::new(g, &BasisSpec::new(m_max, m_max)).unwrap()
    }

    #[test]
    fn ordering_is_secular_then_lexicographic() {
        let e = BasisSpec::new(1, 1).elements();
        assert_eq!(e[0], BasisElement::SecularPoloidal);
        assert_eq!(e[1], BasisElement::SecularToroidal);
        let fourier: Vec<_> = e[2..]
            .iter()
            .map(|x| match x {
                BasisElement::Fourier(f) => *f,
                _ => panic!(),
            })
            .collect();
        assert!(fourier.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(fourier.len(), 2 * (1 + 3));
        assert!(!fourier.iter().any(|f| f.m == 0 && f.n <= 0));
    }

    #[test]
    fn secular_currents_carry_unit_loop_current() {
        let b = setup(32, 2);
        let g = b.grid().clone();
        let pol = b.basis_current(0).unwrap();
        let tor = b.basis_current(1).unwrap();
        for i in [0, 5, 17] {
            assert!((net_poloidal_current(&g, &pol, i).unwrap() - 1.0).abs() < 1e-10);
            assert!(net_poloidal_current(&g, &tor, i).unwrap().abs() < 1e-10);
            assert!((net_toroidal_current(&g, &tor, i).unwrap() - 1.0).abs() < 1e-10);
            assert!(net_toroidal_current(&g, &pol, i).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn fourier_currents_carry_no_loop_current_and_are_tangent() {
        let b = setup(32, 3);
        let g = b.grid().clone();
        for k in 0..b.len() {
            let j = b.basis_current(k).unwrap();
            assert!(j.values.iter().zip(&g.normals).all(|(v, n)| v.dot(*n).abs() < 1e-12));
            if k >= 2 {
                assert!(net_poloidal_current(&g, &j, 3).unwrap().abs() < 1e-10);
                assert!(net_toroidal_current(&g, &j, 7).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn out_of_range_index_and_cutoffs_are_rejected() {
        let b = setup(16, 2);
        assert!(b.basis_current(b.len()).is_err());
        let s = TorusSurface::new(3.0, 1.0).unwrap();
        let g = Arc::new(SurfaceGrid::build(&s, 16, 16, false).unwrap());
        assert!(CurrentBasis::new(g, &BasisSpec::new(8, 2)).is_err());
    }

    #[test]
    fn mass_matrix_reproduces_direct_norm() {
        let b = setup(24, 3);
        let m = b.mass_matrix();
        let c: Vec<f64> = (0..b.len()).map(|k| ((k * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let j = b.synthesize(&CurrentCoefficients(c.clone())).unwrap();
        let direct = b.grid().vector_inner(&j, &j).unwrap();
        let mut quad = 0.0;
        for k in 0..b.len() {
            for l in 0..b.len() {
                quad += c[k] * m[(k, l)] * c[l];
            }
        }
        assert!((quad - direct).abs() < 1e-12 * direct);
        for k in 0..b.len() {
            for l in 0..b.len() {
                assert_eq!(m[(k, l)], m[(l, k)]);
            }
        }
    }

    #[test]
    fn fourier_orthogonality_on_unperturbed_torus() {
        let b = setup(32, 3);
        let g = b.grid().clone();
        let m = b.mass_matrix();
        let mode = |k: usize| match b.elements()[k] {
            BasisElement::Fourier(f) => Some(f),
            _ => None,
        };
        for k in 0..b.len() {
            for l in 0..b.len() {
                let (Some(a), Some(c)) = (mode(k), mode(l)) else { continue };
                if a.n.abs() != c.n.abs() || (a.m == c.m && a.n == c.n && a.parity != c.parity) {
                    assert!(m[(k, l)].abs() < 1e-10, "{k} {l} {}", m[(k, l)]);
                }
                // Otherwise the metric factor ρ(θ) couples the modes; compare with
                // brute-force quadrature of ∇Φ·∇Ψ instead.
                let brute: f64 = (0..g.len())
                    .map(|idx| {
                        let (t, p) = g.angles(idx);
                        let (at, ap) = b.elements()[k].potential_partials(t, p);
                        let (ct, cp) = b.elements()[l].potential_partials(t, p);
                        let rho = 3.0 + t.cos();
                        (at * ct + ap * cp / (rho * rho)) * rho * g.steps().0 * g.steps().1
                    })
                    .sum();
                assert!((m[(k, l)] - brute).abs() < 1e-10, "{k} {l}");
            }
        }
    }

    #[test]
    fn projection_recovers_basis_combination() {
        let b = setup(24, 2);
        let c = CurrentCoefficients((0..b.len()).map(|k| (k as f64).sin()).collect());
        let j = b.synthesize(&c).unwrap();
        let p = b.project(&j).unwrap();
        for (x, y) in p.0.iter().zip(&c.0) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
