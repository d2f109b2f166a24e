//! Explicit kernel current of the surface Biot-Savart operator on a solid torus.
//!
//! With Γ the normalized harmonic Neumann field of Ω, the pipeline is
//! F = S[BS_Ω(Γ)·N], g solving the interior Dirichlet trace (K + ½)g = F, and
//! j₀ = BS_Ω(Γ)×N − N×∇_S g, whose field vanishes inside Ω.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{CurrentBasis, CurrentCoefficients};
use crate::biot_savart::{bs_field, bs_volume_gamma_trace, ForwardMap, DEFAULT_GUARD};
use crate::error::{Error, Result};
use crate::geometry::{ScalarGridFunction, SurfaceGrid, VectorGridFunction};
use crate::layer::{self, Assembly, BoundaryOperator, OperatorSolver};
use crate::tikhonov::InverseProblem;
use crate::vec3::Vec3;
use crate::volume::{normalize_gamma, HarmonicNeumannField};

/// Relaxation parameters λ_n of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relaxation {
    Constant(f64),
    /// Explicit λ_0, λ_1, ...; the last entry repeats.
    Sequence(Vec<f64>),
}

impl Default for Relaxation {
    fn default() -> Self {
        Relaxation::Constant(1.0)
    }
}

impl Relaxation {
    pub fn validate(&self) -> Result<()> {
        let (all, tail) = match self {
            Relaxation::Constant(l) => (vec![*l], *l),
            Relaxation::Sequence(v) => match v.last() {
                Some(&t) => (v.clone(), t),
                None => return Err(Error::InvalidArgument("empty relaxation sequence".into())),
            },
        };
        if all.iter().any(|l| !(0.0..=2.0).contains(l)) {
            return Err(Error::InvalidArgument("relaxation parameters must lie in [0, 2]".into()));
        }
        // A repeated tail in (0, 2) makes Σ λ_n(2 − λ_n) diverge.
        if !(tail > 0.0 && tail < 2.0) {
            return Err(Error::InvalidArgument(
                "repeated relaxation parameter must lie in (0, 2)".into(),
            ));
        }
        Ok(())
    }

    pub fn at(&self, n: usize) -> f64 {
        match self {
            Relaxation::Constant(l) => *l,
            Relaxation::Sequence(v) => v[n.min(v.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FixedPointOptions {
    pub relaxation: Relaxation,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            relaxation: Relaxation::default(),
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// One step of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointState {
    pub iteration: usize,
    /// ‖g_{n+1} − g_n‖_{L²(∂Ω)}.
    pub residual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub g: ScalarGridFunction,
    pub history: Vec<FixedPointState>,
    pub converged: bool,
}

impl FixedPointResult {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.history.iter().map(|s| s.residual_norm).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DirectSolve {
    pub g: ScalarGridFunction,
    /// ‖(K + ½)g − F‖ / ‖F‖ in L²(∂Ω).
    pub relative_residual: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct KernelDiagnostics {
    pub kernel_residual: Option<f64>,
    pub pairing_value: f64,
    pub iterations_used: usize,
    pub fp_residual_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KernelSolution {
    pub g: ScalarGridFunction,
    pub j0: VectorGridFunction,
    pub j1: VectorGridFunction,
    pub diagnostics: KernelDiagnostics,
}

/// Operators and boundary data of the kernel construction on one grid.
pub struct KernelProblem {
    grid: Arc<SurfaceGrid>,
    gamma: HarmonicNeumannField,
    slp: BoundaryOperator,
    dlp: BoundaryOperator,
    bs_gamma: VectorGridFunction,
    normal_flux: ScalarGridFunction,
    f: ScalarGridFunction,
}

impl KernelProblem {
    /// Uses the unit-normalized harmonic Neumann field of the grid's surface.
    pub fn new(grid: Arc<SurfaceGrid>, assembly: Assembly) -> Result<Self> {
        let gamma = normalize_gamma(grid.surface())?;
        KernelProblem::with_gamma(grid, gamma, assembly)
    }

    pub fn with_gamma(grid: Arc<SurfaceGrid>, gamma: HarmonicNeumannField, assembly: Assembly) -> Result<Self> {
        if !grid.surface().is_axisymmetric() {
            return Err(Error::InvalidGeometry(
                "the harmonic Neumann field is only available for rotationally symmetric surfaces".into(),
            ));
        }
        if grid.is_staggered() {
            return Err(Error::InvalidArgument("kernel construction needs a plain grid".into()));
        }
        let slp = layer::single_layer_trace(&grid, assembly);
        let dlp = layer::double_layer_trace(&grid, assembly);
        let bs_gamma = bs_volume_gamma_trace(&gamma, &grid, &slp)?;
        let flux: Vec<f64> = bs_gamma
            .values
            .iter()
            .zip(&grid.normals)
            .map(|(b, n)| b.dot(*n))
            .collect();
        let normal_flux = grid.scalar(flux)?;
        let f = layer::apply_trace(&slp, &grid, &normal_flux)?;
        Ok(KernelProblem {
            grid,
            gamma,
            slp,
            dlp,
            bs_gamma,
            normal_flux,
            f,
        })
    }

    pub fn grid(&self) -> &Arc<SurfaceGrid> {
        &self.grid
    }

    pub fn gamma(&self) -> &HarmonicNeumannField {
        &self.gamma
    }

    pub fn single_layer(&self) -> &BoundaryOperator {
        &self.slp
    }

    pub fn double_layer(&self) -> &BoundaryOperator {
        &self.dlp
    }

    /// BS_Ω(Γ) at the grid nodes.
    pub fn bs_gamma(&self) -> &VectorGridFunction {
        &self.bs_gamma
    }

    /// BS_Ω(Γ)·N at the grid nodes.
    pub fn normal_flux(&self) -> &ScalarGridFunction {
        &self.normal_flux
    }

    /// F on the surface.
    pub fn boundary_data(&self) -> &ScalarGridFunction {
        &self.f
    }

    /// F at points off the surface.
    pub fn f_at(&self, points: &[Vec3]) -> Result<Vec<f64>> {
        layer::single_layer(&self.grid, &self.normal_flux, points)
    }

    pub fn factorize(&self) -> Result<OperatorSolver> {
        self.dlp.factorize()
    }

    /// Solve (K + ½)g = rhs by direct factorization.
    pub fn solve_trace(&self, solver: &OperatorSolver, rhs: &ScalarGridFunction) -> Result<DirectSolve> {
        self.grid.check(rhs.key())?;
        let g = self.grid.scalar(solver.solve(&rhs.values)?)?;
        let tg = self.dlp.apply(&g.values)?;
        let diff: Vec<f64> = tg.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        let num = self.grid.scalar_l2_norm(&self.grid.scalar(diff)?)?;
        let den = self.grid.scalar_l2_norm(rhs)?;
        Ok(DirectSolve {
            g,
            relative_residual: if den > 0.0 { num / den } else { num },
            condition: solver.condition(),
        })
    }

    pub fn solve_g_direct(&self) -> Result<DirectSolve> {
        let solver = self.factorize()?;
        self.solve_trace(&solver, &self.f)
    }

    /// One relaxed step g ↦ g + λ(F − (K + ½)g).
    pub fn fixed_point_step(&self, g: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let tg = self.dlp.apply(g)?;
        Ok(g.iter()
            .zip(&tg)
            .zip(&self.f.values)
            .map(|((x, t), f)| x + lambda * (f - t))
            .collect())
    }

    pub fn solve_g_fixed_point(&self, options: &FixedPointOptions) -> Result<FixedPointResult> {
        options.relaxation.validate()?;
        if !(options.tol > 0.0) {
            return Err(Error::InvalidArgument("fixed-point tolerance must be positive".into()));
        }
        let grid = &self.grid;
        let norm = |v: &[f64]| grid.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
        let mut g = vec![0.0; grid.len()];
        let mut history = Vec::new();
        let mut converged = false;
        for n in 0..options.max_iter {
            let next = self.fixed_point_step(&g, options.relaxation.at(n))?;
            let diff: Vec<f64> = next.iter().zip(&g).map(|(a, b)| a - b).collect();
            let r = norm(&diff);
            history.push(FixedPointState {
                iteration: n + 1,
                residual_norm: r,
            });
            g = next;
            if r <= options.tol * norm(&g) {
                converged = true;
                break;
            }
        }
        Ok(FixedPointResult {
            g: grid.scalar(g)?,
            history,
            converged,
        })
    }

    /// ∫_∂Ω j·Γ dσ.
    pub fn pairing(&self, j: &VectorGridFunction) -> Result<f64> {
        self.grid.check(j.key())?;
        let v: Vec<f64> = j
            .values
            .iter()
            .zip(&self.grid.nodes)
            .map(|(&ji, &x)| ji.dot(self.gamma.eval(x)))
            .collect();
        Ok(self.grid.integrate(&v))
    }

    /// N×∇_S g.
    pub fn rotated_gradient(&self, g: &ScalarGridFunction) -> Result<VectorGridFunction> {
        let grad = self.grid.surface_gradient(g)?;
        self.grid.vector(
            grad.values
                .iter()
                .zip(&self.grid.normals)
                .map(|(d, n)| n.cross(*d))
                .collect(),
        )
    }

    /// BS_Ω(Γ)×N.
    pub fn j1(&self) -> Result<VectorGridFunction> {
        self.grid.vector(
            self.bs_gamma
                .values
                .iter()
                .zip(&self.grid.normals)
                .map(|(b, n)| b.cross(*n))
                .collect(),
        )
    }

    pub fn assemble_j0(&self, g: &ScalarGridFunction) -> Result<KernelSolution> {
        let j1 = self.j1()?;
        let j0 = j1.add(&self.rotated_gradient(g)?.scaled(-1.0))?;
        let pairing_value = self.pairing(&j0)?;
        Ok(KernelSolution {
            g: g.clone(),
            j0,
            j1,
            diagnostics: KernelDiagnostics {
                pairing_value,
                ..KernelDiagnostics::default()
            },
        })
    }

    /// Largest value over smooth random pairs of (‖S(x)−S(y)‖²_E − ⟨x−y, S(x)−S(y)⟩_E)/‖x−y‖²_E,
    /// where S is one unrelaxed step and E is the single-layer energy inner product.
    /// Firm non-expansiveness holds when this is ≤ 0.
    pub fn firm_nonexpansiveness_gap(&self, pairs: usize, seed: u64) -> Result<f64> {
        let grid = &self.grid;
        let n = grid.len();
        let s = self.slp.to_dense();
        let energy = faer::Mat::from_fn(n, n, |i, k| {
            0.5 * (s[(i, k)] / grid.area_weights[k] + s[(k, i)] / grid.area_weights[i])
        });
        let lu = energy.partial_piv_lu();
        let inner = |u: &[f64], v: &[f64]| -> f64 {
            use faer::linalg::solvers::Solve;
            let rhs = faer::Mat::from_fn(n, 1, |i, _| v[i]);
            let x = lu.solve(&rhs);
            (0..n).map(|i| u[i] * x[(i, 0)]).sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..pairs {
            let x = smooth_random(grid, &mut rng);
            let y = smooth_random(grid, &mut rng);
            let sx = self.fixed_point_step(&x, 1.0)?;
            let sy = self.fixed_point_step(&y, 1.0)?;
            let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let sd: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();
            let gap = (inner(&sd, &sd) - inner(&d, &sd)) / inner(&d, &d);
            worst = worst.max(gap);
        }
        Ok(worst)
    }
}

const SMOOTH_MODES: i64 = 4;

fn smooth_random(grid: &SurfaceGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut terms = Vec::new();
    for m in -SMOOTH_MODES..=SMOOTH_MODES {
        for n in -SMOOTH_MODES..=SMOOTH_MODES {
            let amp: f64 = rng.random_range(-1.0..1.0) / (1 + m * m + n * n) as f64;
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            terms.push((m as f64, n as f64, amp, phase));
        }
    }
    (0..grid.len())
        .map(|i| {
            let (t, p) = grid.angles(i);
            terms
                .iter()
                .map(|&(m, n, a, ph)| a * (m * t - n * p + ph).cos())
                .sum()
        })
        .collect()
}

/// ‖(a − b) − mean(a − b)‖ / ‖b‖ in L²(∂Ω).
pub fn gauge_difference(grid: &SurfaceGrid, a: &ScalarGridFunction, b: &ScalarGridFunction) -> Result<f64> {
    grid.check(a.key())?;
    grid.check(b.key())?;
    let d: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let mean = grid.integrate(&d) / grid.total_area();
    let centered = grid.scalar(d.iter().map(|v| v - mean).collect())?;
    Ok(grid.scalar_l2_norm(&centered)? / grid.scalar_l2_norm(b)?)
}

/// max_p |BS(j₀)| / max_p |BS(j₁)| at probes clear of the near-surface guard.
pub fn verify_kernel(grid: &SurfaceGrid, solution: &KernelSolution, probes: &[Vec3]) -> Result<f64> {
    if let Some(p) = probes.iter().find(|&&x| grid.violates_guard(x, DEFAULT_GUARD)) {
        return Err(Error::InvalidArgument(format!(
            "probe {p:?} is too close to the surface for the trapezoid rule"
        )));
    }
    let b0 = bs_field(grid, &solution.j0, probes)?;
    let b1 = bs_field(grid, &solution.j1, probes)?;
    let max = |v: &[Vec3]| v.iter().map(|b| b.norm()).fold(0.0, f64::max);
    Ok(max(&b0) / max(&b1))
}

#[derive(Debug, Clone)]
pub struct NullspaceReport {
    /// Singular values of W^{1/2}AM^{−1/2}, descending.
    pub spectrum: Vec<f64>,
    /// σ_{n−2}/σ_{n−1}.
    pub gap_factor: f64,
    /// Number of consecutive ratios σ_k/σ_{k+1} that reach `threshold`.
    pub separated_count: usize,
    /// Index k of the largest ratio σ_k/σ_{k+1}.
    pub largest_gap_index: usize,
    pub null_coefficients: CurrentCoefficients,
    /// M-cosine between the smallest singular vector and the projection of j₀, when given.
    pub cosine: Option<f64>,
}

/// Spectrum and smallest singular vector of the weighted forward map.
pub fn nullspace_svd(
    basis: &CurrentBasis,
    forward: &ForwardMap,
    j0: Option<&VectorGridFunction>,
    threshold: f64,
) -> Result<NullspaceReport> {
    let a = forward.matrix();
    if (0..a.nrows()).any(|r| (0..a.ncols()).all(|k| a[(r, k)] == 0.0)) {
        return Err(Error::Singular("forward map has an identically zero row".into()));
    }
    let mass = basis.mass_matrix();
    let zero = vec![Vec3::ZERO; forward.probes().len()];
    let problem = InverseProblem::from_forward(forward, mass.clone(), &zero)?;
    let solver = problem.factorize()?;
    let spectrum = solver.singular_values().to_vec();
    let n = spectrum.len();
    if n < 2 {
        return Err(Error::InvalidArgument("basis needs at least two elements".into()));
    }
    let ratios: Vec<f64> = spectrum.windows(2).map(|w| w[0] / w[1]).collect();
    let largest_gap_index = ratios
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &r)| if r > acc.1 { (k, r) } else { acc })
        .0;
    let null_coefficients = solver.singular_coefficients(n - 1)?;
    let cosine = match j0 {
        None => None,
        Some(j) => {
            let p = basis.project(j)?;
            Some(m_cosine(&mass, &null_coefficients.0, &p.0))
        }
    };
    Ok(NullspaceReport {
        gap_factor: ratios[n - 2],
        separated_count: ratios.iter().filter(|&&r| r >= threshold).count(),
        largest_gap_index,
        spectrum,
        null_coefficients,
        cosine,
    })
}

fn m_cosine(mass: &faer::Mat<f64>, a: &[f64], b: &[f64]) -> f64 {
    let ip = |u: &[f64], v: &[f64]| -> f64 {
        (0..u.len())
            .map(|i| (0..v.len()).map(|k| u[i] * mass[(i, k)] * v[k]).sum::<f64>())
            .sum()
    };
    ip(a, b).abs() / (ip(a, a) * ip(b, b)).sqrt()
}
