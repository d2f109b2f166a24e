//! Regularized least squares min_c ‖A c − b‖²_W + λ cᵀMc and λ sweeps.
//!
//! With M = LLᵀ and B = W^{1/2} A L^{−T} = UΣVᵀ, the minimizer is
//! c = L^{−T} V z with z_i = σ_i β_i/(σ_i² + λ), β = Uᵀ W^{1/2} b. The SVD is
//! computed once per problem; every λ is then a diagonal solve, and the
//! residual and current norms are evaluated termwise from the spectrum.

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};
use serde::Serialize;

use crate::basis::CurrentCoefficients;
use crate::biot_savart::{field_metrics, ClusterSamples, ForwardMap};
use crate::error::{ensure_len, Error, Result};
use crate::probes::FdClusters;
use crate::vec3::Vec3;

/// Relative tolerance used when flagging monotonicity violations in a sweep.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Forward map on the stencil points of FD clusters, for C¹ errors.
#[derive(Debug, Clone)]
pub struct ClusterData {
    pub clusters: FdClusters,
    pub matrix: Mat<f64>,
    pub target: Vec<Vec3>,
}

#[derive(Debug, Clone)]
pub struct InverseProblem {
    a: Mat<f64>,
    row_weights: Vec<f64>,
    mass: Mat<f64>,
    target: Vec<f64>,
    clusters: Option<ClusterData>,
}

fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| p.to_array()).collect()
}

fn to_points(v: &[f64]) -> Vec<Vec3> {
    v.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

impl InverseProblem {
    pub fn new(a: Mat<f64>, row_weights: Vec<f64>, mass: Mat<f64>, target: Vec<f64>) -> Result<Self> {
        ensure_len(a.nrows(), row_weights.len())?;
        ensure_len(a.nrows(), target.len())?;
        ensure_len(a.ncols(), mass.nrows())?;
        ensure_len(a.ncols(), mass.ncols())?;
        if !a.nrows().is_multiple_of(3) {
            return Err(Error::InvalidArgument("forward map rows must come in triples".into()));
        }
        if row_weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("probe weights must be positive".into()));
        }
        let n = mass.nrows();
        for i in 0..n {
            for j in 0..i {
                let (x, y) = (mass[(i, j)], mass[(j, i)]);
                if (x - y).abs() > 1e-12 * (x.abs() + y.abs()).max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidArgument("mass matrix is not symmetric".into()));
                }
            }
        }
        Ok(InverseProblem {
            a,
            row_weights,
            mass,
            target,
            clusters: None,
        })
    }

    pub fn from_forward(forward: &ForwardMap, mass: Mat<f64>, target: &[Vec3]) -> Result<Self> {
        ensure_len(forward.probes().len(), target.len())?;
        InverseProblem::new(forward.matrix().clone(), forward.row_weights(), mass, flatten(target))
    }

    /// Attach FD clusters (forward map and target on their stencil points).
    pub fn with_clusters(mut self, clusters: FdClusters, forward: &ForwardMap, target: &[Vec3]) -> Result<Self> {
        ensure_len(self.a.ncols(), forward.n_basis())?;
        ensure_len(clusters.points().len(), forward.probes().len())?;
        ensure_len(forward.probes().len(), target.len())?;
        self.clusters = Some(ClusterData {
            clusters,
            matrix: forward.matrix().clone(),
            target: target.to_vec(),
        });
        Ok(self)
    }

    pub fn n_basis(&self) -> usize {
        self.a.ncols()
    }

    pub fn forward_matrix(&self) -> &Mat<f64> {
        &self.a
    }

    pub fn mass(&self) -> &Mat<f64> {
        &self.mass
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// ‖B_T‖²_{L²(P)} in probe quadrature.
    pub fn target_norm_sq(&self) -> f64 {
        self.target.iter().zip(&self.row_weights).map(|(b, w)| w * b * b).sum()
    }

    fn apply(&self, m: &Mat<f64>, c: &[f64]) -> Vec<f64> {
        let cm = Mat::from_fn(c.len(), 1, |i, _| c[i]);
        let y = m * &cm;
        (0..m.nrows()).map(|i| y[(i, 0)]).collect()
    }

    /// Weighted L² residual norm squared of c, evaluated directly.
    pub fn residual_sq(&self, c: &[f64]) -> f64 {
        let ac = self.apply(&self.a, c);
        ac.iter()
            .zip(&self.target)
            .zip(&self.row_weights)
            .map(|((x, b), w)| w * (x - b) * (x - b))
            .sum()
    }

    /// cᵀMc evaluated directly.
    pub fn current_sq(&self, c: &[f64]) -> f64 {
        let mc = self.apply(&self.mass, c);
        c.iter().zip(&mc).map(|(a, b)| a * b).sum()
    }

    pub fn factorize(&self) -> Result<TikhonovSolver<'_>> {
        TikhonovSolver::new(self)
    }
}

/// One λ point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub objective: f64,
    pub residual_l2_sq: f64,
    pub current_l2_sq: f64,
    pub bound_ratio: f64,
    pub c0_error: f64,
    /// NaN when the problem carries no FD clusters.
    pub c1_error: f64,
}

#[derive(Debug, Clone)]
pub struct TikhonovSolution {
    pub coefficients: CurrentCoefficients,
    pub record: SweepRecord,
    /// Relative first-order optimality residual of the returned coefficients.
    pub optimality: f64,
    /// Condition number of AᵀWA + λM relative to M.
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub solutions: Vec<TikhonovSolution>,
    /// Indices where C(λ) increased as λ decreased (beyond rounding).
    pub objective_violations: Vec<usize>,
    /// Indices where ‖j_λ‖² decreased as λ decreased (beyond rounding).
    pub current_violations: Vec<usize>,
}

impl SweepResult {
    pub fn is_monotone(&self) -> bool {
        self.objective_violations.is_empty() && self.current_violations.is_empty()
    }

    pub fn max_optimality(&self) -> f64 {
        self.solutions.iter().map(|s| s.optimality).fold(0.0, f64::max)
    }
}

/// SVD-based factorization of an [`InverseProblem`].
pub struct TikhonovSolver<'a> {
    problem: &'a InverseProblem,
    chol: Mat<f64>,
    sigma: Vec<f64>,
    v: Mat<f64>,
    beta: Vec<f64>,
    perp_sq: f64,
    mass_norm: f64,
    /// ‖W^{1/2}A‖₂.
    weighted_norm: f64,
}

impl<'a> TikhonovSolver<'a> {
    fn new(problem: &'a InverseProblem) -> Result<Self> {
        let nb = problem.n_basis();
        let rows = problem.a.nrows();
        let llt = problem
            .mass
            .llt(Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("mass matrix is not positive definite: {e:?}")))?;
        let chol = llt.L().to_owned();
        let sw: Vec<f64> = problem.row_weights.iter().map(|w| w.sqrt()).collect();
        // Y = L⁻¹ (W^{1/2} A)ᵀ, so B = Yᵀ.
        let mut y = Mat::from_fn(nb, rows, |k, r| sw[r] * problem.a[(r, k)]);
        solve_lower_triangular_in_place(chol.as_ref(), y.as_mut(), Par::Seq);
        let b = y.transpose().to_owned();
        let svd = b
            .thin_svd()
            .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
        let u = svd.U();
        let sigma: Vec<f64> = svd.S().column_vector().iter().copied().collect();
        let wb: Vec<f64> = (0..rows).map(|r| sw[r] * problem.target[r]).collect();
        let beta: Vec<f64> = (0..sigma.len())
            .map(|i| (0..rows).map(|r| u[(r, i)] * wb[r]).sum())
            .collect();
        let perp_sq = (0..rows)
            .map(|r| {
                let proj: f64 = (0..sigma.len()).map(|i| u[(r, i)] * beta[i]).sum();
                let d = wb[r] - proj;
                d * d
            })
            .sum();
        let sa = Mat::from_fn(rows, nb, |r, k| sw[r] * problem.a[(r, k)]);
        let weighted_norm = sa
            .singular_values()
            .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?
            .first()
            .copied()
            .unwrap_or(0.0);
        let mass_norm = problem
            .mass
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(TikhonovSolver {
            problem,
            chol,
            sigma,
            v: svd.V().to_owned(),
            beta,
            perp_sq,
            mass_norm,
            weighted_norm,
        })
    }

    /// Singular values of W^{1/2} A M^{−1/2}, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// Basis coefficients L^{−T}v_k of the k-th right singular vector (M-normalized).
    pub fn singular_coefficients(&self, k: usize) -> Result<CurrentCoefficients> {
        if k >= self.sigma.len() {
            return Err(Error::InvalidArgument(format!("singular index {k} out of range")));
        }
        let nb = self.problem.n_basis();
        let mut c = Mat::from_fn(nb, 1, |i, _| self.v[(i, k)]);
        solve_upper_triangular_in_place(self.chol.transpose(), c.as_mut(), Par::Seq);
        Ok(CurrentCoefficients((0..nb).map(|i| c[(i, 0)]).collect()))
    }

    /// ‖AᵀWA‖₂.
    pub fn normal_norm(&self) -> f64 {
        self.weighted_norm * self.weighted_norm
    }

    /// First-order optimality residual ‖AᵀW(Ac − b) + λMc‖ relative to the
    /// size of the terms forming it, ‖W^{1/2}A‖(‖W^{1/2}Ac‖ + ‖W^{1/2}b‖) + λ‖M‖‖c‖.
    pub fn optimality_residual(&self, c: &[f64], lambda: f64) -> f64 {
        let p = self.problem;
        let ac = p.apply(&p.a, c);
        let wr: Vec<f64> = (0..ac.len()).map(|i| p.row_weights[i] * (ac[i] - p.target[i])).collect();
        let g1 = p.a.transpose() * &Mat::from_fn(wr.len(), 1, |i, _| wr[i]);
        let mc = p.apply(&p.mass, c);
        let grad = (0..c.len())
            .map(|i| {
                let g = g1[(i, 0)] + lambda * mc[i];
                g * g
            })
            .sum::<f64>()
            .sqrt();
        let wnorm = |v: &[f64]| v.iter().zip(&p.row_weights).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
        let c_norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = self.weighted_norm * (wnorm(&ac) + wnorm(&p.target)) + lambda * self.mass_norm * c_norm;
        if scale == 0.0 {
            0.0
        } else {
            grad / scale
        }
    }

    pub fn mass_norm(&self) -> f64 {
        self.mass_norm
    }

    /// Default grid: `points` log-spaced values over [1e-10, 1e2]·‖AᵀWA‖/‖M‖, descending.
    pub fn default_lambda_grid(&self, points: usize) -> Vec<f64> {
        let scale = self.normal_norm() / self.mass_norm;
        log_grid(1e2 * scale, 1e-10 * scale, points)
    }

    fn spectral_parts(&self, lambda: f64) -> (Vec<f64>, f64, f64) {
        let mut z = Vec::with_capacity(self.sigma.len());
        let mut residual = 0.0;
        let mut current = 0.0;
        for (&s, &b) in self.sigma.iter().zip(&self.beta) {
            let s2 = s * s;
            // Written so each term is monotone in λ under rounding.
            let shrink = 1.0 / (1.0 + s2 / lambda);
            let zi = s * b / (s2 + lambda);
            let ri = shrink * b;
            z.push(zi);
            residual += ri * ri;
            current += zi * zi;
        }
        (z, residual + self.perp_sq, current)
    }

    pub fn solve_lambda(&self, lambda: f64) -> Result<TikhonovSolution> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("λ must be positive, got {lambda}")));
        }
        let (z, residual, current) = self.spectral_parts(lambda);
        let nb = self.problem.n_basis();
        let mut c = Mat::from_fn(nb, 1, |k, _| (0..z.len()).map(|i| self.v[(k, i)] * z[i]).sum());
        solve_upper_triangular_in_place(self.chol.transpose(), c.as_mut(), Par::Seq);
        let coeffs: Vec<f64> = (0..nb).map(|k| c[(k, 0)]).collect();
        let objective = residual + lambda * current;
        let (c0, c1) = self.field_errors(&coeffs)?;
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        let smin = self.sigma.last().copied().unwrap_or(0.0);
        Ok(TikhonovSolution {
            optimality: self.optimality_residual(&coeffs, lambda),
            condition: (smax * smax + lambda) / (smin * smin + lambda),
            coefficients: CurrentCoefficients(coeffs),
            record: SweepRecord {
                lambda,
                objective,
                residual_l2_sq: residual,
                current_l2_sq: current,
                bound_ratio: lambda * current / objective,
                c0_error: c0,
                c1_error: c1,
            },
        })
    }

    fn field_errors(&self, c: &[f64]) -> Result<(f64, f64)> {
        let p = self.problem;
        let ac = to_points(&p.apply(&p.a, c));
        let target = to_points(&p.target);
        let probes = crate::probes::ProbeSet::unweighted(vec![Vec3::ZERO; ac.len()]);
        let c0 = field_metrics(&ac, &target, &probes, None)?.c0_error;
        let c1 = match &p.clusters {
            None => f64::NAN,
            Some(cd) => {
                let computed = to_points(&p.apply(&cd.matrix, c));
                let centers = crate::probes::ProbeSet::unweighted(vec![Vec3::ZERO; ac.len()]);
                field_metrics(
                    &ac,
                    &target,
                    &centers,
                    Some(ClusterSamples {
                        clusters: &cd.clusters,
                        computed: &computed,
                        target: &cd.target,
                    }),
                )?
                .c1_error
                .unwrap_or(f64::NAN)
            }
        };
        Ok((c0, c1))
    }

    /// Solve at every λ of a strictly positive, descending grid.
    pub fn sweep(&self, lambdas: &[f64]) -> Result<SweepResult> {
        if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("λ grid must be strictly positive".into()));
        }
        if lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("λ grid must be strictly descending".into()));
        }
        let solutions = lambdas
            .iter()
            .map(|&l| self.solve_lambda(l))
            .collect::<Result<Vec<_>>>()?;
        let records: Vec<SweepRecord> = solutions.iter().map(|s| s.record).collect();
        let mut objective_violations = Vec::new();
        let mut current_violations = Vec::new();
        for k in 1..records.len() {
            let (prev, cur) = (&records[k - 1], &records[k]);
            if cur.objective > prev.objective * (1.0 + MONOTONE_TOL) {
                objective_violations.push(k);
            }
            if cur.current_l2_sq < prev.current_l2_sq * (1.0 - MONOTONE_TOL) {
                current_violations.push(k);
            }
        }
        Ok(SweepResult {
            records,
            solutions,
            objective_violations,
            current_violations,
        })
    }
}

/// `points` values log-spaced from `start` down (or up) to `end`, endpoints included.
pub fn log_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), end.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Reference solution of the regularized problem via dense normal equations.
pub fn normal_equations_solve(problem: &InverseProblem, lambda: f64) -> Result<Vec<f64>> {
    let nb = problem.n_basis();
    let w = &problem.row_weights;
    let a = &problem.a;
    let wa = Mat::from_fn(a.nrows(), nb, |r, k| w[r] * a[(r, k)]);
    let n = a.transpose() * &wa;
    let lhs = Mat::from_fn(nb, nb, |i, j| n[(i, j)] + lambda * problem.mass[(i, j)]);
    let wb = Mat::from_fn(a.nrows(), 1, |r, _| w[r] * problem.target[r]);
    let rhs = a.transpose() * &wb;
    let x = lhs.partial_piv_lu().solve(&rhs);
    Ok((0..nb).map(|k| x[(k, 0)]).collect())
}
