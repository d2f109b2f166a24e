//! Square operators on the nodes of one grid, stored densely or, for
//! rotationally symmetric grids, as a block-circulant generator in φ.

use std::sync::Arc;

use faer::c64;
use faer::linalg::solvers::PartialPivLu;
use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_len, Error, Result};
use crate::geometry::GridKey;

/// Block-circulant matrix: entry ((i,j),(i',j')) = gen[(i·n_θ + i')·n_φ + (j'−j mod n_φ)].
#[derive(Clone)]
pub(crate) struct Circulant {
    n_theta: usize,
    n_phi: usize,
    generator: Vec<f64>,
    /// Per toroidal harmonic ℓ, the n_θ×n_θ symbol Σ_d gen[i][i'][d] e^{+2πiℓd/n_φ}.
    symbols: Vec<Mat<c64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Circulant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Circulant")
            .field("n_theta", &self.n_theta)
            .field("n_phi", &self.n_phi)
            .finish()
    }
}

impl Circulant {
    pub(crate) fn new(n_theta: usize, n_phi: usize, generator: Vec<f64>) -> Self {
        assert_eq!(generator.len(), n_theta * n_theta * n_phi);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_phi);
        let inv = planner.plan_fft_inverse(n_phi);
        let mut spectra = vec![Complex64::new(0.0, 0.0); generator.len()];
        spectra
            .par_chunks_mut(n_phi)
            .zip(generator.par_chunks(n_phi))
            .for_each(|(out, row)| {
                for (o, &v) in out.iter_mut().zip(row) {
                    *o = Complex64::new(v, 0.0);
                }
                fwd.process(out);
            });
        // Conjugate: the symbol uses e^{+2πiℓd/n}.
        let symbols = (0..n_phi)
            .map(|l| {
                Mat::from_fn(n_theta, n_theta, |i, ip| {
                    let s = spectra[(i * n_theta + ip) * n_phi + l];
                    c64::new(s.re, -s.im)
                })
            })
            .collect();
        Circulant {
            n_theta,
            n_phi,
            generator,
            symbols,
            fwd,
            inv,
        }
    }

    fn transform_rows(&self, x: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for row in data.chunks_mut(self.n_phi) {
            self.fwd.process(row);
        }
        data
    }

    fn inverse_rows(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        let scale = 1.0 / self.n_phi as f64;
        for row in data.chunks_mut(self.n_phi) {
            self.inv.process(row);
        }
        data.iter().map(|c| c.re * scale).collect()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (nt, np) = (self.n_theta, self.n_phi);
        let xh = self.transform_rows(x);
        let mut yh = vec![Complex64::new(0.0, 0.0); nt * np];
        for l in 0..np {
            let s = &self.symbols[l];
            for i in 0..nt {
                let mut acc = c64::new(0.0, 0.0);
                for ip in 0..nt {
                    let v = xh[ip * np + l];
                    acc += s[(i, ip)] * c64::new(v.re, v.im);
                }
                yh[i * np + l] = Complex64::new(acc.re, acc.im);
            }
        }
        self.inverse_rows(yh)
    }

    fn entry(&self, row: usize, col: usize) -> f64 {
        let (nt, np) = (self.n_theta, self.n_phi);
        let (i, j) = (row / np, row % np);
        let (ip, jp) = (col / np, col % np);
        let d = (jp + np - j) % np;
        self.generator[(i * nt + ip) * np + d]
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Storage {
    Dense(Mat<f64>),
    Circulant(Circulant),
}

/// A square operator acting on scalar grid functions of one grid.
#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    key: GridKey,
    size: usize,
    storage: Storage,
}

impl BoundaryOperator {
    pub(crate) fn new(key: GridKey, size: usize, storage: Storage) -> Self {
        BoundaryOperator { key, size, storage }
    }

    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_circulant(&self) -> bool {
        matches!(self.storage, Storage::Circulant(_))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.size, x.len())?;
        Ok(match &self.storage {
            Storage::Dense(m) => {
                let xv = Mat::from_fn(self.size, 1, |i, _| x[i]);
                let y = m * &xv;
                (0..self.size).map(|i| y[(i, 0)]).collect()
            }
            Storage::Circulant(c) => c.apply(x),
        })
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(row, col)],
            Storage::Circulant(c) => c.entry(row, col),
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Circulant(c) => Mat::from_fn(self.size, self.size, |i, j| c.entry(i, j)),
        }
    }

    /// LU factorization for repeated solves.
    pub fn factorize(&self) -> Result<OperatorSolver> {
        let inner = match &self.storage {
            Storage::Dense(m) => {
                let lu = m.partial_piv_lu();
                SolverStorage::Dense(lu)
            }
            Storage::Circulant(c) => {
                let lus = c.symbols.iter().map(|s| s.partial_piv_lu()).collect();
                SolverStorage::Circulant {
                    circ: c.clone(),
                    lus,
                }
            }
        };
        let solver = OperatorSolver {
            size: self.size,
            inner,
            condition: f64::NAN,
        };
        let condition = self.condition_estimate(&solver)?;
        if !condition.is_finite() {
            return Err(Error::LinearAlgebra(format!(
                "discrete operator is singular (condition estimate {condition:e})"
            )));
        }
        Ok(solver.with_condition(condition))
    }

    fn condition_estimate(&self, solver: &OperatorSolver) -> Result<f64> {
        match &self.storage {
            Storage::Circulant(c) => {
                let mut smax = 0.0f64;
                let mut smin = f64::INFINITY;
                for s in &c.symbols {
                    let sv = s
                        .singular_values()
                        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
                    for v in sv {
                        smax = smax.max(v);
                        smin = smin.min(v);
                    }
                }
                Ok(smax / smin)
            }
            Storage::Dense(m) => {
                // ‖A‖₁ times a probed lower bound on ‖A⁻¹‖₁.
                let n = self.size;
                let norm1 = (0..n)
                    .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
                    .fold(0.0, f64::max);
                let probe: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
                let x = solver.solve(&probe)?;
                let inv = x.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
                Ok(norm1 * inv)
            }
        }
    }
}

enum SolverStorage {
    Dense(PartialPivLu<f64>),
    Circulant {
        circ: Circulant,
        lus: Vec<PartialPivLu<c64>>,
    },
}

/// Factorized [`BoundaryOperator`].
pub struct OperatorSolver {
    size: usize,
    inner: SolverStorage,
    condition: f64,
}

impl OperatorSolver {
    fn with_condition(mut self, condition: f64) -> Self {
        self.condition = condition;
        self
    }

    /// Condition number (exact 2-norm value for circulant storage, 1-norm estimate otherwise).
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.size, rhs.len())?;
        Ok(match &self.inner {
            SolverStorage::Dense(lu) => {
                let b = Mat::from_fn(self.size, 1, |i, _| rhs[i]);
                let x = lu.solve(&b);
                (0..self.size).map(|i| x[(i, 0)]).collect()
            }
            SolverStorage::Circulant { circ, lus } => {
                let (nt, np) = (circ.n_theta, circ.n_phi);
                let bh = circ.transform_rows(rhs);
                let mut xh = vec![Complex64::new(0.0, 0.0); nt * np];
                for (l, lu) in lus.iter().enumerate() {
                    let b = Mat::from_fn(nt, 1, |i, _| {
                        let v = bh[i * np + l];
                        c64::new(v.re, v.im)
                    });
                    let x = lu.solve(&b);
                    for i in 0..nt {
                        xh[i * np + l] = Complex64::new(x[(i, 0)].re, x[(i, 0)].im);
                    }
                }
                circ.inverse_rows(xh)
            }
        })
    }
}
