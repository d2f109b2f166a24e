//! FFT utilities for doubly periodic samples stored θ-major (index i·n_φ + j).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward/inverse 2D transforms for a fixed grid shape.
pub struct Fft2 {
    n_theta: usize,
    n_phi: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n_theta,
            n_phi,
            row_fwd: planner.plan_fft_forward(n_phi),
            row_inv: planner.plan_fft_inverse(n_phi),
            col_fwd: planner.plan_fft_forward(n_theta),
            col_inv: planner.plan_fft_inverse(n_theta),
        }
    }

    /// Unnormalized forward transform X[k,l] = Σ x[i,j] e^{−2πi(ki/n_θ + lj/n_φ)}.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Unnormalized inverse transform (no 1/N factor).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    fn run(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n_theta * self.n_phi);
        row.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); self.n_theta];
        for j in 0..self.n_phi {
            for i in 0..self.n_theta {
                column[i] = data[i * self.n_phi + j];
            }
            col.process(&mut column);
            for i in 0..self.n_theta {
                data[i * self.n_phi + j] = column[i];
            }
        }
    }
}

/// Signed frequency of DFT index `k` for length `n`; the Nyquist index maps to +n/2.
pub fn signed_frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Spectral ∂_θ and ∂_φ of real periodic samples; Nyquist modes are dropped.
pub fn partial_derivatives(values: &[f64], n_theta: usize, n_phi: usize) -> (Vec<f64>, Vec<f64>) {
    let fft = Fft2::new(n_theta, n_phi);
    let mut spec = to_complex(values);
    fft.forward(&mut spec);
    let scale = 1.0 / (n_theta * n_phi) as f64;
    let mut d_t = spec.clone();
    let mut d_p = spec;
    for i in 0..n_theta {
        let kt = if 2 * i == n_theta { 0 } else { signed_frequency(i, n_theta) };
        for j in 0..n_phi {
            let kp = if 2 * j == n_phi { 0 } else { signed_frequency(j, n_phi) };
            let idx = i * n_phi + j;
            d_t[idx] *= Complex64::new(0.0, kt as f64 * scale);
            d_p[idx] *= Complex64::new(0.0, kp as f64 * scale);
        }
    }
    fft.inverse(&mut d_t);
    fft.inverse(&mut d_p);
    (
        d_t.iter().map(|c| c.re).collect(),
        d_p.iter().map(|c| c.re).collect(),
    )
}

/// Multiplier applied to DFT index `k` when shifting the interpolant by `shift` grid steps.
fn shift_factor(k: usize, n: usize, shift: f64) -> Complex64 {
    let h = 2.0 * PI / n as f64;
    if 2 * k == n {
        // Real-valued interpolants treat the Nyquist mode as a cosine.
        Complex64::new((n as f64 / 2.0 * shift * h).cos(), 0.0)
    } else {
        let phase = signed_frequency(k, n) as f64 * shift * h;
        Complex64::new(phase.cos(), phase.sin())
    }
}

/// Evaluate the trigonometric interpolant of `values` on the grid shifted by
/// (`shift_theta`, `shift_phi`) cells, e.g. (½, ½) for the staggered grid.
pub fn shift_interpolate(
    values: &[f64],
    n_theta: usize,
    n_phi: usize,
    shift_theta: f64,
    shift_phi: f64,
) -> Vec<f64> {
    let fft = Fft2::new(n_theta, n_phi);
    let mut spec = to_complex(values);
    fft.forward(&mut spec);
    let scale = 1.0 / (n_theta * n_phi) as f64;
    for i in 0..n_theta {
        let ft = shift_factor(i, n_theta, shift_theta);
        for j in 0..n_phi {
            spec[i * n_phi + j] *= ft * shift_factor(j, n_phi, shift_phi) * scale;
        }
    }
    fft.inverse(&mut spec);
    spec.iter().map(|c| c.re).collect()
}

/// Trigonometric interpolation onto a grid refined by `factor` in each direction.
pub fn upsample(values: &[f64], n_theta: usize, n_phi: usize, factor: usize) -> Vec<f64> {
    let (big_t, big_p) = (n_theta * factor, n_phi * factor);
    let fft = Fft2::new(n_theta, n_phi);
    let mut spec = to_complex(values);
    fft.forward(&mut spec);
    let mut big = vec![Complex64::new(0.0, 0.0); big_t * big_p];
    // Each source index maps to one or (Nyquist) two target indices with a weight.
    let targets = |k: usize, n: usize, big_n: usize| -> Vec<(usize, f64)> {
        if factor == 1 {
            return vec![(k, 1.0)];
        }
        if 2 * k == n {
            vec![(n / 2, 0.5), (big_n - n / 2, 0.5)]
        } else {
            let f = signed_frequency(k, n);
            vec![(f.rem_euclid(big_n as i64) as usize, 1.0)]
        }
    };
    let scale = 1.0 / (n_theta * n_phi) as f64;
    for i in 0..n_theta {
        for (bi, wi) in targets(i, n_theta, big_t) {
            for j in 0..n_phi {
                for (bj, wj) in targets(j, n_phi, big_p) {
                    big[bi * big_p + bj] += spec[i * n_phi + j] * (wi * wj * scale);
                }
            }
        }
    }
    let fft_big = Fft2::new(big_t, big_p);
    fft_big.inverse(&mut big);
    big.iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n_t: usize, n_p: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::new();
        for i in 0..n_t {
            for j in 0..n_p {
                v.push(f(2.0 * PI * i as f64 / n_t as f64, 2.0 * PI * j as f64 / n_p as f64));
            }
        }
        v
    }

    #[test]
    fn derivatives_of_trig_polynomial_are_exact() {
        let f = |t: f64, p: f64| (2.0 * t - 3.0 * p).cos() + t.sin() * (2.0 * p).cos();
        let (dt, dp) = partial_derivatives(&sample(16, 20, f), 16, 20);
        let et = sample(16, 20, |t, p| -2.0 * (2.0 * t - 3.0 * p).sin() + t.cos() * (2.0 * p).cos());
        let ep = sample(16, 20, |t, p| 3.0 * (2.0 * t - 3.0 * p).sin() - 2.0 * t.sin() * (2.0 * p).sin());
        for k in 0..dt.len() {
            assert!((dt[k] - et[k]).abs() < 1e-12);
            assert!((dp[k] - ep[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn half_shift_matches_analytic_values() {
        let f = |t: f64, p: f64| (t + 2.0 * p).sin() + 0.5 * (3.0 * t).cos();
        let shifted = shift_interpolate(&sample(16, 16, f), 16, 16, 0.5, 0.5);
        let h = 2.0 * PI / 16.0;
        let expect = sample(16, 16, |t, p| f(t + 0.5 * h, p + 0.5 * h));
        for k in 0..shifted.len() {
            assert!((shifted[k] - expect[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn upsampling_reproduces_band_limited_function() {
        let f = |t: f64, p: f64| (t - p).cos() * (2.0 * t).sin() + 0.25;
        let fine = upsample(&sample(12, 8, f), 12, 8, 3);
        let expect = sample(36, 24, f);
        for k in 0..fine.len() {
            assert!((fine[k] - expect[k]).abs() < 1e-12);
        }
    }
}
