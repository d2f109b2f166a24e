//! Epstein zeta value Z_G(1/2) = Σ'_{k∈Z²} (kᵀGk)^{−1/2} (analytically continued),
//! the self-interaction correction of the punctured trapezoid rule for 1/r kernels.

use libm::erfc;

fn bound(min_eig: f64) -> i64 {
    // erfc(x) < 1e-20 for x > 6.6; one extra shell for safety.
    (6.6 / (std::f64::consts::PI * min_eig).sqrt()).ceil() as i64 + 1
}

fn min_eig(g: [[f64; 2]; 2]) -> f64 {
    let tr = g[0][0] + g[1][1];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
}

fn erfc_sum(g: [[f64; 2]; 2]) -> f64 {
    let k_max = bound(min_eig(g));
    let mut sum = 0.0;
    for k1 in -k_max..=k_max {
        for k2 in -k_max..=k_max {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let (a, b) = (k1 as f64, k2 as f64);
            let q = g[0][0] * a * a + 2.0 * g[0][1] * a * b + g[1][1] * b * b;
            sum += erfc((std::f64::consts::PI * q).sqrt()) / q.sqrt();
        }
    }
    sum
}

/// Z_G(1/2) for a symmetric positive definite 2×2 form `g`.
pub fn epstein_zeta_half(g: [[f64; 2]; 2]) -> f64 {
    let det = g[0][0] * g[1][1] - g[0][1] * g[0][1];
    assert!(det > 0.0 && g[0][0] > 0.0, "quadratic form must be positive definite");
    // Rescale to unit determinant, where the Ewald split is self-dual.
    let alpha = 1.0 / det.sqrt();
    let ga = [[alpha * g[0][0], alpha * g[0][1]], [alpha * g[0][1], alpha * g[1][1]]];
    let gi = [[ga[1][1], -ga[0][1]], [-ga[0][1], ga[0][0]]];
    (-4.0 + erfc_sum(ga) + erfc_sum(gi)) * alpha.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_lattice_constant() {
        // Σ' 1/|k| over Z² = 4 ζ(1/2) β(1/2).
        let z = epstein_zeta_half([[1.0, 0.0], [0.0, 1.0]]);
        assert!((z + 3.900_264_920_001_956).abs() < 1e-12, "{z}");
    }

    #[test]
    fn homogeneity_under_scaling() {
        let g = [[1.3, 0.4], [0.4, 0.7]];
        let s = 2.5;
        let a = epstein_zeta_half([[s * g[0][0], s * g[0][1]], [s * g[0][1], s * g[1][1]]]);
        assert!((a - epstein_zeta_half(g) / s.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn corrected_lattice_sum_is_high_order() {
        // ∫_{R²} e^{−Q(u)}/√Q(u) du = π^{3/2}/√det G.
        let g: [[f64; 2]; 2] = [[1.0, 0.3], [0.3, 4.0]];
        let exact = std::f64::consts::PI.powf(1.5) / (g[0][0] * g[1][1] - g[0][1] * g[0][1]).sqrt();
        let mut errors = Vec::new();
        for h in [0.2, 0.1] {
            let n = (8.0 / h) as i64;
            let mut t = 0.0;
            for k1 in -n..=n {
                for k2 in -n..=n {
                    if k1 == 0 && k2 == 0 {
                        continue;
                    }
                    let (u1, u2) = (h * k1 as f64, h * k2 as f64);
                    let q = g[0][0] * u1 * u1 + 2.0 * g[0][1] * u1 * u2 + g[1][1] * u2 * u2;
                    t += h * h * (-q).exp() / q.sqrt();
                }
            }
            let gh = [[g[0][0] * h * h, g[0][1] * h * h], [g[0][1] * h * h, g[1][1] * h * h]];
            errors.push((t - h * h * epstein_zeta_half(gh) - exact).abs());
        }
        assert!(errors[1] < 1e-3 * exact);
        assert!(errors[0] / errors[1] > 6.0, "{errors:?}");
    }
}
