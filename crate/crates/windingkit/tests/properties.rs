//! Property-based invariants of the geometry, field, layer, regularization and output layers.

use std::sync::{Arc, OnceLock};

use faer::Mat;
use proptest::prelude::*;

use windingkit::basis::{BasisSpec, CurrentBasis, CurrentCoefficients};
use windingkit::biot_savart::bs_field;
use windingkit::experiments::output::fmt_f64;
use windingkit::geometry::{Pose, SurfaceGrid, TorusSurface};
use windingkit::kernel::{gauge_difference, Relaxation};
use windingkit::layer::{apply_trace, double_layer_trace, double_layer_w, Assembly};
use windingkit::probes::{cluster_centers, interior_probes, FdClusters, ProbeCounts};
use windingkit::targets::TargetField;
use windingkit::tikhonov::{log_grid, normal_equations_solve, InverseProblem, MONOTONE_TOL};
use windingkit::Vec3;

struct Fixture {
    basis: CurrentBasis,
    probes: Vec<Vec3>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let cws = TorusSurface::new(3.0, 1.0).unwrap();
        let grid = Arc::new(SurfaceGrid::build(&cws, 24, 48, false).unwrap());
        let basis = CurrentBasis::new(grid, &BasisSpec::new(2, 2)).unwrap();
        let probes = interior_probes(&cws, 0.4, ProbeCounts::new(1, 3, 4)).unwrap().points;
        Fixture { basis, probes }
    })
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 0.05)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalized())
}

fn max_rel(a: &[Vec3], b: &[Vec3]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (*x - *y).norm()).fold(0.0, f64::max) / scale
}

fn problem(rows: usize, cols: usize, entries: &[f64], target: &[f64]) -> InverseProblem {
    let a = Mat::from_fn(3 * rows, cols, |r, k| entries[r * cols + k]);
    let w: Vec<f64> = (0..3 * rows).map(|r| 1.0 + (r % 5) as f64 * 0.1).collect();
    let m = Mat::from_fn(cols, cols, |i, j| {
        if i == j {
            2.0
        } else if i.abs_diff(j) == 1 {
            0.5
        } else {
            0.0
        }
    });
    InverseProblem::new(a, w, m, target.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn biot_savart_is_linear_in_the_coefficients(
        x in coeffs(fixture().basis.len()),
        y in coeffs(fixture().basis.len()),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let f = fixture();
        let grid = f.basis.grid();
        let field = |c: Vec<f64>| {
            let j = f.basis.synthesize(&CurrentCoefficients(c)).unwrap();
            bs_field(grid, &j, &f.probes).unwrap()
        };
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (bx, by, bc) = (field(x), field(y), field(combo));
        let expected: Vec<Vec3> = bx.iter().zip(&by).map(|(&p, &q)| p * a + q * b).collect();
        let scale: f64 = bx.iter().zip(&by).map(|(p, q)| a.abs() * p.norm() + b.abs() * q.norm()).fold(0.0, f64::max);
        let err = bc.iter().zip(&expected).map(|(p, q)| (*p - *q).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn fields_follow_rigid_motions(
        axis in unit_vector(),
        angle in -3.0f64..3.0,
        shift in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
        c in coeffs(6),
    ) {
        let pose = Pose::from_axis_angle(axis, angle, Vec3::new(shift.0, shift.1, shift.2)).unwrap();
        let base = TorusSurface::new(3.0, 1.0).unwrap();
        let posed = base.clone().with_pose(pose.clone()).unwrap();
        let spec = BasisSpec::new(1, 1);
        let make = |s: &TorusSurface| CurrentBasis::new(Arc::new(SurfaceGrid::build(s, 12, 24, false).unwrap()), &spec).unwrap();
        let (b0, b1) = (make(&base), make(&posed));
        let mut c = c;
        c.resize(b0.len(), 0.5);
        let j0 = b0.synthesize(&CurrentCoefficients(c.clone())).unwrap();
        let j1 = b1.synthesize(&CurrentCoefficients(c)).unwrap();
        let pts = interior_probes(&base, 0.3, ProbeCounts::new(1, 2, 3)).unwrap().points;
        let moved: Vec<Vec3> = pts.iter().map(|&p| pose.apply(p)).collect();
        let f0: Vec<Vec3> = bs_field(b0.grid(), &j0, &pts).unwrap().into_iter().map(|v| pose.rotate(v)).collect();
        let f1 = bs_field(b1.grid(), &j1, &moved).unwrap();
        prop_assert!(max_rel(&f1, &f0) <= 1e-12);
    }

    #[test]
    fn gauss_identity_holds_on_perturbed_surfaces(
        m in 1i32..3,
        n in -2i32..3,
        amp in -0.15f64..0.15,
    ) {
        use windingkit::geometry::ShapeMode;
        let s = TorusSurface::new(3.0, 1.0).unwrap()
            .with_perturbation(vec![ShapeMode { m, n, amplitude: amp }]).unwrap();
        let grid = SurfaceGrid::build(&s, 48, 64, false).unwrap();
        let one = grid.scalar(vec![1.0; grid.len()]).unwrap();
        let trace = apply_trace(&double_layer_trace(&grid, Assembly::Auto), &grid, &one).unwrap();
        prop_assert!(trace.values.iter().all(|v| (v - 1.0).abs() <= 1e-10));
        let w = double_layer_w(&grid, &one, &[Vec3::new(3.0, 0.0, 0.0), Vec3::ZERO, Vec3::new(0.0, 0.0, 4.0)]).unwrap();
        prop_assert!((w[0] - 1.0).abs() <= 1e-6);
        prop_assert!(w[1].abs() <= 1e-6 && w[2].abs() <= 1e-6);
    }

    #[test]
    fn target_fields_are_divergence_and_curl_free(
        center in (3.6f64..3.9, -0.2f64..0.2, -0.2f64..0.2),
        axis in unit_vector(),
        radius in 0.2f64..0.7,
    ) {
        let plasma = TorusSurface::new(3.0, 0.5).unwrap();
        let clusters = FdClusters::new(cluster_centers(&plasma, 0.3, 6), 1e-3).unwrap();
        let pts = clusters.points();
        let fields = [
            TargetField::point_source(Vec3::new(center.0, center.1, center.2)),
            TargetField::circular_loop(Vec3::new(-center.0, center.1, center.2), axis, radius, 1.0).unwrap(),
            TargetField::azimuthal_wire(Vec3::new(center.1, center.2, 0.0), Vec3::new(0.0, 0.0, 1.0)).unwrap(),
        ];
        for t in fields {
            let s = t.sample(&pts);
            for c in 0..clusters.len() {
                let jac = clusters.jacobian(&s, c);
                let frob = jac.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!(clusters.divergence(&s, c).abs() <= 1e-4 * frob);
                prop_assert!(clusters.curl(&s, c).norm() <= 1e-4 * frob);
            }
        }
    }

    #[test]
    fn tikhonov_sweeps_satisfy_the_bound_and_monotonicity(
        entries in prop::collection::vec(-1.0f64..1.0, 3 * 6 * 5),
        target in prop::collection::vec(-1.0f64..1.0, 3 * 6),
        lo in -8.0f64..-2.0,
    ) {
        let p = problem(6, 5, &entries, &target);
        let s = p.factorize().unwrap();
        let grid = log_grid(1e2, 10f64.powf(lo), 12);
        let sweep = s.sweep(&grid).unwrap();
        prop_assert!(sweep.is_monotone());
        for (r, sol) in sweep.records.iter().zip(&sweep.solutions) {
            prop_assert!(r.bound_ratio <= 1.0);
            prop_assert!((r.objective - r.residual_l2_sq - r.lambda * r.current_l2_sq).abs() <= 1e-12 * r.objective.max(1e-300));
            prop_assert!(sol.optimality <= 1e-10);
        }
        for w in sweep.records.windows(2) {
            prop_assert!(w[1].objective <= w[0].objective * (1.0 + MONOTONE_TOL));
        }
    }

    #[test]
    fn svd_solution_matches_normal_equations(
        entries in prop::collection::vec(-1.0f64..1.0, 3 * 8 * 4),
        target in prop::collection::vec(-1.0f64..1.0, 3 * 8),
        lambda in 1e-3f64..10.0,
    ) {
        let p = problem(8, 4, &entries, &target);
        let s = p.factorize().unwrap();
        let c = s.solve_lambda(lambda).unwrap().coefficients.0;
        let reference = normal_equations_solve(&p, lambda).unwrap();
        let scale = reference.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
        for (a, b) in c.iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn log_grid_is_geometric_with_exact_endpoints(
        a in -12.0f64..3.0,
        b in -12.0f64..3.0,
        points in 2usize..40,
    ) {
        prop_assume!((a - b).abs() > 0.5);
        let (start, end) = (10f64.powf(a), 10f64.powf(b));
        let g = log_grid(start, end, points);
        prop_assert_eq!(g.len(), points);
        prop_assert!((g[0] / start - 1.0).abs() <= 1e-14);
        prop_assert!((g[points - 1] / end - 1.0).abs() <= 1e-13);
        let q = g[1] / g[0];
        for w in g.windows(2) {
            prop_assert!((w[1] / w[0] / q - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn seventeen_digit_output_round_trips(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let back: f64 = fmt_f64(v).parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn gauge_difference_ignores_constants(
        values in prop::collection::vec(-1.0f64..1.0, 8 * 8),
        shift in -5.0f64..5.0,
    ) {
        let s = TorusSurface::new(3.0, 1.0).unwrap();
        let grid = SurfaceGrid::build(&s, 8, 8, false).unwrap();
        prop_assume!(values.iter().any(|v| v.abs() > 1e-3));
        let a = grid.scalar(values.iter().map(|v| v + shift).collect()).unwrap();
        let b = grid.scalar(values).unwrap();
        prop_assert!(gauge_difference(&grid, &a, &b).unwrap() <= 1e-12);
    }

    #[test]
    fn relaxation_accepts_exactly_the_admissible_range(l in -1.0f64..3.0) {
        let ok = Relaxation::Constant(l).validate().is_ok();
        prop_assert_eq!(ok, l > 0.0 && l < 2.0);
        let seq = Relaxation::Sequence(vec![2.0, 0.0, l]).validate().is_ok();
        prop_assert_eq!(seq, l > 0.0 && l < 2.0);
    }
}
