use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use hessric::catalog;
use hessric::geometry::{self, ChartPatch, Domain, DomainFactor, LocalGeometry, ScalarField};
use hessric::jets::Jet;
use hessric::sampling::Plan;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn diag(entries: Vec<Jet>) -> Vec<Vec<Jet>> {
    let n = entries.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        entries[i].clone()
                    } else {
                        entries[0].lift(0.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn flat(n: usize) -> ChartPatch {
    ChartPatch::new("flat", Domain::boxed(&vec![(-2.0, 2.0); n]), move |x| {
        diag(vec![x[0].lift(1.0); n])
    })
}

fn sphere() -> ChartPatch {
    ChartPatch::new("sphere", Domain::boxed(&[(0.0, PI), (0.0, 2.0 * PI)]), |x| {
        diag(vec![x[0].lift(1.0), x[0].sin().square()])
    })
}

fn half_plane() -> ChartPatch {
    ChartPatch::new("half-plane", Domain::boxed(&[(-1.0, 1.0), (0.2, 3.0)]), |x| {
        let w = x[1].powi(-2);
        diag(vec![w.clone(), w])
    })
}

fn disk() -> ChartPatch {
    ChartPatch::new("disk", Domain::new(vec![DomainFactor::Disk { radius: 1.0 }]), |x| {
        let w = (1.0 - (x[0].square() + x[1].square())).powi(-2) * 4.0;
        diag(vec![w.clone(), w])
    })
}

/// A non-diagonal metric with variable coefficients, to exercise the
/// general code paths.
fn skewed() -> ChartPatch {
    ChartPatch::new("skewed", Domain::boxed(&[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)]), |x| {
        let a = 2.0 + x[0].sin();
        let b = (x[1].clone() * 0.3).exp();
        let c = 1.5 + x[0].clone() * x[2].clone() * 0.2;
        let o = x[2].cos() * 0.2;
        let z = x[0].lift(0.1);
        vec![
            vec![a, o.clone(), z.clone()],
            vec![o, b, x[1].clone() * 0.1],
            vec![z, x[1].clone() * 0.1, c],
        ]
    })
}

/// Metric matrix at a point, read off order-1 jets.
fn metric_at(patch: &ChartPatch, p: &[f64]) -> DMatrix<f64> {
    let coords = Jet::coordinates(p, 1).unwrap();
    let g = patch.metric_jets(&coords);
    DMatrix::from_fn(p.len(), p.len(), |i, j| g[i][j].value())
}

/// Christoffel symbols from central differences of the metric values.
fn christoffel_oracle(patch: &ChartPatch, p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let h = 1e-5;
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|l| {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[l] += h;
            b[l] -= h;
            (metric_at(patch, &a) - metric_at(patch, &b)) / (2.0 * h)
        })
        .collect();
    let g_inv = metric_at(patch, p).try_inverse().unwrap();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[(k * n + i) * n + j] = (0..n)
                    .map(|l| 0.5 * g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                    .sum();
            }
        }
    }
    out
}

/// Scalar curvature of a conformally flat surface `e^{2w}(dx² + dy²)`,
/// `S = −2 e^{−2w} Δ₀w`, with the flat Laplacian taken by differences.
fn conformal_scalar_oracle(weight: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
    let w = |x: f64, y: f64| 0.5 * weight(x, y).ln();
    let h = 1e-4;
    let lap = (w(x + h, y) + w(x - h, y) + w(x, y + h) + w(x, y - h) - 4.0 * w(x, y)) / (h * h);
    -2.0 * (-2.0 * w(x, y)).exp() * lap
}

#[test]
fn flat_christoffel_vanishes() {
    let c = geometry::christoffel(&flat(2), &[0.3, -1.1]).unwrap();
    assert_eq!(c.max_abs(), 0.0);
}

#[test]
fn sphere_christoffel_at_quarter_colatitude() {
    let c = geometry::christoffel(&sphere(), &[PI / 4.0, 1.0]).unwrap();
    assert_abs_diff_eq!(c.get(0, 1, 1), -0.5, epsilon = 1e-14);
    let oracle = christoffel_oracle(&sphere(), &[PI / 4.0, 1.0]);
    assert_abs_diff_eq!(oracle[3], -0.5, epsilon = 1e-8);
}

#[test]
fn half_plane_christoffel() {
    let c = geometry::christoffel(&half_plane(), &[0.0, 1.0]).unwrap();
    assert_abs_diff_eq!(c.get(1, 0, 0), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(c.get(0, 0, 1), -1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(c.get(1, 1, 1), -1.0, epsilon = 1e-14);
}

fn unit_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, dim)
}

fn config() -> Config {
    Config {
        cases: 64,
        rng_seed: RngSeed::Fixed(11),
        failure_persistence: None,
        ..Config::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn christoffel_matches_difference_oracle(which in 0usize..4, u in unit_point(3)) {
        let patch = [sphere(), half_plane(), disk(), skewed()][which].clone();
        let p = patch.domain().map_unit(&u[..patch.dim()], patch.margin());
        let got = geometry::christoffel(&patch, &p).unwrap();
        let want = christoffel_oracle(&patch, &p);
        let n = patch.dim();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let w = want[(k * n + i) * n + j];
                    prop_assert!((got.get(k, i, j) - w).abs() <= 1e-7 * w.abs().max(1.0),
                        "{} Γ^{}_{}{} {} vs {}", patch.label(), k, i, j, got.get(k, i, j), w);
                }
            }
        }
    }

    #[test]
    fn disk_and_half_plane_scalar_curvature_match_oracle(u in unit_point(2)) {
        let d = disk();
        let p = d.domain().map_unit(&u, d.margin());
        let s = geometry::curvature_at(&d, &p).unwrap().scalar;
        let oracle = conformal_scalar_oracle(|x, y| 4.0 / (1.0 - x * x - y * y).powi(2), p[0], p[1]);
        prop_assert!((s + 2.0).abs() <= 1e-9);
        prop_assert!((oracle + 2.0).abs() <= 1e-4, "oracle {}", oracle);

        let hp = half_plane();
        let q = hp.domain().map_unit(&u, hp.margin());
        let s = geometry::curvature_at(&hp, &q).unwrap().scalar;
        let oracle = conformal_scalar_oracle(|_, y| y.powi(-2), q[0], q[1]);
        prop_assert!((s - oracle).abs() <= 1e-4);
    }

    #[test]
    fn skewed_metric_satisfies_curvature_identities(u in unit_point(3)) {
        let patch = skewed();
        let p = patch.domain().map_unit(&u, patch.margin());
        let c = geometry::curvature_at(&patch, &p).unwrap();
        prop_assert!(c.self_test_residual() <= 1e-12);
        prop_assert!(c.bianchi_residual() <= 1e-10);
    }
}

#[test]
fn self_test_on_every_catalog_patch() {
    let mut specs = catalog::all_cases();
    specs.extend(catalog::NEGATIVE_CONTROLS.iter().map(|n| catalog::by_name(n).unwrap()));
    for spec in specs {
        for p in Plan::halton(&spec.patch, 20, 3).points {
            let c = geometry::curvature_at(&spec.patch, &p).unwrap();
            assert!(c.self_test_residual() <= 1e-12, "{} at {p:?}", spec.name);
            assert!(c.bianchi_residual() <= 1e-10, "{} at {p:?}", spec.name);
            let ric = &c.ricci02;
            assert!((ric - ric.transpose()).amax() <= 1e-12);
            let trace = (&c.g_inv * ric).trace();
            assert!((trace - c.scalar).abs() <= 1e-12 * c.scalar.abs().max(1.0));
        }
    }
}

#[test]
fn constant_curvature_law() {
    for (patch, kappa) in [(sphere(), 1.0), (disk(), -1.0), (half_plane(), -1.0)] {
        for p in Plan::halton(&patch, 100, 0).points {
            let c = geometry::curvature_at(&patch, &p).unwrap();
            let gap = (&c.ricci02 - &c.g * kappa).amax();
            assert!(gap <= 1e-9, "{} at {p:?}: {gap}", patch.label());
        }
    }
}

#[test]
fn flat_space_has_no_curvature() {
    let c = geometry::curvature_at(&flat(3), &[0.1, 0.2, -0.7]).unwrap();
    assert_eq!(c.ricci02.amax(), 0.0);
    assert_eq!(c.scalar, 0.0);
    assert_eq!(c.grad_scalar.as_ref().unwrap().amax(), 0.0);
    for l in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(c.riemann(l, i, j, k), 0.0);
                }
            }
        }
    }
}

#[test]
fn scalar_curvature_is_parallel_on_constant_curvature_cases() {
    for spec in catalog::all_cases().into_iter().filter(|s| s.has_constant_scalar()) {
        for p in Plan::halton(&spec.patch, 50, 1).points {
            let c = geometry::curvature_at(&spec.patch, &p).unwrap();
            let grad = c.grad_scalar.as_ref().unwrap();
            assert!(geometry::g_norm(&c.g, grad) <= 1e-9, "{} at {p:?}", spec.name);
        }
    }
}

#[test]
fn hessian_of_a_constant_is_exactly_zero() {
    let c = ScalarField::new("7", |x| x[0].lift(7.0));
    for patch in [sphere(), disk(), skewed()] {
        for p in Plan::halton(&patch, 10, 0).points {
            let h = geometry::hessian11(&patch, &c, &p).unwrap();
            assert!(h.iter().all(|v| *v == 0.0), "{}", patch.label());
        }
    }
}

#[test]
fn gradient_examples() {
    let x = ScalarField::new("x", |x| x[0].clone());
    let g = geometry::gradient(&flat(2), &x, &[0.5, 0.5]).unwrap();
    assert_eq!(g.as_slice(), &[1.0, 0.0]);

    let cos = ScalarField::new("cos(theta)", |x| x[0].cos());
    let p = [PI / 3.0, 1.0];
    let g = geometry::gradient(&sphere(), &cos, &p).unwrap();
    assert_abs_diff_eq!(g[0], -(PI / 3.0).sin(), epsilon = 1e-15);
    assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-15);
    let geo = LocalGeometry::at(&sphere(), &p, 3).unwrap();
    assert_abs_diff_eq!(geo.norm(&g), (PI / 3.0).sin(), epsilon = 1e-15);

    let inv_y = ScalarField::new("1/y", |x| x[1].recip());
    let g = geometry::gradient(&half_plane(), &inv_y, &[0.0, 1.0]).unwrap();
    assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(g[1], -1.0, epsilon = 1e-15);
}

#[test]
fn hessian_and_laplacian_examples() {
    let sq = ScalarField::new("x^2", |x| x[0].square());
    let h = geometry::hessian11(&flat(2), &sq, &[0.4, -0.2]).unwrap();
    assert_eq!(h, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
    assert_eq!(geometry::laplacian(&flat(2), &sq, &[0.4, -0.2]).unwrap(), -2.0);

    let x = ScalarField::new("x", |x| x[0].clone());
    assert_eq!(geometry::hessian11(&flat(2), &x, &[0.4, -0.2]).unwrap().amax(), 0.0);

    let inv_y = ScalarField::new("1/y", |x| x[1].recip());
    let h = geometry::hessian11(&half_plane(), &inv_y, &[0.0, 1.0]).unwrap();
    assert!((h - DMatrix::identity(2, 2)).amax() <= 1e-14);

    let cos = ScalarField::new("cos(theta)", |x| x[0].cos());
    for p in Plan::halton(&sphere(), 20, 0).points {
        let lap = geometry::laplacian(&sphere(), &cos, &p).unwrap();
        assert_abs_diff_eq!(lap, 2.0 * p[0].cos(), epsilon = 1e-13);
    }

    let xy = ScalarField::new("x1 x2", |x| x[0].clone() * x[1].clone());
    assert_eq!(geometry::laplacian(&flat(3), &xy, &[0.3, 0.1, 0.9]).unwrap(), 0.0);
}

#[test]
fn boundary_points_are_rejected() {
    assert!(LocalGeometry::at(&sphere(), &[0.01, 1.0], 3).is_err());
    assert!(LocalGeometry::at(&disk(), &[0.97, 0.0], 3).is_err());
    assert!(LocalGeometry::at(&disk(), &[0.5, 0.0], 3).is_ok());
    assert!(LocalGeometry::at(&flat(2), &[0.0, 0.0, 0.0], 3).is_err());
}

#[test]
fn sampling_stays_inside_the_margin() {
    for spec in catalog::all_cases() {
        let plan = Plan::halton(&spec.patch, 200, 9);
        assert_eq!(plan.points.len(), 200);
        assert!(plan.points.iter().all(|p| spec.patch.is_interior(p)), "{}", spec.name);
        assert_eq!(plan, Plan::halton(&spec.patch, 200, 9));
    }
}
