use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use hessric::catalog::{self, SolutionSpec};
use hessric::geometry::{values, LocalGeometry, ScalarField};
use hessric::sampling::Plan;
use hessric::verify::{self, ids, CheckStatus, PointContext, ToleranceConfig, VerifyError};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

/// `a cosθ + b sinθ cosφ + c sinθ sinφ`: restrictions of linear functions
/// to the unit sphere.
fn sphere_linear(a: f64, b: f64, c: f64) -> SolutionSpec {
    catalog::sphere2().with_f(ScalarField::new("linear", move |x| {
        let st = x[0].sin();
        x[0].cos() * a + &st * &x[1].cos() * b + &st * &x[1].sin() * c
    }))
}

fn quick() -> ToleranceConfig {
    ToleranceConfig {
        samples: 30,
        ..ToleranceConfig::default()
    }
}

proptest! {
    #![proptest_config(Config { cases: 48, rng_seed: RngSeed::Fixed(3), failure_persistence: None, ..Config::default() })]

    #[test]
    fn linear_functions_on_the_sphere_solve_the_equation(
        v in prop::array::uniform3(-2.0..2.0f64),
        u in prop::array::uniform2(0.0..1.0f64),
    ) {
        let [a, b, c] = v;
        let spec = sphere_linear(a, b, c);
        let p = spec.patch.domain().map_unit(&u, spec.patch.margin());
        let ctx = PointContext::new(&spec, &p, 3).unwrap();
        let size = v.iter().map(|x| x * x).sum::<f64>();
        prop_assert!(verify::main_residual(&ctx) <= 1e-12 * size.sqrt().max(1.0));
        prop_assert!(verify::laplace_residual(&ctx) <= 1e-12 * size.sqrt().max(1.0));
        prop_assert!((verify::mu_value(&ctx) - 2.0 * size).abs() <= 1e-12 * size.max(1.0));
        if ctx.grad_norm() > 1e-3 {
            prop_assert!(verify::ric_grad_residual(&ctx).unwrap() <= 1e-11 * size.sqrt().max(1.0));
        }
    }

    /// The equation and its consequences hold or fail together: a perturbed
    /// solution that violates the main residual by δ also moves `μ` off a
    /// constant by an amount of the same order.
    #[test]
    fn perturbations_break_the_chain(delta in 1e-4..1e-1f64, k in 2usize..5) {
        let spec = catalog::sphere2().with_f(ScalarField::new("perturbed", move |x| {
            x[0].cos() + (x[0].clone() * k as f64).cos() * delta
        }));
        let plan = Plan::halton(&spec.patch, 40, 0);
        let main = plan.points.iter().map(|p| verify::residual_main(&spec, p).unwrap()).fold(0.0, f64::max);
        let mu = verify::check_mu(&spec, &plan).unwrap();
        prop_assert!(main >= 0.1 * delta);
        prop_assert!(mu.max_deviation >= 1e-3 * delta);
    }
}

#[test]
fn exact_cases_pass_every_check() {
    for name in catalog::CASE_NAMES {
        let report = verify::run_suite(name, &quick()).unwrap();
        for c in &report.checks {
            assert!(c.pass, "{name}: {c:?}");
        }
        assert!(report.pass);
        let ids: Vec<&str> = report.checks.iter().map(|c| c.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted, "{name}");
    }
}

#[test]
fn report_verdict_is_the_conjunction() {
    for name in ["sphere2", "sphere2-negcontrol", "sphere2-eta-misscaled", "hyp3-radial"] {
        let r = verify::run_suite(name, &quick()).unwrap();
        assert_eq!(r.pass, r.checks.iter().all(|c| c.pass), "{name}");
        for c in &r.checks {
            match c.status {
                CheckStatus::Pass | CheckStatus::NotApplicable => assert!(c.pass),
                CheckStatus::Fail | CheckStatus::Error => assert!(!c.pass),
            }
        }
    }
}

#[test]
fn negative_controls_fail_where_designed() {
    let r = verify::run_suite("sphere2-negcontrol", &quick()).unwrap();
    assert!(!r.pass);
    let main = r.check(ids::RESIDUAL_MAIN).unwrap();
    assert_eq!(main.status, CheckStatus::Fail);
    assert!(main.max_residual.unwrap() >= 1e-4);

    let r = verify::run_suite("sphere2-eta-misscaled", &quick()).unwrap();
    assert!(!r.pass);
    assert_eq!(r.check(ids::KILLING_C).unwrap().status, CheckStatus::Fail);
    assert!(r.check(ids::RESIDUAL_MAIN).unwrap().pass);
}

#[test]
fn geodesic_normal_on_a_tilted_sphere_solution() {
    let spec = sphere_linear(1.0, 0.2, 0.0);
    for p in Plan::halton(&spec.patch, 50, 2).points {
        assert!(verify::check_geodesic_nu(&spec, &p).unwrap() <= 1e-10, "{p:?}");
    }
}

#[test]
fn second_eigenfunction_is_rejected() {
    let spec = catalog::sphere2().with_f(ScalarField::new("cos 2theta", |x| (x[0].clone() * 2.0).cos()));
    let plan = Plan::halton(&spec.patch, 100, 0);
    let main = plan
        .points
        .iter()
        .map(|p| verify::residual_main(&spec, p).unwrap())
        .fold(0.0, f64::max);
    assert!(main >= 0.1);
    assert!(verify::check_mu(&spec, &plan).unwrap().max_deviation >= 0.1);
    let report = verify::run_spec(&spec, &quick());
    assert!(!report.pass);
}

#[test]
fn killing_field_shrinks_with_the_gradient() {
    // near the pole both |η| and |∇f| behave like sinθ
    let spec = catalog::sphere2();
    let eta = spec.eta.as_ref().unwrap();
    let mut last = f64::INFINITY;
    for theta in [0.5, 0.1, 1e-2, 1e-3, 1e-4] {
        let geo = LocalGeometry::at_unchecked(&spec.patch, &[theta, 1.0], 3).unwrap();
        let grad = geo.gradient(&geo.evaluate(&spec.f));
        let e = geo.norm(&values(&geo.evaluate_vector(eta)));
        assert_abs_diff_eq!(e / geo.norm(&grad), 1.0, epsilon = 1e-9);
        assert!(e < last);
        last = e;
    }
    assert!(last < 1e-3);
}

#[test]
fn critical_points_are_reported() {
    let spec = catalog::by_name("hyp2-cosh").unwrap();
    assert!(matches!(
        verify::check_geodesic_nu(&spec, &[0.0, 0.0]),
        Err(VerifyError::NearCritical { .. })
    ));
    // the main residual needs no normal and is defined there
    assert!(verify::residual_main(&spec, &[0.0, 0.0]).unwrap() <= 1e-14);
}

#[test]
fn points_off_the_chart_are_errors() {
    let spec = catalog::sphere2();
    assert!(matches!(
        verify::residual_main(&spec, &[-0.5, 1.0]),
        Err(VerifyError::Geometry(_))
    ));
    assert!(matches!(
        verify::residual_main(&spec, &[PI / 2.0]),
        Err(VerifyError::Geometry(_))
    ));
}

#[test]
fn config_validation() {
    let ok = ToleranceConfig::default();
    assert!(ok.validate().is_ok());
    for bad in [
        ToleranceConfig { samples: 9, ..ok },
        ToleranceConfig { jet_order: 2, ..ok },
        ToleranceConfig { jet_order: 5, ..ok },
        ToleranceConfig {
            tol_identity: 1e-3,
            ..ok
        },
        ToleranceConfig {
            tol_identity: f64::NAN,
            ..ok
        },
        ToleranceConfig {
            tol_ode_limited: -1.0,
            ..ok
        },
    ] {
        assert!(
            matches!(verify::run_suite("sphere2", &bad), Err(VerifyError::InvalidConfig(_))),
            "{bad:?}"
        );
    }
    assert!(matches!(verify::run_suite("nope", &ok), Err(VerifyError::Catalog(_))));
}

#[test]
fn jet_order_four_agrees_with_three() {
    let c3 = quick();
    let c4 = ToleranceConfig { jet_order: 4, ..c3 };
    for name in ["sphere2", "hyp2-sinh", "sphere2xflat2"] {
        let a = verify::run_suite(name, &c3).unwrap();
        let b = verify::run_suite(name, &c4).unwrap();
        assert!(b.pass, "{name}");
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.status, y.status);
        }
    }
}

#[test]
fn identical_seeds_give_identical_bodies() {
    let body = |seed| {
        let mut v =
            serde_json::to_value(verify::run_suite("hyp2-coshxflat2", &ToleranceConfig { seed, ..quick() }).unwrap())
                .unwrap();
        v.as_object_mut().unwrap().remove("meta");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(body(4), body(4));
    assert_ne!(body(4), body(5));
}

#[test]
fn rescaling_preserves_verdicts() {
    for name in ["sphere2", "hyp2-exp", "sphere2-negcontrol"] {
        let spec = catalog::by_name(name).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let cmp = verify::compare_scaling(&spec, lambda, &quick()).unwrap();
            assert!(cmp.verdicts_match, "{name} λ={lambda}");
        }
    }
    let neg = catalog::by_name("sphere2-negcontrol").unwrap();
    assert!(verify::compare_scaling(&neg, 3.0, &quick()).unwrap().relative_gap <= 1e-10);
}
