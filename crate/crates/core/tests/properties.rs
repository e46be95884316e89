mod common;

use holonomy_lab::catalog;
use holonomy_lab::expr::{parse, Expr};
use holonomy_lab::linalg;
use holonomy_lab::manifold::ManifoldSpec;
use holonomy_lab::transport::{transport, transport_adapted, Curve, Segment};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sphere() -> ManifoldSpec {
    catalog::round_sphere_spec().into()
}

#[test]
fn corpus_round_trips() {
    for e in common::expression_corpus() {
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap();
        assert_eq!(reparsed.to_string(), printed);
        let p = [0.3, 1.1, -0.7, 2.0, 0.4];
        match (e.eval(&p), reparsed.eval(&p)) {
            (Ok(a), Ok(b)) => assert!(a == b || (a.is_nan() && b.is_nan()), "{printed}: {a} vs {b}"),
            (Err(_), Err(_)) => {}
            (a, b) => panic!("{printed}: {a:?} vs {b:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differentiation_is_linear(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0,
                                 x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = common::random_expr(&mut rng, 3, 3);
        let g = common::random_expr(&mut rng, 3, 3);
        let combo = parse(&format!("({a}) * ({f}) + ({b}) * ({g})")).unwrap();
        for k in 1..=3 {
            let lhs = combo.differentiate(k).eval(&x);
            let fk = f.differentiate(k).eval(&x);
            let gk = g.differentiate(k).eval(&x);
            if let (Ok(l), Ok(fk), Ok(gk)) = (lhs, fk, gk) {
                let r = a * fk + b * gk;
                if l.is_finite() && r.is_finite() {
                    prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs().max(r.abs())), "{l} vs {r}");
                }
            }
        }
    }

    #[test]
    fn literal_arithmetic_matches_f64(a in -100.0f64..100.0, b in 0.5f64..100.0) {
        let e = parse(&format!("({a}) / ({b}) - ({a}) * ({b})")).unwrap();
        prop_assert_eq!(e.eval(&[]).unwrap(), a / b - a * b);
    }

    #[test]
    fn sphere_reversal_inverts(x1 in 0.8f64..2.3, x2 in -1.0f64..1.0, dx in -0.4f64..0.4, dy in -0.4f64..0.4) {
        let c = Curve::polyline(&[vec![x1, x2], vec![x1 + dx, x2], vec![x1 + dx, x2 + dy]]).unwrap();
        let spec = sphere();
        let f = transport(&spec, &c, 512).unwrap().matrix;
        let b = transport(&spec, &c.reversed(), 512).unwrap().matrix;
        prop_assert!(linalg::max_abs_diff(&(b * f), &DMatrix::identity(2, 2)) < 1e-8);
    }

    #[test]
    fn vertical_coordinate_does_not_matter(shift in -5.0f64..5.0, amp in -3.0f64..3.0) {
        // Same horizontal path, x3 replaced by another function with the same endpoints.
        let spec = catalog::sasakian_sphere_spec();
        let base = Segment::parse(&["1.2 + 0.3*sin(t)", "t", &format!("{shift}")], (0.0, 2.0)).unwrap();
        let wiggle = format!("{shift} + ({amp})*sin(pi*t/2)^2*(2 - t)");
        let moved = Segment::parse(&["1.2 + 0.3*sin(t)", "t", &wiggle], (0.0, 2.0)).unwrap();
        let a = transport_adapted(&spec, &Curve::new(vec![base]).unwrap(), 512).unwrap().matrix;
        let b = transport_adapted(&spec, &Curve::new(vec![moved]).unwrap(), 512).unwrap().matrix;
        prop_assert!(linalg::max_abs_diff(&a, &b) < 1e-8);
    }
}

#[test]
fn transport_is_deterministic() {
    let c = Curve::latitude(0.9);
    let a = transport(&sphere(), &c, 256).unwrap();
    let b = transport(&sphere(), &c, 256).unwrap();
    assert_eq!(a, b);
}

#[test]
fn latitude_angle_matches_closed_form() {
    for phi0 in [0.4, 0.8, 1.2, std::f64::consts::FRAC_PI_2, 2.0, 2.6] {
        let m = transport(&sphere(), &Curve::latitude(phi0), 512).unwrap().matrix;
        let angle = common::sphere_rotation_angle(&m, phi0);
        let expected = -2.0 * std::f64::consts::PI * phi0.cos();
        let wrapped = (angle - expected).rem_euclid(2.0 * std::f64::consts::PI);
        let err = wrapped.min(2.0 * std::f64::consts::PI - wrapped);
        assert!(err < 1e-6, "phi0 {phi0}: angle {angle}, expected {expected}");
    }
}

#[test]
fn drift_is_small_for_both_connections() {
    for e in catalog::all() {
        let c = Curve::polyline(&[e.base_point.clone(), {
            let mut q = e.base_point.clone();
            q[0] += 0.3;
            q[1] += 0.5;
            q
        }])
        .unwrap();
        let r = transport(&e.spec, &c, 512).unwrap();
        assert!(r.metric_drift / c.parameter_length() < 1e-8, "{}: {}", e.name, r.metric_drift);
    }
}

#[test]
fn gradient_check_flags_wrong_derivatives() {
    // Sanity of the oracle itself: a perturbed expression disagrees with the FD of the original.
    let f: Expr = parse("sin(x1)^2").unwrap();
    let fd_grad = {
        let h = 1e-6;
        let p = std::f64::consts::FRAC_PI_4;
        (f.eval(&[p + h]).unwrap() - f.eval(&[p - h]).unwrap()) / (2.0 * h)
    };
    assert!((fd_grad - 1.0).abs() < 1e-8);
    assert!(f.gradient_check(&[0.7], 1e-5).unwrap() < 1e-9);
}
