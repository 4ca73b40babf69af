use proptest::prelude::*;
use slitstone::expansion::kelvin_point;
use slitstone::slit_basis::*;

fn point() -> impl Strategy<Value = PlanePoint> {
    (0.2f64..5.0, -3.1f64..3.1).prop_map(|(r, t)| PlanePoint::from_polar(r, t))
}

fn expansion() -> impl Strategy<Value = SlitExpansion> {
    prop::collection::vec(-1.0f64..1.0, 1..7).prop_map(|cs| {
        SlitExpansion::from_terms(cs.into_iter().enumerate().map(|(i, c)| (i as i32 - 2, c)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn homogeneity(m in -4i32..8, pt in point(), lambda in 0.25f64..4.0) {
        let idx = HalfIntIndex(m);
        let base = eval_u(idx, pt).unwrap();
        let scaled = eval_u(idx, PlanePoint::new(lambda * pt.x1, lambda * pt.x2)).unwrap();
        let expect = lambda.powf(idx.exponent()) * base;
        prop_assert!((scaled - expect).abs() <= 1e-12 * expect.abs().max(lambda.powf(idx.exponent()) * pt.r().powf(idx.exponent())));
    }

    #[test]
    fn vanishes_on_slit(m in -4i32..8, r in 0.1f64..10.0) {
        let v = eval_u(HalfIntIndex(m), PlanePoint::new(-r, 0.0)).unwrap();
        prop_assert!(v.abs() <= 1e-12 * r.powf(m as f64 + 0.5));
    }

    #[test]
    fn even_in_x2(m in -4i32..8, pt in point()) {
        let a = eval_u(HalfIntIndex(m), pt).unwrap();
        let b = eval_u(HalfIntIndex(m), PlanePoint::new(pt.x1, -pt.x2)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    // Five-point Laplacian of a harmonic function is O(h²) relative.
    #[test]
    fn harmonic_off_slit(m in -3i32..7, r in 1.0f64..4.0, t in -2.5f64..2.5) {
        let pt = PlanePoint::from_polar(r, t);
        let idx = HalfIntIndex(m);
        let h = 1e-3;
        let f = |dx: f64, dy: f64| eval_u(idx, PlanePoint::new(pt.x1 + dx, pt.x2 + dy)).unwrap();
        let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h);
        let mag = r.powf(idx.exponent() - 2.0);
        prop_assert!(lap.abs() <= 1e-3 * mag.max(1.0), "lap = {lap}");
    }

    #[test]
    fn ddx1_matches_gradient(e in expansion(), pt in point()) {
        let (gx, _) = grad_expansion(&e, pt).unwrap();
        let d = eval_expansion(&ddx1(&e), pt).unwrap();
        prop_assert!((gx - d).abs() <= 1e-11 * (1.0 + gx.abs()));
    }

    #[test]
    fn conjugate_is_involution(e in expansion()) {
        let lead = e.lead().unwrap();
        let back = conjugate_expansion(&conjugate_expansion(&e, lead).unwrap(), lead).unwrap();
        prop_assert_eq!(back, e);
    }

    // Translating by τ and back reproduces the expansion far from both
    // origins, up to the truncation error of the two Taylor series.
    #[test]
    fn translate_round_trip(cs in prop::collection::vec(-1.0f64..1.0, 4), tau in -0.5f64..0.5, t in -3.0f64..3.0) {
        let e = SlitExpansion::from_terms(cs.into_iter().enumerate().map(|(i, c)| (i as i32 + 1, c)));
        let there = translate_expansion(&e, tau, DEFAULT_TAYLOR_ORDER).expansion;
        let back = translate_expansion(&there, -tau, DEFAULT_TAYLOR_ORDER).expansion;
        let pt = PlanePoint::from_polar(6.0, t);
        let a = e.eval(pt).unwrap();
        let b = back.eval(pt).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * e.max_abs_coeff() * 6f64.powf(4.5), "{a} vs {b}");
    }

    #[test]
    fn kelvin_is_involution(pt in point(), m in 0.5f64..5.0) {
        let back = kelvin_point(kelvin_point(pt, m).unwrap(), m).unwrap();
        prop_assert!((back.x1 - pt.x1).abs() <= 1e-12 * pt.r() && (back.x2 - pt.x2).abs() <= 1e-12 * pt.r());
    }

    #[test]
    fn w_factors_chain(k in 1usize..6) {
        let c = u_to_w_coeffs(k);
        prop_assert_eq!(c.len(), 2 * k);
        prop_assert_eq!(c[2 * k - 1], 1.0);
        // c_l / c_{l+1} = l + 1/2
        for l in 1..2 * k {
            prop_assert!((c[l - 1] / c[l] - (l as f64 + 0.5)).abs() < 1e-12 * (l as f64 + 0.5));
        }
    }
}

// Central differences converge at second order: error ratio under halving
// gives an observed order ≥ 1.9.
#[test]
fn gradient_fd_order() {
    for m in [-2, 0, 1, 3, 5] {
        let idx = HalfIntIndex(m);
        let pt = PlanePoint::from_polar(1.3, 0.7);
        let (gx, gy) = grad_u(idx, pt).unwrap();
        let err = |h: f64| {
            let f = |dx: f64, dy: f64| eval_u(idx, PlanePoint::new(pt.x1 + dx, pt.x2 + dy)).unwrap();
            let dx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
            let dy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
            (dx - gx).abs().max((dy - gy).abs())
        };
        let order = (err(1e-2) / err(5e-3)).log2();
        assert!(order >= 1.9, "m = {m}: order {order}");
    }
}
