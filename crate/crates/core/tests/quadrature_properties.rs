use proptest::prelude::*;

use spiral_stab::numerics::c;
use spiral_stab::quadrature::{
    fp_integral, integrate_regular, pv_integral, verify_a_pv_integral, verify_k_integral, verify_mode_integral, Curve,
    PoleLattice, QuadratureSpec,
};
use spiral_stab::spiral::{PerturbationWeights, Sign};
use spiral_stab::SpiralConfig;

fn cfg(m: usize, a: f64, alpha: f64) -> SpiralConfig {
    SpiralConfig::new(m, a, alpha).unwrap()
}

#[test]
fn doubling_the_radius_changes_nothing() {
    for (m, a) in [(3, 2.0), (4, 3.0)] {
        let cf = cfg(m, a, 0.3);
        let spec = QuadratureSpec::default();
        let r1 = verify_k_integral(&cf, &spec).unwrap();
        let r2 = verify_k_integral(&cf, &spec.with_radius(80.0 / a)).unwrap();
        assert!((r1.numeric - r2.numeric).norm() < 1e-10, "{r1:?} {r2:?}");
        assert!(r1.rel_err < 1e-6 && r2.rel_err < 1e-6);
    }
}

#[test]
fn truncation_bound_for_every_identity() {
    let cf = cfg(3, 1.5, 0.4);
    let spec = QuadratureSpec::default();
    let r = spec.radius_for(cf.a);
    let wider = spec.with_radius(r + 5.0 / cf.a);
    let w = PerturbationWeights::symmetric(3, c(1.0, 0.0), c(1.0, 0.0));
    let pairs = [
        (verify_k_integral(&cf, &spec).unwrap(), verify_k_integral(&cf, &wider).unwrap()),
        (verify_a_pv_integral(&cf, &spec).unwrap(), verify_a_pv_integral(&cf, &wider).unwrap()),
        (
            verify_mode_integral(&cf, Sign::Plus, &w, &spec).unwrap(),
            verify_mode_integral(&cf, Sign::Plus, &w, &wider).unwrap(),
        ),
        (
            verify_mode_integral(&cf, Sign::Minus, &w, &spec).unwrap(),
            verify_mode_integral(&cf, Sign::Minus, &w, &wider).unwrap(),
        ),
    ];
    for (p, q) in pairs {
        assert!((p.numeric - q.numeric).norm() < (-5f64).exp() * p.numeric.norm(), "{}", p.identity);
    }
}

#[test]
fn lattice_scan_finds_only_the_diagonal_pole() {
    for (m, a) in [(3, 2.0), (5, 1.0), (4, 6.0)] {
        let radius = 40.0 / a;
        for d in 0..m as i64 {
            let lat = PoleLattice::for_branches(a, m, d);
            let on_axis = lat.real_axis_indices(radius);
            let found = lat.scan_real_axis(radius, 200_001, 1e-3);
            if d == 0 {
                assert_eq!(on_axis, vec![0]);
                assert_eq!(found.len(), 1, "M = {m}, a = {a}: {found:?}");
                assert!(found[0].abs() < 1e-3);
            } else {
                assert!(on_axis.is_empty());
                assert!(found.is_empty(), "M = {m}, a = {a}, d = {d}: {found:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn finite_part_reduces_on_zeros(x in -0.5f64..0.5, p in 0.1f64..1.5, q in -1.0f64..1.0) {
        let spec = QuadratureSpec::default();
        let line = Curve::line();
        let h = move |t: f64| c((p * t).exp(), q * t.cos());
        let dz = fp_integral(|t| (t - x).sin().powi(2) * h(t), &line, x, (-1.0, 1.0), &spec).unwrap().value;
        let plain = integrate_regular(
            |t| if t == x { h(t) } else { ((t - x).sin() / (t - x)).powi(2) * h(t) },
            -1.0,
            1.0,
            &spec,
        )
        .unwrap()
        .value;
        prop_assert!((dz - plain).norm() < 1e-9);
        let sz = fp_integral(|t| (t - x).sin() * h(t), &line, x, (-1.0, 1.0), &spec).unwrap().value;
        let pv = pv_integral(|t| if t == x { h(t) } else { (t - x).sin() / (t - x) * h(t) }, x, (-1.0, 1.0), &spec)
            .unwrap()
            .value;
        prop_assert!((sz - pv).norm() < 1e-9);
    }

    #[test]
    fn by_parts_cross_check_stays_quiet(a in 0.5f64..3.0, x in -0.4f64..0.4) {
        let spec = QuadratureSpec::default();
        let curve = Curve::exponential(c(a, 1.0), 0.0);
        let fp = fp_integral(|t| c((a * t).exp(), (0.5 * t).sin()), &curve, x, (-1.0, 1.0), &spec).unwrap();
        prop_assert!(!fp.mismatch_warning, "{fp:?}");
        let bp = fp.by_parts.unwrap();
        prop_assert!((bp.value - fp.value).norm() < 10.0 * spec.tol * fp.value.norm().max(1.0));
    }
}
