#![allow(clippy::excessive_precision)]

use airyproc::kernel::{k_entry, l_entry};
use airyproc::quadrature::gauss_legendre;
use airyproc::specfun::{airy_ai, airy_ai_pair, NEG_AIP0};
use airyproc::KernelSpec;
use proptest::prelude::*;

fn spec(tau: &[f64], xi: &[f64]) -> KernelSpec {
    KernelSpec::from_parts(tau.to_vec(), xi.to_vec()).unwrap()
}

/// Christoffel–Darboux form of the Airy kernel.
fn airy_kernel(x: f64, y: f64) -> f64 {
    let (ax, apx) = airy_ai_pair(x).unwrap();
    let (ay, apy) = airy_ai_pair(y).unwrap();
    if x == y {
        apx * apx - x * ax * ax
    } else {
        (ax * apy - apx * ay) / (x - y)
    }
}

#[test]
fn diagonal_blocks_match_christoffel_darboux() {
    let s = spec(&[0.0, 0.8], &[-2.0, -2.0]);
    for k in 0..9 {
        for l in 0..9 {
            let x = -3.0 + 0.75 * f64::from(k);
            let y = -3.0 + 0.7 * f64::from(l);
            if (x - y).abs() < 1e-3 {
                continue;
            }
            for i in 0..2 {
                let v = l_entry(&s, i, i, x, y).unwrap();
                assert!((v - airy_kernel(x, y)).abs() < 1e-9, "({i},{x},{y})");
            }
        }
    }
}

#[test]
fn origin_value_is_derivative_squared() {
    let s = spec(&[0.0], &[0.0]);
    let v = l_entry(&s, 0, 0, 0.0, 0.0).unwrap();
    assert!((v - NEG_AIP0 * NEG_AIP0).abs() < 1e-12);
    assert!((v - 0.066987483779663974144).abs() < 1e-12);
}

/// `−∫_{−∞}^0 e^{sz} Ai(x+z) Ai(y+z) dz`, written as the Gaussian full-line
/// integral minus the (0, ∞) part, which is integrated independently.
fn upper_block_oracle(x: f64, y: f64, s: f64) -> f64 {
    let full = (s.powi(3) / 12.0 - s * (x + y) / 2.0 - (x - y).powi(2) / (4.0 * s)).exp()
        / (2.0 * (std::f64::consts::PI * s).sqrt());
    let rule = gauss_legendre::<f64>(30).unwrap();
    let mut right = 0.0;
    for p in 0..30 {
        let a = f64::from(p);
        right += rule.integrate(a, a + 1.0, |z| {
            (s * z).exp() * airy_ai(x + z).unwrap() * airy_ai(y + z).unwrap()
        });
    }
    -(full - right)
}

#[test]
fn upper_blocks_match_gaussian_closed_form() {
    for gap in [0.5, 1.0, 2.0] {
        let s = spec(&[0.0, gap], &[-1.5, -1.5]);
        for (x, y) in [(0.0, 0.0), (0.3, -0.7), (-1.2, 1.0), (2.0, 2.5)] {
            let v = l_entry(&s, 0, 1, x, y).unwrap();
            let oracle = upper_block_oracle(x, y, gap);
            assert!(
                (v - oracle).abs() < 1e-10,
                "gap {gap} ({x},{y}): {v} vs {oracle}"
            );
        }
    }
    // 30-digit reference
    let v = l_entry(&spec(&[0.0, 1.0], &[-1.0, -1.0]), 0, 1, 0.3, -0.7).unwrap();
    assert!((v + 0.134974419194032).abs() < 1e-12);
}

#[test]
fn upper_block_decays_with_gap() {
    // 30-digit reference values of −∫_{−∞}^0 e^{sz} Ai(z)² dz
    let reference = [
        (5.0, -0.0328813221750952),
        (10.0, -0.0145392199050225),
        (20.0, -0.0067764960719139),
    ];
    let mut last = f64::INFINITY;
    for (gap, expect) in reference {
        let v = l_entry(&spec(&[0.0, gap], &[0.0, 0.0]), 0, 1, 0.0, 0.0).unwrap();
        assert!((v - expect).abs() < 1e-12, "gap {gap}: {v}");
        assert!(v.abs() < last);
        last = v.abs();
    }
}

#[test]
fn decay_in_first_argument_tracks_airy() {
    let s = spec(&[0.0, 1.0], &[0.0, 0.0]);
    for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let near = l_entry(&s, i, j, 5.0, 0.0).unwrap().abs();
        let far = l_entry(&s, i, j, 10.0, 0.0).unwrap().abs();
        let airy_ratio = airy_ai(10.0f64).unwrap() / airy_ai(5.0f64).unwrap();
        let ratio = far / near;
        assert!(ratio < 1e-4, "({i},{j}) ratio {ratio}");
        assert!(
            ratio > 1e-2 * airy_ratio && ratio < 1e2 * airy_ratio,
            "({i},{j}) ratio {ratio}"
        );
    }
}

#[test]
fn indicator_is_right_continuous() {
    let s = spec(&[0.0, 1.0], &[0.5, -0.25]);
    assert_eq!(k_entry(&s, 0, 1, 0.0, -0.3).unwrap(), 0.0);
    assert_eq!(
        k_entry(&s, 0, 1, 0.0, -0.25).unwrap(),
        l_entry(&s, 0, 1, 0.0, -0.25).unwrap()
    );
    assert_eq!(
        k_entry(&s, 1, 0, 0.0, 0.6).unwrap(),
        l_entry(&s, 1, 0, 0.0, 0.6).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn depends_only_on_time_differences(
        c in -20.0f64..20.0,
        x in -2.0f64..4.0,
        y in -2.0f64..4.0,
        i in 0usize..3,
        j in 0usize..3,
    ) {
        let base = spec(&[0.0, 0.5, 1.75], &[-2.0, -2.0, -2.0]);
        let moved = KernelSpec::new(base.tau.shifted(c), base.xi.clone()).unwrap();
        let a = l_entry(&base, i, j, x, y).unwrap();
        let b = l_entry(&moved, i, j, x, y).unwrap();
        prop_assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
    }

    #[test]
    fn symmetric_in_space_arguments(x in -2.0f64..4.0, y in -2.0f64..4.0, i in 0usize..2, j in 0usize..2) {
        let s = spec(&[0.0, 0.7], &[-2.0, -2.0]);
        let a = l_entry(&s, i, j, x, y).unwrap();
        let b = l_entry(&s, i, j, y, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
    }
}
