use airyproc::fredholm::identities::{
    check_diagonal_identities, check_partial_u, logdet_gradient_fd,
};
use airyproc::fredholm::{
    alpha_independence_check, bundle_at, discretize, discretize_with, fredholm_det, NystromConfig,
    Resolvent, DEFAULT_CUTOFF,
};
use airyproc::kernel::l_entry;
use airyproc::specfun::airy_ai;
use airyproc::KernelSpec;
use proptest::prelude::*;

fn spec(tau: &[f64], xi: &[f64]) -> KernelSpec {
    KernelSpec::from_parts(tau.to_vec(), xi.to_vec()).unwrap()
}

fn det(s: &KernelSpec, n: usize) -> f64 {
    fredholm_det(&discretize(s, n).unwrap()).unwrap().det
}

#[test]
fn tracy_widom_at_zero() {
    let s = spec(&[0.0], &[0.0]);
    let (d80, d160) = (det(&s, 80), det(&s, 160));
    assert!((d160 - d80).abs() < 1e-9);
    // frozen from the n = 160 run
    assert!((d160 - 0.969372828355263).abs() < 1e-13);
}

#[test]
fn doubling_from_forty_is_converged() {
    let s = spec(&[0.0], &[0.0]);
    assert!((det(&s, 80) - det(&s, 40)).abs() < 1e-8);
}

#[test]
fn marginalizes_with_far_right_threshold() {
    for x in [-1.5, 0.0, 0.7] {
        let single = det(&spec(&[0.0], &[x]), 80);
        for tau in [[0.0, 0.3], [0.0, 2.0]] {
            let a = det(&spec(&tau, &[x, 8.0]), 80);
            let b = det(&spec(&tau, &[8.0, x]), 80);
            assert!(
                (a - single).abs() < 1e-6 && (b - single).abs() < 1e-6,
                "{x}"
            );
        }
    }
}

#[test]
fn upper_block_is_negative_where_it_matters() {
    let s = spec(&[0.0, 1.0], &[0.0, 0.0]);
    let op = discretize(&s, 48).unwrap();
    let (r0, c0) = (op.offsets[0], op.offsets[1]);
    let (rows, cols) = (&op.blocks[0], &op.blocks[1]);
    let entry = |a: usize, b: usize| op.matrix[(r0 + a, c0 + b)];
    let mut max: f64 = 0.0;
    for a in 0..rows.nodes.len() {
        for b in 0..cols.nodes.len() {
            max = max.max(entry(a, b).abs());
        }
    }
    for a in 0..rows.nodes.len() {
        for b in 0..cols.nodes.len() {
            let (x, y, v) = (rows.nodes[a], cols.nodes[b], entry(a, b));
            if v.abs() > 1e-6 * max || (x < 6.0 && y < 6.0) {
                assert!(v < 0.0, "({x},{y}) = {v}");
            }
            if v > 0.0 {
                // a genuine positive tail value, not assembly noise
                let exact =
                    l_entry(&s, 0, 1, x, y).unwrap() * rows.sqrt_weights[a] * cols.sqrt_weights[b];
                assert!((v - exact).abs() < 1e-3 * v, "({x},{y}) = {v} vs {exact}");
            }
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    for (tau, xi) in [
        (&[0.0][..], &[-0.5][..]),
        (&[0.0, 0.5][..], &[0.3, -0.2][..]),
    ] {
        let (fd, r) = logdet_gradient_fd(&spec(tau, xi), NystromConfig::new(80), 1e-4).unwrap();
        for (a, b) in fd.iter().zip(&r) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }
}

#[test]
fn factorization_error_decreases_with_gap() {
    let one = |x: f64| det(&spec(&[0.0], &[x]), 64);
    for (x1, x2) in [(0.0, 0.0), (-1.0, 0.5)] {
        let product = one(x1) * one(x2);
        let errs: Vec<f64> = [2.0, 5.0, 10.0]
            .iter()
            .map(|&g| (det(&spec(&[0.0, g], &[x1, x2]), 64) - product).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }
}

#[test]
fn alpha_does_not_matter() {
    let s1 = spec(&[0.0], &[0.0]);
    let r1 = alpha_independence_check(&s1, &[-5.0, -10.0, -15.0], 64).unwrap();
    assert!(r1.max_deviation <= 1e-8 && r1.det_deviation <= 1e-9);
    let s2 = spec(&[0.0, 1.0], &[0.3, -0.2]);
    let r2 = alpha_independence_check(&s2, &[-5.2, -10.2, -15.2], 64).unwrap();
    assert!(r2.max_deviation <= 1e-7 && r2.det_deviation <= 1e-9);
}

#[test]
fn differentiation_identities_hold() {
    for (tau, xi) in [
        (&[0.0, 0.5][..], &[0.3, -0.2][..]),
        (&[0.0, 0.5, 1.2][..], &[0.2, -0.1, 0.4][..]),
    ] {
        let s = spec(tau, xi);
        let config = NystromConfig::new(80);
        for r in check_diagonal_identities(&s, config, 1e-3).unwrap() {
            assert!(r.residual < 1e-4, "{r:?}");
        }
        let pu = check_partial_u(&s, config, 1e-3).unwrap();
        assert!(pu.residual < 1e-4, "{pu:?}");
    }
}

#[test]
fn doubled_cutoff_changes_nothing() {
    let s = spec(&[0.0, 1.0], &[0.0, -0.5]);
    let base = fredholm_det(&discretize_with(&s, NystromConfig::new(64)).unwrap())
        .unwrap()
        .det;
    let wide = NystromConfig {
        nodes: 128,
        cutoff: 2.0 * DEFAULT_CUTOFF,
        alpha_nodes: 0,
    };
    let doubled = fredholm_det(&discretize_with(&s, wide).unwrap())
        .unwrap()
        .det;
    assert!((base - doubled).abs() < 1e-12);
}

#[test]
fn far_right_bundle_reduces_to_airy() {
    let s = spec(&[0.0, 0.4], &[8.0, 8.5]);
    let b = bundle_at(&s, NystromConfig::new(48)).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let expect = if i == j {
                airy_ai(s.xi.thresholds()[i]).unwrap()
            } else {
                0.0
            };
            assert!((b.q[(i, j)] - expect).abs() < 1e-8);
        }
    }
    assert!((b.det - 1.0).abs() < 1e-6);
    assert!(b.logdet_gradient().iter().all(|g| g.abs() <= 1e-6));
}

#[test]
fn single_block_q_equals_q_tilde() {
    for x in [-2.0, 0.0, 1.5] {
        let b = bundle_at(&spec(&[0.0], &[x]), NystromConfig::new(64)).unwrap();
        assert!((b.q[(0, 0)] - b.q_tilde[(0, 0)]).abs() < 1e-10);
    }
}

#[test]
fn resolvent_extension_is_continuous_from_the_right() {
    let s = spec(&[0.0, 0.5], &[0.3, -0.2]);
    let res = Resolvent::new(discretize(&s, 64).unwrap()).unwrap();
    let b = res.bundle();
    for i in 0..2 {
        for j in 0..2 {
            let xi = s.xi.thresholds();
            let at = res.r_at(i, j, xi[i], xi[j]).unwrap();
            let near = res.r_at(i, j, xi[i], xi[j] + 1e-7).unwrap();
            assert!((at - b.r[(i, j)]).abs() < 1e-13);
            assert!((near - at).abs() < 1e-5);
        }
    }
}

#[test]
fn assembly_is_independent_of_thread_count() {
    let s = spec(&[0.0, 0.5, 1.2], &[0.2, -0.1, 0.4]);
    let build = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bundle_at(&s, NystromConfig::new(40)).unwrap())
    };
    let (a, b) = (build(1), build(4));
    assert_eq!(a.det.to_bits(), b.det.to_bits());
    assert_eq!(a.r, b.r);
    assert_eq!(a.q, b.q);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn det_is_a_monotone_probability(x1 in -3.0f64..3.0, x2 in -3.0f64..3.0, gap in 0.2f64..3.0, bump in 0.05f64..1.0) {
        let base = det(&spec(&[0.0, gap], &[x1, x2]), 40);
        prop_assert!(base > 0.0 && base <= 1.0);
        prop_assert!(det(&spec(&[0.0, gap], &[x1 + bump, x2]), 40) >= base);
        prop_assert!(det(&spec(&[0.0, gap], &[x1, x2 + bump]), 40) >= base);
        // joint probability below each marginal
        prop_assert!(base <= det(&spec(&[0.0], &[x1]), 40) + 1e-12);
    }
}
