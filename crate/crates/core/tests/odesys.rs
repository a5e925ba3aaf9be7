use airyproc::fredholm::{bundle_at, NystromConfig};
use airyproc::odesys::{bootstrap, integrate, residual_suite, Controls, SystemParams, SystemState};
use airyproc::KernelSpec;
use proptest::prelude::*;

fn spec(tau: &[f64], xi: &[f64]) -> KernelSpec {
    KernelSpec::from_parts(tau.to_vec(), xi.to_vec()).unwrap()
}

fn config() -> NystromConfig<f64> {
    NystromConfig::new(80)
}

/// Classical RK4 for `q″ = (x + s) q + 2q³`, `r′ = −q²` from `s0` to `s1`.
fn painleve_rk4(x: f64, s0: f64, s1: f64, init: [f64; 3], h: f64) -> [f64; 3] {
    let f = |s: f64, y: [f64; 3]| [y[1], (x + s) * y[0] + 2.0 * y[0].powi(3), -y[0] * y[0]];
    let steps = ((s1 - s0).abs() / h).round() as usize;
    let h = (s1 - s0) / steps as f64;
    let mut y = init;
    let mut s = s0;
    let add =
        |y: [f64; 3], k: [f64; 3], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2]];
    for _ in 0..steps {
        let k1 = f(s, y);
        let k2 = f(s + h / 2.0, add(y, k1, h / 2.0));
        let k3 = f(s + h / 2.0, add(y, k2, h / 2.0));
        let k4 = f(s + h, add(y, k3, h));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s += h;
    }
    y
}

#[test]
fn single_block_follows_painleve_ii() {
    for x in [0.0, -1.0, 1.5] {
        let s = spec(&[0.0], &[x]);
        let init = bootstrap(&s, config(), 6.0, 1e-2).unwrap();
        let traj = integrate(
            &init,
            0.0,
            &SystemParams::from_spec(&s),
            &Controls::default(),
            &[3.0],
        )
        .unwrap();
        let rk = painleve_rk4(
            x,
            6.0,
            0.0,
            [init.q[(0, 0)], init.dq[(0, 0)], init.r[(0, 0)]],
            1e-3,
        );
        let end = &traj.last;
        assert!((end.q[(0, 0)] - rk[0]).abs() < 1e-6, "q at {x}");
        assert!((end.dq[(0, 0)] - rk[1]).abs() < 1e-6, "q' at {x}");
        assert!((end.r[(0, 0)] - rk[2]).abs() < 1e-6, "r at {x}");
        for st in traj.states.iter().chain([end]) {
            assert!((st.q[(0, 0)] - st.q_tilde[(0, 0)]).abs() <= 1e-10);
        }
    }
}

#[test]
fn fixed_steps_converge_at_fifth_order() {
    let s = spec(&[0.0, 0.5], &[0.3, -0.2]);
    let params = SystemParams::from_spec(&s);
    let init = bootstrap(&s, config(), 6.0, 1e-2).unwrap();
    let tight = Controls {
        rtol: 1e-13,
        atol: 1e-15,
        ..Controls::default()
    };
    let reference = integrate(&init, 0.0, &params, &tight, &[]).unwrap().last;
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let last = integrate(&init, 0.0, &params, &Controls::fixed(h), &[])
                .unwrap()
                .last;
            last.max_deviation_qr(&reference)
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((20.0..=45.0).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn trajectory_matches_fredholm_at_every_shift() {
    let cases: [(&[f64], &[f64]); 3] = [
        (&[0.0], &[-0.5]),
        (&[0.0, 0.5], &[0.3, -0.2]),
        (&[0.0, 0.5, 1.2], &[0.2, -0.1, 0.4]),
    ];
    let outs = [5.0, 4.0, 3.0, 2.0, 1.0, 0.0];
    for (tau, xi) in cases {
        let s = spec(tau, xi);
        let init = bootstrap(&s, config(), 6.0, 1e-2).unwrap();
        let traj = integrate(
            &init,
            0.0,
            &SystemParams::from_spec(&s),
            &Controls::default(),
            &outs,
        )
        .unwrap();
        for (st, &shift) in traj.states.iter().zip(&outs) {
            let b = bundle_at(&s.shifted(shift), config()).unwrap();
            for (a, e) in [(&st.q, &b.q), (&st.q_tilde, &b.q_tilde), (&st.r, &b.r)] {
                let dev = (a - e).max_abs();
                assert!(dev < 1e-5, "m={} shift {shift}: {dev:e}", tau.len());
            }
            assert!((st.log_det - b.logdet).abs() < 1e-5);
        }
    }
}

#[test]
fn trace_of_r_tracks_log_det_along_trajectory() {
    let s = spec(&[0.0, 0.5], &[0.0, 0.0]);
    let init = bootstrap(&s, config(), 6.0, 1e-2).unwrap();
    let h = 1e-3;
    let centers = [4.0, 2.0, 0.5];
    let outs: Vec<f64> = centers.iter().flat_map(|&c| [c + h, c, c - h]).collect();
    let traj = integrate(
        &init,
        0.0,
        &SystemParams::from_spec(&s),
        &Controls::default(),
        &outs,
    )
    .unwrap();
    for k in 0..centers.len() {
        let [hi, mid, lo] = [
            &traj.states[3 * k],
            &traj.states[3 * k + 1],
            &traj.states[3 * k + 2],
        ];
        let d_trace = (hi.r.trace() - lo.r.trace()) / (2.0 * h);
        let expect = -mid.q.theta_product(&mid.q_tilde).trace();
        assert!((d_trace - expect).abs() < 1e-6, "{d_trace} vs {expect}");
        let d_logdet = (hi.log_det - lo.log_det) / (2.0 * h);
        assert!((d_logdet - mid.r.trace()).abs() < 1e-6);
    }
}

#[test]
fn forward_integration_reaches_fredholm_values() {
    let s = spec(&[0.0, 0.5], &[0.3, -0.2]);
    let init = bootstrap(&s, config(), 0.0, 1e-2).unwrap();
    let traj = integrate(
        &init,
        2.0,
        &SystemParams::from_spec(&s),
        &Controls::default(),
        &[1.0],
    )
    .unwrap();
    for (st, shift) in [(&traj.states[0], 1.0), (&traj.last, 2.0)] {
        let b = bundle_at(&s.shifted(shift), config()).unwrap();
        assert!((&st.q - &b.q).max_abs() < 1e-6);
        assert!((&st.r - &b.r).max_abs() < 1e-6);
    }
}

#[test]
fn system_residuals_are_small() {
    let s = spec(&[0.0, 0.5, 1.2], &[0.2, -0.1, 0.4]);
    let report = residual_suite(&s, config(), 1e-2).unwrap();
    assert!(report.max_relative() < 1e-6, "{report:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_state_stays_zero(m in 1usize..4, start in -2.0f64..6.0, end in -3.0f64..6.0, x0 in -2.0f64..2.0) {
        let tau: Vec<f64> = (0..m).map(|k| 0.4 * k as f64).collect();
        let params = SystemParams::new(tau, vec![x0; m]).unwrap();
        let traj = integrate(&SystemState::zeros(m, start), end, &params, &Controls::default(), &[]).unwrap();
        prop_assert_eq!(traj.last.q.max_abs(), 0.0);
        prop_assert_eq!(traj.last.r.max_abs(), 0.0);
        prop_assert_eq!(traj.last.log_det, 0.0);
        prop_assert_eq!(traj.last.shift, end);
    }
}
