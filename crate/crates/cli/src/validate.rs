use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use airyproc::dist::{det_via_representation, CdfOptions, IntegrandSource, DEFAULT_ETA_MAX};
use airyproc::fredholm::identities::{
    check_diagonal_identities, check_partial_u, logdet_gradient_fd,
};
use airyproc::fredholm::{
    alpha_independence_check, bundle_at, discretize_with, fredholm_det, NystromConfig,
};
use airyproc::odesys::{
    bootstrap, integrate, residual_suite, Controls, SystemParams, DEFAULT_START_SHIFT,
    DEFAULT_STENCIL,
};
use airyproc::quadrature::gauss_legendre;
use airyproc::specfun::airy;
use airyproc::KernelSpec;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Absent when the check could not be computed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub nodes: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

type Probe = Box<dyn Fn(usize) -> airyproc::Result<f64> + Send + Sync>;

struct Spec {
    name: String,
    tolerance: f64,
    probe: Probe,
}

fn spec(tau: &[f64], xi: &[f64]) -> airyproc::Result<KernelSpec> {
    KernelSpec::from_parts(tau.to_vec(), xi.to_vec())
}

fn det(s: &KernelSpec, config: NystromConfig<f64>) -> airyproc::Result<f64> {
    Ok(fredholm_det(&discretize_with(s, config)?)?.det)
}

const STENCIL_CONFIGS: [(&[f64], &[f64]); 3] = [
    (&[0.0], &[0.0]),
    (&[0.0, 1.0], &[0.0, 0.0]),
    (&[0.0, 0.5, 1.2], &[0.2, -0.1, 0.4]),
];

const IDENTITY_TAU: [f64; 2] = [0.0, 1.0];
const IDENTITY_XI: [f64; 2] = [0.3, -0.2];

fn checks() -> Vec<Spec> {
    let mut out: Vec<Spec> = Vec::new();
    let mut add = |name: String, tolerance: f64, probe: Probe| {
        out.push(Spec {
            name,
            tolerance,
            probe,
        })
    };

    for (tau, xi) in STENCIL_CONFIGS {
        let m = tau.len();
        add(
            format!("system equations, relative residual, m={m}"),
            5e-4,
            Box::new(move |n| {
                Ok(residual_suite(&spec(tau, xi)?, NystromConfig::new(n), 1e-2)?.max_relative())
            }),
        );
        add(
            format!("log-det gradient vs finite differences, m={m}"),
            1e-5,
            Box::new(move |n| {
                let (fd, r) = logdet_gradient_fd(&spec(tau, xi)?, NystromConfig::new(n), 1e-4)?;
                Ok(fd
                    .iter()
                    .zip(&r)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max))
            }),
        );
    }

    let labels = [
        "Dq identity",
        "Du identity",
        "Dr identity",
        "D log det = Tr r",
        "D^2 log det identity",
    ];
    for (k, label) in labels.into_iter().enumerate() {
        add(
            format!("{label}, m=2"),
            1e-4,
            Box::new(move |n| {
                let res = check_diagonal_identities(
                    &spec(&IDENTITY_TAU, &IDENTITY_XI)?,
                    NystromConfig::new(n),
                    1e-3,
                )?;
                Ok(res[k].residual)
            }),
        );
    }
    add(
        "single-threshold derivative of u, m=2".into(),
        1e-4,
        Box::new(|n| {
            Ok(check_partial_u(
                &spec(&IDENTITY_TAU, &IDENTITY_XI)?,
                NystromConfig::new(n),
                1e-3,
            )?
            .residual)
        }),
    );

    for (tau, xi) in [
        (&[0.0][..], &[0.0][..]),
        (&[0.0, 0.5][..], &[0.3, -0.2][..]),
    ] {
        add(
            format!("exponential representation vs determinant, m={}", tau.len()),
            5e-5,
            Box::new(move |n| {
                let s = spec(tau, xi)?;
                let opts = CdfOptions::default().with_nodes(n);
                let rep = det_via_representation(
                    &s.tau,
                    &s.xi,
                    DEFAULT_ETA_MAX,
                    IntegrandSource::Fredholm,
                    &opts,
                )?;
                Ok((rep.value - det(&s, opts.nystrom)?).abs())
            }),
        );
    }

    for (tau, xi) in [(&[0.0][..], &[0.0][..]), (&[0.0, 1.0][..], &[0.0, 0.0][..])] {
        add(
            format!("integrated q at shift 0 vs resolvent, m={}", tau.len()),
            1e-6,
            Box::new(move |n| {
                let s = spec(tau, xi)?;
                let config = NystromConfig::new(n);
                let init = bootstrap(&s, config, DEFAULT_START_SHIFT, DEFAULT_STENCIL)?;
                let traj = integrate(
                    &init,
                    0.0,
                    &SystemParams::from_spec(&s),
                    &Controls::default(),
                    &[],
                )?;
                Ok((&traj.last.q - &bundle_at(&s, config)?.q).max_abs())
            }),
        );
    }

    add(
        "Painleve II residual on shifts [0, 4], m=1".into(),
        1e-4,
        Box::new(|n| {
            let s = spec(&[0.0], &[0.0])?;
            let shifts: Vec<f64> = (0..=8).map(|k| 0.5 * f64::from(k)).collect();
            let res = shifts
                .par_iter()
                .map(|&eta| {
                    Ok(
                        residual_suite(&s.shifted(eta), NystromConfig::new(n), 1e-2)?
                            .eq_q
                            .residual,
                    )
                })
                .collect::<airyproc::Result<Vec<f64>>>()?;
            Ok(res.into_iter().fold(0.0, f64::max))
        }),
    );
    add(
        "q = q~ along the m=1 trajectory".into(),
        1e-10,
        Box::new(|n| {
            let s = spec(&[0.0], &[0.0])?;
            let init = bootstrap(
                &s,
                NystromConfig::new(n),
                DEFAULT_START_SHIFT,
                DEFAULT_STENCIL,
            )?;
            let outs: Vec<f64> = (0..=24).map(|k| 0.25 * f64::from(k)).collect();
            let traj = integrate(
                &init,
                0.0,
                &SystemParams::from_spec(&s),
                &Controls::default(),
                &outs,
            )?;
            Ok(traj
                .states
                .iter()
                .map(|st| (&st.q - &st.q_tilde).max_abs())
                .fold(0.0, f64::max))
        }),
    );

    add(
        "marginalization with a far-right threshold, m=2".into(),
        1e-6,
        Box::new(|n| {
            let c = NystromConfig::new(n);
            let one = det(&spec(&[0.0], &[0.5])?, c)?;
            let a = det(&spec(&[0.0, 1.0], &[0.5, 8.0])?, c)?;
            let b = det(&spec(&[0.0, 1.0], &[8.0, 0.5])?, c)?;
            Ok((a - one).abs().max((b - one).abs()))
        }),
    );
    add(
        "time-shift invariance".into(),
        1e-10,
        Box::new(|n| {
            let c = NystromConfig::new(n);
            Ok((det(&spec(&[0.0, 1.0], &[0.0, 0.0])?, c)?
                - det(&spec(&[10.0, 11.0], &[0.0, 0.0])?, c)?)
            .abs())
        }),
    );
    add(
        "factorization error decreasing over gaps 2, 5, 10 (largest increase)".into(),
        0.0,
        Box::new(|n| {
            let c = NystromConfig::new(n);
            let f1 = det(&spec(&[0.0], &[0.0])?, c)?;
            let errs = [2.0, 5.0, 10.0]
                .iter()
                .map(|&g| Ok((det(&spec(&[0.0, g], &[0.0, 0.0])?, c)? - f1 * f1).abs()))
                .collect::<airyproc::Result<Vec<f64>>>()?;
            Ok(errs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
        }),
    );
    add(
        "bounds and coordinate monotonicity on a 3x3 lattice (largest violation)".into(),
        0.0,
        Box::new(|n| {
            let c = NystromConfig::new(n);
            let grid = [-1.0, 0.0, 1.0];
            let mut vals = [[0.0; 3]; 3];
            for (a, &x) in grid.iter().enumerate() {
                for (b, &y) in grid.iter().enumerate() {
                    vals[a][b] = det(&spec(&[0.0, 1.0], &[x, y])?, c)?;
                }
            }
            let mut worst: f64 = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let v = vals[a][b];
                    worst = worst.max(v - 1.0).max(if v > 0.0 { 0.0 } else { 1.0 - v });
                    if a > 0 {
                        worst = worst.max(vals[a - 1][b] - v);
                    }
                    if b > 0 {
                        worst = worst.max(vals[a][b - 1] - v);
                    }
                }
            }
            Ok(worst)
        }),
    );

    add(
        "Airy Wronskian on [-10, 10]".into(),
        1e-12,
        Box::new(|_| {
            let mut worst: f64 = 0.0;
            for k in 0..=2000 {
                let x = -10.0 + 0.01 * f64::from(k);
                worst = worst.max((airy(x)?.wronskian() - std::f64::consts::FRAC_1_PI).abs());
            }
            Ok(worst)
        }),
    );
    add(
        "Gauss-Legendre exactness through degree 2n-1, n <= 20".into(),
        1e-13,
        Box::new(|_| {
            let mut worst: f64 = 0.0;
            for n in 1..=20 {
                let rule = gauss_legendre::<f64>(n)?;
                for d in 0..2 * n {
                    let exact = if d % 2 == 1 {
                        0.0
                    } else {
                        2.0 / (d as f64 + 1.0)
                    };
                    worst =
                        worst.max((rule.integrate(-1.0, 1.0, |x| x.powi(d as i32)) - exact).abs());
                }
            }
            Ok(worst)
        }),
    );
    add(
        "Nystrom self-convergence, nodes n vs 2n, m=1".into(),
        1e-8,
        Box::new(|n| {
            let s = spec(&[0.0], &[0.0])?;
            Ok((det(&s, NystromConfig::new(2 * n))? - det(&s, NystromConfig::new(n))?).abs())
        }),
    );
    add(
        "doubled truncation window, m=2".into(),
        1e-10,
        Box::new(|n| {
            let s = spec(&[0.0, 1.0], &[0.0, 0.0])?;
            let wide = NystromConfig {
                nodes: 2 * n,
                cutoff: 2.0 * airyproc::fredholm::DEFAULT_CUTOFF,
                alpha_nodes: 0,
            };
            Ok((det(&s, wide)? - det(&s, NystromConfig::new(n))?).abs())
        }),
    );
    for (tau, xi, tol) in [
        (&[0.0][..], &[0.0][..], 1e-8),
        (&[0.0, 1.0][..], &[0.0, 0.0][..], 1e-7),
    ] {
        add(
            format!("alpha independence, m={}", tau.len()),
            tol,
            Box::new(move |n| {
                let s = spec(tau, xi)?;
                let lo = s.xi.min();
                let rep = alpha_independence_check(&s, &[lo - 5.0, lo - 10.0, lo - 15.0], n)?;
                Ok(rep.max_deviation.max(rep.det_deviation))
            }),
        );
    }
    out
}

/// Runs every check at `nodes` per block. Failures and errors are recorded,
/// never propagated.
pub fn run_suite(nodes: usize) -> Report {
    let checks: Vec<Check> = checks()
        .par_iter()
        .map(|c| match (c.probe)(nodes) {
            Ok(r) => Check {
                name: c.name.clone(),
                residual: Some(r),
                tolerance: c.tolerance,
                pass: r.is_finite() && r <= c.tolerance,
                error: None,
            },
            Err(e) => Check {
                name: c.name.clone(),
                residual: None,
                tolerance: c.tolerance,
                pass: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let passed = checks.iter().all(|c| c.pass);
    Report {
        nodes,
        checks,
        passed,
    }
}

pub fn write_report_csv<W: Write>(out: W, report: &Report) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "residual", "tolerance", "pass"])?;
    for c in &report.checks {
        w.write_record([
            c.name.clone(),
            c.residual.map(|r| format!("{r:.16e}")).unwrap_or_default(),
            format!("{:.16e}", c.tolerance),
            c.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
