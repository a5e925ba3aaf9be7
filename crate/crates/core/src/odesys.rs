//! The matrix differential system in the diagonal shift variable.
//!
//! With every threshold moved together, `ξ_j ↦ ξ_j + ξ`, the derivative
//! `D = Σ_j ∂/∂ξ_j` becomes `d/dξ` and the base thresholds are parameters:
//!
//! ```text
//! q″ = ξ q + 2 qΘq̃ q − 2[τ, r] q
//! q̃″ = q̃ ξ + 2 q̃ qΘq̃ − 2 q̃ [τ, r]
//! r′ = −qΘq̃ + [τ, r]
//! ```
//!
//! where `ξ = diag(ξ_j + shift)`, `τ = diag(τ_j)` and Θ is the all-ones
//! matrix. The state also carries `log det(I − K)`, whose derivative is
//! `Tr r`. Initial data come from the Fredholm side at a large shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::identities::{shift_stencil, IdentityResidual};
use crate::fredholm::{NystromConfig, ResolventBundle};
use crate::kernel::KernelSpec;
use crate::linalg::Mat;
use crate::num::Real;

/// Shift at which initial data are taken from the Fredholm side.
pub const DEFAULT_START_SHIFT: f64 = 6.0;
/// Leftmost absolute threshold the ODE route is trusted to reach.
pub const DEFAULT_MIN_SHIFT: f64 = -3.0;
/// Spacing of the 5-point stencils used for initial derivatives.
pub const DEFAULT_STENCIL: f64 = 1e-2;

/// Parameters of the system: times and base thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    pub tau: Vec<T>,
    pub base_xi: Vec<T>,
}

impl<T: Real> SystemParams<T> {
    pub fn new(tau: Vec<T>, base_xi: Vec<T>) -> Result<Self> {
        if tau.len() != base_xi.len() || tau.is_empty() {
            return Err(Error::Invalid(
                "times and thresholds must be non-empty and of equal length".into(),
            ));
        }
        Ok(Self { tau, base_xi })
    }

    pub fn from_spec(spec: &KernelSpec<T>) -> Self {
        Self {
            tau: spec.tau.times().to_vec(),
            base_xi: spec.xi.thresholds().to_vec(),
        }
    }

    pub fn m(&self) -> usize {
        self.tau.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState<T> {
    pub shift: T,
    pub q: Mat<T>,
    pub dq: Mat<T>,
    pub q_tilde: Mat<T>,
    pub dq_tilde: Mat<T>,
    pub r: Mat<T>,
    pub log_det: T,
}

/// Derivative of a [`SystemState`] with respect to the shift.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate<T> {
    pub dq: Mat<T>,
    pub d2q: Mat<T>,
    pub dq_tilde: Mat<T>,
    pub d2q_tilde: Mat<T>,
    pub dr: Mat<T>,
    pub dlog_det: T,
}

impl<T: Real> SystemState<T> {
    pub fn zeros(m: usize, shift: T) -> Self {
        let z = Mat::zeros(m, m);
        Self {
            shift,
            q: z.clone(),
            dq: z.clone(),
            q_tilde: z.clone(),
            dq_tilde: z.clone(),
            r: z,
            log_det: T::zero(),
        }
    }

    pub fn m(&self) -> usize {
        self.q.rows()
    }

    /// State assembled from a bundle and separately estimated derivatives.
    pub fn from_bundle(b: &ResolventBundle<T>, dq: Mat<T>, dq_tilde: Mat<T>, shift: T) -> Self {
        Self {
            shift,
            q: b.q.clone(),
            dq,
            q_tilde: b.q_tilde.clone(),
            dq_tilde,
            r: b.r.clone(),
            log_det: b.logdet,
        }
    }

    fn to_flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(5 * self.m() * self.m() + 1);
        for mat in [&self.q, &self.dq, &self.q_tilde, &self.dq_tilde, &self.r] {
            v.extend_from_slice(mat.as_slice());
        }
        v.push(self.log_det);
        v
    }

    fn from_flat(m: usize, shift: T, v: &[T]) -> Self {
        let mm = m * m;
        let take = |k: usize| Mat::from_vec(m, m, v[k * mm..(k + 1) * mm].to_vec());
        Self {
            shift,
            q: take(0),
            dq: take(1),
            q_tilde: take(2),
            dq_tilde: take(3),
            r: take(4),
            log_det: v[5 * mm],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    /// Largest entrywise difference in q, q̃ and r.
    pub fn max_deviation_qr(&self, other: &Self) -> T {
        [
            (&self.q, &other.q),
            (&self.q_tilde, &other.q_tilde),
            (&self.r, &other.r),
        ]
        .iter()
        .map(|(a, b)| (*a - *b).max_abs())
        .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Second derivative of `q` prescribed by the system.
pub fn second_derivative_q<T: Real>(
    q: &Mat<T>,
    qt: &Mat<T>,
    r: &Mat<T>,
    tau: &[T],
    xi: &[T],
) -> Mat<T> {
    let tr = r.diag_commutator(tau);
    let cubic = &q.theta_product(qt) * q;
    &(&q.diag_left(xi) + &cubic.scale(T::lit(2.0))) - &(&tr * q).scale(T::lit(2.0))
}

/// Second derivative of `q̃` prescribed by the system.
pub fn second_derivative_q_tilde<T: Real>(
    q: &Mat<T>,
    qt: &Mat<T>,
    r: &Mat<T>,
    tau: &[T],
    xi: &[T],
) -> Mat<T> {
    let tr = r.diag_commutator(tau);
    let cubic = (qt * q).theta_product(qt);
    &(&qt.diag_right(xi) + &cubic.scale(T::lit(2.0))) - &(qt * &tr).scale(T::lit(2.0))
}

/// First derivative of `r` prescribed by the system.
pub fn derivative_r<T: Real>(q: &Mat<T>, qt: &Mat<T>, r: &Mat<T>, tau: &[T]) -> Mat<T> {
    &r.diag_commutator(tau) - &q.theta_product(qt)
}

/// Right-hand side of the system at `state`.
pub fn rhs<T: Real>(state: &SystemState<T>, params: &SystemParams<T>) -> Result<StateRate<T>> {
    if state.m() != params.m() {
        return Err(Error::Invalid("state and parameters disagree on m".into()));
    }
    if !state.is_finite() || !state.shift.is_finite() {
        return Err(Error::NonFinite {
            what: "system state",
            location: state.shift.to_f64_lossy(),
        });
    }
    let xi: Vec<T> = params.base_xi.iter().map(|&x| x + state.shift).collect();
    let (q, qt, r) = (&state.q, &state.q_tilde, &state.r);
    Ok(StateRate {
        dq: state.dq.clone(),
        d2q: second_derivative_q(q, qt, r, &params.tau, &xi),
        dq_tilde: state.dq_tilde.clone(),
        d2q_tilde: second_derivative_q_tilde(q, qt, r, &params.tau, &xi),
        dr: derivative_r(q, qt, r, &params.tau),
        dlog_det: r.trace(),
    })
}

fn rhs_flat<T: Real>(
    m: usize,
    shift: T,
    y: &[T],
    params: &SystemParams<T>,
    out: &mut [T],
) -> Result<()> {
    let s = SystemState::from_flat(m, shift, y);
    let d = rhs(&s, params)?;
    let mm = m * m;
    for (k, mat) in [&d.dq, &d.d2q, &d.dq_tilde, &d.d2q_tilde, &d.dr]
        .iter()
        .enumerate()
    {
        out[k * mm..(k + 1) * mm].copy_from_slice(mat.as_slice());
    }
    out[5 * mm] = d.dlog_det;
    Ok(())
}

/// Step-size controls for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step magnitude; `None` picks one from the span.
    pub h_init: Option<T>,
    /// Steps smaller than this are treated as a blow-up.
    pub h_min: T,
    pub max_steps: usize,
    /// Take steps of exactly this magnitude with no error control.
    pub fixed_step: Option<T>,
}

impl<T: Real> Default for Controls<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-9),
            atol: T::lit(1e-12),
            h_init: None,
            h_min: T::lit(1e-10),
            max_steps: 200_000,
            fixed_step: None,
        }
    }
}

impl<T: Real> Controls<T> {
    pub fn fixed(h: T) -> Self {
        Self {
            fixed_step: Some(h),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    /// States at the requested output shifts, in the order requested.
    pub states: Vec<SystemState<T>>,
    /// The state at the target shift.
    pub last: SystemState<T>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

// Dormand–Prince 5(4) tableau with its continuous extension.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrates from `initial.shift` to `target_shift` (either direction)
/// with the Dormand–Prince 5(4) pair. States at `outputs` come from the
/// pair's continuous extension; outputs outside the span are ignored.
pub fn integrate<T: Real>(
    initial: &SystemState<T>,
    target_shift: T,
    params: &SystemParams<T>,
    controls: &Controls<T>,
    outputs: &[T],
) -> Result<Trajectory<T>> {
    let m = initial.m();
    let mut t = initial.shift;
    let span = target_shift - t;
    let mut y = initial.to_flat();
    let n = y.len();
    if span == T::zero() {
        return Ok(Trajectory {
            states: outputs
                .iter()
                .filter(|&&s| s == t)
                .map(|_| initial.clone())
                .collect(),
            last: initial.clone(),
            accepted_steps: 0,
            rejected_steps: 0,
        });
    }
    let dir = span.signum();
    let mut pending: Vec<(usize, T)> = outputs
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, s)| (s - t) * dir >= T::zero() && (target_shift - s) * dir >= T::zero())
        .collect();
    pending.sort_by(|a, b| ((a.1 - b.1) * dir).partial_cmp(&T::zero()).unwrap());
    let mut results: Vec<Option<SystemState<T>>> = vec![None; outputs.len()];
    let mut next_out = 0;
    while next_out < pending.len() && pending[next_out].1 == t {
        results[pending[next_out].0] = Some(initial.clone());
        next_out += 1;
    }

    let lit = |v: f64| T::lit(v);
    let mut h = match (controls.fixed_step, controls.h_init) {
        (Some(f), _) => f.abs(),
        (None, Some(h0)) => h0.abs(),
        (None, None) => (span.abs() * lit(1e-3)).max(lit(1e-6)).min(lit(0.05)),
    } * dir;

    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    rhs_flat(m, t, &y, params, &mut k[0])?;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut ystage = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    let mut steps = 0;

    'step: loop {
        if (target_shift - t) * dir <= T::zero() {
            break;
        }
        steps += 1;
        if steps > controls.max_steps {
            return Err(Error::Singularity {
                last_shift: t.to_f64_lossy(),
            });
        }
        let last = (t + h - target_shift) * dir >= T::zero();
        if last {
            h = target_shift - t;
        }
        if h.abs() < controls.h_min && !last {
            return Err(Error::Singularity {
                last_shift: t.to_f64_lossy(),
            });
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc = acc + lit(a) * kj[i];
                    }
                }
                ystage[i] = y[i] + h * acc;
            }
            if let Err(e) = rhs_flat(m, t + lit(C[s]) * h, &ystage, params, &mut k[s]) {
                if controls.fixed_step.is_some() {
                    return Err(e);
                }
                // a non-finite stage is treated as a rejected step
                h = h * lit(0.25);
                rejected += 1;
                if h.abs() < controls.h_min {
                    return Err(Error::Singularity {
                        last_shift: t.to_f64_lossy(),
                    });
                }
                continue 'step;
            }
            if s == 6 {
                ynew.copy_from_slice(&ystage);
            }
        }
        // error estimate
        let mut err = T::zero();
        for i in 0..n {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e = e + lit(E[j]) * kj[i];
                }
            }
            let sk = controls.atol + controls.rtol * y[i].abs().max(ynew[i].abs());
            let ratio = h * e / sk;
            err = err + ratio * ratio;
        }
        err = (err / T::from_usize_lossy(n)).sqrt();
        if !err.is_finite() {
            err = T::infinity();
        }

        let accept = controls.fixed_step.is_some() || err <= T::one();
        if accept {
            let t_new = t + h;
            // dense output for outputs inside (t, t_new]
            while next_out < pending.len() && (t_new - pending[next_out].1) * dir >= T::zero() {
                let (slot, s_out) = pending[next_out];
                let theta = (s_out - t) / h;
                let th1 = T::one() - theta;
                let mut yo = vec![T::zero(); n];
                for i in 0..n {
                    let r2 = ynew[i] - y[i];
                    let r3 = h * k[0][i] - r2;
                    let r4 = r2 - h * k[6][i] - r3;
                    let mut r5 = T::zero();
                    for (j, kj) in k.iter().enumerate() {
                        if D[j] != 0.0 {
                            r5 = r5 + lit(D[j]) * kj[i];
                        }
                    }
                    r5 = r5 * h;
                    yo[i] = y[i] + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
                }
                let state = if s_out == t_new {
                    SystemState::from_flat(m, s_out, &ynew)
                } else {
                    SystemState::from_flat(m, s_out, &yo)
                };
                results[slot] = Some(state);
                next_out += 1;
            }
            y.copy_from_slice(&ynew);
            t = if last { target_shift } else { t_new };
            let k7 = k[6].clone();
            k[0] = k7; // first-same-as-last
            accepted += 1;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singularity {
                    last_shift: t.to_f64_lossy(),
                });
            }
        } else {
            rejected += 1;
        }
        if controls.fixed_step.is_none() {
            let fac = if err == T::zero() {
                lit(5.0)
            } else {
                (lit(0.9) * err.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0))
            };
            let fac = if accept { fac } else { fac.min(T::one()) };
            h = h * fac;
        }
    }
    let last = SystemState::from_flat(m, target_shift, &y);
    let states = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.or_else(|| {
                // requested exactly at the end point
                (outputs[i] == target_shift).then(|| last.clone())
            })
        })
        .collect();
    Ok(Trajectory {
        states,
        last,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// Initial data at `spec` shifted by `start_shift`: q, q̃, r, log det from
/// the Fredholm side, Dq and Dq̃ by 5-point stencils of spacing `h`.
pub fn bootstrap<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
    start_shift: T,
    h: T,
) -> Result<SystemState<T>> {
    let at = spec.shifted(start_shift);
    let b = shift_stencil(&at, config, h, &[-2, -1, 0, 1, 2])?;
    let first = |f: fn(&ResolventBundle<T>) -> &Mat<T>| five_point_first(&b, f, h);
    let dq = first(|b| &b.q);
    let dqt = first(|b| &b.q_tilde);
    Ok(SystemState::from_bundle(&b[2], dq, dqt, start_shift))
}

fn five_point_first<T: Real>(
    b: &[ResolventBundle<T>],
    f: fn(&ResolventBundle<T>) -> &Mat<T>,
    h: T,
) -> Mat<T> {
    let num = &(&f(&b[0]).scale(T::one()) - &f(&b[1]).scale(T::lit(8.0)))
        + &(&f(&b[3]).scale(T::lit(8.0)) - &f(&b[4]).scale(T::one()));
    num.scale((T::lit(12.0) * h).recip())
}

fn five_point_second<T: Real>(
    b: &[ResolventBundle<T>],
    f: fn(&ResolventBundle<T>) -> &Mat<T>,
    h: T,
) -> Mat<T> {
    let ends = &f(&b[0]).scale(-T::one()) - &f(&b[4]).scale(T::one());
    let inner = &f(&b[1]).scale(T::lit(16.0)) + &f(&b[3]).scale(T::lit(16.0));
    let num = &(&ends + &inner) - &f(&b[2]).scale(T::lit(30.0));
    num.scale((T::lit(12.0) * h * h).recip())
}

/// Residuals of the three equations at one point, from a 5-point stencil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<T> {
    pub shift_spacing: T,
    pub eq_q: IdentityResidual<T>,
    pub eq_q_tilde: IdentityResidual<T>,
    pub eq_r: IdentityResidual<T>,
    /// `max |q − q̃|` at the center; zero in exact arithmetic when m = 1.
    pub q_minus_q_tilde: T,
}

impl<T: Real> ResidualReport<T> {
    pub fn max_relative(&self) -> T {
        self.eq_q
            .relative()
            .max(self.eq_q_tilde.relative())
            .max(self.eq_r.relative())
    }
}

/// Checks the three equations against finite differences of bundles at
/// `ξ + k·h`, `k = −2..2`.
pub fn residual_suite<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
    h: T,
) -> Result<ResidualReport<T>> {
    let b = shift_stencil(spec, config, h, &[-2, -1, 0, 1, 2])?;
    residuals_from_stencil(spec, &b, h)
}

/// [`residual_suite`] on precomputed bundles.
pub fn residuals_from_stencil<T: Real>(
    spec: &KernelSpec<T>,
    b: &[ResolventBundle<T>],
    h: T,
) -> Result<ResidualReport<T>> {
    if b.len() != 5 {
        return Err(Error::Invalid("a 5-point stencil is required".into()));
    }
    let c = &b[2];
    let tau = spec.tau.times();
    let xi = spec.xi.thresholds();
    let d2q = five_point_second(b, |b| &b.q, h);
    let d2qt = five_point_second(b, |b| &b.q_tilde, h);
    let dr = five_point_first(b, |b| &b.r, h);
    Ok(ResidualReport {
        shift_spacing: h,
        eq_q: IdentityResidual {
            name: "D^2 q = xi q + 2 q Theta q~ q - 2[tau, r] q".into(),
            ..residual(&d2q, &second_derivative_q(&c.q, &c.q_tilde, &c.r, tau, xi))
        },
        eq_q_tilde: IdentityResidual {
            name: "D^2 q~ = q~ xi + 2 q~ q Theta q~ - 2 q~ [tau, r]".into(),
            ..residual(
                &d2qt,
                &second_derivative_q_tilde(&c.q, &c.q_tilde, &c.r, tau, xi),
            )
        },
        eq_r: IdentityResidual {
            name: "D r = -q Theta q~ + [tau, r]".into(),
            ..residual(&dr, &derivative_r(&c.q, &c.q_tilde, &c.r, tau))
        },
        q_minus_q_tilde: (&c.q - &c.q_tilde).max_abs(),
    })
}

fn residual<T: Real>(lhs: &Mat<T>, rhs: &Mat<T>) -> IdentityResidual<T> {
    IdentityResidual {
        name: String::new(),
        residual: (lhs - rhs).max_abs(),
        scale: lhs.max_abs().max(rhs.max_abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_mat(m: usize, seed: u64) -> Mat<f64> {
        // small deterministic LCG; entries in (−1, 1)
        let mut s = seed;
        Mat::from_fn(m, m, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let params = SystemParams::new(vec![0.0, 0.5], vec![0.1, -0.2]).unwrap();
        let z = SystemState::zeros(2, 3.0);
        let d = rhs(&z, &params).unwrap();
        for mat in [&d.dq, &d.d2q, &d.dq_tilde, &d.d2q_tilde, &d.dr] {
            assert_eq!(mat.max_abs(), 0.0);
        }
        let traj = integrate(&z, -1.0, &params, &Controls::default(), &[1.0]).unwrap();
        assert_eq!(traj.last.q.max_abs(), 0.0);
        assert_eq!(traj.states[0].r.max_abs(), 0.0);
    }

    #[test]
    fn single_block_reduces_to_painleve_ii() {
        let params = SystemParams::new(vec![0.7], vec![0.3]).unwrap();
        let mut s = SystemState::zeros(1, 0.5);
        s.q[(0, 0)] = 0.21;
        s.q_tilde[(0, 0)] = 0.21;
        s.r[(0, 0)] = 0.4;
        let d = rhs(&s, &params).unwrap();
        let (x, q) = (0.8, 0.21);
        assert_abs_diff_eq!(d.d2q[(0, 0)], x * q + 2.0 * q * q * q, epsilon = 1e-15);
        assert_abs_diff_eq!(d.d2q_tilde[(0, 0)], d.d2q[(0, 0)], epsilon = 1e-15);
        assert_abs_diff_eq!(d.dr[(0, 0)], -q * q, epsilon = 1e-15);
    }

    #[test]
    fn trace_of_r_rate_ignores_commutator() {
        let params = SystemParams::new(vec![-1.0, 0.0, 2.5], vec![0.0, 1.0, -1.0]).unwrap();
        for seed in 1..6 {
            let mut s = SystemState::zeros(3, 0.0);
            s.q = random_mat(3, seed);
            s.q_tilde = random_mat(3, seed + 100);
            s.r = random_mat(3, seed + 200);
            let d = rhs(&s, &params).unwrap();
            let expect = -s.q.theta_product(&s.q_tilde).trace();
            assert_abs_diff_eq!(d.dr.trace(), expect, epsilon = 1e-13);
        }
    }

    #[test]
    fn non_finite_state_rejected() {
        let params = SystemParams::new(vec![0.0], vec![0.0]).unwrap();
        let mut s = SystemState::zeros(1, 0.0);
        s.r[(0, 0)] = f64::NAN;
        assert!(matches!(rhs(&s, &params), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn blow_up_reports_singularity() {
        // q″ ≈ 2q³ with large data escapes to infinity in finite shift
        let params = SystemParams::new(vec![0.0], vec![0.0]).unwrap();
        let mut s = SystemState::zeros(1, 0.0);
        s.q[(0, 0)] = 5.0;
        s.q_tilde[(0, 0)] = 5.0;
        s.dq[(0, 0)] = 20.0;
        s.dq_tilde[(0, 0)] = 20.0;
        let err = integrate(&s, 5.0, &params, &Controls::default(), &[]).unwrap_err();
        match err {
            Error::Singularity { last_shift } => assert!(last_shift > 0.0 && last_shift < 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dense_output_matches_exact_linear_solution() {
        // with q̃ = r = 0 the q-equation is the Airy equation q″ = (ξ + s) q
        let params = SystemParams::new(vec![0.0], vec![0.0]).unwrap();
        let x0 = 2.0;
        let mut s = SystemState::zeros(1, x0);
        let (a, ap) = crate::specfun::airy_ai_pair(x0).unwrap();
        s.q[(0, 0)] = a;
        s.dq[(0, 0)] = ap;
        let outs = [1.7, 1.25, 0.3];
        let traj = integrate(&s, 0.0, &params, &Controls::default(), &outs).unwrap();
        for (st, &x) in traj.states.iter().zip(&outs) {
            let exact = crate::specfun::airy_ai(x).unwrap();
            assert_abs_diff_eq!(st.q[(0, 0)], exact, epsilon = 1e-9);
            assert_eq!(st.shift, x);
        }
    }
}
