//! Finite-difference checks of the differentiation identities satisfied by
//! the threshold quantities.
//!
//! `D = Σ_j ∂/∂ξ_j` is realized by moving every threshold together; `∂_k`
//! by moving threshold `k` alone. Derivatives are central differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bundle_at, NystromConfig, ResolventBundle};
use crate::error::Result;
use crate::kernel::KernelSpec;
use crate::linalg::Mat;
use crate::num::Real;

/// Residual of one identity: `max |lhs − rhs|` over entries, and the
/// magnitude of the right-hand side for scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual<T> {
    pub name: String,
    pub residual: T,
    pub scale: T,
}

impl<T: Real> IdentityResidual<T> {
    fn new(name: impl Into<String>, lhs: &Mat<T>, rhs: &Mat<T>) -> Self {
        Self {
            name: name.into(),
            residual: (lhs - rhs).max_abs(),
            scale: rhs.max_abs().max(lhs.max_abs()),
        }
    }

    /// Residual relative to the larger side, floored at 1e−300.
    pub fn relative(&self) -> T {
        self.residual / self.scale.max(T::lit(1e-300))
    }
}

/// Bundles at `ξ + k·h·1` for each offset `k`, computed in parallel.
pub fn shift_stencil<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
    h: T,
    offsets: &[i32],
) -> Result<Vec<ResolventBundle<T>>> {
    offsets
        .par_iter()
        .map(|&k| bundle_at(&spec.shifted(T::lit(f64::from(k)) * h), config))
        .collect()
}

/// Central-difference derivatives along the diagonal shift.
#[derive(Debug, Clone)]
pub struct DiagonalDerivatives<T> {
    pub center: ResolventBundle<T>,
    pub dq: Mat<T>,
    pub dq_tilde: Mat<T>,
    pub dr: Mat<T>,
    pub du: Mat<T>,
    pub dlogdet: T,
    pub d2logdet: T,
}

pub fn diagonal_derivatives<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
    h: T,
) -> Result<DiagonalDerivatives<T>> {
    let mut b = shift_stencil(spec, config, h, &[-1, 0, 1])?;
    let plus = b.pop().unwrap();
    let center = b.pop().unwrap();
    let minus = b.pop().unwrap();
    let inv = (T::lit(2.0) * h).recip();
    let d = |f: fn(&ResolventBundle<T>) -> &Mat<T>| (f(&plus) - f(&minus)).scale(inv);
    Ok(DiagonalDerivatives {
        dq: d(|b| &b.q),
        dq_tilde: d(|b| &b.q_tilde),
        dr: d(|b| &b.r),
        du: d(|b| &b.u),
        dlogdet: (plus.logdet - minus.logdet) * inv,
        d2logdet: (plus.logdet - T::lit(2.0) * center.logdet + minus.logdet) / (h * h),
        center,
    })
}

/// Right-hand sides of the first-order identities, from one bundle.
pub struct IdentityRhs;

impl IdentityRhs {
    /// `p − qΘu + [τ, q]`.
    pub fn dq<T: Real>(b: &ResolventBundle<T>, tau: &[T]) -> Mat<T> {
        &(&b.p - &b.q.theta_product(&b.u)) + &b.q.diag_commutator(tau)
    }

    /// `−q̃ q`.
    pub fn du<T: Real>(b: &ResolventBundle<T>) -> Mat<T> {
        -&(&b.q_tilde * &b.q)
    }

    /// `−qΘq̃ + [τ, r]`.
    pub fn dr<T: Real>(b: &ResolventBundle<T>, tau: &[T]) -> Mat<T> {
        &b.r.diag_commutator(tau) - &b.q.theta_product(&b.q_tilde)
    }

    /// `∂_k u`: entries `−q̃_ik q_kj`.
    pub fn partial_u<T: Real>(b: &ResolventBundle<T>, k: usize) -> Mat<T> {
        let m = b.m();
        Mat::from_fn(m, m, |i, j| -b.q_tilde[(i, k)] * b.q[(k, j)])
    }
}

/// The diagonal-shift identities for q, u and r, plus
/// `D log det = Tr r` and `D² log det = −Tr qΘq̃`.
pub fn check_diagonal_identities<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
    h: T,
) -> Result<Vec<IdentityResidual<T>>> {
    let d = diagonal_derivatives(spec, config, h)?;
    let tau = spec.tau.times();
    let c = &d.center;
    let scalar = |v: T| Mat::from_vec(1, 1, vec![v]);
    Ok(vec![
        IdentityResidual::new(
            "Dq = p - q Theta u + [tau, q]",
            &d.dq,
            &IdentityRhs::dq(c, tau),
        ),
        IdentityResidual::new("Du = -q~ q", &d.du, &IdentityRhs::du(c)),
        IdentityResidual::new(
            "Dr = -q Theta q~ + [tau, r]",
            &d.dr,
            &IdentityRhs::dr(c, tau),
        ),
        IdentityResidual::new("D log det = Tr r", &scalar(d.dlogdet), &scalar(c.r.trace())),
        IdentityResidual::new(
            "D^2 log det = -Tr q Theta q~",
            &scalar(d.d2logdet),
            &scalar(-c.q.theta_product(&c.q_tilde).trace()),
        ),
    ])
}

/// `∂_k u_ij = −Q̃_ik(ξ_k) Q_kj(ξ_k)` for every `k`, by single-coordinate
/// central differences. Returns the worst residual over `k`.
pub fn check_partial_u<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
    h: T,
) -> Result<IdentityResidual<T>> {
    let center = bundle_at(spec, config)?;
    let m = spec.m();
    let mut worst: Option<IdentityResidual<T>> = None;
    for k in 0..m {
        let plus = bundle_at(&spec.with_thresholds(spec.xi.bumped(k, h)), config)?;
        let minus = bundle_at(&spec.with_thresholds(spec.xi.bumped(k, -h)), config)?;
        let lhs = (&plus.u - &minus.u).scale((T::lit(2.0) * h).recip());
        let res = IdentityResidual::new(
            "d_k u_ij = -Q~_ik(xi_k) Q_kj(xi_k)",
            &lhs,
            &IdentityRhs::partial_u(&center, k),
        );
        if worst.as_ref().is_none_or(|w| res.residual > w.residual) {
            worst = Some(res);
        }
    }
    Ok(worst.expect("at least one block"))
}

/// `∂_j log det(I − K) = r_jj`: per-coordinate central differences of the
/// log determinant against the resolvent diagonal. Returns
/// `(finite differences, r_jj)`.
pub fn logdet_gradient_fd<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
    h: T,
) -> Result<(Vec<T>, Vec<T>)> {
    let center = bundle_at(spec, config)?;
    let fd = (0..spec.m())
        .into_par_iter()
        .map(|k| {
            let lp = super::fredholm_det(&super::discretize_with(
                &spec.with_thresholds(spec.xi.bumped(k, h)),
                config,
            )?)?;
            let lm = super::fredholm_det(&super::discretize_with(
                &spec.with_thresholds(spec.xi.bumped(k, -h)),
                config,
            )?)?;
            Ok((lp.logdet - lm.logdet) / (T::lit(2.0) * h))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok((fd, center.logdet_gradient()))
}
