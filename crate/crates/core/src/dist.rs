//! Joint distribution functions of the Airy process.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::{bundle_at, discretize_with, fredholm_det, NystromConfig};
use crate::kernel::{KernelSpec, ThresholdVector, TimeGrid};
use crate::num::Real;
use crate::odesys::{
    bootstrap, integrate, Controls, SystemParams, DEFAULT_MIN_SHIFT, DEFAULT_START_SHIFT,
    DEFAULT_STENCIL,
};
use crate::quadrature::gauss_legendre;

pub const MAX_BLOCKS: usize = 8;
pub const DEFAULT_NODES: usize = 80;
pub const DEFAULT_ETA_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    #[default]
    Fredholm,
    Ode,
    Both,
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fredholm" => Ok(Route::Fredholm),
            "ode" => Ok(Route::Ode),
            "both" => Ok(Route::Both),
            other => Err(Error::Invalid(format!("unknown route '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfOptions<T> {
    pub route: Route,
    pub nystrom: NystromConfig<T>,
    pub ode_start_shift: T,
    pub stencil: T,
    pub controls: Controls<T>,
}

impl<T: Real> Default for CdfOptions<T> {
    fn default() -> Self {
        Self {
            route: Route::Fredholm,
            nystrom: NystromConfig::new(DEFAULT_NODES),
            ode_start_shift: T::lit(DEFAULT_START_SHIFT),
            stencil: T::lit(DEFAULT_STENCIL),
            controls: Controls::default(),
        }
    }
}

impl<T: Real> CdfOptions<T> {
    pub fn with_route(mut self, route: Route) -> Self {
        self.route = route;
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nystrom.nodes = nodes;
        self
    }
}

/// Discretization metadata attached to a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub m: usize,
    pub nodes: usize,
    pub cutoff: f64,
    pub ode_start_shift: Option<f64>,
    pub ode_steps: Option<usize>,
    /// Why the ODE route was abandoned for the Fredholm value, if it was.
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionResult<T> {
    pub value: T,
    pub route: Route,
    /// `|fredholm − ode|` for [`Route::Both`], zero otherwise.
    pub residual: T,
    pub grid: GridInfo,
    pub runtime_ms: u64,
}

fn check_inputs<T: Real>(tau: &TimeGrid<T>, xi: &ThresholdVector<T>) -> Result<KernelSpec<T>> {
    if tau.len() > MAX_BLOCKS {
        return Err(Error::Range {
            what: "number of times",
            value: tau.len() as f64,
            limit: MAX_BLOCKS as f64,
        });
    }
    KernelSpec::new(tau.clone(), xi.clone())
}

fn fredholm_value<T: Real>(spec: &KernelSpec<T>, config: NystromConfig<T>) -> Result<T> {
    Ok(fredholm_det(&discretize_with(spec, config)?)?.det)
}

struct OdeValue<T> {
    value: T,
    steps: usize,
}

fn ode_value<T: Real>(spec: &KernelSpec<T>, opts: &CdfOptions<T>) -> Result<OdeValue<T>> {
    let lowest = spec.xi.min();
    if lowest < T::lit(DEFAULT_MIN_SHIFT) {
        return Err(Error::Range {
            what: "smallest threshold for the ODE route",
            value: lowest.to_f64_lossy(),
            limit: DEFAULT_MIN_SHIFT,
        });
    }
    let init = bootstrap(spec, opts.nystrom, opts.ode_start_shift, opts.stencil)?;
    let traj = integrate(
        &init,
        T::zero(),
        &SystemParams::from_spec(spec),
        &opts.controls,
        &[],
    )?;
    Ok(OdeValue {
        value: traj.last.log_det.exp(),
        steps: traj.accepted_steps,
    })
}

/// `Pr(A(τ_1) < ξ_1, …, A(τ_m) < ξ_m)` by the requested route.
///
/// The ODE route integrates from `ξ + ode_start_shift` down to `ξ`; if it
/// fails (singularity, or a threshold below the trusted range) the Fredholm
/// value is returned with the reason in `grid.fallback`.
pub fn joint_cdf<T: Real>(
    tau: &TimeGrid<T>,
    xi: &ThresholdVector<T>,
    opts: &CdfOptions<T>,
) -> Result<DistributionResult<T>> {
    let start = Instant::now();
    let spec = check_inputs(tau, xi)?;
    let mut grid = GridInfo {
        m: spec.m(),
        nodes: opts.nystrom.nodes,
        cutoff: opts.nystrom.cutoff.to_f64_lossy(),
        ode_start_shift: None,
        ode_steps: None,
        fallback: None,
    };
    let (value, residual) = match opts.route {
        Route::Fredholm => (fredholm_value(&spec, opts.nystrom)?, T::zero()),
        Route::Ode | Route::Both => {
            grid.ode_start_shift = Some(opts.ode_start_shift.to_f64_lossy());
            let (fred, ode) = rayon::join(
                || fredholm_value(&spec, opts.nystrom),
                || ode_value(&spec, opts),
            );
            let fred = fred?;
            match ode {
                Ok(o) => {
                    grid.ode_steps = Some(o.steps);
                    if opts.route == Route::Both {
                        (fred, (fred - o.value).abs())
                    } else {
                        (o.value, T::zero())
                    }
                }
                Err(e @ (Error::Singularity { .. } | Error::Range { .. })) => {
                    grid.fallback = Some(e.to_string());
                    (fred, T::zero())
                }
                Err(e) => return Err(e),
            }
        }
    };
    Ok(DistributionResult {
        value,
        route: opts.route,
        residual,
        grid,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Which route supplies `q` and `q̃` at shifted thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrandSource {
    Fredholm,
    Ode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation<T> {
    pub value: T,
    /// `∫_0^{η_max} η Tr qΘq̃(ξ + η) dη`.
    pub exponent: T,
    /// Estimated contribution of `(η_max, ∞)`.
    pub tail: T,
}

const REP_PANELS_PER_UNIT: f64 = 0.5;
const REP_ORDER: usize = 16;

/// `exp(−∫_0^∞ η Tr qΘq̃(ξ + η) dη)` with the integral cut at `eta_max`.
pub fn det_via_representation<T: Real>(
    tau: &TimeGrid<T>,
    xi: &ThresholdVector<T>,
    eta_max: T,
    source: IntegrandSource,
    opts: &CdfOptions<T>,
) -> Result<Representation<T>> {
    if eta_max.is_nan() || eta_max < T::lit(8.0) {
        return Err(Error::Domain {
            what: "eta_max (must be at least 8)",
            value: eta_max.to_f64_lossy(),
        });
    }
    let spec = check_inputs(tau, xi)?;
    let rule = gauss_legendre::<T>(REP_ORDER)?;
    let panels = (eta_max.to_f64_lossy() * REP_PANELS_PER_UNIT).ceil() as usize;
    let width = eta_max / T::from_usize_lossy(panels);
    let mut points: Vec<(T, T)> = Vec::with_capacity(panels * REP_ORDER);
    for k in 0..panels {
        let a = width * T::from_usize_lossy(k);
        points.extend(rule.on_interval(a, a + width));
    }
    let tr = |q: &crate::linalg::Mat<T>, qt: &crate::linalg::Mat<T>| q.theta_product(qt).trace();
    let samples: Vec<T> = match source {
        IntegrandSource::Fredholm => points
            .par_iter()
            .map(|&(eta, _)| {
                let b = bundle_at(&spec.shifted(eta), opts.nystrom)?;
                Ok(tr(&b.q, &b.q_tilde))
            })
            .collect::<Result<_>>()?,
        IntegrandSource::Ode => {
            let init = bootstrap(&spec, opts.nystrom, eta_max, opts.stencil)?;
            let outs: Vec<T> = points.iter().map(|p| p.0).collect();
            let traj = integrate(
                &init,
                T::zero(),
                &SystemParams::from_spec(&spec),
                &opts.controls,
                &outs,
            )?;
            traj.states.iter().map(|s| tr(&s.q, &s.q_tilde)).collect()
        }
    };
    let mut exponent = T::zero();
    for (&(eta, w), &f) in points.iter().zip(&samples) {
        if !f.is_finite() {
            return Err(Error::NonFinite {
                what: "representation integrand",
                location: eta.to_f64_lossy(),
            });
        }
        exponent = exponent + w * eta * f;
    }
    // the integrand decays like Ai² at the shifted thresholds, so beyond
    // eta_max it falls off at least as fast as exp(−2√x η)
    let end = bundle_at(&spec.shifted(eta_max), opts.nystrom)?;
    let f_end = eta_max * tr(&end.q, &end.q_tilde);
    let x_end = (spec.xi.min() + eta_max).max(T::one());
    let tail = f_end.abs() / (T::lit(2.0) * x_end.sqrt());
    Ok(Representation {
        value: (-exponent).exp(),
        exponent,
        tail,
    })
}

/// `∇ log det(I − K) = (r_11, …, r_mm)`.
pub fn logdet_gradient<T: Real>(
    tau: &TimeGrid<T>,
    xi: &ThresholdVector<T>,
    config: NystromConfig<T>,
) -> Result<Vec<T>> {
    let spec = check_inputs(tau, xi)?;
    Ok(bundle_at(&spec, config)?.logdet_gradient())
}

/// A joint CDF value together with its log gradient, from one bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEvaluation<T> {
    pub value: T,
    pub gradient: Vec<T>,
}

pub fn evaluate_point<T: Real>(
    tau: &TimeGrid<T>,
    xi: &ThresholdVector<T>,
    config: NystromConfig<T>,
) -> Result<PointEvaluation<T>> {
    let spec = check_inputs(tau, xi)?;
    let b = bundle_at(&spec, config)?;
    Ok(PointEvaluation {
        value: b.det,
        gradient: b.logdet_gradient(),
    })
}
