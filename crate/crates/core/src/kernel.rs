//! Entries of the extended Airy kernel.
//!
//! For times `τ_1 < ⋯ < τ_m` and `s = τ_i − τ_j`,
//!
//! ```text
//! L_ij(x, y) =  ∫_0^∞  e^{−zs} Ai(x+z) Ai(y+z) dz    (i ≥ j)
//! L_ij(x, y) = −∫_{−∞}^0 e^{−zs} Ai(x+z) Ai(y+z) dz   (i < j)
//! K_ij(x, y) = L_ij(x, y) · χ_(ξ_j, ∞)(y)
//! ```
//!
//! Both z-integrals use a composite Gauss–Legendre rule on a truncated
//! window. Downward pairs (`i ≥ j`) integrate over `(0, z_max)`; upward
//! pairs over `(z_min, 0)` with `z_min = −max(40/Δτ_min, 60)`, where the
//! factor `e^{z(τ_j−τ_i)}` supplies the decay against the oscillating Airy
//! tail. All entries, diagonal included, go through the same quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::num::Real;
use crate::quadrature::{gauss_legendre, Direction, HalfLineMap, QuadratureRule};
use crate::specfun::ai_pair_unchecked;

/// Strictly increasing times `τ_1 < ⋯ < τ_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    times: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(times: Vec<T>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Invalid("at least one time is required".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("times must be finite".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Every time moved by `c`.
    pub fn shifted(&self, c: T) -> Self {
        Self {
            times: self.times.iter().map(|&t| t + c).collect(),
        }
    }

    /// Smallest consecutive gap, `None` for a single time.
    pub fn min_gap(&self) -> Option<T> {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .reduce(|a, b| a.min(b))
    }
}

/// Thresholds `ξ_1, …, ξ_m` and the left end `α < min ξ_j` of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector<T> {
    thresholds: Vec<T>,
    alpha: T,
}

/// Offset of the default `α` below the smallest threshold.
pub const DEFAULT_ALPHA_OFFSET: f64 = 10.0;

impl<T: Real> ThresholdVector<T> {
    /// Thresholds with the default `α = min ξ_j − 10`.
    pub fn new(thresholds: Vec<T>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::Invalid("at least one threshold is required".into()));
        }
        if thresholds.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("thresholds must be finite".into()));
        }
        let alpha = min_of(&thresholds) - T::lit(DEFAULT_ALPHA_OFFSET);
        Ok(Self { thresholds, alpha })
    }

    pub fn with_alpha(thresholds: Vec<T>, alpha: T) -> Result<Self> {
        let mut v = Self::new(thresholds)?;
        v.set_alpha(alpha)?;
        Ok(v)
    }

    pub fn set_alpha(&mut self, alpha: T) -> Result<()> {
        if !alpha.is_finite() || alpha >= self.min() {
            return Err(Error::Invalid(format!(
                "alpha {alpha} must lie below the smallest threshold {}",
                self.min()
            )));
        }
        self.alpha = alpha;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn min(&self) -> T {
        min_of(&self.thresholds)
    }

    /// Diagonal shift `ξ_j ↦ ξ_j + η`. `α` moves along with the thresholds.
    pub fn shifted(&self, eta: T) -> Self {
        Self {
            thresholds: self.thresholds.iter().map(|&x| x + eta).collect(),
            alpha: self.alpha + eta,
        }
    }

    /// Single-coordinate move `ξ_k ↦ ξ_k + h`, keeping `α` when still valid.
    pub fn bumped(&self, k: usize, h: T) -> Self {
        let mut thresholds = self.thresholds.clone();
        thresholds[k] = thresholds[k] + h;
        let floor = min_of(&thresholds);
        let alpha = if self.alpha < floor {
            self.alpha
        } else {
            floor - T::lit(DEFAULT_ALPHA_OFFSET)
        };
        Self { thresholds, alpha }
    }
}

fn min_of<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::infinity(), |a, &b| a.min(b))
}

/// Parameters of the composite z-rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZRuleConfig<T> {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Target panel width.
    pub panel_width: T,
    /// Upper end of the `(0, z_max)` window.
    pub z_max: T,
    /// Floor for `|z_min|` on the `(z_min, 0)` window.
    pub z_min_floor: T,
    /// Decay budget: `|z_min| ≥ budget / Δτ_min` so `e^{−budget}` is neglected.
    pub decay_budget: T,
}

impl<T: Real> Default for ZRuleConfig<T> {
    fn default() -> Self {
        Self {
            order: 20,
            panel_width: T::one(),
            z_max: T::lit(40.0),
            z_min_floor: T::lit(60.0),
            decay_budget: T::lit(40.0),
        }
    }
}

/// Everything needed to evaluate `L_ij` and `K_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<T> {
    pub tau: TimeGrid<T>,
    pub xi: ThresholdVector<T>,
    pub z: ZRuleConfig<T>,
}

impl<T: Real> KernelSpec<T> {
    pub fn new(tau: TimeGrid<T>, xi: ThresholdVector<T>) -> Result<Self> {
        if tau.len() != xi.len() {
            return Err(Error::Invalid(format!(
                "{} times but {} thresholds",
                tau.len(),
                xi.len()
            )));
        }
        Ok(Self {
            tau,
            xi,
            z: ZRuleConfig::default(),
        })
    }

    /// Convenience constructor from raw vectors with the default `α`.
    pub fn from_parts(times: Vec<T>, thresholds: Vec<T>) -> Result<Self> {
        Self::new(TimeGrid::new(times)?, ThresholdVector::new(thresholds)?)
    }

    pub fn with_z_order(mut self, order: usize) -> Self {
        self.z.order = order;
        self
    }

    pub fn m(&self) -> usize {
        self.tau.len()
    }

    /// Same times, thresholds replaced.
    pub fn with_thresholds(&self, xi: ThresholdVector<T>) -> Self {
        Self {
            tau: self.tau.clone(),
            xi,
            z: self.z,
        }
    }

    /// Diagonal shift of every threshold by `eta`.
    pub fn shifted(&self, eta: T) -> Self {
        self.with_thresholds(self.xi.shifted(eta))
    }

    /// `|z_min|` for the upward pairs.
    pub fn z_min_extent(&self) -> T {
        match self.tau.min_gap() {
            Some(gap) => (self.z.decay_budget / gap).max(self.z.z_min_floor),
            None => self.z.z_min_floor,
        }
    }

    /// The z-map used for pair `(i, j)` (0-based).
    pub fn z_map(&self, i: usize, j: usize) -> HalfLineMap<T> {
        let (direction, extent) = if i >= j {
            (Direction::Right, self.z.z_max)
        } else {
            (Direction::Left, self.z_min_extent())
        };
        let panels = (extent / self.z.panel_width)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        HalfLineMap::truncated(T::zero(), direction, extent, panels)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.m() {
            Err(Error::Index {
                index: i,
                len: self.m(),
            })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, v: T) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::Domain {
                what: "kernel coordinate",
                value: v.to_f64_lossy(),
            });
        }
        if v < self.xi.alpha() {
            return Err(Error::Invalid(format!(
                "coordinate {v} lies left of alpha = {}",
                self.xi.alpha()
            )));
        }
        Ok(())
    }
}

/// Mapped z-nodes with the sign and the time factor folded into the weights:
/// `L_ij(x, y) = Σ_k ω_k Ai(x+z_k) Ai(y+z_k)`.
#[derive(Debug, Clone)]
pub struct PairRule<T> {
    pub z: Vec<T>,
    pub omega: Vec<T>,
}

/// The two composite z-rules shared by all pairs of one kernel.
#[derive(Debug, Clone)]
pub struct ZRules<T> {
    pub down: Vec<(T, T)>,
    pub up: Vec<(T, T)>,
}

impl<T: Real> ZRules<T> {
    pub fn new(spec: &KernelSpec<T>) -> Result<Self> {
        let rule: QuadratureRule<T> = gauss_legendre(spec.z.order)?;
        let down = spec.z_map(0, 0).nodes(&rule);
        let up = if spec.m() > 1 {
            spec.z_map(0, 1).nodes(&rule)
        } else {
            Vec::new()
        };
        Ok(Self { down, up })
    }

    /// Nodes and signed, time-weighted weights for pair `(i, j)`.
    pub fn pair(&self, spec: &KernelSpec<T>, i: usize, j: usize) -> PairRule<T> {
        let tau = spec.tau.times();
        let s = tau[i] - tau[j];
        let (nodes, sign) = if i >= j {
            (&self.down, T::one())
        } else {
            (&self.up, -T::one())
        };
        let (z, omega) = nodes
            .iter()
            .map(|&(z, w)| (z, sign * w * (-z * s).exp()))
            .unzip();
        PairRule { z, omega }
    }
}

/// `L_ij(x, y)` for 0-based block indices.
pub fn l_entry<T: Real>(spec: &KernelSpec<T>, i: usize, j: usize, x: T, y: T) -> Result<T> {
    spec.check_index(i)?;
    spec.check_index(j)?;
    spec.check_point(x)?;
    spec.check_point(y)?;
    let rules = ZRules::new(spec)?;
    let pr = rules.pair(spec, i, j);
    let mut acc = T::zero();
    for (&z, &w) in pr.z.iter().zip(&pr.omega) {
        if w == T::zero() {
            continue;
        }
        acc = acc + w * ai_pair_unchecked(x + z).0 * ai_pair_unchecked(y + z).0;
    }
    if !acc.is_finite() {
        return Err(Error::NonFinite {
            what: "kernel entry",
            location: x.to_f64_lossy(),
        });
    }
    Ok(acc)
}

/// `K_ij(x, y) = L_ij(x, y)·χ_(ξ_j,∞)(y)`; at `y = ξ_j` the indicator takes its
/// limit from above, i.e. 1.
pub fn k_entry<T: Real>(spec: &KernelSpec<T>, i: usize, j: usize, x: T, y: T) -> Result<T> {
    spec.check_index(j)?;
    if y < spec.xi.thresholds()[j] {
        spec.check_index(i)?;
        spec.check_point(x)?;
        spec.check_point(y)?;
        return Ok(T::zero());
    }
    l_entry(spec, i, j, x, y)
}

/// `Ai(p + z_k)` for a set of points against one z-rule, row-major
/// `points × nodes`.
#[derive(Debug, Clone)]
pub struct AirySamples<T> {
    pub points: Vec<T>,
    pub down: Vec<T>,
    pub up: Vec<T>,
    down_len: usize,
    up_len: usize,
}

impl<T: Real> AirySamples<T> {
    pub fn new(points: Vec<T>, rules: &ZRules<T>) -> Self {
        let sample = |nodes: &[(T, T)]| -> Vec<T> {
            let k = nodes.len();
            let mut out = vec![T::zero(); points.len() * k];
            out.par_chunks_mut(k.max(1))
                .zip(points.par_iter())
                .for_each(|(row, &p)| {
                    for (slot, &(z, _)) in row.iter_mut().zip(nodes) {
                        *slot = ai_pair_unchecked(p + z).0;
                    }
                });
            out
        };
        let down = sample(&rules.down);
        let up = sample(&rules.up);
        Self {
            down_len: rules.down.len(),
            up_len: rules.up.len(),
            points,
            down,
            up,
        }
    }

    fn row(&self, a: usize, upward: bool) -> &[T] {
        if upward {
            &self.up[a * self.up_len..(a + 1) * self.up_len]
        } else {
            &self.down[a * self.down_len..(a + 1) * self.down_len]
        }
    }
}

/// `L_ij(x_a, y_b)` for all sampled `x_a` (row block i) and `y_b` (column block j).
pub fn l_block<T: Real>(
    spec: &KernelSpec<T>,
    rules: &ZRules<T>,
    i: usize,
    j: usize,
    xs: &AirySamples<T>,
    ys: &AirySamples<T>,
) -> Mat<T> {
    let upward = i < j;
    let pr = rules.pair(spec, i, j);
    let nx = xs.points.len();
    let ny = ys.points.len();
    let mut out = vec![T::zero(); nx * ny];
    out.par_chunks_mut(ny.max(1))
        .enumerate()
        .for_each(|(a, orow)| {
            let weighted: Vec<T> = xs
                .row(a, upward)
                .iter()
                .zip(&pr.omega)
                .map(|(&v, &w)| v * w)
                .collect();
            for (b, o) in orow.iter_mut().enumerate() {
                *o = dot(&weighted, ys.row(b, upward));
            }
        });
    Mat::from_vec(nx, ny, out)
}
