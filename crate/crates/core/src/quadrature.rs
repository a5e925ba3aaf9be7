//! Gauss–Legendre rules and maps from (−1, 1) onto half-lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

pub const MAX_ORDER: usize = 512;

/// An n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodes and weights transplanted affinely onto `[a, b]`.
    pub fn on_interval(&self, a: T, b: T) -> Vec<(T, T)> {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| (mid + half * t, w * half))
            .collect()
    }

    /// `∫_a^b f` with this rule.
    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        self.on_interval(a, b)
            .into_iter()
            .fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

/// Gauss–Legendre nodes and weights by Newton iteration on the three-term
/// Legendre recurrence, started from the cosine approximations of the roots.
pub fn gauss_legendre<T: Real>(n: usize) -> Result<QuadratureRule<T>> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::Range {
            what: "gauss_legendre order",
            value: n as f64,
            limit: MAX_ORDER as f64,
        });
    }
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    for i in 0..n.div_ceil(2) {
        // i-th largest root
        let guess = T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5));
        let mut x = guess.cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::lit(0.5) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != T::zero() {
            dp = d;
        }
        let w = two / ((T::one() - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `(P_n(x), P_n′(x))`.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `(a, ∞)`, or `(a, a + cutoff)` when truncated.
    Right,
    /// `(−∞, a)`, or `(a − cutoff, a)` when truncated.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MapKind<T> {
    /// Affine onto a window of length `cutoff`, split into `panels` equal
    /// panels that each carry the full rule.
    TruncatedAffine { cutoff: T, panels: usize },
    /// `t ↦ a + s(1+t)/(1−t)` (mirrored for [`Direction::Left`]).
    Algebraic,
}

/// Monotone map from (−1, 1) onto a half-line anchored at `endpoint`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLineMap<T> {
    pub endpoint: T,
    pub scale: T,
    pub direction: Direction,
    pub kind: MapKind<T>,
}

impl<T: Real> HalfLineMap<T> {
    pub fn truncated(endpoint: T, direction: Direction, cutoff: T, panels: usize) -> Self {
        Self {
            endpoint,
            scale: T::one(),
            direction,
            kind: MapKind::TruncatedAffine {
                cutoff,
                panels: panels.max(1),
            },
        }
    }

    pub fn algebraic(endpoint: T, direction: Direction, scale: T) -> Self {
        Self {
            endpoint,
            scale,
            direction,
            kind: MapKind::Algebraic,
        }
    }

    /// `(φ(t), φ′(t))` for `t ∈ (−1, 1)`.
    pub fn map(&self, t: T) -> (T, T) {
        let one = T::one();
        let two = T::lit(2.0);
        let a = self.endpoint;
        match (self.kind, self.direction) {
            (MapKind::TruncatedAffine { cutoff, .. }, Direction::Right) => {
                (a + cutoff * (one + t) / two, cutoff / two)
            }
            (MapKind::TruncatedAffine { cutoff, .. }, Direction::Left) => {
                (a - cutoff * (one - t) / two, cutoff / two)
            }
            (MapKind::Algebraic, Direction::Right) => {
                let d = one - t;
                (a + self.scale * (one + t) / d, two * self.scale / (d * d))
            }
            (MapKind::Algebraic, Direction::Left) => {
                let d = one + t;
                (a - self.scale * (one - t) / d, two * self.scale / (d * d))
            }
        }
    }

    /// Mapped nodes with weights that already include the Jacobian.
    pub fn nodes(&self, rule: &QuadratureRule<T>) -> Vec<(T, T)> {
        match self.kind {
            MapKind::TruncatedAffine { cutoff, panels } => {
                let (lo, hi) = match self.direction {
                    Direction::Right => (self.endpoint, self.endpoint + cutoff),
                    Direction::Left => (self.endpoint - cutoff, self.endpoint),
                };
                let width = (hi - lo) / T::from_usize_lossy(panels);
                let mut out = Vec::with_capacity(panels * rule.order());
                for p in 0..panels {
                    let a = lo + width * T::from_usize_lossy(p);
                    let b = if p + 1 == panels { hi } else { a + width };
                    out.extend(rule.on_interval(a, b));
                }
                out
            }
            MapKind::Algebraic => rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&t, &w)| {
                    let (z, dz) = self.map(t);
                    (z, w * dz)
                })
                .collect(),
        }
    }
}

/// A quadrature value with its a-posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

fn mapped_sum<T: Real>(
    f: &mut impl FnMut(T) -> T,
    map: &HalfLineMap<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let mut acc = T::zero();
    for (z, w) in map.nodes(rule) {
        let v = f(z);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "integrand",
                location: z.to_f64_lossy(),
            });
        }
        acc = acc + w * v;
    }
    Ok(acc)
}

/// `Σ w_k f(φ(t_k)) φ′(t_k)` over the mapped rule. The error estimate is
/// the change from the rule of half the order (embedded doubling).
pub fn integrate_halfline<T: Real>(
    mut f: impl FnMut(T) -> T,
    map: &HalfLineMap<T>,
    rule: &QuadratureRule<T>,
) -> Result<Estimate<T>> {
    let value = mapped_sum(&mut f, map, rule)?;
    let half = (rule.order() / 2).max(1);
    let error = if half < rule.order() {
        let coarse = gauss_legendre::<T>(half)?;
        (value - mapped_sum(&mut f, map, &coarse)?).abs()
    } else {
        T::infinity()
    };
    Ok(Estimate { value, error })
}
