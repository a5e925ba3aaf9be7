//! Nyström discretization of the extended Airy operator, its Fredholm
//! determinant, and the resolvent quantities at the thresholds.
//!
//! Block `j` of the direct sum is sampled by Gauss–Legendre nodes on
//! `(ξ_j, ξ_j + cutoff)`, so `χ_(ξ_j,∞)` is carried by node placement and
//! never appears as a discontinuous factor. The matrix is symmetrized,
//! `√w_a K_ij(x_a, y_b) √w_b`, which leaves `det(I − ·)` unchanged.
//!
//! Writing `M = I − W^½ K W^½` and `D = W^½`, the threshold quantities follow
//! from one LU factorization of `M`:
//!
//! ```text
//! Q  on nodes:  M (D Q)   = D A          q = A(ξ) + E·(D Q)
//! P  on nodes:  M (D P)   = D A′         p = A′(ξ) + E·(D P)
//! Q̃  on nodes:  Mᵀ(D Q̃ᵀ) = D (Aχ)ᵀ       q̃ = A(ξ) + (D Q̃ᵀ)ᵀ·C
//! R  columns:   M Z       = C            r = L(ξ, ξ) + E·Z
//! u = (D Q̃ᵀ)ᵀ·(D A)
//! ```
//!
//! where row `i` of `E` is `L_ik(ξ_i, y_kb)·√w_kb` and column `j` of `C` is
//! `√w_kb·L_kj(x_kb, ξ_j)`. Evaluating at `y = ξ_j` through the column-`j`
//! machinery realizes the right limit `R_ij(x, ξ_j+)`.

pub mod identities;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{l_block, AirySamples, KernelSpec, ZRules};
use crate::linalg::{Lu, Mat};
use crate::num::Real;
use crate::quadrature::gauss_legendre;
use crate::specfun::ai_pair_unchecked;

/// Default length of each truncated `(ξ_j, ξ_j + cutoff)` window.
pub const DEFAULT_CUTOFF: f64 = 14.0;
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NystromConfig<T> {
    /// Gauss–Legendre nodes per block on `(ξ_j, ξ_j + cutoff)`.
    pub nodes: usize,
    pub cutoff: T,
    /// Extra nodes per block on `(α, ξ_j)`. Their columns vanish because of
    /// `χ_j`; they exist so the discretized operator genuinely lives on
    /// `L²(α, ∞)` when `α`-independence is being tested.
    pub alpha_nodes: usize,
}

impl<T: Real> NystromConfig<T> {
    pub fn new(nodes: usize) -> Self {
        Self {
            nodes,
            cutoff: T::lit(DEFAULT_CUTOFF),
            alpha_nodes: 0,
        }
    }
}

/// Quadrature grid of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGrid<T> {
    pub threshold: T,
    pub upper: T,
    /// All nodes, padding on `(α, ξ_j)` first.
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub sqrt_weights: Vec<T>,
    /// Index of the first node right of the threshold.
    pub active_from: usize,
}

impl<T: Real> BlockGrid<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    fn chi(&self, b: usize) -> T {
        if b >= self.active_from {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// The block Nyström matrix of `K` plus the kernel data needed to extend
/// solutions to the thresholds.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator<T> {
    pub spec: KernelSpec<T>,
    pub config: NystromConfig<T>,
    pub blocks: Vec<BlockGrid<T>>,
    pub offsets: Vec<usize>,
    /// `√w_a K_ij(x_a, y_b) √w_b`, size `N × N`.
    pub matrix: Mat<T>,
    rules: ZRules<T>,
    samples: Vec<AirySamples<T>>,
    row_ext: Mat<T>,
    col_ext: Mat<T>,
    corner: Mat<T>,
}

impl<T: Real> DiscretizedOperator<T> {
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// Total number of unknowns.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// Nodes per block right of the thresholds.
    pub fn n(&self) -> usize {
        self.config.nodes
    }
}

pub fn discretize<T: Real>(spec: &KernelSpec<T>, n: usize) -> Result<DiscretizedOperator<T>> {
    discretize_with(spec, NystromConfig::new(n))
}

pub fn discretize_with<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
) -> Result<DiscretizedOperator<T>> {
    if config.nodes < MIN_NODES {
        return Err(Error::Range {
            what: "Nyström nodes per block (minimum)",
            value: config.nodes as f64,
            limit: MIN_NODES as f64,
        });
    }
    if config.cutoff.is_nan() || config.cutoff <= T::zero() {
        return Err(Error::Invalid("truncation cutoff must be positive".into()));
    }
    let m = spec.m();
    let rule = gauss_legendre::<T>(config.nodes)?;
    let pad_rule = if config.alpha_nodes > 0 {
        Some(gauss_legendre::<T>(config.alpha_nodes)?)
    } else {
        None
    };
    let alpha = spec.xi.alpha();

    let mut blocks = Vec::with_capacity(m);
    for &xi in spec.xi.thresholds() {
        let mut pts = Vec::new();
        if let Some(pr) = &pad_rule {
            pts.extend(pr.on_interval(alpha, xi));
        }
        let active_from = pts.len();
        let upper = xi + config.cutoff;
        pts.extend(rule.on_interval(xi, upper));
        let (nodes, weights): (Vec<T>, Vec<T>) = pts.into_iter().unzip();
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
        blocks.push(BlockGrid {
            threshold: xi,
            upper,
            nodes,
            weights,
            sqrt_weights,
            active_from,
        });
    }
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0);
    for b in &blocks {
        offsets.push(offsets.last().unwrap() + b.len());
    }
    let size = offsets[m];

    let rules = ZRules::new(spec)?;
    // Each block is sampled at its nodes plus the threshold itself.
    let samples: Vec<AirySamples<T>> = blocks
        .iter()
        .map(|b| {
            let mut pts = b.nodes.clone();
            pts.push(b.threshold);
            AirySamples::new(pts, &rules)
        })
        .collect();

    let mut matrix = Mat::zeros(size, size);
    let mut row_ext = Mat::zeros(m, size);
    let mut col_ext = Mat::zeros(size, m);
    let mut corner = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let full = l_block(spec, &rules, i, j, &samples[i], &samples[j]);
            let (bi, bj) = (&blocks[i], &blocks[j]);
            let (ni, nj) = (bi.len(), bj.len());
            for a in 0..ni {
                for b in 0..nj {
                    matrix[(offsets[i] + a, offsets[j] + b)] =
                        bi.sqrt_weights[a] * full[(a, b)] * bj.chi(b) * bj.sqrt_weights[b];
                }
            }
            for b in 0..nj {
                row_ext[(i, offsets[j] + b)] = full[(ni, b)] * bj.chi(b) * bj.sqrt_weights[b];
            }
            for a in 0..ni {
                col_ext[(offsets[i] + a, j)] = bi.sqrt_weights[a] * full[(a, nj)];
            }
            corner[(i, j)] = full[(ni, nj)];
        }
    }
    if !matrix.is_finite() || !row_ext.is_finite() || !col_ext.is_finite() {
        return Err(Error::NonFinite {
            what: "Nyström matrix",
            location: spec.xi.min().to_f64_lossy(),
        });
    }
    Ok(DiscretizedOperator {
        spec: spec.clone(),
        config,
        blocks,
        offsets,
        matrix,
        rules,
        samples,
        row_ext,
        col_ext,
        corner,
    })
}

/// `det(I − K)` and its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FredholmDet<T> {
    pub det: T,
    pub logdet: T,
}

fn factor<T: Real>(op: &DiscretizedOperator<T>) -> Result<(Lu<T>, FredholmDet<T>)> {
    let n = op.size();
    let mut a = op.matrix.scale(-T::one());
    for k in 0..n {
        a[(k, k)] = a[(k, k)] + T::one();
    }
    let lu = Lu::factor(&a)?;
    let (sign, logdet) = lu.log_det();
    if sign <= T::zero() {
        return Err(Error::Degenerate {
            det: (sign * logdet.exp()).to_f64_lossy(),
        });
    }
    Ok((
        lu,
        FredholmDet {
            det: logdet.exp(),
            logdet,
        },
    ))
}

/// `det(I − K)` by pivoted LU. A non-positive determinant means the
/// discretization has failed and is reported as [`Error::Degenerate`].
pub fn fredholm_det<T: Real>(op: &DiscretizedOperator<T>) -> Result<FredholmDet<T>> {
    factor(op).map(|(_, d)| d)
}

/// The `m × m` threshold quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventBundle<T> {
    pub q: Mat<T>,
    pub q_tilde: Mat<T>,
    pub r: Mat<T>,
    pub p: Mat<T>,
    pub u: Mat<T>,
    pub det: T,
    pub logdet: T,
}

impl<T: Real> ResolventBundle<T> {
    pub fn m(&self) -> usize {
        self.q.rows()
    }

    /// `(r_11, …, r_mm)`, the gradient of `log det(I − K)` in the thresholds.
    pub fn logdet_gradient(&self) -> Vec<T> {
        (0..self.m()).map(|j| self.r[(j, j)]).collect()
    }

    /// Largest entrywise difference over q, q̃, r, p, u.
    pub fn max_deviation(&self, other: &Self) -> T {
        [
            (&self.q, &other.q),
            (&self.q_tilde, &other.q_tilde),
            (&self.r, &other.r),
            (&self.p, &other.p),
            (&self.u, &other.u),
        ]
        .iter()
        .map(|(a, b)| (*a - *b).max_abs())
        .fold(T::zero(), |acc, v| acc.max(v))
    }
}

/// A factored operator with the solved node values of `Q`, `P`, `Q̃`;
/// extends resolvent functions to arbitrary points.
#[derive(Debug, Clone)]
pub struct Resolvent<T> {
    op: DiscretizedOperator<T>,
    lu: Lu<T>,
    det: FredholmDet<T>,
    /// `D·Q` on nodes, `N × m`.
    dq_nodes: Mat<T>,
    /// `D·P` on nodes, `N × m`.
    dp_nodes: Mat<T>,
    /// `D·Q̃ᵀ` on nodes, `N × m`.
    dqt_nodes: Mat<T>,
    /// `D·A` on nodes, `N × m`.
    da_nodes: Mat<T>,
}

impl<T: Real> Resolvent<T> {
    pub fn new(op: DiscretizedOperator<T>) -> Result<Self> {
        let (lu, det) = factor(&op)?;
        let m = op.m();
        let size = op.size();
        let mut da = Mat::zeros(size, m);
        let mut dap = Mat::zeros(size, m);
        let mut dat = Mat::zeros(size, m);
        for (j, blk) in op.blocks.iter().enumerate() {
            for b in 0..blk.len() {
                let (ai, aip) = ai_pair_unchecked(blk.nodes[b]);
                let row = op.offsets[j] + b;
                da[(row, j)] = blk.sqrt_weights[b] * ai;
                dap[(row, j)] = blk.sqrt_weights[b] * aip;
                dat[(row, j)] = blk.sqrt_weights[b] * ai * blk.chi(b);
            }
        }
        let dq_nodes = lu.solve_mat(&da);
        let dp_nodes = lu.solve_mat(&dap);
        let dqt_nodes = lu.solve_transpose_mat(&dat);
        Ok(Self {
            op,
            lu,
            det,
            dq_nodes,
            dp_nodes,
            dqt_nodes,
            da_nodes: da,
        })
    }

    pub fn operator(&self) -> &DiscretizedOperator<T> {
        &self.op
    }

    pub fn det(&self) -> FredholmDet<T> {
        self.det
    }

    fn m(&self) -> usize {
        self.op.m()
    }

    /// The bundle `q, q̃, r, p, u` at the thresholds.
    pub fn bundle(&self) -> ResolventBundle<T> {
        let m = self.m();
        let thresholds = self.op.spec.xi.thresholds();
        let airy: Vec<(T, T)> = thresholds.iter().map(|&x| ai_pair_unchecked(x)).collect();
        let ai_diag: Vec<T> = airy.iter().map(|a| a.0).collect();
        let aip_diag: Vec<T> = airy.iter().map(|a| a.1).collect();

        let q = &Mat::diag(&ai_diag) + &(&self.op.row_ext * &self.dq_nodes);
        let p = &Mat::diag(&aip_diag) + &(&self.op.row_ext * &self.dp_nodes);
        let yt = self.dqt_nodes.transpose();
        let q_tilde = &Mat::diag(&ai_diag) + &(&yt * &self.op.col_ext);
        let z = self.lu.solve_mat(&self.op.col_ext);
        let r = &self.op.corner + &(&self.op.row_ext * &z);
        let u = &yt * &self.da_nodes;
        debug_assert_eq!(q.rows(), m);
        ResolventBundle {
            q,
            q_tilde,
            r,
            p,
            u,
            det: self.det.det,
            logdet: self.det.logdet,
        }
    }

    fn samples_at(&self, x: T) -> AirySamples<T> {
        AirySamples::new(vec![x], &self.op.rules)
    }

    /// `E_i(x)`: `L_ik(x, y_kb)·χ_k(y_kb)·√w_kb` over all nodes.
    fn row_extension(&self, i: usize, x: T) -> Vec<T> {
        let sx = self.samples_at(x);
        let mut row = vec![T::zero(); self.op.size()];
        for (k, blk) in self.op.blocks.iter().enumerate() {
            let l = l_block(
                &self.op.spec,
                &self.op.rules,
                i,
                k,
                &sx,
                &self.op.samples[k],
            );
            for b in 0..blk.len() {
                row[self.op.offsets[k] + b] = l[(0, b)] * blk.chi(b) * blk.sqrt_weights[b];
            }
        }
        row
    }

    /// `C_j(y)`: `√w_kb·L_kj(x_kb, y)` over all nodes.
    fn col_extension(&self, j: usize, y: T) -> Vec<T> {
        let sy = self.samples_at(y);
        let mut col = vec![T::zero(); self.op.size()];
        for (k, blk) in self.op.blocks.iter().enumerate() {
            let l = l_block(
                &self.op.spec,
                &self.op.rules,
                k,
                j,
                &self.op.samples[k],
                &sy,
            );
            for b in 0..blk.len() {
                col[self.op.offsets[k] + b] = blk.sqrt_weights[b] * l[(b, 0)];
            }
        }
        col
    }

    fn check(&self, i: usize, x: T) -> Result<()> {
        if i >= self.m() {
            return Err(Error::Index {
                index: i,
                len: self.m(),
            });
        }
        if !x.is_finite() || x < self.op.spec.xi.alpha() {
            return Err(Error::Invalid(format!(
                "evaluation point {x} outside (alpha, inf)"
            )));
        }
        Ok(())
    }

    /// Row `i` of `Q(x) = ((I − K)⁻¹ A)(x)`.
    pub fn q_row_at(&self, i: usize, x: T) -> Result<Vec<T>> {
        self.check(i, x)?;
        let e = self.row_extension(i, x);
        let ai = ai_pair_unchecked(x).0;
        Ok((0..self.m())
            .map(|j| {
                let s = (0..e.len()).fold(T::zero(), |acc, k| acc + e[k] * self.dq_nodes[(k, j)]);
                if i == j {
                    ai + s
                } else {
                    s
                }
            })
            .collect())
    }

    /// Row `i` of `P(x) = ((I − K)⁻¹ A′)(x)`.
    pub fn p_row_at(&self, i: usize, x: T) -> Result<Vec<T>> {
        self.check(i, x)?;
        let e = self.row_extension(i, x);
        let aip = ai_pair_unchecked(x).1;
        Ok((0..self.m())
            .map(|j| {
                let s = (0..e.len()).fold(T::zero(), |acc, k| acc + e[k] * self.dp_nodes[(k, j)]);
                if i == j {
                    aip + s
                } else {
                    s
                }
            })
            .collect())
    }

    /// Column `j` of `Q̃(y) = (A χ (I − K)⁻¹)(y)`; zero for `y < ξ_j`.
    pub fn q_tilde_col_at(&self, j: usize, y: T) -> Result<Vec<T>> {
        self.check(j, y)?;
        if y < self.op.spec.xi.thresholds()[j] {
            return Ok(vec![T::zero(); self.m()]);
        }
        let c = self.col_extension(j, y);
        let ai = ai_pair_unchecked(y).0;
        Ok((0..self.m())
            .map(|i| {
                let s = (0..c.len()).fold(T::zero(), |acc, k| acc + self.dqt_nodes[(k, i)] * c[k]);
                if i == j {
                    ai + s
                } else {
                    s
                }
            })
            .collect())
    }

    /// `R_ij(x, y)`, with `y = ξ_j` read as the limit from above.
    pub fn r_at(&self, i: usize, j: usize, x: T, y: T) -> Result<T> {
        self.check(i, x)?;
        self.check(j, y)?;
        if y < self.op.spec.xi.thresholds()[j] {
            return Ok(T::zero());
        }
        let e = self.row_extension(i, x);
        let c = self.col_extension(j, y);
        let z = self.lu.solve(&c);
        let sx = self.samples_at(x);
        let sy = self.samples_at(y);
        let direct = l_block(&self.op.spec, &self.op.rules, i, j, &sx, &sy)[(0, 0)];
        Ok(direct
            + e.iter()
                .zip(&z)
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }
}

/// Solves once and extracts `q, q̃, r, p, u` with the determinant.
pub fn resolvent_bundle<T: Real>(op: &DiscretizedOperator<T>) -> Result<ResolventBundle<T>> {
    Ok(Resolvent::new(op.clone())?.bundle())
}

/// Discretizes and extracts the bundle in one call.
pub fn bundle_at<T: Real>(
    spec: &KernelSpec<T>,
    config: NystromConfig<T>,
) -> Result<ResolventBundle<T>> {
    Ok(Resolvent::new(discretize_with(spec, config)?)?.bundle())
}

/// Outcome of recomputing the bundle for several choices of `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport<T> {
    pub alphas: Vec<T>,
    /// Largest pairwise entry deviation over q, q̃, r, p, u.
    pub max_deviation: T,
    /// Largest pairwise deviation of the determinant.
    pub det_deviation: T,
}

/// Recomputes the bundle with the operator posed on `L²(α, ∞)` for each
/// `α`, padding every block with nodes on `(α, ξ_j)`.
pub fn alpha_independence_check<T: Real>(
    spec: &KernelSpec<T>,
    alphas: &[T],
    nodes: usize,
) -> Result<AlphaReport<T>> {
    let mut bundles = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut xi = spec.xi.clone();
        xi.set_alpha(alpha)?;
        let s = spec.with_thresholds(xi);
        let config = NystromConfig {
            nodes,
            cutoff: T::lit(DEFAULT_CUTOFF),
            alpha_nodes: (nodes / 2).max(MIN_NODES),
        };
        bundles.push(bundle_at(&s, config)?);
    }
    let mut max_deviation = T::zero();
    let mut det_deviation = T::zero();
    for a in 0..bundles.len() {
        for b in a + 1..bundles.len() {
            max_deviation = max_deviation.max(bundles[a].max_deviation(&bundles[b]));
            det_deviation = det_deviation.max((bundles[a].det - bundles[b].det).abs());
        }
    }
    Ok(AlphaReport {
        alphas: alphas.to_vec(),
        max_deviation,
        det_deviation,
    })
}
