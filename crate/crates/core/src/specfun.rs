//! Airy functions Ai, Ai′, Bi, Bi′ on the real line.
//!
//! Three evaluation regimes:
//!
//! * `|x| ≤ 1`: Maclaurin series, generated by the Airy recurrence
//!   `(k+1)(k+2) t_{k+2} = c·t_k + t_{k−1}` with `c = 0`.
//! * `1 < |x| ≤ 10`: Taylor series about the nearest anchor on a grid of
//!   spacing 1/4. Anchor values are produced once by stepping the Airy
//!   equation with long Taylor steps: Ai leftward from the exponential
//!   asymptotic at `x = 10` (stable, Ai grows leftward), and everything
//!   leftward from the exact values at `x = 0` on the oscillatory side.
//! * `|x| > 10`: asymptotic expansions, summed to optimal truncation. On the
//!   negative axis the phase factors are formed from `sin ζ`, `cos ζ` so the
//!   `π/4` shift introduces no extra rounding.
//!
//! Bi is only needed for Wronskian cross-checks. For `x > 0` its Maclaurin
//! series has no cancellation and is used up to [`BI_MAX_ARG`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Ai(0) = 3^(−2/3)/Γ(2/3).
pub const AI0: f64 = 0.355_028_053_887_817_239_260_063_186_004;
/// −Ai′(0) = 3^(−1/3)/Γ(1/3).
pub const NEG_AIP0: f64 = 0.258_819_403_792_806_798_405_183_560_189;

/// Largest argument accepted by [`airy_bi`] and [`airy_bi_prime`].
pub const BI_MAX_ARG: f64 = 15.0;

const SERIES_RADIUS: f64 = 1.0;
const ASYMPTOTIC_FROM: f64 = 10.0;
const ANCHOR_STEP: f64 = 0.25;
const ANCHOR_COUNT: usize = 40; // per side: anchors at ±k/4, k ≤ 40

/// Ai, Ai′, Bi, Bi′ at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiryEval<T> {
    pub x: T,
    pub ai: T,
    pub ai_prime: T,
    pub bi: T,
    pub bi_prime: T,
}

impl<T: Real> AiryEval<T> {
    /// `Ai·Bi′ − Ai′·Bi`, identically `1/π`.
    pub fn wronskian(&self) -> T {
        self.ai * self.bi_prime - self.ai_prime * self.bi
    }
}

/// Which representation produced a value. Exposed so the seams between
/// regimes can be compared directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryBranch {
    Maclaurin,
    Anchored,
    Asymptotic,
}

fn check_finite<T: Real>(what: &'static str, x: T) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x.to_f64_lossy(),
        })
    }
}

pub fn airy_ai<T: Real>(x: T) -> Result<T> {
    check_finite("airy_ai", x)?;
    Ok(ai_pair_unchecked(x).0)
}

pub fn airy_ai_prime<T: Real>(x: T) -> Result<T> {
    check_finite("airy_ai_prime", x)?;
    Ok(ai_pair_unchecked(x).1)
}

/// Ai″(x), from the Airy equation Ai″ = x·Ai.
pub fn airy_ai_second<T: Real>(x: T) -> Result<T> {
    check_finite("airy_ai_second", x)?;
    Ok(x * ai_pair_unchecked(x).0)
}

/// `(Ai(x), Ai′(x))` in one evaluation.
pub fn airy_ai_pair<T: Real>(x: T) -> Result<(T, T)> {
    check_finite("airy_ai_pair", x)?;
    Ok(ai_pair_unchecked(x))
}

pub fn airy_bi<T: Real>(x: T) -> Result<T> {
    check_bi_arg("airy_bi", x)?;
    Ok(bi_pair_unchecked(x).0)
}

pub fn airy_bi_prime<T: Real>(x: T) -> Result<T> {
    check_bi_arg("airy_bi_prime", x)?;
    Ok(bi_pair_unchecked(x).1)
}

/// All four functions. Fails for `x >` [`BI_MAX_ARG`] because of Bi.
pub fn airy<T: Real>(x: T) -> Result<AiryEval<T>> {
    check_bi_arg("airy", x)?;
    let (ai, ai_prime) = ai_pair_unchecked(x);
    let (bi, bi_prime) = bi_pair_unchecked(x);
    Ok(AiryEval {
        x,
        ai,
        ai_prime,
        bi,
        bi_prime,
    })
}

fn check_bi_arg<T: Real>(what: &'static str, x: T) -> Result<()> {
    check_finite(what, x)?;
    if x > T::lit(BI_MAX_ARG) {
        return Err(Error::Range {
            what,
            value: x.to_f64_lossy(),
            limit: BI_MAX_ARG,
        });
    }
    Ok(())
}

/// Regime used for Ai at `x`.
pub fn ai_branch_for<T: Real>(x: T) -> AiryBranch {
    let ax = x.abs();
    if ax <= T::lit(SERIES_RADIUS) {
        AiryBranch::Maclaurin
    } else if ax <= T::lit(ASYMPTOTIC_FROM) {
        AiryBranch::Anchored
    } else {
        AiryBranch::Asymptotic
    }
}

/// `(Ai, Ai′)` at finite `x` without argument checks.
#[inline]
pub(crate) fn ai_pair_unchecked<T: Real>(x: T) -> (T, T) {
    ai_pair_by(x, ai_branch_for(x))
}

/// `(Ai, Ai′)` forced through one branch. The anchored branch covers
/// `|x| ≤ 10.125`; outside that it falls back to the asymptotic form.
pub fn ai_pair_by<T: Real>(x: T, branch: AiryBranch) -> (T, T) {
    match branch {
        AiryBranch::Maclaurin => {
            taylor_pair(T::zero(), T::lit(AI0), -T::lit(NEG_AIP0), x, T::epsilon())
        }
        AiryBranch::Anchored => match anchor_for(x) {
            Some((c, a)) => taylor_pair(c, T::lit(a.ai), T::lit(a.aip), x - c, T::epsilon()),
            None => ai_asymptotic(x),
        },
        AiryBranch::Asymptotic => ai_asymptotic(x),
    }
}

pub(crate) fn bi_pair_unchecked<T: Real>(x: T) -> (T, T) {
    if x >= -T::lit(SERIES_RADIUS) {
        let s3 = T::lit(3.0).sqrt();
        return taylor_pair(
            T::zero(),
            s3 * T::lit(AI0),
            s3 * T::lit(NEG_AIP0),
            x,
            T::epsilon(),
        );
    }
    if x >= -T::lit(ASYMPTOTIC_FROM) {
        if let Some((c, a)) = anchor_for(x) {
            return taylor_pair(c, T::lit(a.bi), T::lit(a.bip), x - c, T::epsilon());
        }
    }
    oscillatory_asymptotic(-x).1
}

/// Sums the Taylor series of an Airy-equation solution about `center`,
/// given `y(center)` and `y′(center)`, at offset `h`. Returns `(y, y′)`.
fn taylor_pair<T: Real>(center: T, y0: T, y1: T, h: T, tol: T) -> (T, T) {
    // t_{k} coefficients, keeping t_{k−1}, t_{k−2} for the three-term recurrence.
    let mut t_prev2 = T::zero(); // t_{k−2}
    let mut t_prev1 = y0; // t_{k−1}
    let mut t_cur = y1; // t_k, k = 1
    let mut hk_prev = T::one(); // h^{k−1}
    let mut y = y0 + y1 * h;
    let mut dy = y1;
    let mut quiet = 0;
    let mut k = 1usize;
    while k < 600 {
        // t_{k+1} = (c·t_{k−1} + t_{k−2}) / (k(k+1))
        let kf = T::from_usize_lossy(k);
        let t_next = (center * t_prev1 + t_prev2) / (kf * (kf + T::one()));
        t_prev2 = t_prev1;
        t_prev1 = t_cur;
        t_cur = t_next;
        k += 1;
        hk_prev = hk_prev * h; // h^{k−1}
        let dterm = T::from_usize_lossy(k) * t_cur * hk_prev;
        let term = t_cur * hk_prev * h;
        y = y + term;
        dy = dy + dterm;
        let small = term.abs() <= tol * y.abs() && dterm.abs() <= tol * dy.abs();
        if small || (term == T::zero() && dterm == T::zero()) {
            quiet += 1;
            // coefficients vanish in a period-3 pattern about c = 0
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (y, dy)
}

#[derive(Debug, Clone, Copy)]
struct Anchor {
    ai: f64,
    aip: f64,
    bi: f64,
    bip: f64,
}

struct AnchorTable {
    // index i ↔ center (i − ANCHOR_COUNT)·ANCHOR_STEP
    entries: Vec<Anchor>,
}

fn anchors() -> &'static AnchorTable {
    static TABLE: OnceLock<AnchorTable> = OnceLock::new();
    TABLE.get_or_init(build_anchor_table)
}

fn build_anchor_table() -> AnchorTable {
    let n = ANCHOR_COUNT;
    let nan = Anchor {
        ai: f64::NAN,
        aip: f64::NAN,
        bi: f64::NAN,
        bip: f64::NAN,
    };
    let mut entries = vec![nan; 2 * n + 1];
    let tight = 0.25 * f64::EPSILON;
    let s3 = 3f64.sqrt();

    // Oscillatory side: march leftward from the exact values at 0.
    let mut ai = (AI0, -NEG_AIP0);
    let mut bi = (s3 * AI0, s3 * NEG_AIP0);
    entries[n] = Anchor {
        ai: ai.0,
        aip: ai.1,
        bi: bi.0,
        bip: bi.1,
    };
    for k in 1..=n {
        let c = -((k - 1) as f64) * ANCHOR_STEP;
        ai = taylor_pair(c, ai.0, ai.1, -ANCHOR_STEP, tight);
        bi = taylor_pair(c, bi.0, bi.1, -ANCHOR_STEP, tight);
        entries[n - k] = Anchor {
            ai: ai.0,
            aip: ai.1,
            bi: bi.0,
            bip: bi.1,
        };
    }

    // Exponential side: Ai marched leftward from its asymptotic form.
    let top = n as f64 * ANCHOR_STEP;
    let mut ai = ai_asymptotic(top);
    entries[2 * n].ai = ai.0;
    entries[2 * n].aip = ai.1;
    for k in (1..n).rev() {
        let c = (k + 1) as f64 * ANCHOR_STEP;
        ai = taylor_pair(c, ai.0, ai.1, -ANCHOR_STEP, tight);
        entries[n + k].ai = ai.0;
        entries[n + k].aip = ai.1;
    }
    AnchorTable { entries }
}

fn anchor_for<T: Real>(x: T) -> Option<(T, Anchor)> {
    let k = (x / T::lit(ANCHOR_STEP)).round().to_i64()?;
    let n = ANCHOR_COUNT as i64;
    if k.abs() > n {
        return None;
    }
    let a = anchors().entries[(k + n) as usize];
    Some((T::lit(k as f64 * ANCHOR_STEP), a))
}

/// Coefficient sequences u_k, v_k of the Airy asymptotic expansions.
fn asymptotic_coefficients<T: Real>(k: usize, u_prev: T) -> (T, T) {
    let kf = T::from_usize_lossy(k);
    let six = T::lit(6.0);
    let u = u_prev * (six * kf - T::lit(5.0)) * (six * kf - T::lit(3.0)) * (six * kf - T::one())
        / ((T::lit(2.0) * kf - T::one()) * T::lit(216.0) * kf);
    let v = -u * (six * kf + T::one()) / (six * kf - T::one());
    (u, v)
}

/// `(Σ(−1)^k u_k/ζ^k, Σ(−1)^k v_k/ζ^k)` summed to optimal truncation.
fn exponential_sums<T: Real>(zeta: T) -> (T, T) {
    let mut su = T::one();
    let mut sv = T::one();
    let mut u = T::one();
    let mut zk = T::one();
    let mut last = T::infinity();
    for k in 1..200 {
        let (uk, vk) = asymptotic_coefficients(k, u);
        u = uk;
        zk = zk * (-zeta).recip();
        let tu = uk * zk;
        let tv = vk * zk;
        let size = tu.abs().max(tv.abs());
        if size > last {
            break;
        }
        su = su + tu;
        sv = sv + tv;
        last = size;
        if size <= T::epsilon() * T::lit(0.125) {
            break;
        }
    }
    (su, sv)
}

fn ai_asymptotic<T: Real>(x: T) -> (T, T) {
    if x < T::zero() {
        return oscillatory_asymptotic(-x).0;
    }
    let sqrt_x = x.sqrt();
    let zeta = T::lit(2.0) / T::lit(3.0) * x * sqrt_x;
    let e = (-zeta).exp();
    if e == T::zero() || !zeta.is_finite() {
        return (T::zero(), T::zero());
    }
    let (su, sv) = exponential_sums(zeta);
    let q = sqrt_x.sqrt();
    let pref = e / (T::lit(2.0) * T::PI().sqrt());
    (pref / q * su, -pref * q * sv)
}

/// `((Ai(−z), Ai′(−z)), (Bi(−z), Bi′(−z)))` for large `z > 0`.
#[allow(clippy::type_complexity)]
fn oscillatory_asymptotic<T: Real>(z: T) -> ((T, T), (T, T)) {
    let sqrt_z = z.sqrt();
    let zeta = T::lit(2.0) / T::lit(3.0) * z * sqrt_z;
    // Even and odd parts of the u and v series, with alternating signs.
    let (mut ue, mut uo, mut ve, mut vo) = (T::one(), T::zero(), T::one(), T::zero());
    let mut u = T::one();
    let mut zk = T::one();
    let mut last = T::infinity();
    for k in 1..200 {
        let (uk, vk) = asymptotic_coefficients(k, u);
        u = uk;
        zk = zk / zeta;
        let tu = uk * zk;
        let tv = vk * zk;
        let size = tu.abs().max(tv.abs());
        if size > last {
            break;
        }
        last = size;
        // (−1)^{⌊k/2⌋} sign on the even/odd subsequences
        let sign = if (k / 2) % 2 == 0 {
            T::one()
        } else {
            -T::one()
        };
        if k % 2 == 0 {
            ue = ue + sign * tu;
            ve = ve + sign * tv;
        } else {
            uo = uo + sign * tu;
            vo = vo + sign * tv;
        }
        if size <= T::epsilon() * T::lit(0.125) {
            break;
        }
    }
    let (s, c) = zeta.sin_cos();
    let r2 = T::SQRT_2().recip();
    // cos(ζ − π/4), sin(ζ − π/4)
    let cm = (c + s) * r2;
    let sm = (s - c) * r2;
    let rpi = T::PI().sqrt().recip();
    let q = sqrt_z.sqrt();
    let ai = rpi / q * (cm * ue + sm * uo);
    let aip = rpi * q * (sm * ve - cm * vo);
    let bi = rpi / q * (-sm * ue + cm * uo);
    let bip = rpi * q * (cm * ve + sm * vo);
    ((ai, aip), (bi, bip))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    // Reference values from mpmath at 30 digits.
    const AI_REF: &[(f64, f64, f64)] = &[
        (-15.0, 0.278_217_490_870_828_93, 0.272_374_204_308_642_02),
        (-5.0, 0.350_761_009_024_114_32, 0.327_192_818_554_443_14),
        (-2.5, -0.112_325_067_692_966_09, 0.678_852_734_264_794_36),
        (1.7, 0.054_324_792_732_919_471, -0.077_374_889_525_325_032),
        (6.0, 9.947_694_360_252_889_6e-6, -2.476_520_039_703_495_5e-5),
        (
            12.0,
            1.393_184_688_875_360_8e-13,
            -4.854_736_554_985_308_5e-13,
        ),
    ];

    #[test]
    fn values_at_origin() {
        assert_relative_eq!(
            airy_ai(0.0).unwrap(),
            0.355_028_053_887_817_2,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            airy_ai_prime(0.0).unwrap(),
            -0.258_819_403_792_806_8,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            airy_bi(0.0).unwrap(),
            0.614_926_627_446_000_7,
            max_relative = 1e-15
        );
    }

    #[test]
    fn matches_reference_table() {
        for &(x, ai, aip) in AI_REF {
            let (a, ap) = airy_ai_pair(x).unwrap();
            assert_relative_eq!(a, ai, max_relative = 1e-12);
            assert_relative_eq!(ap, aip, max_relative = 1e-12);
        }
    }

    #[test]
    fn non_finite_is_domain_error() {
        assert!(matches!(airy_ai(f64::NAN), Err(Error::Domain { .. })));
        assert!(matches!(
            airy_ai_prime(f64::INFINITY),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            airy_bi(f64::NEG_INFINITY),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn bi_above_cap_is_range_error() {
        assert!(matches!(airy_bi(15.5), Err(Error::Range { .. })));
        assert!(airy_bi(15.0).is_ok());
    }

    #[test]
    fn large_positive_underflows_to_zero() {
        assert_eq!(airy_ai(200.0).unwrap(), 0.0);
        assert_eq!(airy_ai_prime(1e300).unwrap(), 0.0);
        let tiny = airy_ai(100.0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-280);
    }

    #[test]
    fn wronskian_on_both_sides() {
        for &x in &[-3.0, 2.0, -12.0, 9.9] {
            let e = airy(x).unwrap();
            assert_relative_eq!(e.wronskian(), 1.0 / PI, max_relative = 1e-12);
        }
    }

    #[test]
    fn bi_oscillatory_amplitude_bound() {
        assert!(airy_bi(-10.0f64).unwrap().abs() <= 1.0);
    }

    #[test]
    fn anchor_march_reproduces_origin() {
        // The exponential-side table is marched from x = 10 down to 1/4;
        // one more step must land on the exact Ai(0), Ai′(0).
        let t = anchors();
        let a = t.entries[ANCHOR_COUNT + 1];
        let (ai, aip) = taylor_pair(ANCHOR_STEP, a.ai, a.aip, -ANCHOR_STEP, f64::EPSILON);
        assert_relative_eq!(ai, AI0, max_relative = 1e-14);
        assert_relative_eq!(aip, -NEG_AIP0, max_relative = 1e-14);
    }

    #[test]
    fn f32_evaluation_tracks_f64() {
        for &x in &[-7.3f32, -0.4, 0.0, 2.2, 8.0] {
            let a32 = airy_ai(x).unwrap() as f64;
            let a64 = airy_ai(x as f64).unwrap();
            assert!((a32 - a64).abs() <= 1e-5 * (1.0 + a64.abs()));
        }
    }
}
