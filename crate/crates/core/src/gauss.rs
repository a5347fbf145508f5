//! Scalar Gaussian functions.
//!
//! Besides the density, cdf and quantile of `N(0, 1)` this module provides the
//! derived maps the testers are built on:
//!
//! * `I(p) = φ(Φ⁻¹(p))`, the Gaussian isoperimetric function. It is also the
//!   Gaussian surface area of any halfspace of volume `p`.
//! * `U(p) = I(p)²`, the level-1 Hermite weight of a volume-`p` halfspace.
//! * `ψ(p) = I(p) / p` and `V(p) = U(p) / p² = ψ(p)²`, both strictly decreasing
//!   on `(0, 1/2]`, together with a bisection inverse of `V`.
//!
//! Every function rejects `p ∈ {0, 1}` instead of returning infinities.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 / √(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `ln √(2π)`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this volume `I(p)` is evaluated through its logarithm.
const LOG_SPACE_CUTOFF: f64 = 1e-4;

/// Default lower end of the bracket used by [`v_inverse`].
pub const DEFAULT_P_FLOOR: f64 = 1e-9;

const V_INVERSE_MAX_ITER: usize = 200;

/// A probability in the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(Error::Domain(format!(
                "probability must lie in the open interval (0, 1), got {value}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 - p`.
    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("expected a finite argument, got {x}")))
    }
}

/// Standard normal density.
pub fn gaussian_pdf(x: f64) -> Result<f64> {
    Ok(pdf(finite(x)?))
}

/// Standard normal cdf `Φ(x)`, evaluated through `erfc` so that the lower tail
/// keeps full relative accuracy.
pub fn gaussian_cdf(x: f64) -> Result<f64> {
    Ok(cdf(finite(x)?))
}

/// Upper tail `1 - Φ(x) = Φ(-x)`, accurate for large positive `x`.
pub fn gaussian_sf(x: f64) -> Result<f64> {
    Ok(cdf(-finite(x)?))
}

/// Standard normal quantile `Φ⁻¹(p)`.
pub fn gaussian_quantile(p: Probability) -> f64 {
    quantile(p.0)
}

/// `I(p) = φ(Φ⁻¹(p))`. Symmetric in `p ↔ 1 - p`.
pub fn isoperimetric(p: Probability) -> f64 {
    let q = p.0.min(1.0 - p.0);
    let z = quantile(q);
    if q < LOG_SPACE_CUTOFF {
        (-0.5 * z * z - LN_SQRT_2PI).exp()
    } else {
        pdf(z)
    }
}

/// `U(p) = φ(Φ⁻¹(1 - p))²`.
pub fn u_weight(p: Probability) -> f64 {
    let i = isoperimetric(p);
    i * i
}

fn at_most_half(p: Probability, name: &str) -> Result<f64> {
    if p.0 <= 0.5 {
        Ok(p.0)
    } else {
        Err(Error::Domain(format!("{name} is defined on (0, 1/2], got {}", p.0)))
    }
}

/// `ψ(p) = I(p) / p` on `(0, 1/2]`.
pub fn psi(p: Probability) -> Result<f64> {
    let v = at_most_half(p, "psi")?;
    Ok(isoperimetric(p) / v)
}

/// `V(p) = U(p) / p²` on `(0, 1/2]`, evaluated as `ψ(p)²`.
pub fn v_ratio(p: Probability) -> Result<f64> {
    let s = psi(p)?;
    Ok(s * s)
}

/// Inverse of [`v_ratio`] on `[p_floor, 1/2]` by bisection in `ln p`.
///
/// Arguments below `V(1/2)` give [`Error::OutOfRangeLow`], arguments above
/// `V(p_floor)` give [`Error::OutOfRangeHigh`]. Values within a relative
/// `1e-12` of either end snap to that end.
pub fn v_inverse(a: f64, p_floor: Probability) -> Result<Probability> {
    let a = finite(a)?;
    let floor = at_most_half(p_floor, "v_inverse floor")?;
    let half = Probability(0.5);
    let v_half = v_ratio(half)?;
    let v_floor = v_ratio(p_floor)?;
    let snap = 1e-12;
    if a < v_half {
        if a >= v_half * (1.0 - snap) {
            return Ok(half);
        }
        return Err(Error::OutOfRangeLow { value: a, lower: v_half });
    }
    if a > v_floor {
        if a <= v_floor * (1.0 + snap) {
            return Ok(p_floor);
        }
        return Err(Error::OutOfRangeHigh { value: a, upper: v_floor });
    }

    // V is decreasing: V(lo) >= a >= V(hi).
    let (mut lo, mut hi) = (floor.ln(), 0.5f64.ln());
    for _ in 0..V_INVERSE_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = v_ratio(Probability(mid.exp()))?;
        if v > a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (p_lo, p_hi) = (lo.exp(), hi.exp().min(0.5));
    let (v_lo, v_hi) = (v_ratio(Probability(p_lo))?, v_ratio(Probability(p_hi))?);
    let p = if (v_lo - a).abs() <= (v_hi - a).abs() { p_lo } else { p_hi };
    Probability::new(p)
}

#[inline]
pub(crate) fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub(crate) fn sf(x: f64) -> f64 {
    cdf(-x)
}

/// Quantile for `p` strictly inside `(0, 1)`; callers guarantee the range.
pub(crate) fn quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    if p == 0.5 {
        return 0.0;
    }
    // 1 - p is exact for p >= 1/2.
    let (q, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let mut x = acklam_lower(q);
    for _ in 0..2 {
        let dens = pdf(x);
        if dens <= 0.0 {
            break;
        }
        x -= (cdf(x) - q) / dens;
    }
    sign * x
}

/// Rational approximation of the lower-tail quantile, relative error about
/// 1.15e-9, for `0 < q < 1/2`.
fn acklam_lower(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if q < P_LOW {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else {
        let s = q - 0.5;
        let r = s * s;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * s
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `2√t/√π`, the factor in the Ledoux bound `NS_t(A) ≤ (2√t/√π)·surf(A)`.
#[inline]
pub(crate) fn ledoux_factor(t: f64) -> f64 {
    2.0 * t.sqrt() / PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn probability_rejects_closed_endpoints() {
        for v in [0.0, 1.0, -0.1, 1.5, f64::NAN, f64::INFINITY] {
            assert!(Probability::new(v).is_err(), "{v}");
        }
        assert!(Probability::new(1e-300).is_ok());
    }

    #[test]
    fn non_finite_arguments_are_domain_errors() {
        assert!(matches!(gaussian_pdf(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(gaussian_cdf(f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(v_inverse(f64::NAN, prob(1e-9)), Err(Error::Domain(_))));
    }

    #[test]
    fn pdf_values() {
        assert_eq!(gaussian_pdf(0.0).unwrap(), 0.398_942_280_401_432_7);
        assert!((gaussian_pdf(1.0).unwrap() - 0.241_970_724_519_143_37).abs() < 1e-16);
        assert_eq!(gaussian_pdf(-3.0).unwrap(), gaussian_pdf(3.0).unwrap());
    }

    #[test]
    fn cdf_is_half_at_zero() {
        assert_eq!(gaussian_cdf(0.0).unwrap(), 0.5);
    }

    #[test]
    fn quantile_median_and_symmetry() {
        assert_eq!(gaussian_quantile(prob(0.5)), 0.0);
        for p in [1e-12, 1e-5, 0.01, 0.2, 0.4] {
            // Compare against the complement that 1 - p actually rounds to.
            let hi_arg = 1.0 - p;
            let lo = gaussian_quantile(prob(1.0 - hi_arg));
            let hi = gaussian_quantile(prob(hi_arg));
            assert!((lo + hi).abs() < 1e-9 * lo.abs().max(1.0), "{p}");
        }
    }

    #[test]
    fn quantile_handles_extreme_tail() {
        let z = gaussian_quantile(prob(1e-300));
        let back = gaussian_cdf(z).unwrap();
        assert!(((back - 1e-300) / 1e-300).abs() < 1e-12);
    }

    #[test]
    fn psi_and_v_reject_upper_half() {
        assert!(psi(prob(0.6)).is_err());
        assert!(v_ratio(prob(0.51)).is_err());
        assert!(psi(prob(0.5)).is_ok());
    }

    #[test]
    fn v_is_psi_squared() {
        for p in [1e-9, 1e-4, 0.03, 0.25, 0.5] {
            let s = psi(prob(p)).unwrap();
            assert_eq!(v_ratio(prob(p)).unwrap(), s * s);
            let via_u = u_weight(prob(p)) / (p * p);
            assert!((via_u - s * s).abs() <= 1e-12 * via_u);
        }
    }

    #[test]
    fn v_inverse_range_errors() {
        let floor = prob(DEFAULT_P_FLOOR);
        assert!(matches!(v_inverse(0.5, floor), Err(Error::OutOfRangeLow { .. })));
        assert!(matches!(v_inverse(1e3, floor), Err(Error::OutOfRangeHigh { .. })));
        assert_eq!(v_inverse(2.0 / PI, floor).unwrap().get(), 0.5);
    }

    #[test]
    fn v_inverse_custom_floor() {
        let floor = prob(0.01);
        let top = v_ratio(floor).unwrap();
        assert!(matches!(v_inverse(top * 1.01, floor), Err(Error::OutOfRangeHigh { .. })));
        assert!((v_inverse(top, floor).unwrap().get() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn log_space_branch_is_continuous() {
        let below = isoperimetric(prob(LOG_SPACE_CUTOFF * (1.0 - 1e-12)));
        let above = isoperimetric(prob(LOG_SPACE_CUTOFF));
        assert!(((below - above) / above).abs() < 1e-10);
        // p = 1e-9 must not underflow.
        assert!(isoperimetric(prob(1e-9)) > 0.0);
    }
}
