//! Oracles written independently of the library: erfc by Taylor series and
//! Lentz continued fraction, composite Simpson, bisection.
#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

/// High-precision reference values (40-digit arithmetic), frozen.
pub mod frozen {
    /// `(p, Φ⁻¹(p), I(p), V(p))`
    pub const MAPS: [(f64, f64, f64, f64); 6] = [
        (0.5, 0.0, 0.398_942_280_401_432_68, 0.636_619_772_367_581_34),
        (0.3, -0.524_400_512_708_040_78, 0.347_692_614_200_073_76, 1.343_223_932_992_014_8),
        (0.1, -1.281_551_565_544_600_5, 0.175_498_331_932_486_81, 3.079_966_451_108_531_8),
        (0.05, -1.644_853_626_951_472_7, 0.103_135_640_375_371_30, 4.254_784_126_255_167_5),
        (0.02, -2.053_748_910_631_823_1, 0.048_418_135_880_742_010, 5.860_789_705_414_992_2),
        (0.01, -2.326_347_874_040_841_1, 0.026_652_142_203_458_048, 7.103_366_840_333_496_2),
    ];
    pub const V_1E6: f64 = 24.485_996_673_798_1;
    pub const V_1E9: f64 = 37.900_549_785_923_386;
    /// `Φ(-r)`
    pub const TAILS: [(f64, f64); 5] = [
        (1.5, 0.066_807_201_268_858_066),
        (2.0, 0.022_750_131_948_179_207),
        (3.0, 0.001_349_898_031_630_094_5),
        (5.0, 2.866_515_718_791_939_1e-7),
        (8.0, 6.220_960_574_271_784_1e-16),
    ];
    /// `(p, t, NS_t(H_p)/p)` for a halfspace
    pub const HALFSPACE_NS: [(f64, f64, f64); 8] = [
        (0.5, 0.1, 0.279_984_501_130_948_11),
        (0.5, 0.3, 0.468_875_976_293_425_18),
        (0.1, 0.1, 0.607_627_095_181_363_22),
        (0.1, 0.3, 0.992_253_667_959_487_29),
        (0.05, 0.02, 0.326_595_851_068_153_03),
        (0.05, 0.05, 0.510_402_889_159_402_01),
        (0.01, 0.05, 0.652_240_840_243_974_32),
        (0.05, 0.1, 0.708_048_718_767_101_26),
    ];
    /// `(p, W²[central slab of volume p])`
    pub const SLAB_W2: [(f64, f64); 3] = [
        (0.05, 0.001_246_727_079_525_376_6),
        (0.1, 0.004_947_612_769_215_566_8),
        (0.3, 0.040_739_319_615_045_901),
    ];
}

/// `erfc` from the Taylor series of `erf` for `|x| < 2.5` and a modified
/// Lentz continued fraction beyond.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        // erf(x) = 2/√π Σ (-1)^n x^{2n+1} / (n! (2n+1))
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        return 1.0 - 2.0 / PI.sqrt() * sum;
    }
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Root of an increasing function on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Φ⁻¹(p)` by bisection on the oracle cdf, lower half only.
pub fn quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p <= 0.5);
    bisect(|x| cdf(x).ln() - p.ln(), -40.0, 0.0)
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `NS_t(H)/Vol(H)` for a volume-`p` halfspace: `(2/p) ∫_θ^∞ φ(u) Φ((θ - ρu)/σ) du`.
pub fn halfspace_ns(p: f64, t: f64) -> f64 {
    let theta = -quantile(p.min(0.5));
    let theta = if p > 0.5 { -theta } else { theta };
    let rho = (-t).exp();
    let sigma = (1.0 - rho * rho).sqrt();
    2.0 * simpson(|u| phi(u) * cdf((theta - rho * u) / sigma), theta, theta + 15.0, 20_000) / p
}

/// Sheppard: `NS_t/p` of a volume-1/2 halfspace.
pub fn sheppard(t: f64) -> f64 {
    2.0 / PI * (-t).exp().acos()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}
