mod common;

use common::frozen;
use proptest::prelude::*;
use relerr_halfspace::gauss::DEFAULT_P_FLOOR;
use relerr_halfspace::*;

fn prob(p: f64) -> Probability {
    Probability::new(p).unwrap()
}

#[test]
fn oracle_erfc_matches_frozen_tails() {
    for (r, tail) in frozen::TAILS {
        assert!(common::close(common::cdf(-r), tail, 1e-13), "r = {r}");
    }
}

#[test]
fn cdf_and_sf_match_frozen_tails() {
    for (r, tail) in frozen::TAILS {
        assert!(common::close(gaussian_cdf(-r).unwrap(), tail, 1e-13), "r = {r}");
        assert!(common::close(gaussian_sf(r).unwrap(), tail, 1e-13), "r = {r}");
    }
}

#[test]
fn maps_match_frozen_values() {
    for (p, q, i, v) in frozen::MAPS {
        let pp = prob(p);
        assert!((gaussian_quantile(pp) - q).abs() <= 1e-14 * q.abs().max(1.0), "quantile({p})");
        assert!(common::close(isoperimetric(pp), i, 1e-13), "I({p})");
        assert!(common::close(u_weight(pp), i * i, 1e-13), "U({p})");
        assert!(common::close(psi(pp).unwrap(), i / p, 1e-13), "psi({p})");
        assert!(common::close(v_ratio(pp).unwrap(), v, 1e-13), "V({p})");
    }
    assert!(common::close(v_ratio(prob(1e-6)).unwrap(), frozen::V_1E6, 1e-12));
    assert!(common::close(v_ratio(prob(1e-9)).unwrap(), frozen::V_1E9, 1e-12));
}

#[test]
fn quantile_matches_bisection_oracle() {
    for k in 1..=60 {
        let p = 0.5 * 10f64.powf(-(k as f64) / 4.0);
        let want = common::quantile(p);
        let got = gaussian_quantile(prob(p));
        assert!((got - want).abs() < 1e-11 * want.abs().max(1.0), "p = {p}: {got} vs {want}");
    }
}

#[test]
fn tail_sandwich() {
    for r in [1.5f64, 2.0, 3.0, 5.0, 8.0] {
        let tail = gaussian_sf(r).unwrap();
        let d = gaussian_pdf(r).unwrap();
        assert!((1.0 / r - r.powi(-3)) * d <= tail);
        assert!(tail <= (1.0 / r - r.powi(-3) + 3.0 * r.powi(-5)) * d);
    }
}

#[test]
fn v_at_half_and_gap_between_volumes() {
    assert!(common::close(v_ratio(prob(0.5)).unwrap(), 2.0 / std::f64::consts::PI, 1e-14));
    let gap = v_ratio(prob(0.05)).unwrap() - v_ratio(prob(0.1)).unwrap();
    assert!(common::close(gap, 1.174_817_675_146_635_7, 1e-12), "{gap}");
}

#[test]
fn v_inverse_frozen_points() {
    for (p, _, _, v) in frozen::MAPS {
        let back = v_inverse(v, prob(DEFAULT_P_FLOOR)).unwrap().get();
        assert!(common::close(back, p, 1e-10), "{p}: {back}");
    }
}

#[test]
fn v_inverse_range_errors() {
    assert!(matches!(v_inverse(0.5, prob(1e-9)), Err(Error::OutOfRangeLow { .. })));
    assert!(matches!(v_inverse(40.0, prob(1e-9)), Err(Error::OutOfRangeHigh { .. })));
    assert!(matches!(v_inverse(8.0, prob(0.01)), Err(Error::OutOfRangeHigh { .. })));
}

#[test]
fn probability_rejects_endpoints_and_nan() {
    for p in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
        assert!(Probability::new(p).is_err(), "{p}");
    }
}

proptest! {
    #[test]
    fn cdf_quantile_round_trip(x in -8.0f64..0.0) {
        let back = gaussian_quantile(prob(gaussian_cdf(x).unwrap()));
        prop_assert!((back - x).abs() < 1e-9);
    }

    #[test]
    fn cdf_plus_sf_is_one(x in -30.0f64..30.0) {
        let s = gaussian_cdf(x).unwrap() + gaussian_sf(x).unwrap();
        prop_assert!((s - 1.0).abs() < 4e-16);
    }

    #[test]
    fn isoperimetric_is_symmetric(p in 1e-6f64..0.5) {
        let c = prob(p).complement();
        // 1 - c is exact for c ≥ 1/2, so the symmetry holds bit for bit.
        let mirror = prob(1.0 - c.get());
        prop_assert_eq!(isoperimetric(c), isoperimetric(mirror));
    }

    #[test]
    fn v_is_decreasing(a in 1e-8f64..0.49, gap in 1e-6f64..0.01) {
        let b = (a + gap).min(0.5);
        prop_assert!(v_ratio(prob(a)).unwrap() > v_ratio(prob(b)).unwrap());
    }

    #[test]
    fn v_inverse_round_trip(lp in (1e-8f64).ln()..(0.5f64).ln()) {
        let p = lp.exp();
        let a = v_ratio(prob(p)).unwrap();
        let back = v_ratio(v_inverse(a, prob(1e-8)).unwrap()).unwrap();
        prop_assert!(((back - a) / a).abs() < 1e-9);
    }

    #[test]
    fn u_weight_is_i_squared(p in 1e-12f64..0.999) {
        let i = isoperimetric(prob(p));
        prop_assert_eq!(u_weight(prob(p)), i * i);
    }
}
