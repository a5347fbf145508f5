"""Smoke test for the Python bindings.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/relerr_halfspace-*.whl
"""

import math

import relerr_halfspace as rh


def main():
    assert abs(rh.gaussian_cdf(0.0) - 0.5) < 1e-15
    assert abs(rh.u_weight(0.5) - 1.0 / (2.0 * math.pi)) < 1e-12
    a = rh.v_ratio(0.05)
    assert abs(rh.v_inverse(a) - 0.05) < 1e-9

    try:
        rh.psi(0.7)
    except rh.RelerrError:
        pass
    else:
        raise AssertionError("psi above 1/2 must raise")

    n = 16
    direction = [1.0] + [0.0] * (n - 1)
    spec = rh.FunctionSpec.halfspace_with_volume(direction, 0.05)
    assert spec.variant == "halfspace" and spec.dimension == n
    assert abs(spec.exact_volume() - 0.05) < 1e-12
    assert rh.FunctionSpec.from_json(spec.to_json()).to_json() == spec.to_json()

    bundle = rh.OracleBundle(spec, seed=7)
    x = bundle.sample()
    assert spec.evaluate(x) and bundle.samp_count == 1

    est = rh.est_sense(bundle, 0.05, 0.05)
    assert 0.0 <= est["value"] <= 2.0

    t = rh.pairwise_t(rh.OracleBundle(spec, seed=8), 4000)
    assert abs(t - a) < 0.3, t

    verdict = rh.hermite_test(rh.OracleBundle(spec, seed=9), 0.4, 0.05, constants={"m_scale": 64.0})
    assert verdict["tester"] == "hermite" and verdict["mq_used"] == 0
    assert verdict["decision"] in ("accept", "reject")

    report = rh.run_experiment(
        {
            "tester": "fixed_noise",
            "family": {"kind": "halfspace", "volume": 0.05},
            "dimension": n,
            "eps": 0.3,
            "p2": 0.05,
            "p_min": 0.01,
            "trials": 3,
            "base_seed": 1,
            "preset": "practical",
        },
        jobs=1,
    )
    assert report["summary"]["trials"] == 3
    assert rh.run_validation_suite("gauss_special")["passed"]
    print("smoke test passed, defaults", rh.defaults_version())


if __name__ == "__main__":
    main()
