mod common;

use std::f64::consts::PI;

use relerr_halfspace::harness::{run_experiment, ExperimentConfig, Family};
use relerr_halfspace::testers::{
    combined_schedule, fixed_noise_schedule, gsa_schedule, gsa_threshold, hermite_schedule, preset_names,
};
use relerr_halfspace::*;

fn prob(p: f64) -> Probability {
    Probability::new(p).unwrap()
}

fn practical() -> ConstantSchedule {
    ConstantSchedule::preset("practical").unwrap()
}

fn scaled(m_scale: f64) -> ConstantSchedule {
    ConstantSchedule::default()
        .with_overrides(&ConstantOverrides { m_scale: Some(m_scale), ..Default::default() })
        .unwrap()
}

fn bundle(family: &Family, n: usize, seed: u64) -> OracleBundle {
    OracleBundle::new(family.instantiate(n, seed).unwrap(), seed ^ 0xABCD).unwrap()
}

/// `φ(Φ⁻¹(p))` from the test oracles.
fn iso(p: f64) -> f64 {
    common::phi(common::quantile(p))
}

fn assert_close(a: f64, b: f64, what: &str) {
    assert!(common::close(a, b, 1e-10), "{what}: {a} vs {b}");
}

fn assert_decision_matches(v: &Verdict) {
    let accept = match v.tester {
        TesterKind::Hermite => (v.statistic - v.params.tau.unwrap()).abs() <= v.threshold,
        _ if v.reason.is_some() => false,
        _ => v.statistic <= v.threshold,
    };
    assert_eq!(v.accepted(), accept, "{v:?}");
}

#[test]
fn presets_ship_with_a_version() {
    assert_eq!(preset_names(), vec!["default", "practical"]);
    assert!(!defaults_version().is_empty());
    let d = ConstantSchedule::default();
    assert_eq!(
        (d.c1_gsa, d.c2_noise, d.c2_eta, d.c_accept, d.c1_fnt, d.c2_fnt, d.c_star, d.k_hoeffding),
        (0.05, 0.05, 0.05, 0.05, 0.05, 0.005, 0.5, 16.0)
    );
    for name in preset_names() {
        ConstantSchedule::preset(name).unwrap().validate().unwrap();
    }
    assert!(matches!(ConstantSchedule::preset("nope"), Err(Error::Config { .. })));
}

#[test]
fn ordering_gate_is_enforced() {
    let bad = |o: ConstantOverrides| ConstantSchedule::default().with_overrides(&o);
    assert!(bad(ConstantOverrides { c3_xi_doc: Some(0.001), ..Default::default() }).is_err());
    assert!(bad(ConstantOverrides { c2_fnt: Some(0.006), ..Default::default() }).is_err());
    assert!(bad(ConstantOverrides { c1_fnt: Some(0.06), ..Default::default() }).is_err());
    assert!(bad(ConstantOverrides { c_accept: Some(-1.0), ..Default::default() }).is_err());
    assert!(bad(ConstantOverrides { c_star: Some(5.0), c1_fnt: Some(0.5), ..Default::default() }).is_ok());
}

#[test]
fn gsa_schedule_arithmetic() {
    let c = practical();
    let (eps, p) = (0.3f64, 0.05f64);
    let s = gsa_schedule(eps, prob(p), &c).unwrap();
    let l = (1.0 / p).ln();
    let zeta = c.c1_gsa * eps * eps / (l * l);
    let p_lb = p / (1.0 + zeta);
    let t = c.c2_noise * eps.powi(10) / (1.0 / p_lb).ln().powi(10);
    let kappa = zeta * t.sqrt() * iso(p_lb) / (2.0 * PI.sqrt() * p_lb);
    assert_close(s.zeta, zeta, "zeta");
    assert_close(s.p_lb, p_lb, "p_lb");
    assert_close(s.t, t, "t");
    assert_close(s.kappa, kappa, "kappa");
    assert_eq!(s.draws, (16.0 / (s.kappa * s.kappa)).ceil() as u64);
    let threshold = 2.0 * t.sqrt() / PI.sqrt() * iso(p_lb) / p_lb + kappa;
    assert_close(gsa_threshold(s.t, s.kappa, prob(s.p_lb)).unwrap(), threshold, "threshold");
}

#[test]
fn hermite_schedule_arithmetic() {
    let c = scaled(3.5);
    let (n, eps, p) = (64, 0.4f64, 0.05f64);
    let s = hermite_schedule(n, eps, prob(p), &c).unwrap();
    let l = (1.0 / p).ln();
    let m = (3.5 * ((n as f64).sqrt() / (eps * eps) + l * l / eps.powi(4))).ceil() as u64;
    assert_eq!(s.m, m);
    assert_close(s.tau, (iso(p) / p).powi(2), "tau");
    assert_close(s.band, 0.05 * eps * eps, "band");
    assert_close(s.eta, 0.05 * eps * eps / l, "eta");
}

#[test]
fn fixed_noise_and_combined_schedule_arithmetic() {
    let c = practical();
    let (n, eps, p_min) = (64, 0.3, 0.01f64);
    let l = (1.0 / p_min).ln();
    let s = fixed_noise_schedule(eps, prob(p_min), &c).unwrap();
    assert_close(s.t, c.c1_fnt * eps.powi(8) / l.powi(5), "t");
    assert_close(s.kappa, c.c2_fnt * eps.powi(6) / l.powi(3), "kappa");
    assert_eq!(s.draws, (16.0 / (s.kappa / 2.0).powi(2)).ceil() as u64);

    let cs = combined_schedule(n, eps, prob(p_min), &c).unwrap();
    let m = (((n as f64) * l).sqrt() / (eps * eps) + l * l / eps.powi(4)).ceil() as u64;
    assert_eq!(cs.m, m);
    assert_eq!(cs.fixed_noise, s);
}

#[test]
fn literal_defaults_exceed_the_draw_cap() {
    let r = gsa_schedule(0.3, prob(0.05), &ConstantSchedule::default());
    assert!(matches!(r, Err(Error::SampleBudgetExceeded { .. })), "{r:?}");
}

#[test]
fn degenerate_and_out_of_range_inputs() {
    let c = practical();
    assert!(matches!(gsa_schedule(1e-40, prob(0.05), &c), Err(Error::DegenerateParameters(_))));
    assert!(matches!(fixed_noise_schedule(1e-60, prob(0.05), &c), Err(Error::DegenerateParameters(_))));
    for eps in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(matches!(gsa_schedule(eps, prob(0.05), &c), Err(Error::Domain(_))), "eps = {eps}");
    }

    let fam = Family::Halfspace { volume: 0.05 };
    let mut b = bundle(&fam, 8, 1);
    let big = prob(0.2);
    assert!(matches!(gsa_test(&mut b, 0.3, big, &c), Err(Error::VolumeOutOfRange { .. })));
    assert!(matches!(hermite_test(&mut b, 0.3, big, &c), Err(Error::VolumeOutOfRange { .. })));
    assert!(matches!(gsa_fixed_noise_test(&mut b, 0.3, big, prob(0.01), &c), Err(Error::VolumeOutOfRange { .. })));
    assert!(matches!(gsa_fixed_noise_test(&mut b, 0.3, prob(0.05), big, &c), Err(Error::VolumeOutOfRange { .. })));
    assert!(matches!(combined_test(&mut b, 0.3, big, &c), Err(Error::VolumeOutOfRange { .. })));
    assert_eq!((b.samp_count(), b.mq_count()), (0, 0));
    assert!(matches!(standard_model_fallback(&mut b, 0.3), Err(Error::NotImplemented(_))));
}

#[test]
fn gsa_threshold_decreases_in_volume() {
    let mut last = f64::INFINITY;
    for i in 1..=1000 {
        let th = gsa_threshold(0.01, 0.002, prob(i as f64 * 1e-4)).unwrap();
        assert!(th < last);
        last = th;
    }
}

#[test]
fn resource_accounting() {
    let fam = Family::Halfspace { volume: 0.05 };
    let c = practical();

    let mut b = bundle(&fam, 16, 2);
    let v = gsa_test(&mut b, 0.3, prob(0.05), &c).unwrap();
    let n = gsa_schedule(0.3, prob(0.05), &c).unwrap().draws;
    assert_eq!((v.samp_used, v.mq_used, v.params.draws), (n, n, Some(n)));
    assert_eq!((b.samp_count(), b.mq_count()), (n, n));
    assert_decision_matches(&v);

    let mut b = bundle(&fam, 16, 3);
    let v = hermite_test(&mut b, 0.4, prob(0.05), &scaled(2.0)).unwrap();
    let m = v.params.m.unwrap();
    assert_eq!((v.samp_used, v.mq_used), (2 * m, 0));
    assert_eq!(b.mq_count(), 0);
    assert_decision_matches(&v);

    let mut b = bundle(&fam, 16, 4);
    let v = gsa_fixed_noise_test(&mut b, 0.3, prob(0.05), prob(0.01), &c).unwrap();
    let n = v.params.draws.unwrap();
    assert_eq!((v.samp_used, v.mq_used), (n, n));
    assert_eq!(v.params.p2, Some(0.05));
    assert_decision_matches(&v);

    let mut b = bundle(&fam, 16, 5);
    let v = combined_test(&mut b, 0.3, prob(0.01), &c).unwrap();
    assert!(v.reason.is_none(), "{v:?}");
    let (m, n) = (v.params.m.unwrap(), v.params.draws.unwrap());
    assert_eq!((v.samp_used, v.mq_used), (2 * m + n, n));
    assert_eq!(planned_cost(TesterKind::Combined, 16, 0.3, prob(0.01), &c).unwrap().samples, v.samp_used);
    assert_decision_matches(&v);
}

#[test]
fn verdicts_are_bit_reproducible() {
    let fam = Family::CentralSlab { volume: 0.05 };
    let c = practical();
    for tester in [TesterKind::Gsa, TesterKind::Hermite, TesterKind::FixedNoise, TesterKind::Combined] {
        let hint = match tester {
            TesterKind::Gsa | TesterKind::Hermite => VolumeHint::PHat(prob(0.05)),
            TesterKind::FixedNoise => VolumeHint::Fixed { p2: prob(0.05), p_min: prob(0.01) },
            TesterKind::Combined => VolumeHint::Floor(prob(0.01)),
        };
        let run = || testers::run_tester(tester, &mut bundle(&fam, 8, 6), 0.3, &hint, &c).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
        assert_eq!(a, b);
        assert_decision_matches(&a);
    }
}

#[test]
fn mismatched_hints_are_refused() {
    let c = practical();
    let r = testers::run_tester(TesterKind::Combined, &mut bundle(&Family::Halfspace { volume: 0.05 }, 4, 1), 0.3, &VolumeHint::PHat(prob(0.05)), &c);
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn tester_config_blocks() {
    let cfg = TesterConfig::from_json(r#"{"tester":"gsa","eps":0.3,"p_hat":0.05,"preset":"practical","m_scale":2}"#).unwrap();
    assert_eq!(cfg.constants().unwrap().m_scale, 2.0);
    let v = cfg.run(&mut bundle(&Family::Halfspace { volume: 0.05 }, 4, 1)).unwrap();
    let back: Verdict = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(back, v);

    let missing = TesterConfig::from_json(r#"{"tester":"fixed_noise","eps":0.3,"p2":0.05}"#).unwrap();
    assert!(matches!(missing.validate(), Err(Error::Config { field, .. }) if field == "p_min"));
    assert!(TesterConfig::from_json(r#"{"tester":"gsa","eps":0.3,"bogus":1}"#).is_err());
}

#[test]
fn hermite_rejects_a_misscaled_volume_hint() {
    // Halfspace of volume 0.1 tested as if it had volume 0.05.
    let fam = Family::Halfspace { volume: 0.1 };
    let c = scaled(256.0);
    for seed in 0..20 {
        let v = hermite_test(&mut bundle(&fam, 16, seed), 0.4, prob(0.05), &c).unwrap();
        assert!(!v.accepted(), "seed {seed}: {v:?}");
    }
}

#[test]
fn combined_rejects_a_symmetric_union() {
    // x₁ ≥ a or -x₁ ≥ a: T sits near 0, far below V(0.1).
    let a = -common::quantile(0.025);
    let mut minus = vec![0.0; 16];
    minus[0] = -1.0;
    let mut plus = vec![0.0; 16];
    plus[0] = 1.0;
    let spec = FunctionSpec::union_of_halfspaces(vec![
        HalfspaceParams { direction: plus, threshold: a },
        HalfspaceParams { direction: minus, threshold: a },
    ])
    .unwrap();
    let c = practical();
    for seed in 0..20 {
        let v = combined_test(&mut OracleBundle::new(spec.clone(), seed).unwrap(), 0.3, prob(0.01), &c).unwrap();
        assert!(!v.accepted(), "seed {seed}: {v:?}");
        assert_eq!(v.reason, Some(RejectReason::VolumeAboveGate));
        assert_eq!(v.mq_used, 0);
    }
}

fn accept_frequency(json: &str, family: Family) -> f64 {
    let mut cfg = ExperimentConfig::from_json(json).unwrap();
    cfg.family = family;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.summary.errors, 0);
    r.summary.accept_frequency
}

#[test]
fn every_tester_separates_halfspaces_from_slabs() {
    let configs = [
        r#"{"tester":"gsa","family":{"kind":"halfspace","volume":0.05},"dimension":16,"eps":0.3,"p_hat":0.05,"trials":40,"base_seed":1,"preset":"practical"}"#,
        r#"{"tester":"hermite","family":{"kind":"halfspace","volume":0.05},"dimension":16,"eps":0.4,"p_hat":0.05,"trials":40,"base_seed":2,"m_scale":256}"#,
        r#"{"tester":"fixed_noise","family":{"kind":"halfspace","volume":0.05},"dimension":16,"eps":0.3,"p2":0.05,"p_min":0.01,"trials":40,"base_seed":3,"preset":"practical"}"#,
        r#"{"tester":"combined","family":{"kind":"halfspace","volume":0.05},"dimension":16,"eps":0.3,"p_min":0.01,"trials":40,"base_seed":4,"preset":"practical"}"#,
    ];
    for json in configs {
        let hs = accept_frequency(json, Family::Halfspace { volume: 0.05 });
        let slab = accept_frequency(json, Family::CentralSlab { volume: 0.05 });
        assert!(hs - slab >= 0.8, "{json}: halfspace {hs}, slab {slab}");
    }
}
