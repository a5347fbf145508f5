//! The four testers and their parameter schedules.
//!
//! Every tester takes the volume hint it needs (`p̂`, `p₂` or `p_min`), runs
//! on an [`OracleBundle`] and returns a [`Verdict`] recording the realized
//! parameters and the oracle calls it spent. Logarithms are natural.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{est_sense_draws, pairwise_t, SenseBudget};
use crate::gauss::{isoperimetric, ledoux_factor, psi, v_inverse, v_ratio, Probability};
use crate::target::OracleBundle;

/// Largest volume (hint) the testers run on.
pub const MAX_VOLUME: f64 = 0.1;
/// Parameters below this are treated as underflow.
pub const UNDERFLOW_GUARD: f64 = 1e-300;

const DEFAULTS_JSON: &str = include_str!("defaults.json");

#[derive(Deserialize)]
struct DefaultsFile {
    version: String,
    presets: BTreeMap<String, ConstantSchedule>,
}

fn defaults_file() -> &'static DefaultsFile {
    static FILE: OnceLock<DefaultsFile> = OnceLock::new();
    FILE.get_or_init(|| {
        let file: DefaultsFile = serde_json::from_str(DEFAULTS_JSON).expect("embedded defaults.json parses");
        for (name, preset) in &file.presets {
            if let Err(e) = preset.validate() {
                panic!("embedded preset `{name}` is invalid: {e}");
            }
        }
        file
    })
}

/// Version string of the shipped defaults file.
pub fn defaults_version() -> &'static str {
    &defaults_file().version
}

/// Names of the shipped presets.
pub fn preset_names() -> Vec<&'static str> {
    defaults_file().presets.keys().map(String::as_str).collect()
}

/// All the constants the tester schedules leave unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSchedule {
    /// `ζ = c1_gsa·ε²/ln²(1/p̂)` in GSA-Test.
    pub c1_gsa: f64,
    /// `t = c2_noise·ε¹⁰/ln¹⁰(1/p_lb)` in GSA-Test.
    pub c2_noise: f64,
    /// Accuracy window `ξ` of the fixed-noise test. Recorded, not used.
    pub c3_xi_doc: f64,
    /// Required accuracy `η = c2_eta·ε²/ln(1/p̂)` of the Hermite-Test hint.
    pub c2_eta: f64,
    /// Hermite-Test band `|T - τ| ≤ c_accept·ε²`.
    pub c_accept: f64,
    /// `t = c1_fnt·ε⁸/ln⁵(1/p_min)` in the fixed-noise test.
    pub c1_fnt: f64,
    /// `κ = c2_fnt·ε⁶/ln³(1/p_min)` in the fixed-noise test.
    pub c2_fnt: f64,
    /// Slack of the far-from-halfspace case of Combined-Test. Recorded, not used.
    pub c_star: f64,
    /// Multiplier on every sample count.
    pub m_scale: f64,
    pub k_hoeffding: f64,
    /// Hard cap on planned noise-sensitivity draws.
    pub max_draws: u64,
}

impl Default for ConstantSchedule {
    fn default() -> Self {
        Self::preset("default").expect("default preset ships")
    }
}

impl ConstantSchedule {
    pub fn preset(name: &str) -> Result<Self> {
        defaults_file().presets.get(name).copied().ok_or_else(|| {
            Error::config("preset", format!("unknown preset `{name}`, known: {:?}", preset_names()))
        })
    }

    /// Positivity plus the ordering `c3 ≤ c2/10`, `c2 ≤ c1/10`, `c1 ≤ c*/10`
    /// over the fixed-noise and Combined-Test constants.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("c1_gsa", self.c1_gsa),
            ("c2_noise", self.c2_noise),
            ("c3_xi_doc", self.c3_xi_doc),
            ("c2_eta", self.c2_eta),
            ("c_accept", self.c_accept),
            ("c1_fnt", self.c1_fnt),
            ("c2_fnt", self.c2_fnt),
            ("c_star", self.c_star),
            ("m_scale", self.m_scale),
            ("k_hoeffding", self.k_hoeffding),
        ];
        for (field, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be positive and finite, got {v}")));
            }
        }
        if self.max_draws == 0 {
            return Err(Error::config("max_draws", "must be at least 1"));
        }
        let chain = [
            ("c3_xi_doc", self.c3_xi_doc, "c2_fnt", self.c2_fnt),
            ("c2_fnt", self.c2_fnt, "c1_fnt", self.c1_fnt),
            ("c1_fnt", self.c1_fnt, "c_star", self.c_star),
        ];
        for (small, a, big, b) in chain {
            // Tolerate the rounding in `b / 10` for exact tenths.
            if a > b / 10.0 * (1.0 + 1e-12) {
                return Err(Error::config(small, format!("must be at most {big}/10 = {}, got {a}", b / 10.0)));
            }
        }
        Ok(())
    }

    pub fn with_overrides(mut self, o: &ConstantOverrides) -> Result<Self> {
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        apply!(c1_gsa, c2_noise, c3_xi_doc, c2_eta, c_accept, c1_fnt, c2_fnt, c_star, m_scale, k_hoeffding, max_draws);
        self.validate()?;
        Ok(self)
    }

    fn sense_budget(&self) -> SenseBudget {
        SenseBudget {
            k_hoeffding: self.k_hoeffding,
            scale: self.m_scale,
            max_draws: self.max_draws,
        }
    }
}

/// Partial [`ConstantSchedule`] as found in config files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1_gsa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3_xi_doc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2_eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_accept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1_fnt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2_fnt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_hoeffding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_draws: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TesterKind {
    Gsa,
    Hermite,
    FixedNoise,
    Combined,
}

impl TesterKind {
    pub fn name(self) -> &'static str {
        match self {
            TesterKind::Gsa => "gsa",
            TesterKind::Hermite => "hermite",
            TesterKind::FixedNoise => "fixed_noise",
            TesterKind::Combined => "combined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

/// Why Combined-Test rejected before reaching the noise-sensitivity stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// `T > V(p_min)`: the implied volume is below the promised floor.
    VolumeBelowFloor,
    /// `T` implies a volume above the tester's range.
    VolumeAboveGate,
}

/// Realized schedule values; fields a tester does not use stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Pairs per side of the pairwise statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    /// Noise-sensitivity draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<u64>,
    /// Pairwise statistic `T` for Combined-Test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise: Option<f64>,
}

/// Outcome of one tester run.
///
/// For the noise-sensitivity testers `statistic` is `α` and the run accepts
/// iff `statistic ≤ threshold`; for Hermite-Test it is `T` and the run accepts
/// iff `|statistic - τ| ≤ threshold`. A Combined-Test early reject carries a
/// `reason`, with `statistic = T` and `threshold` the violated bound on `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub tester: TesterKind,
    pub decision: Decision,
    pub statistic: f64,
    pub threshold: f64,
    pub mq_used: u64,
    pub samp_used: u64,
    pub params: VerdictParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<RejectReason>,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

fn decide(accept: bool) -> Decision {
    if accept {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")))
    }
}

fn check_volume(p: Probability) -> Result<f64> {
    let v = p.get();
    if v > MAX_VOLUME {
        Err(Error::VolumeOutOfRange { value: v, max: MAX_VOLUME })
    } else {
        Ok(v)
    }
}

fn guard(name: &str, v: f64) -> Result<f64> {
    if v >= UNDERFLOW_GUARD && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DegenerateParameters(format!("{name} = {v:e} is outside [1e-300, inf)")))
    }
}

/// `(2√t/√π)·ψ(q) + κ`, the acceptance threshold of the noise-sensitivity testers.
pub fn gsa_threshold(t: f64, kappa: f64, q: Probability) -> Result<f64> {
    Ok(ledoux_factor(t) * psi(q)? + kappa)
}

/// Realized GSA-Test schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsaSchedule {
    pub zeta: f64,
    pub p_lb: f64,
    pub t: f64,
    pub kappa: f64,
    pub draws: u64,
}

pub fn gsa_schedule(eps: f64, p_hat: Probability, consts: &ConstantSchedule) -> Result<GsaSchedule> {
    check_eps(eps)?;
    let p = check_volume(p_hat)?;
    let l = (1.0 / p).ln();
    let zeta = consts.c1_gsa * eps * eps / (l * l);
    let p_lb = p / (1.0 + zeta);
    let l_lb = (1.0 / p_lb).ln();
    let t = guard("t", consts.c2_noise * eps.powi(10) / l_lb.powi(10))?;
    let i_lb = isoperimetric(Probability::new(p_lb)?);
    let kappa = guard("kappa", zeta * t.sqrt() * i_lb / (2.0 * PI.sqrt() * p_lb))?;
    let draws = consts.sense_budget().draws(kappa)?;
    Ok(GsaSchedule { zeta, p_lb, t, kappa, draws })
}

/// GSA-Test: estimate `NS_t(f)/Vol(f)` and compare against the halfspace
/// value at the lower volume estimate `p_lb`.
pub fn gsa_test(
    bundle: &mut OracleBundle,
    eps: f64,
    p_hat: Probability,
    consts: &ConstantSchedule,
) -> Result<Verdict> {
    let s = gsa_schedule(eps, p_hat, consts)?;
    let threshold = gsa_threshold(s.t, s.kappa, Probability::new(s.p_lb)?)?;
    let (mq0, samp0) = (bundle.mq_count(), bundle.samp_count());
    let est = est_sense_draws(bundle, s.t, s.draws)?;
    Ok(Verdict {
        tester: TesterKind::Gsa,
        decision: decide(est.value <= threshold),
        statistic: est.value,
        threshold,
        mq_used: bundle.mq_count() - mq0,
        samp_used: bundle.samp_count() - samp0,
        params: VerdictParams {
            t: Some(s.t),
            kappa: Some(s.kappa),
            zeta: Some(s.zeta),
            p_lb: Some(s.p_lb),
            draws: Some(s.draws),
            ..Default::default()
        },
        reason: None,
    })
}

/// Realized Hermite-Test schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteSchedule {
    pub m: u64,
    pub tau: f64,
    pub band: f64,
    pub eta: f64,
}

pub fn hermite_schedule(
    dimension: usize,
    eps: f64,
    p_hat: Probability,
    consts: &ConstantSchedule,
) -> Result<HermiteSchedule> {
    check_eps(eps)?;
    let p = check_volume(p_hat)?;
    let l = (1.0 / p).ln();
    let e2 = eps * eps;
    let raw = (dimension as f64).sqrt() / e2 + l * l / (e2 * e2);
    let m = pair_count(consts.m_scale * raw)?;
    Ok(HermiteSchedule {
        m,
        tau: v_ratio(p_hat)?,
        band: consts.c_accept * e2,
        eta: consts.c2_eta * e2 / l,
    })
}

fn pair_count(raw: f64) -> Result<u64> {
    let m = raw.ceil();
    if !(m.is_finite() && m < 1e15) {
        return Err(Error::DegenerateParameters(format!("pair count {raw:e} is not usable")));
    }
    Ok((m as u64).max(2))
}

/// Hermite-Test: sample-only test comparing the pairwise statistic `T`
/// with the halfspace value `τ = V(p̂)`.
pub fn hermite_test(
    bundle: &mut OracleBundle,
    eps: f64,
    p_hat: Probability,
    consts: &ConstantSchedule,
) -> Result<Verdict> {
    let s = hermite_schedule(bundle.dimension(), eps, p_hat, consts)?;
    let (mq0, samp0) = (bundle.mq_count(), bundle.samp_count());
    let t_stat = pairwise_t(bundle, s.m)?.value;
    Ok(Verdict {
        tester: TesterKind::Hermite,
        decision: decide((t_stat - s.tau).abs() <= s.band),
        statistic: t_stat,
        threshold: s.band,
        mq_used: bundle.mq_count() - mq0,
        samp_used: bundle.samp_count() - samp0,
        params: VerdictParams {
            tau: Some(s.tau),
            eta: Some(s.eta),
            m: Some(s.m),
            ..Default::default()
        },
        reason: None,
    })
}

/// Realized fixed-noise schedule; depends only on `ε` and `p_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedNoiseSchedule {
    pub t: f64,
    pub kappa: f64,
    pub draws: u64,
}

pub fn fixed_noise_schedule(eps: f64, p_min: Probability, consts: &ConstantSchedule) -> Result<FixedNoiseSchedule> {
    check_eps(eps)?;
    let l = (1.0 / check_volume(p_min)?).ln();
    let t = guard("t", consts.c1_fnt * eps.powi(8) / l.powi(5))?;
    let kappa = guard("kappa", consts.c2_fnt * eps.powi(6) / l.powi(3))?;
    // Estimated to ±κ/2.
    let draws = consts.sense_budget().draws(kappa / 2.0)?;
    Ok(FixedNoiseSchedule { t, kappa, draws })
}

/// GSA-Fixed-Noise-Test: like GSA-Test, with `t` and `κ` fixed by `p_min`
/// and the threshold evaluated at the supplied volume guess `p₂`.
pub fn gsa_fixed_noise_test(
    bundle: &mut OracleBundle,
    eps: f64,
    p2: Probability,
    p_min: Probability,
    consts: &ConstantSchedule,
) -> Result<Verdict> {
    check_volume(p2)?;
    let s = fixed_noise_schedule(eps, p_min, consts)?;
    fixed_noise_run(bundle, p2, &s)
}

fn fixed_noise_run(bundle: &mut OracleBundle, p2: Probability, s: &FixedNoiseSchedule) -> Result<Verdict> {
    let threshold = gsa_threshold(s.t, s.kappa, p2)?;
    let (mq0, samp0) = (bundle.mq_count(), bundle.samp_count());
    let est = est_sense_draws(bundle, s.t, s.draws)?;
    Ok(Verdict {
        tester: TesterKind::FixedNoise,
        decision: decide(est.value <= threshold),
        statistic: est.value,
        threshold,
        mq_used: bundle.mq_count() - mq0,
        samp_used: bundle.samp_count() - samp0,
        params: VerdictParams {
            t: Some(s.t),
            kappa: Some(s.kappa),
            p2: Some(p2.get()),
            draws: Some(s.draws),
            ..Default::default()
        },
        reason: None,
    })
}

/// Realized Combined-Test schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedSchedule {
    pub m: u64,
    pub fixed_noise: FixedNoiseSchedule,
}

pub fn combined_schedule(
    dimension: usize,
    eps: f64,
    p_min: Probability,
    consts: &ConstantSchedule,
) -> Result<CombinedSchedule> {
    let fixed_noise = fixed_noise_schedule(eps, p_min, consts)?;
    let l = (1.0 / p_min.get()).ln();
    let e2 = eps * eps;
    let raw = ((dimension as f64) * l).sqrt() / e2 + l * l / (e2 * e2);
    Ok(CombinedSchedule {
        m: pair_count(consts.m_scale * raw)?,
        fixed_noise,
    })
}

/// Combined-Test: recover a volume guess `p₂ = V⁻¹(T)` from conditional
/// samples, then run the fixed-noise test at `p₂`.
pub fn combined_test(
    bundle: &mut OracleBundle,
    eps: f64,
    p_min: Probability,
    consts: &ConstantSchedule,
) -> Result<Verdict> {
    let s = combined_schedule(bundle.dimension(), eps, p_min, consts)?;
    let (mq0, samp0) = (bundle.mq_count(), bundle.samp_count());
    let t_stat = pairwise_t(bundle, s.m)?.value;
    let early = |reason, threshold, bundle: &OracleBundle| Verdict {
        tester: TesterKind::Combined,
        decision: Decision::Reject,
        statistic: t_stat,
        threshold,
        mq_used: bundle.mq_count() - mq0,
        samp_used: bundle.samp_count() - samp0,
        params: VerdictParams {
            m: Some(s.m),
            pairwise: Some(t_stat),
            ..Default::default()
        },
        reason: Some(reason),
    };
    let p2 = match v_inverse(t_stat, p_min) {
        Ok(p2) => p2,
        Err(Error::OutOfRangeHigh { upper, .. }) => {
            return Ok(early(RejectReason::VolumeBelowFloor, upper, bundle));
        }
        Err(Error::OutOfRangeLow { lower, .. }) => {
            return Ok(early(RejectReason::VolumeAboveGate, lower, bundle));
        }
        Err(e) => return Err(e),
    };
    if p2.get() > MAX_VOLUME {
        let gate = v_ratio(Probability::new(MAX_VOLUME)?)?;
        return Ok(early(RejectReason::VolumeAboveGate, gate, bundle));
    }
    let inner = fixed_noise_run(bundle, p2, &s.fixed_noise)?;
    Ok(Verdict {
        tester: TesterKind::Combined,
        mq_used: bundle.mq_count() - mq0,
        samp_used: bundle.samp_count() - samp0,
        params: VerdictParams {
            m: Some(s.m),
            pairwise: Some(t_stat),
            ..inner.params
        },
        ..inner
    })
}

/// Hook for volumes above the testers' range. Not implemented.
pub fn standard_model_fallback(_bundle: &mut OracleBundle, _eps: f64) -> Result<Verdict> {
    Err(Error::NotImplemented("testing halfspaces of volume above 0.1"))
}

/// Oracle calls a tester will spend, from its schedule alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedCost {
    pub samples: u64,
    pub queries: u64,
}

/// Planned cost of a run. For Combined-Test this assumes the run reaches the
/// noise-sensitivity stage.
pub fn planned_cost(
    tester: TesterKind,
    dimension: usize,
    eps: f64,
    volume: Probability,
    consts: &ConstantSchedule,
) -> Result<PlannedCost> {
    Ok(match tester {
        TesterKind::Gsa => {
            let n = gsa_schedule(eps, volume, consts)?.draws;
            PlannedCost { samples: n, queries: n }
        }
        TesterKind::Hermite => PlannedCost {
            samples: 2 * hermite_schedule(dimension, eps, volume, consts)?.m,
            queries: 0,
        },
        TesterKind::FixedNoise => {
            let n = fixed_noise_schedule(eps, volume, consts)?.draws;
            PlannedCost { samples: n, queries: n }
        }
        TesterKind::Combined => {
            let s = combined_schedule(dimension, eps, volume, consts)?;
            PlannedCost {
                samples: 2 * s.m + s.fixed_noise.draws,
                queries: s.fixed_noise.draws,
            }
        }
    })
}

/// Tester invocation as a JSON block.
///
/// `volume` is `p̂` for `gsa`/`hermite`, `p₂` for `fixed_noise` and `p_min`
/// for `combined`; `fixed_noise` also needs `p_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TesterConfig {
    pub tester: TesterKind,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_scale: Option<f64>,
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default)]
    pub constants: ConstantOverrides,
}

fn default_preset() -> String {
    "default".to_string()
}

/// Validated volume inputs for one tester.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeHint {
    PHat(Probability),
    Fixed { p2: Probability, p_min: Probability },
    Floor(Probability),
}

impl VolumeHint {
    /// The volume that sizes the schedule.
    pub fn schedule_volume(&self) -> Probability {
        match *self {
            VolumeHint::PHat(p) | VolumeHint::Floor(p) => p,
            VolumeHint::Fixed { p_min, .. } => p_min,
        }
    }
}

fn hint_field(field: &str, v: Option<f64>) -> Result<Probability> {
    let v = v.ok_or_else(|| Error::config(field, "required by this tester"))?;
    let p = Probability::new(v).map_err(|e| Error::config(field, e.to_string()))?;
    if v > MAX_VOLUME {
        return Err(Error::config(field, format!("must be at most {MAX_VOLUME}, got {v}")));
    }
    Ok(p)
}

impl TesterConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn constants(&self) -> Result<ConstantSchedule> {
        let mut o = self.constants;
        if let Some(s) = self.m_scale {
            o.m_scale = Some(s);
        }
        ConstantSchedule::preset(&self.preset)?.with_overrides(&o)
    }

    pub fn volume_hint(&self) -> Result<VolumeHint> {
        Ok(match self.tester {
            TesterKind::Gsa | TesterKind::Hermite => VolumeHint::PHat(hint_field("p_hat", self.p_hat)?),
            TesterKind::FixedNoise => VolumeHint::Fixed {
                p2: hint_field("p2", self.p2)?,
                p_min: hint_field("p_min", self.p_min)?,
            },
            TesterKind::Combined => VolumeHint::Floor(hint_field("p_min", self.p_min)?),
        })
    }

    pub fn validate(&self) -> Result<ConstantSchedule> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::config("eps", format!("must lie in (0, 1], got {}", self.eps)));
        }
        self.volume_hint()?;
        self.constants()
    }

    pub fn run(&self, bundle: &mut OracleBundle) -> Result<Verdict> {
        let consts = self.validate()?;
        run_tester(self.tester, bundle, self.eps, &self.volume_hint()?, &consts)
    }
}

/// Dispatch on `tester`; the hint variant must match the tester.
pub fn run_tester(
    tester: TesterKind,
    bundle: &mut OracleBundle,
    eps: f64,
    hint: &VolumeHint,
    consts: &ConstantSchedule,
) -> Result<Verdict> {
    match (tester, *hint) {
        (TesterKind::Gsa, VolumeHint::PHat(p)) => gsa_test(bundle, eps, p, consts),
        (TesterKind::Hermite, VolumeHint::PHat(p)) => hermite_test(bundle, eps, p, consts),
        (TesterKind::FixedNoise, VolumeHint::Fixed { p2, p_min }) => {
            gsa_fixed_noise_test(bundle, eps, p2, p_min, consts)
        }
        (TesterKind::Combined, VolumeHint::Floor(p)) => combined_test(bundle, eps, p, consts),
        (t, h) => Err(Error::Domain(format!("volume hint {h:?} does not fit tester {}", t.name()))),
    }
}
