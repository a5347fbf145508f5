//! Self-check suites over the numeric kernel, the estimators and the
//! structural inequalities the testers rely on. Failures are report content,
//! not errors.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::Family;
use super::run::trial_seed;
use crate::error::{Error, Result};
use crate::estimators::{est_sense_draws, mc_levelk_weight, mc_volume, pairwise_t};
use crate::gauss::{self, gaussian_cdf, gaussian_quantile, isoperimetric, ledoux_factor, u_weight, v_inverse, v_ratio, Probability};
use crate::target::{FunctionSpec, OracleBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    GaussSpecial,
    Estimators,
    Inequalities,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::GaussSpecial, Suite::Estimators, Suite::Inequalities];

    pub fn name(self) -> &'static str {
        match self {
            Suite::GaussSpecial => "gauss_special",
            Suite::Estimators => "estimators",
            Suite::Inequalities => "inequalities",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::config("suite", format!("unknown suite `{s}`")))
    }
}

/// One measured quantity against its bound; `margin ≥ 0` means pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Check {
        let margin = bound - measured;
        Check { name: name.into(), measured, bound, margin, passed: margin >= 0.0 }
    }

    /// Passes when `measured ≥ bound`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Check {
        let margin = measured - bound;
        Check { name: name.into(), measured, bound, margin, passed: margin >= 0.0 }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} measured={:.6e} bound={:.6e} margin={:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound,
            self.margin
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {c}", self.suite.name())?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "[{}] {} checks, {failed} failed", self.suite.name(), self.checks.len())
    }
}

pub fn run_validation_suite(suite: Suite, seed: u64) -> ValidationReport {
    let checks = match suite {
        Suite::GaussSpecial => gauss_suite(),
        Suite::Estimators => estimators_suite(seed),
        Suite::Inequalities => inequalities_suite(seed),
    };
    let checks = checks.unwrap_or_else(|e| vec![Check {
        name: format!("suite ran without error ({e})"),
        measured: 1.0,
        bound: 0.0,
        margin: -1.0,
        passed: false,
    }]);
    let passed = checks.iter().all(|c| c.passed);
    ValidationReport { suite, seed, checks, passed }
}

fn prob(p: f64) -> Probability {
    Probability::new(p).expect("suite probabilities lie in (0, 1)")
}

fn gauss_suite() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    // Positive x go through the lower tail: Φ(8) rounds to within a few ulps
    // of 1 and cannot determine x to 1e-8.
    let mut worst = 0.0f64;
    for i in 0..=1600 {
        let x = -8.0 + i as f64 * 0.01;
        let back = -x.signum() * gaussian_quantile(prob(gaussian_cdf(-x.abs())?));
        worst = worst.max((back - x).abs());
    }
    out.push(Check::at_most("quantile(cdf(x)) - x on [-8, 8]", worst, 1e-8));

    let mut worst = 0.0f64;
    for i in 1..=300 {
        let p = 10f64.powf(-(i as f64) / 10.0);
        let back = gaussian_cdf(gaussian_quantile(prob(p)))?;
        worst = worst.max(((back - p) / p).abs());
    }
    out.push(Check::at_most("cdf(quantile(p)) relative error, p in [1e-30, 0.8]", worst, 1e-12));

    for r in [1.5, 2.0, 3.0, 5.0, 8.0] {
        let tail = gauss::sf(r);
        let dens = gauss::pdf(r);
        let lower = (1.0 / r - 1.0 / r.powi(3)) * dens;
        let upper = (1.0 / r - 1.0 / r.powi(3) + 3.0 / r.powi(5)) * dens;
        out.push(Check::at_least(format!("tail lower bound at r = {r} (relative)"), tail / lower - 1.0, 0.0));
        out.push(Check::at_least(format!("tail upper bound at r = {r} (relative)"), 1.0 - tail / upper, 0.0));
    }

    let mut worst = 0.0f64;
    for i in 1..=20 {
        let p = i as f64 / 21.0;
        let h = 1e-6;
        let d = (isoperimetric(prob(p + h)) - isoperimetric(prob(p - h))) / (2.0 * h);
        worst = worst.max((d + gaussian_quantile(prob(p))).abs());
    }
    out.push(Check::at_most("I'(p) + quantile(p) at 20 points", worst, 1e-6));

    out.push(Check::at_most("|U(1/2) - 1/(2 pi)|", (u_weight(prob(0.5)) - 1.0 / (2.0 * PI)).abs(), 1e-12));

    // Dyadic grid, so 1 - p is exact.
    let mut worst = 0.0f64;
    for i in 1..128 {
        let p = i as f64 / 128.0;
        worst = worst.max((u_weight(prob(p)) - u_weight(prob(p).complement())).abs());
    }
    out.push(Check::at_most("|U(p) - U(1 - p)| on a dyadic grid", worst, 0.0));

    let grid: Vec<f64> = (0..=400).map(|i| 1e-6f64.ln() + i as f64 / 400.0 * (0.49f64.ln() - 1e-6f64.ln())).collect();
    let values = grid.iter().map(|l| v_ratio(prob(l.exp()))).collect::<Result<Vec<_>>>()?;
    let min_step = values.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    out.push(Check::at_least("min V(p_i) - V(p_i+1) on (1e-6, 0.49)", min_step, f64::MIN_POSITIVE));

    let mut worst = 0.0f64;
    for l in &grid {
        let a = v_ratio(prob(l.exp()))?;
        let back = v_ratio(v_inverse(a, prob(1e-7))?)?;
        worst = worst.max(((back - a) / a).abs());
    }
    out.push(Check::at_most("V(V_inverse(a)) relative error", worst, 1e-9));
    Ok(out)
}

/// `NS_t(H)/Vol(H)` for a volume-`p` halfspace in the plane by a tensor
/// Simpson grid over the positive set, with the flip probability of each
/// grid point in closed form.
pub fn halfspace_ns_quadrature(p: f64, t: f64) -> f64 {
    let theta = -gauss::quantile(p);
    let rho = (-t).exp();
    let sigma = (-(-2.0 * t).exp_m1()).sqrt();
    let simpson = |a: f64, b: f64, n: usize, f: &dyn Fn(f64) -> f64| {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let along = |u: f64| gauss::pdf(u) * gauss::cdf((theta - rho * u) / sigma);
    let across = |v: f64| gauss::pdf(v);
    // Tensor grid in rotated coordinates (u along the normal); the integrand
    // factorizes, so the double sum is a product of the two rules.
    let mass_u = simpson(theta, theta + 14.0, 4000, &along);
    let mass_v = simpson(-12.0, 12.0, 2000, &across);
    2.0 * mass_u * mass_v / p
}

fn sense_check(
    out: &mut Vec<Check>,
    name: String,
    spec: FunctionSpec,
    t: f64,
    draws: u64,
    seed: u64,
    reference: f64,
) -> Result<()> {
    let mut b = OracleBundle::new(spec, seed)?;
    let est = est_sense_draws(&mut b, t, draws)?;
    out.push(Check::at_most(name, (est.value - reference).abs(), 3.0 * est.std_error));
    Ok(())
}

/// Batch mean and standard error of the mean of `T`.
fn t_batches(family: &Family, n: usize, m: u64, batches: u64, seed: u64) -> Result<(f64, f64)> {
    let mut vals = Vec::with_capacity(batches as usize);
    for i in 0..batches {
        let s = trial_seed(seed, i);
        let spec = family.instantiate(n, s ^ 1)?;
        let mut b = OracleBundle::new(spec, s)?;
        vals.push(pairwise_t(&mut b, m)?.value);
    }
    Ok(mean_se(&vals))
}

fn mean_se(vals: &[f64]) -> (f64, f64) {
    let k = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn estimators_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let dir2 = vec![0.6, 0.8];

    for (k, t) in [0.1, 0.3].into_iter().enumerate() {
        let p = 0.1;
        let q = halfspace_ns_quadrature(p, t);
        let spec = FunctionSpec::halfspace_with_volume(dir2.clone(), prob(p))?;
        sense_check(&mut out, format!("est_sense vs quadrature, n = 2, p = {p}, t = {t}"), spec, t, 400_000, trial_seed(seed, k as u64), q)?;
    }
    for (k, t) in [0.1f64, 0.3].into_iter().enumerate() {
        let closed = 2.0 / PI * (-t).exp().acos();
        let q = halfspace_ns_quadrature(0.5, t);
        out.push(Check::at_most(format!("quadrature vs Sheppard closed form, t = {t}"), (q - closed).abs(), 1e-7));
        let spec = FunctionSpec::halfspace(dir2.clone(), 0.0)?;
        sense_check(&mut out, format!("est_sense vs Sheppard closed form, t = {t}"), spec, t, 400_000, trial_seed(seed, 10 + k as u64), closed)?;
    }

    let p = 0.05;
    let (mean, se) = t_batches(&Family::Halfspace { volume: p }, 16, 2000, 100, trial_seed(seed, 20))?;
    out.push(Check::at_most("pairwise T mean vs V(p), n = 16, p = 0.05", (mean - v_ratio(prob(p))?).abs(), 3.0 * se));

    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 30));
    let spec = Family::Halfspace { volume: 0.2 }.instantiate(8, trial_seed(seed, 31))?;
    let (vol, se) = mc_volume(&spec, 1_000_000, &mut rng)?;
    out.push(Check::at_most("mc_volume vs exact volume", (vol - spec.exact_volume()?).abs(), 3.0 * se));

    let ws = (0..20)
        .map(|_| mc_levelk_weight(&spec, 1, 50_000, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let (w, se) = mean_se(&ws);
    out.push(Check::at_most("level-1 weight of a halfspace vs U(p)", (w - u_weight(prob(0.2))).abs(), 3.0 * se));
    Ok(out)
}

fn inequalities_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let n = 16;
    let p = 0.05;
    let v = v_ratio(prob(p))?;

    let fams = [
        Family::CentralSlab { volume: p },
        Family::Ball { volume: p },
        Family::Union { members: 2, member_volume: p / 2.0 },
    ];
    for (k, fam) in fams.iter().enumerate() {
        let (mean, se) = t_batches(fam, n, 2000, 50, trial_seed(seed, k as u64))?;
        out.push(Check::at_most(format!("mean T of {} at p = {p} vs V(p) + 3se", fam.name()), mean, v + 3.0 * se));
    }

    let t = 0.05;
    let draws = 300_000;
    let hs = Family::Halfspace { volume: p }.instantiate(n, trial_seed(seed, 10))?;
    let slab = Family::CentralSlab { volume: p }.instantiate(n, trial_seed(seed, 11))?;
    let a = est_sense_draws(&mut OracleBundle::new(hs, trial_seed(seed, 12))?, t, draws)?;
    let b = est_sense_draws(&mut OracleBundle::new(slab, trial_seed(seed, 13))?, t, draws)?;
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    out.push(Check::at_least("noise sensitivity: slab vs halfspace - 3se", b.value, a.value - 3.0 * se));

    // Halfspace band: (1 - C·μ^{1/4})·bound ≤ NS_t/p ≤ bound, μ = t·ln(1/p).
    let mut fitted = 0.0f64;
    let mut k = 20;
    for p in [0.1, 0.05, 0.01] {
        for t in [0.005, 0.02, 0.05] {
            k += 1;
            let spec = Family::Halfspace { volume: p }.instantiate(n, trial_seed(seed, k))?;
            let est = est_sense_draws(&mut OracleBundle::new(spec, trial_seed(seed, 100 + k))?, t, draws)?;
            let bound = ledoux_factor(t) * gauss::psi(prob(p))?;
            out.push(Check::at_most(
                format!("halfspace NS_t/p ≤ Ledoux bound + 3se, p = {p}, t = {t}"),
                est.value,
                bound + 3.0 * est.std_error,
            ));
            let mu = t * (1.0 / p).ln();
            fitted = fitted.max((1.0 - est.value / bound) / mu.powf(0.25));
        }
    }
    out.push(Check::at_most("fitted constant of the halfspace lower band", fitted, 10.0));

    let mut last = f64::INFINITY;
    let mut worst = f64::INFINITY;
    for i in 1..1000 {
        let th = crate::testers::gsa_threshold(0.03, 0.01, prob(i as f64 * 1e-4))?;
        worst = worst.min(last - th);
        last = th;
    }
    out.push(Check::at_least("GSA threshold strictly decreasing on (0, 0.1)", worst, f64::MIN_POSITIVE));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn gauss_suite_passes() {
        let r = run_validation_suite(Suite::GaussSpecial, 0);
        assert!(r.passed, "{r}");
    }

    #[test]
    fn check_margins() {
        assert!(Check::at_most("x", 1.0, 2.0).passed);
        assert!(!Check::at_least("x", 1.0, 2.0).passed);
        assert_eq!(Check::at_most("x", 1.0, 2.0).margin, 1.0);
    }
}
