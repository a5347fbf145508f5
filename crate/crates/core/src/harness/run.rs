use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::target::OracleBundle;
use crate::testers::{defaults_version, run_tester, ConstantSchedule, Verdict, VolumeHint};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index`: the `(index + 1)`-th SplitMix64 output from state
/// `base_seed`.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    mix64(base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed for drawing the trial's target, kept apart from the oracle stream.
fn target_seed(trial_seed: u64) -> u64 {
    mix64(trial_seed ^ 0x5EED_7A26_E7F0_0001)
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: u64,
    pub accepts: u64,
    pub rejects: u64,
    pub errors: u64,
    /// `accepts / trials`; errored trials count as non-accepts.
    pub accept_frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic_mean: Option<f64>,
    /// Sample variance, needs two completed trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic_variance: Option<f64>,
    pub total_samples: u64,
    pub total_queries: u64,
}

/// Non-deterministic fields, excluded from replay comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_ms: f64,
    pub started_unix_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub defaults_version: String,
    pub config: ExperimentConfig,
    pub constants: ConstantSchedule,
    pub summary: Summary,
    pub trials: Vec<TrialRecord>,
    pub timing: Timing,
}

impl TrialReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// JSON with the `timing` block zeroed, for determinism checks.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.timing = Timing { wall_clock_ms: 0.0, started_unix_s: 0 };
        r.to_json()
    }

    /// Writes `report.json` and `trials.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        write_trials_csv(&self.trials, &dir.join("trials.csv"))
    }
}

pub const TRIAL_CSV_HEADER: [&str; 20] = [
    "trial", "seed", "variant", "decision", "statistic", "threshold", "mq_used", "samp_used", "t", "kappa",
    "zeta", "eta", "p_lb", "p2", "tau", "m", "draws", "pairwise", "reason", "error",
];

/// 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn opt_int(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

pub fn trial_csv_row(r: &TrialRecord) -> Vec<String> {
    let mut row = vec![r.trial.to_string(), r.seed.to_string(), r.variant.clone()];
    match &r.verdict {
        Some(v) => {
            let p = &v.params;
            row.extend([
                enum_name(&v.decision),
                fmt_real(v.statistic),
                fmt_real(v.threshold),
                v.mq_used.to_string(),
                v.samp_used.to_string(),
                opt_real(p.t),
                opt_real(p.kappa),
                opt_real(p.zeta),
                opt_real(p.eta),
                opt_real(p.p_lb),
                opt_real(p.p2),
                opt_real(p.tau),
                opt_int(p.m),
                opt_int(p.draws),
                opt_real(p.pairwise),
                v.reason.as_ref().map(enum_name).unwrap_or_default(),
            ]);
        }
        None => row.extend(std::iter::repeat_n(String::new(), 16)),
    }
    row.push(r.error.clone().unwrap_or_default());
    row
}

pub fn write_trials_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRIAL_CSV_HEADER)?;
    for r in records {
        w.write_record(trial_csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

fn run_trial(config: &ExperimentConfig, hint: &VolumeHint, consts: &ConstantSchedule, index: u64) -> TrialRecord {
    let seed = trial_seed(config.base_seed, index);
    let outcome = config
        .family
        .instantiate(config.dimension, target_seed(seed))
        .and_then(|spec| {
            let variant = spec.variant_name().to_string();
            let mut bundle = OracleBundle::new(spec, seed)?;
            Ok((variant, run_tester(config.tester, &mut bundle, config.eps, hint, consts)?))
        });
    match outcome {
        Ok((variant, verdict)) => TrialRecord { trial: index, seed, variant, verdict: Some(verdict), error: None },
        Err(e) => TrialRecord {
            trial: index,
            seed,
            variant: config.family.name().to_string(),
            verdict: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn summarize(trials: &[TrialRecord]) -> Summary {
    let verdicts: Vec<&Verdict> = trials.iter().filter_map(|t| t.verdict.as_ref()).collect();
    let accepts = verdicts.iter().filter(|v| v.accepted()).count() as u64;
    let n = trials.len() as u64;
    let stats: Vec<f64> = verdicts.iter().map(|v| v.statistic).collect();
    let mean = (!stats.is_empty()).then(|| stats.iter().sum::<f64>() / stats.len() as f64);
    let variance = match (mean, stats.len()) {
        (Some(m), k) if k >= 2 => Some(stats.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (k - 1) as f64),
        _ => None,
    };
    let (wilson_low, wilson_high) = wilson_interval(accepts, n);
    Summary {
        trials: n,
        accepts,
        rejects: verdicts.len() as u64 - accepts,
        errors: n - verdicts.len() as u64,
        accept_frequency: if n == 0 { 0.0 } else { accepts as f64 / n as f64 },
        wilson_low,
        wilson_high,
        statistic_mean: mean,
        statistic_variance: variance,
        total_samples: verdicts.iter().map(|v| v.samp_used).sum(),
        total_queries: verdicts.iter().map(|v| v.mq_used).sum(),
    }
}

/// Runs the batch on `jobs` worker threads (all cores when `None`). Trial
/// results are reduced in index order, so the report does not depend on
/// `jobs`. Writes `report.json` and `trials.csv` when `output_path` is set.
pub fn run_experiment_with_jobs(config: &ExperimentConfig, jobs: Option<usize>) -> Result<TrialReport> {
    let consts = config.validate()?;
    let hint = config.volume_hint()?;
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let trials: Vec<TrialRecord> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config, &hint, &consts, i))
            .collect()
    });
    let report = TrialReport {
        defaults_version: defaults_version().to_string(),
        config: config.clone(),
        constants: consts,
        summary: summarize(&trials),
        trials,
        timing: Timing {
            wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
            started_unix_s,
        },
    };
    if let Some(dir) = &config.output_path {
        report.write(Path::new(dir))?;
    }
    Ok(report)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialReport> {
    run_experiment_with_jobs(config, None)
}
