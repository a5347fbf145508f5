use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Family};
use super::run::{fmt_real, run_experiment_with_jobs, TrialReport};
use crate::error::{Error, Result};
use crate::testers::{planned_cost, TesterKind};

/// Grid over dimension × volume × eps around a base experiment. Each cell
/// runs the halfspace family and a far family at the cell's volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub dimensions: Vec<usize>,
    pub volumes: Vec<f64>,
    pub eps: Vec<f64>,
    /// Defaults to the central slab.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: f64,
    pub eps: f64,
    pub tester: TesterKind,
    /// Mean realized SAMP calls per completed halfspace trial.
    pub samples: f64,
    /// Mean realized MQ calls per completed halfspace trial.
    pub queries: f64,
    pub accept_freq_halfspace: f64,
    pub accept_freq_far: f64,
    pub planned_samples: u64,
    pub planned_queries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub row: SweepRow,
    pub halfspace: TrialReport,
    pub far: TrialReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "n",
    "p",
    "eps",
    "tester",
    "samples",
    "queries",
    "accept_freq_halfspace",
    "accept_freq_far",
    "planned_samples",
    "planned_queries",
];

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// The base config specialized to one cell. Gsa and Hermite take `p̂ = p`,
    /// the fixed-noise test `p₂ = p`; Combined-Test keeps the base `p_min`.
    pub fn cell_config(&self, n: usize, p: f64, eps: f64, family: &Family) -> ExperimentConfig {
        let mut c = self.base.clone();
        c.dimension = n;
        c.eps = eps;
        c.family = family.with_volume(p);
        if c.tester != TesterKind::Combined {
            c.set_schedule_volume(p);
        }
        c.output_path = None;
        c
    }

    fn validate(&self) -> Result<()> {
        for (field, empty) in [
            ("dimensions", self.dimensions.is_empty()),
            ("volumes", self.volumes.is_empty()),
            ("eps", self.eps.is_empty()),
        ] {
            if empty {
                return Err(Error::config(field, "grid axis must be nonempty"));
            }
        }
        Ok(())
    }
}

pub fn sweep(config: &SweepConfig, jobs: Option<usize>) -> Result<SweepReport> {
    config.validate()?;
    let far_family = config.far_family.clone().unwrap_or(Family::CentralSlab { volume: 0.05 });
    let mut cells = Vec::new();
    for &n in &config.dimensions {
        for &p in &config.volumes {
            for &eps in &config.eps {
                let hs_cfg = config.cell_config(n, p, eps, &Family::Halfspace { volume: p });
                let far_cfg = config.cell_config(n, p, eps, &far_family);
                let consts = hs_cfg.validate()?;
                far_cfg.validate()?;
                let planned = planned_cost(
                    hs_cfg.tester,
                    n,
                    eps,
                    hs_cfg.volume_hint()?.schedule_volume(),
                    &consts,
                )?;
                let halfspace = run_experiment_with_jobs(&hs_cfg, jobs)?;
                let far = run_experiment_with_jobs(&far_cfg, jobs)?;
                let done = (halfspace.summary.trials - halfspace.summary.errors).max(1) as f64;
                cells.push(SweepCell {
                    row: SweepRow {
                        n,
                        p,
                        eps,
                        tester: hs_cfg.tester,
                        samples: halfspace.summary.total_samples as f64 / done,
                        queries: halfspace.summary.total_queries as f64 / done,
                        accept_freq_halfspace: halfspace.summary.accept_frequency,
                        accept_freq_far: far.summary.accept_frequency,
                        planned_samples: planned.samples,
                        planned_queries: planned.queries,
                    },
                    halfspace,
                    far,
                });
            }
        }
    }
    let report = SweepReport { cells };
    if let Some(dir) = &config.output_path {
        report.write(Path::new(dir))?;
    }
    Ok(report)
}

impl SweepReport {
    pub fn rows(&self) -> Vec<&SweepRow> {
        self.cells.iter().map(|c| &c.row).collect()
    }

    /// `sweep.csv` plus per-cell reports under `cells/`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        w.write_record(SWEEP_CSV_HEADER)?;
        for r in self.rows() {
            w.write_record([
                r.n.to_string(),
                fmt_real(r.p),
                fmt_real(r.eps),
                r.tester.name().to_string(),
                fmt_real(r.samples),
                fmt_real(r.queries),
                fmt_real(r.accept_freq_halfspace),
                fmt_real(r.accept_freq_far),
                r.planned_samples.to_string(),
                r.planned_queries.to_string(),
            ])?;
        }
        w.flush()?;
        for (i, c) in self.cells.iter().enumerate() {
            c.halfspace.write(&dir.join("cells").join(format!("{i:03}_halfspace")))?;
            c.far.write(&dir.join("cells").join(format!("{i:03}_far")))?;
        }
        Ok(())
    }
}

/// Grid search over named constants, scoring each point by the two-point
/// separation `accept(halfspace) − accept(far)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub base: ExperimentConfig,
    /// Defaults to the central slab at the base family's volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_family: Option<Family>,
    /// Constant name to candidate values; the search runs the full product.
    pub grid: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub constants: BTreeMap<String, f64>,
    pub accept_freq_halfspace: f64,
    pub accept_freq_far: f64,
    pub separation: f64,
    pub samples_per_trial: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub points: Vec<CalibrationPoint>,
    /// Largest separation, ties broken by fewer samples.
    pub best: Option<usize>,
}

impl CalibrateConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn points(&self) -> Result<Vec<BTreeMap<String, f64>>> {
        if self.grid.is_empty() {
            return Err(Error::config("grid", "must name at least one constant"));
        }
        let mut points = vec![BTreeMap::new()];
        for (name, values) in &self.grid {
            if values.is_empty() {
                return Err(Error::config(format!("grid.{name}"), "needs at least one value"));
            }
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), *v);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

fn with_constants(base: &ExperimentConfig, point: &BTreeMap<String, f64>) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    let mut doc = serde_json::to_value(c.constants)?;
    let map = doc.as_object_mut().expect("overrides serialize to an object");
    for (k, v) in point {
        if k == "m_scale" {
            c.m_scale = Some(*v);
        } else if k == "max_draws" {
            map.insert(k.clone(), serde_json::json!(*v as u64));
        } else {
            map.insert(k.clone(), serde_json::json!(v));
        }
    }
    c.constants = serde_json::from_value(doc).map_err(|e| Error::config("grid", e.to_string()))?;
    c.output_path = None;
    Ok(c)
}

pub fn calibrate(config: &CalibrateConfig, jobs: Option<usize>) -> Result<CalibrationReport> {
    let far_family = match &config.far_family {
        Some(f) => f.clone(),
        None => match &config.base.family {
            Family::Halfspace { volume } => Family::CentralSlab { volume: *volume },
            _ => return Err(Error::config("far_family", "required unless the base family is a halfspace")),
        },
    };
    let mut points = Vec::new();
    for point in config.points()? {
        let hs = with_constants(&config.base, &point)?;
        let mut far = hs.clone();
        far.family = far_family.clone();
        let outcome = hs.validate().and_then(|_| {
            let a = run_experiment_with_jobs(&hs, jobs)?;
            let b = run_experiment_with_jobs(&far, jobs)?;
            Ok((a, b))
        });
        points.push(match outcome {
            Ok((a, b)) => CalibrationPoint {
                constants: point,
                accept_freq_halfspace: a.summary.accept_frequency,
                accept_freq_far: b.summary.accept_frequency,
                separation: a.summary.accept_frequency - b.summary.accept_frequency,
                samples_per_trial: a.summary.total_samples as f64 / a.summary.trials as f64,
                error: None,
            },
            Err(e) => CalibrationPoint {
                constants: point,
                accept_freq_halfspace: 0.0,
                accept_freq_far: 0.0,
                separation: f64::MIN,
                samples_per_trial: 0.0,
                error: Some(e.to_string()),
            },
        });
    }
    let best = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.error.is_none())
        .max_by(|(_, a), (_, b)| {
            a.separation
                .total_cmp(&b.separation)
                .then(b.samples_per_trial.total_cmp(&a.samples_per_trial))
        })
        .map(|(i, _)| i);
    let report = CalibrationReport { points, best };
    if let Some(dir) = &config.output_path {
        report.write(Path::new(dir))?;
    }
    Ok(report)
}

impl CalibrationReport {
    /// `calibration.json` and `calibration.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("calibration.json"), serde_json::to_string_pretty(self)?)?;
        let names: Vec<String> = self.points.first().map(|p| p.constants.keys().cloned().collect()).unwrap_or_default();
        let mut w = csv::Writer::from_path(dir.join("calibration.csv"))?;
        let mut header = names.clone();
        header.extend(
            ["accept_freq_halfspace", "accept_freq_far", "separation", "samples_per_trial", "error"].map(String::from),
        );
        w.write_record(&header)?;
        for p in &self.points {
            let mut row: Vec<String> = names.iter().map(|n| fmt_real(p.constants[n])).collect();
            if p.error.is_some() {
                row.extend(["", "", "", ""].map(String::from));
            } else {
                row.extend([p.accept_freq_halfspace, p.accept_freq_far, p.separation, p.samples_per_trial].map(fmt_real));
            }
            row.push(p.error.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_grid_is_a_product() {
        let base: ExperimentConfig = ExperimentConfig::from_json(
            r#"{"tester":"gsa","family":{"kind":"halfspace","volume":0.05},
                "dimension":4,"eps":0.3,"p_hat":0.05,"trials":1}"#,
        )
        .unwrap();
        let mut grid = BTreeMap::new();
        grid.insert("c1_gsa".to_string(), vec![1.0, 2.0]);
        grid.insert("m_scale".to_string(), vec![0.5, 1.0, 2.0]);
        let c = CalibrateConfig { base, far_family: None, grid, output_path: None };
        let pts = c.points().unwrap();
        assert_eq!(pts.len(), 6);
        let cfg = with_constants(&c.base, &pts[5]).unwrap();
        assert_eq!(cfg.constants.c1_gsa, Some(2.0));
        assert_eq!(cfg.m_scale, Some(2.0));
        let mut bad = pts[0].clone();
        bad.insert("nope".to_string(), 1.0);
        assert!(with_constants(&c.base, &bad).is_err());
    }
}
