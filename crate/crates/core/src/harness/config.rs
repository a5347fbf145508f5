use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{gaussian_quantile, Probability};
use crate::target::{fill_standard_normal, FunctionSpec, HalfspaceParams, MAX_UNION_SIZE};
use crate::testers::{ConstantOverrides, ConstantSchedule, TesterKind, VolumeHint, MAX_VOLUME};

/// Target functions a batch is run against. Parametric families draw a
/// fresh uniformly random orientation per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Halfspace { volume: f64 },
    /// `|w·x| ≤ a` around a random direction.
    CentralSlab { volume: f64 },
    Ball { volume: f64 },
    /// Union of halfspaces along mutually orthogonal random directions.
    Union { members: usize, member_volume: f64 },
    Fixed { spec: FunctionSpec },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Halfspace { .. } => "halfspace",
            Family::CentralSlab { .. } => "central_slab",
            Family::Ball { .. } => "ball",
            Family::Union { .. } => "union",
            Family::Fixed { .. } => "fixed",
        }
    }

    /// Same family kind at a different volume. Unions keep their member count
    /// and split the volume evenly by member (ignoring overlap).
    pub fn with_volume(&self, volume: f64) -> Family {
        match self {
            Family::Halfspace { .. } => Family::Halfspace { volume },
            Family::CentralSlab { .. } => Family::CentralSlab { volume },
            Family::Ball { .. } => Family::Ball { volume },
            Family::Union { members, .. } => Family::Union {
                members: *members,
                member_volume: volume / *members as f64,
            },
            Family::Fixed { spec } => Family::Fixed { spec: spec.clone() },
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        let vol = |field: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must lie in (0, 1), got {v}")))
            }
        };
        match self {
            Family::Halfspace { volume } | Family::CentralSlab { volume } | Family::Ball { volume } => {
                vol("family.volume", *volume)
            }
            Family::Union { members, member_volume } => {
                if *members == 0 || *members > MAX_UNION_SIZE.min(dimension) {
                    return Err(Error::config(
                        "family.members",
                        format!("must lie in [1, {}], got {members}", MAX_UNION_SIZE.min(dimension)),
                    ));
                }
                vol("family.member_volume", *member_volume)
            }
            Family::Fixed { spec } => {
                if spec.dimension() != dimension {
                    return Err(Error::config(
                        "family.spec",
                        format!("dimension {} does not match {dimension}", spec.dimension()),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Draws the trial's target from `seed`.
    pub fn instantiate(&self, dimension: usize, seed: u64) -> Result<FunctionSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Family::Halfspace { volume } => {
                FunctionSpec::halfspace_with_volume(random_unit(&mut rng, dimension), Probability::new(*volume)?)
            }
            Family::CentralSlab { volume } => {
                FunctionSpec::central_slab(random_unit(&mut rng, dimension), Probability::new(*volume)?)
            }
            Family::Ball { volume } => FunctionSpec::ball_with_volume(dimension, Probability::new(*volume)?),
            Family::Union { members, member_volume } => {
                let threshold = -gaussian_quantile(Probability::new(*member_volume)?);
                let halfspaces = orthonormal_directions(&mut rng, dimension, *members)
                    .into_iter()
                    .map(|direction| HalfspaceParams { direction, threshold })
                    .collect();
                FunctionSpec::union_of_halfspaces(halfspaces)
            }
            Family::Fixed { spec } => Ok(spec.clone()),
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    orthonormal_directions(rng, n, 1).pop().expect("one direction")
}

/// `k` orthonormal vectors by Gram-Schmidt on Gaussian draws.
fn orthonormal_directions(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = vec![0.0; n];
        fill_standard_normal(rng, &mut v);
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// One seeded batch of tester runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tester: TesterKind,
    pub family: Family,
    pub dimension: usize,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    pub trials: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_scale: Option<f64>,
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default)]
    pub constants: ConstantOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

fn default_preset() -> String {
    "default".to_string()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn hint(&self, field: &str, v: Option<f64>) -> Result<Probability> {
        let v = v.ok_or_else(|| Error::config(field, format!("required by tester `{}`", self.tester.name())))?;
        if !(v > 0.0 && v <= MAX_VOLUME) {
            return Err(Error::config(field, format!("must lie in (0, {MAX_VOLUME}], got {v}")));
        }
        Probability::new(v)
    }

    pub fn volume_hint(&self) -> Result<VolumeHint> {
        Ok(match self.tester {
            TesterKind::Gsa | TesterKind::Hermite => VolumeHint::PHat(self.hint("p_hat", self.p_hat)?),
            TesterKind::FixedNoise => VolumeHint::Fixed {
                p2: self.hint("p2", self.p2)?,
                p_min: self.hint("p_min", self.p_min)?,
            },
            TesterKind::Combined => VolumeHint::Floor(self.hint("p_min", self.p_min)?),
        })
    }

    pub fn constants(&self) -> Result<ConstantSchedule> {
        let mut o = self.constants;
        if let Some(s) = self.m_scale {
            o.m_scale = Some(s);
        }
        ConstantSchedule::preset(&self.preset)?.with_overrides(&o)
    }

    /// Field-level validation; returns the resolved constants.
    pub fn validate(&self) -> Result<ConstantSchedule> {
        if self.dimension < 2 {
            return Err(Error::config("dimension", format!("must be at least 2, got {}", self.dimension)));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::config("eps", format!("must lie in (0, 1], got {}", self.eps)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(s) = self.m_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("m_scale", format!("must be positive, got {s}")));
            }
        }
        self.family.validate(self.dimension)?;
        self.volume_hint()?;
        self.constants()
    }

    /// Sets whichever volume field sizes this tester's schedule.
    pub fn set_schedule_volume(&mut self, p: f64) {
        match self.tester {
            TesterKind::Gsa | TesterKind::Hermite => self.p_hat = Some(p),
            TesterKind::FixedNoise => self.p2 = Some(p),
            TesterKind::Combined => self.p_min = Some(p),
        }
    }
}
