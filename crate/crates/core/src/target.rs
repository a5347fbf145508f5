//! Target indicator functions `f: ℝⁿ → {0, 1}` and the two oracles testers
//! get to use: membership queries `MQ(f)` and conditional samples `SAMP(f)`,
//! the standard Gaussian restricted to `f⁻¹(1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared as ChiSquaredDraw, Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::gauss::{self, Probability};

pub const MAX_UNION_SIZE: usize = 8;
pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;
const UNIT_NORM_TOL: f64 = 1e-12;

/// One halfspace `{x : direction·x ≥ threshold}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceParams {
    pub direction: Vec<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `{x : w·x ≥ threshold}`
    Halfspace { direction: Vec<f64>, threshold: f64 },
    /// `{x : lower ≤ w·x ≤ upper}`
    Slab { direction: Vec<f64>, lower: f64, upper: f64 },
    UnionOfHalfspaces(Vec<HalfspaceParams>),
    /// `{x : ‖x‖ ≤ radius}`
    CenteredBall { radius: f64 },
    Constant(bool),
}

/// A validated target function. Directions are unit vectors and every
/// direction has length `dimension`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDocument", into = "SpecDocument")]
pub struct FunctionSpec {
    dimension: usize,
    shape: Shape,
}

/// JSON form: `{"variant": "...", "dimension": n, ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
enum SpecDocument {
    Halfspace {
        dimension: usize,
        direction: Vec<f64>,
        threshold: f64,
    },
    Slab {
        dimension: usize,
        direction: Vec<f64>,
        lower: f64,
        upper: f64,
    },
    UnionOfHalfspaces {
        dimension: usize,
        halfspaces: Vec<HalfspaceParams>,
    },
    CenteredBall {
        dimension: usize,
        radius: f64,
    },
    Constant {
        dimension: usize,
        value: bool,
    },
}

fn normalize(direction: Vec<f64>, dimension: usize) -> Result<Vec<f64>> {
    if direction.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            found: direction.len(),
        });
    }
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec("direction has a non-finite entry".into()));
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidSpec("direction must be nonzero".into()));
    }
    // Already unit to rounding: keep the bits, so serialized specs reload exactly.
    if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(direction);
    }
    let mut unit: Vec<f64> = direction.into_iter().map(|v| v / norm).collect();
    // One more pass pulls the norm to within an ulp or two of 1.
    let renorm = unit.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (renorm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::InvalidSpec("direction could not be normalized".into()));
    }
    unit.iter_mut().for_each(|v| *v /= renorm);
    Ok(unit)
}

fn check_threshold(value: f64, name: &str) -> Result<()> {
    if value.is_nan() {
        Err(Error::InvalidSpec(format!("{name} is NaN")))
    } else {
        Ok(())
    }
}

impl TryFrom<SpecDocument> for FunctionSpec {
    type Error = Error;

    fn try_from(doc: SpecDocument) -> Result<Self> {
        let (dimension, shape) = match doc {
            SpecDocument::Halfspace {
                dimension,
                direction,
                threshold,
            } => {
                check_threshold(threshold, "threshold")?;
                let direction = normalize(direction, dimension)?;
                (dimension, Shape::Halfspace { direction, threshold })
            }
            SpecDocument::Slab {
                dimension,
                direction,
                lower,
                upper,
            } => {
                check_threshold(lower, "lower")?;
                check_threshold(upper, "upper")?;
                if !(lower < upper) {
                    return Err(Error::InvalidSpec(format!(
                        "slab needs lower < upper, got [{lower}, {upper}]"
                    )));
                }
                let direction = normalize(direction, dimension)?;
                (dimension, Shape::Slab { direction, lower, upper })
            }
            SpecDocument::UnionOfHalfspaces {
                dimension,
                halfspaces,
            } => {
                if halfspaces.is_empty() || halfspaces.len() > MAX_UNION_SIZE {
                    return Err(Error::InvalidSpec(format!(
                        "a union needs 1..={MAX_UNION_SIZE} halfspaces, got {}",
                        halfspaces.len()
                    )));
                }
                let halfspaces = halfspaces
                    .into_iter()
                    .map(|h| {
                        check_threshold(h.threshold, "threshold")?;
                        Ok(HalfspaceParams {
                            direction: normalize(h.direction, dimension)?,
                            threshold: h.threshold,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (dimension, Shape::UnionOfHalfspaces(halfspaces))
            }
            SpecDocument::CenteredBall { dimension, radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "ball radius must be positive and finite, got {radius}"
                    )));
                }
                (dimension, Shape::CenteredBall { radius })
            }
            SpecDocument::Constant { dimension, value } => (dimension, Shape::Constant(value)),
        };
        if dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        Ok(FunctionSpec { dimension, shape })
    }
}

impl From<FunctionSpec> for SpecDocument {
    fn from(spec: FunctionSpec) -> Self {
        let dimension = spec.dimension;
        match spec.shape {
            Shape::Halfspace { direction, threshold } => SpecDocument::Halfspace {
                dimension,
                direction,
                threshold,
            },
            Shape::Slab {
                direction,
                lower,
                upper,
            } => SpecDocument::Slab {
                dimension,
                direction,
                lower,
                upper,
            },
            Shape::UnionOfHalfspaces(halfspaces) => SpecDocument::UnionOfHalfspaces {
                dimension,
                halfspaces,
            },
            Shape::CenteredBall { radius } => SpecDocument::CenteredBall { dimension, radius },
            Shape::Constant(value) => SpecDocument::Constant { dimension, value },
        }
    }
}

impl FunctionSpec {
    pub fn halfspace(direction: Vec<f64>, threshold: f64) -> Result<Self> {
        SpecDocument::Halfspace {
            dimension: direction.len(),
            direction,
            threshold,
        }
        .try_into()
    }

    /// Halfspace along `direction` whose Gaussian volume is `volume`.
    pub fn halfspace_with_volume(direction: Vec<f64>, volume: Probability) -> Result<Self> {
        // w·x ≥ θ has volume 1 - Φ(θ), so θ = -Φ⁻¹(p).
        Self::halfspace(direction, -gauss::gaussian_quantile(volume))
    }

    pub fn slab(direction: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        SpecDocument::Slab {
            dimension: direction.len(),
            direction,
            lower,
            upper,
        }
        .try_into()
    }

    /// Slab `|w·x| ≤ a` of the given volume, centered at the origin.
    pub fn central_slab(direction: Vec<f64>, volume: Probability) -> Result<Self> {
        let half_width = gauss::gaussian_quantile(Probability::new(0.5 + 0.5 * volume.get())?);
        Self::slab(direction, -half_width, half_width)
    }

    pub fn union_of_halfspaces(halfspaces: Vec<HalfspaceParams>) -> Result<Self> {
        let dimension = halfspaces.first().map_or(0, |h| h.direction.len());
        SpecDocument::UnionOfHalfspaces {
            dimension,
            halfspaces,
        }
        .try_into()
    }

    pub fn centered_ball(dimension: usize, radius: f64) -> Result<Self> {
        SpecDocument::CenteredBall { dimension, radius }.try_into()
    }

    /// Centered ball with Gaussian volume `volume` (radius from the chi-square quantile).
    pub fn ball_with_volume(dimension: usize, volume: Probability) -> Result<Self> {
        let chi = chi_squared(dimension)?;
        let r2 = chi.inverse_cdf(volume.get());
        Self::centered_ball(dimension, r2.sqrt())
    }

    pub fn constant(dimension: usize, value: bool) -> Result<Self> {
        SpecDocument::Constant { dimension, value }.try_into()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn variant_name(&self) -> &'static str {
        match self.shape {
            Shape::Halfspace { .. } => "halfspace",
            Shape::Slab { .. } => "slab",
            Shape::UnionOfHalfspaces(_) => "union_of_halfspaces",
            Shape::CenteredBall { .. } => "centered_ball",
            Shape::Constant(_) => "constant",
        }
    }

    /// Exact indicator evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        Ok(self.contains(x))
    }

    #[inline]
    pub(crate) fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Halfspace { direction, threshold } => dot(direction, x) >= *threshold,
            Shape::Slab {
                direction,
                lower,
                upper,
            } => {
                let s = dot(direction, x);
                *lower <= s && s <= *upper
            }
            Shape::UnionOfHalfspaces(hs) => hs.iter().any(|h| dot(&h.direction, x) >= h.threshold),
            Shape::CenteredBall { radius } => {
                x.iter().map(|v| v * v).sum::<f64>() <= radius * radius
            }
            Shape::Constant(b) => *b,
        }
    }

    /// Closed-form Gaussian volume, in `(0, 1]`. Only `Constant(true)` reports 1.
    pub fn exact_volume(&self) -> Result<f64> {
        let vol = match &self.shape {
            Shape::Halfspace { threshold, .. } => gauss::sf(*threshold),
            Shape::Slab { lower, upper, .. } => slab_mass(*lower, *upper),
            Shape::CenteredBall { radius } => chi_squared(self.dimension)?.cdf(radius * radius),
            Shape::Constant(true) => 1.0,
            Shape::Constant(false) => return Err(Error::EmptyPositiveSet),
            Shape::UnionOfHalfspaces(_) => return Err(Error::NoClosedForm),
        };
        if vol > 0.0 {
            Ok(vol)
        } else {
            Err(Error::EmptyPositiveSet)
        }
    }

    /// Closed-form Gaussian surface area for halfspaces and slabs.
    pub fn surface_area(&self) -> Result<f64> {
        match &self.shape {
            Shape::Halfspace { threshold, .. } => Ok(gauss::pdf(*threshold)),
            Shape::Slab { lower, upper, .. } => Ok(gauss::pdf(*lower) + gauss::pdf(*upper)),
            _ => Err(Error::NoClosedForm),
        }
    }
}

fn chi_squared(dimension: usize) -> Result<ChiSquared> {
    ChiSquared::new(dimension as f64)
        .map_err(|e| Error::InvalidSpec(format!("chi-square({dimension}): {e}")))
}

/// `Φ(upper) - Φ(lower)` without cancellation in either tail.
fn slab_mass(lower: f64, upper: f64) -> f64 {
    if lower >= 0.0 {
        gauss::sf(lower) - gauss::sf(upper)
    } else {
        gauss::cdf(upper) - gauss::cdf(lower)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// `e^{-t}·x + √(1 - e^{-2t})·z` with `z` a fresh standard Gaussian vector.
pub fn noise_perturb<R: Rng + ?Sized>(x: &[f64], t: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    noise_perturb_into(x, t, rng, &mut out)?;
    Ok(out)
}

pub fn noise_perturb_into<R: Rng + ?Sized>(
    x: &[f64],
    t: f64,
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("noise rate must be finite and >= 0, got {t}")));
    }
    if out.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: out.len(),
        });
    }
    if t == 0.0 {
        out.copy_from_slice(x);
        return Ok(());
    }
    let rho = (-t).exp();
    // 1 - e^{-2t} via expm1 keeps precision for small t.
    let sigma = (-(-2.0 * t).exp_m1()).sqrt();
    for (o, &xi) in out.iter_mut().zip(x) {
        let z: f64 = rng.sample(StandardNormal);
        *o = rho * xi + sigma * z;
    }
    Ok(())
}

/// Inverse-cdf draw of a standard normal truncated to `[lower, upper]`.
#[derive(Debug, Clone)]
enum Truncation {
    /// Parametrized by the upper tail: `sf(g) = hi + u·(lo - hi)`.
    UpperTail { sf_lower: f64, sf_upper: f64 },
    LowerTail { cdf_lower: f64, cdf_upper: f64 },
}

impl Truncation {
    fn new(lower: f64, upper: f64) -> Self {
        if lower >= 0.0 || upper == f64::INFINITY {
            Truncation::UpperTail {
                sf_lower: gauss::sf(lower),
                sf_upper: gauss::sf(upper),
            }
        } else {
            Truncation::LowerTail {
                cdf_lower: gauss::cdf(lower),
                cdf_upper: gauss::cdf(upper),
            }
        }
    }

    #[inline]
    fn draw(&self, u: f64) -> f64 {
        const TOP: f64 = 1.0 - f64::EPSILON / 2.0;
        match *self {
            Truncation::UpperTail { sf_lower, sf_upper } => {
                let s = (sf_upper + u * (sf_lower - sf_upper)).clamp(f64::MIN_POSITIVE, TOP);
                -gauss::quantile(s)
            }
            Truncation::LowerTail {
                cdf_lower,
                cdf_upper,
            } => {
                let c = (cdf_lower + u * (cdf_upper - cdf_lower)).clamp(f64::MIN_POSITIVE, TOP);
                gauss::quantile(c)
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Sampler {
    /// Truncated normal along a direction, independent normals orthogonal to it.
    Exact {
        direction: Vec<f64>,
        truncation: Truncation,
    },
    /// Rejection on `|x|² ~ χ²(n)` alone, then a uniform direction.
    Radial { radius_sq: f64, chi_sq: ChiSquaredDraw<f64> },
    Rejection,
    Unconditioned,
}

/// How `SAMP(f)` is realized. `Auto` picks the exact construction for
/// halfspaces and slabs, radial rejection for balls and plain rejection
/// sampling for everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerMode {
    #[default]
    Auto,
    Rejection,
}

/// Membership and conditional-sample oracles for one target function,
/// sharing a seeded randomness stream and counting every call.
#[derive(Debug, Clone)]
pub struct OracleBundle {
    spec: FunctionSpec,
    rng: ChaCha8Rng,
    sampler: Sampler,
    rejection_cap: u64,
    mq_count: u64,
    samp_count: u64,
    rejection_attempts: u64,
    call_attempts: u64,
}

impl OracleBundle {
    pub fn new(spec: FunctionSpec, seed: u64) -> Result<Self> {
        Self::with_mode(spec, seed, SamplerMode::Auto)
    }

    pub fn with_mode(spec: FunctionSpec, seed: u64, mode: SamplerMode) -> Result<Self> {
        // Measure-zero positive sets are refused up front.
        match spec.exact_volume() {
            Ok(_) => {}
            Err(Error::NoClosedForm) => {
                if let Shape::UnionOfHalfspaces(hs) = &spec.shape {
                    if hs.iter().all(|h| gauss::sf(h.threshold) <= 0.0) {
                        return Err(Error::EmptyPositiveSet);
                    }
                }
            }
            Err(e) => return Err(e),
        }
        let sampler = match (&spec.shape, mode) {
            (Shape::Constant(true), _) => Sampler::Unconditioned,
            (Shape::Halfspace { direction, threshold }, SamplerMode::Auto) => Sampler::Exact {
                direction: direction.clone(),
                truncation: Truncation::new(*threshold, f64::INFINITY),
            },
            (
                Shape::Slab {
                    direction,
                    lower,
                    upper,
                },
                SamplerMode::Auto,
            ) => Sampler::Exact {
                direction: direction.clone(),
                truncation: Truncation::new(*lower, *upper),
            },
            (Shape::CenteredBall { radius }, SamplerMode::Auto) => Sampler::Radial {
                radius_sq: radius * radius,
                chi_sq: ChiSquaredDraw::new(spec.dimension as f64)
                    .map_err(|e| Error::InvalidSpec(e.to_string()))?,
            },
            _ => Sampler::Rejection,
        };
        Ok(OracleBundle {
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sampler,
            rejection_cap: DEFAULT_REJECTION_CAP,
            mq_count: 0,
            samp_count: 0,
            rejection_attempts: 0,
            call_attempts: 0,
        })
    }

    pub fn with_rejection_cap(mut self, cap: u64) -> Self {
        self.rejection_cap = cap.max(1);
        self
    }

    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn mq_count(&self) -> u64 {
        self.mq_count
    }

    pub fn samp_count(&self) -> u64 {
        self.samp_count
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// `MQ(f)`.
    pub fn query(&mut self, x: &[f64]) -> Result<bool> {
        let bit = self.spec.evaluate(x)?;
        self.mq_count += 1;
        Ok(bit)
    }

    /// `SAMP(f)`.
    pub fn sample(&mut self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.spec.dimension];
        self.sample_into(&mut out)?;
        Ok(out)
    }

    pub fn sample_into(&mut self, out: &mut [f64]) -> Result<()> {
        if out.len() != self.spec.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dimension,
                found: out.len(),
            });
        }
        self.call_attempts = 0;
        match &self.sampler {
            Sampler::Unconditioned => fill_standard_normal(&mut self.rng, out),
            Sampler::Exact {
                direction,
                truncation,
            } => {
                fill_standard_normal(&mut self.rng, out);
                let u: f64 = self.rng.sample(Open01);
                let along = truncation.draw(u);
                let shift = along - dot(direction, out);
                for (o, w) in out.iter_mut().zip(direction) {
                    *o += shift * w;
                }
            }
            Sampler::Radial { radius_sq, chi_sq } => {
                let (radius_sq, chi_sq) = (*radius_sq, *chi_sq);
                let mut r2;
                loop {
                    self.reject_attempt()?;
                    r2 = chi_sq.sample(&mut self.rng);
                    if r2 <= radius_sq {
                        break;
                    }
                }
                let norm_sq = loop {
                    fill_standard_normal(&mut self.rng, out);
                    let q = dot(out, out);
                    if q > 0.0 {
                        break q;
                    }
                };
                let scale = (r2 / norm_sq).sqrt();
                for o in out.iter_mut() {
                    *o *= scale;
                }
            }
            Sampler::Rejection => loop {
                self.reject_attempt()?;
                fill_standard_normal(&mut self.rng, out);
                if self.spec.contains(out) {
                    break;
                }
            },
        }
        self.samp_count += 1;
        Ok(())
    }

    /// Counts one rejection attempt of the current `sample_into` call.
    fn reject_attempt(&mut self) -> Result<()> {
        if self.call_attempts >= self.rejection_cap {
            // Rate over the bundle's whole lifetime, this call included.
            return Err(Error::SamplerStarved {
                attempts: self.call_attempts,
                acceptance_rate: self.samp_count as f64 / self.rejection_attempts as f64,
            });
        }
        self.call_attempts += 1;
        self.rejection_attempts += 1;
        Ok(())
    }

    /// Draws `y ~ N_t(x)` from the bundle's stream. Not an oracle call.
    pub fn perturb_into(&mut self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        noise_perturb_into(x, t, &mut self.rng, out)
    }
}

/// `SAMP(f)` as a free function.
pub fn sample_conditional(bundle: &mut OracleBundle) -> Result<Vec<f64>> {
    bundle.sample()
}
