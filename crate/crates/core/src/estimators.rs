//! Statistics consumed by the testers (normalized noise sensitivity and the
//! pairwise statistic `T`) plus unconditioned Monte Carlo ground truth used
//! by the harness. Testers only touch [`OracleBundle`] calls, so query and
//! sample counts stay honest.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::target::{dot, fill_standard_normal, FunctionSpec, OracleBundle};

pub const DEFAULT_K_HOEFFDING: f64 = 16.0;
pub const DEFAULT_MAX_DRAWS: u64 = 500_000_000;

/// Estimate of `NS_t(f) / Vol(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSensEstimate {
    /// In `[0, 2]`.
    pub value: f64,
    pub t: f64,
    pub samples_used: u64,
    /// Target additive accuracy the sample count was sized for.
    pub kappa: f64,
    /// Plug-in binomial standard error of `value`.
    pub std_error: f64,
}

/// Sample sizing for [`est_sense_with`]: `N = ceil(scale · k_hoeffding / κ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenseBudget {
    pub k_hoeffding: f64,
    pub scale: f64,
    pub max_draws: u64,
}

impl Default for SenseBudget {
    fn default() -> Self {
        SenseBudget {
            k_hoeffding: DEFAULT_K_HOEFFDING,
            scale: 1.0,
            max_draws: DEFAULT_MAX_DRAWS,
        }
    }
}

impl SenseBudget {
    /// Number of (SAMP, MQ) pairs for accuracy `kappa`.
    pub fn draws(&self, kappa: f64) -> Result<u64> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        let required = (self.scale * self.k_hoeffding / (kappa * kappa)).ceil();
        if !(required <= self.max_draws as f64) {
            return Err(Error::SampleBudgetExceeded {
                required,
                cap: self.max_draws,
            });
        }
        Ok((required as u64).max(1))
    }
}

/// Est-Sense with `K = 16` and no scaling.
pub fn est_sense(bundle: &mut OracleBundle, t: f64, kappa: f64) -> Result<NoiseSensEstimate> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    est_sense_with(bundle, t, kappa, &SenseBudget::default())
}

pub fn est_sense_with(
    bundle: &mut OracleBundle,
    t: f64,
    kappa: f64,
    budget: &SenseBudget,
) -> Result<NoiseSensEstimate> {
    let draws = budget.draws(kappa)?;
    let mut est = est_sense_draws(bundle, t, draws)?;
    est.kappa = kappa;
    Ok(est)
}

/// Est-Sense with an explicit number of draws: for each `x ~ SAMP(f)` form
/// `y ~ N_t(x)` and query `f(y)`. Returns `2 · Pr[f(y) = 0]`, with `kappa`
/// set to the accuracy `√(16/N)` the draw count buys.
pub fn est_sense_draws(bundle: &mut OracleBundle, t: f64, draws: u64) -> Result<NoiseSensEstimate> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("noise rate must be positive, got {t}")));
    }
    if draws == 0 {
        return Err(Error::Domain("est_sense needs at least one draw".into()));
    }
    let n = bundle.dimension();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut flips = 0u64;
    for _ in 0..draws {
        bundle.sample_into(&mut x)?;
        bundle.perturb_into(&x, t, &mut y)?;
        if !bundle.query(&y)? {
            flips += 1;
        }
    }
    let frac = flips as f64 / draws as f64;
    Ok(NoiseSensEstimate {
        value: 2.0 * frac,
        t,
        samples_used: draws,
        kappa: (DEFAULT_K_HOEFFDING / draws as f64).sqrt(),
        std_error: 2.0 * (frac * (1.0 - frac) / draws as f64).sqrt(),
    })
}

/// Which index pairs enter `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// `(1/m²) Σ_{i,j} x⁽ⁱ⁾·y⁽ʲ⁾`
    #[default]
    AllPairs,
    /// `(1/(m(m-1))) Σ_{i≠j} x⁽ⁱ⁾·y⁽ʲ⁾`
    OffDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseStatistic {
    pub value: f64,
    pub m: u64,
    pub mode: PairMode,
}

pub fn pairwise_t(bundle: &mut OracleBundle, m: u64) -> Result<PairwiseStatistic> {
    pairwise_t_with(bundle, m, PairMode::AllPairs)
}

/// Draws `x⁽¹⁾..x⁽ᵐ⁾, y⁽¹⁾..y⁽ᵐ⁾ ~ SAMP(f)` and forms `T` from the two
/// sample-sum vectors, `O(mn)`.
pub fn pairwise_t_with(bundle: &mut OracleBundle, m: u64, mode: PairMode) -> Result<PairwiseStatistic> {
    if m < 2 {
        return Err(Error::Domain(format!("pairwise statistic needs m >= 2, got {m}")));
    }
    let n = bundle.dimension();
    let mut buf = vec![0.0; n];
    let mut sum_x = vec![CompensatedSum::default(); n];
    let mut xs = Vec::new();
    if mode == PairMode::OffDiagonal {
        xs.reserve(m as usize * n);
    }
    for _ in 0..m {
        bundle.sample_into(&mut buf)?;
        for (s, v) in sum_x.iter_mut().zip(&buf) {
            s.add(*v);
        }
        if mode == PairMode::OffDiagonal {
            xs.extend_from_slice(&buf);
        }
    }
    let mut sum_y = vec![CompensatedSum::default(); n];
    let mut diagonal = CompensatedSum::default();
    for i in 0..m as usize {
        bundle.sample_into(&mut buf)?;
        for (s, v) in sum_y.iter_mut().zip(&buf) {
            s.add(*v);
        }
        if mode == PairMode::OffDiagonal {
            diagonal.add(dot(&xs[i * n..(i + 1) * n], &buf));
        }
    }
    let mut cross = CompensatedSum::default();
    for (a, b) in sum_x.iter().zip(&sum_y) {
        cross.add(a.total() * b.total());
    }
    let mf = m as f64;
    let value = match mode {
        PairMode::AllPairs => cross.total() / (mf * mf),
        PairMode::OffDiagonal => (cross.total() - diagonal.total()) / (mf * (mf - 1.0)),
    };
    Ok(PairwiseStatistic { value, m, mode })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

fn min_samples(n_samples: u64) -> Result<()> {
    if n_samples < 100 {
        Err(Error::Domain(format!("Monte Carlo estimates need >= 100 samples, got {n_samples}")))
    } else {
        Ok(())
    }
}

/// Unconditioned Monte Carlo volume with its binomial standard error.
pub fn mc_volume<R: Rng + ?Sized>(spec: &FunctionSpec, n_samples: u64, rng: &mut R) -> Result<(f64, f64)> {
    min_samples(n_samples)?;
    let mut x = vec![0.0; spec.dimension()];
    let mut hits = 0u64;
    for _ in 0..n_samples {
        fill_standard_normal(rng, &mut x);
        if spec.contains(&x) {
            hits += 1;
        }
    }
    let p = hits as f64 / n_samples as f64;
    Ok((p, (p * (1.0 - p) / n_samples as f64).sqrt()))
}

/// `Vol(f⁻¹(1) △ g⁻¹(1)) / Vol(f)`. Uses the closed-form `Vol(f)` when there
/// is one, otherwise a ratio estimator on the same draws.
pub fn mc_relative_distance<R: Rng + ?Sized>(
    spec_f: &FunctionSpec,
    spec_g: &FunctionSpec,
    n_samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    min_samples(n_samples)?;
    if spec_f.dimension() != spec_g.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec_f.dimension(),
            found: spec_g.dimension(),
        });
    }
    let exact = match spec_f.exact_volume() {
        Ok(v) => Some(v),
        Err(Error::NoClosedForm) => None,
        Err(e) => return Err(e),
    };
    let mut x = vec![0.0; spec_f.dimension()];
    let (mut diff, mut pos, mut diff_pos) = (0u64, 0u64, 0u64);
    for _ in 0..n_samples {
        fill_standard_normal(rng, &mut x);
        let a = spec_f.contains(&x);
        let b = spec_g.contains(&x);
        diff += (a != b) as u64;
        pos += a as u64;
        diff_pos += (a && a != b) as u64;
    }
    let n = n_samples as f64;
    let d = diff as f64 / n;
    match exact {
        Some(vol) => Ok((d / vol, (d * (1.0 - d) / n).sqrt() / vol)),
        None => {
            if pos == 0 {
                return Err(Error::EmptyPositiveSet);
            }
            let b = pos as f64 / n;
            let r = d / b;
            // Delta method: Var(R) ≈ Var(a - R·b) / (n b²), with a, b indicators.
            let e_a2 = d;
            let e_b2 = b;
            let e_ab = diff_pos as f64 / n;
            let var_resid = (e_a2 - 2.0 * r * e_ab + r * r * e_b2).max(0.0);
            Ok((r, (var_resid / n).sqrt() / b))
        }
    }
}

/// Unbiased Monte Carlo estimate of `W^{=k}[f] = Σ_{|α|=k} f̂(α)²` for
/// `k ∈ {1, 2}` under the normalized Hermite basis `h₁(x) = x`,
/// `h₂(x) = (x² - 1)/√2`, `h_{eᵢ+eⱼ} = xᵢxⱼ`.
///
/// Uses the U-statistic `(‖Σ g‖² - Σ ‖g‖²) / (N(N-1))` with `g = f(x)·h(x)`,
/// which removes the `O(1/N)` upward bias of squaring sample means.
pub fn mc_levelk_weight<R: Rng + ?Sized>(
    spec: &FunctionSpec,
    k: u8,
    n_samples: u64,
    rng: &mut R,
) -> Result<f64> {
    min_samples(n_samples)?;
    let n = spec.dimension();
    let mut x = vec![0.0; n];
    let nf = n_samples as f64;
    match k {
        1 => {
            let mut s = vec![0.0; n];
            let mut self_terms = 0.0;
            for _ in 0..n_samples {
                fill_standard_normal(rng, &mut x);
                if spec.contains(&x) {
                    for (si, xi) in s.iter_mut().zip(&x) {
                        *si += xi;
                    }
                    self_terms += dot(&x, &x);
                }
            }
            Ok((dot(&s, &s) - self_terms) / (nf * (nf - 1.0)))
        }
        2 => {
            // Upper triangle of Σ f·x xᵀ, row-major.
            let mut moment = vec![0.0; n * (n + 1) / 2];
            let mut count = 0.0;
            let mut self_terms = 0.0;
            for _ in 0..n_samples {
                fill_standard_normal(rng, &mut x);
                if !spec.contains(&x) {
                    continue;
                }
                count += 1.0;
                let mut idx = 0;
                for i in 0..n {
                    let xi = x[i];
                    for xj in &x[i..] {
                        moment[idx] += xi * xj;
                        idx += 1;
                    }
                }
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let quart: f64 = x.iter().map(|v| v.powi(4)).sum();
                let pure: f64 = x.iter().map(|v| (v * v - 1.0).powi(2)).sum::<f64>() / 2.0;
                self_terms += pure + (sq * sq - quart) / 2.0;
            }
            let mut total = 0.0;
            let mut idx = 0;
            for i in 0..n {
                for j in i..n {
                    let mij = moment[idx];
                    idx += 1;
                    if i == j {
                        let s = (mij - count) * FRAC_1_SQRT_2;
                        total += s * s;
                    } else {
                        total += mij * mij;
                    }
                }
            }
            Ok((total - self_terms) / (nf * (nf - 1.0)))
        }
        _ => Err(Error::Domain(format!("level must be 1 or 2, got {k}"))),
    }
}
