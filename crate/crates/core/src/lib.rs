//! Relative-error testing of Gaussian halfspaces from membership queries and
//! conditional samples.

pub mod error;
pub mod estimators;
pub mod gauss;
pub mod harness;
pub mod target;
pub mod testers;

pub use error::{Error, Result};
pub use estimators::{
    est_sense, est_sense_draws, est_sense_with, mc_levelk_weight, mc_relative_distance, mc_volume,
    pairwise_t, pairwise_t_with, NoiseSensEstimate, PairMode, PairwiseStatistic, SenseBudget,
};
pub use gauss::{
    gaussian_cdf, gaussian_pdf, gaussian_quantile, gaussian_sf, isoperimetric, psi, u_weight,
    v_inverse, v_ratio, Probability,
};
pub use target::{noise_perturb, FunctionSpec, HalfspaceParams, OracleBundle, SamplerMode, Shape};
pub use testers::{
    combined_test, defaults_version, gsa_fixed_noise_test, gsa_test, hermite_test, planned_cost,
    standard_model_fallback, ConstantOverrides, ConstantSchedule, Decision, RejectReason, TesterConfig,
    TesterKind, Verdict, VerdictParams, VolumeHint,
};
