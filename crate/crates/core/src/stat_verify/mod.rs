//! Normalized statistics and the hypothesis tests that compare simulated
//! samples with their Gaussian limits.

mod cov;
mod ks;
mod normalize;
mod report;

pub use cov::{empirical_cov, CovarianceEstimate, Estimate};
pub use ks::{kolmogorov_survival, ks_one_sample, ks_two_sample, standard_normal_cdf, KS_MIN_SAMPLES};
pub use normalize::{
    intermediate_target_cov, multivariate_target_cov, normalize_fixed_k, normalize_intermediate,
    normalize_multivariate, z_statistic, z_statistic_raw, LevelNormalizer, NormalizedSample, SampleMeta,
};
pub use report::{Rule, TestReport, KS_P_THRESHOLD, Z_MAX};
