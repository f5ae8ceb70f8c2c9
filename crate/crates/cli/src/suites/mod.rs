use std::fmt;
use std::str::FromStr;

use rrtlevels::cmj_sim::InterarrivalSpec;
use rrtlevels::stat_verify::TestReport;
use serde::Serialize;

use crate::engine::{CsvSink, Engine};
use crate::svg::Plot;
use crate::{RunError, Settings};

mod cmj_variance;
mod embedding;
mod enumeration;
mod fixed_k;
mod fluctuation;
mod intermediate;
mod limit;
mod mean_oracle;
mod moments;
mod multivariate;
mod renewal;

pub use moments::moment_row;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    EnumerationCheck,
    MeanOracle,
    EmbeddingIdentity,
    Moments,
    FluctuationAsymptotics,
    LimitProcess,
    FixedKClt,
    MultivariateClt,
    IntermediateClt,
    RenewalClt,
    CmjVariance,
}

/// Per-suite defaults; each reproduces the acceptance configuration.
pub(crate) struct Defaults {
    pub n_ladder: Vec<u64>,
    pub replicates: u64,
    pub k: Vec<u64>,
    pub u_grid: Vec<f64>,
    pub t: Vec<f64>,
    pub interarrival: InterarrivalSpec,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::EnumerationCheck,
        Suite::MeanOracle,
        Suite::EmbeddingIdentity,
        Suite::Moments,
        Suite::FluctuationAsymptotics,
        Suite::LimitProcess,
        Suite::FixedKClt,
        Suite::MultivariateClt,
        Suite::IntermediateClt,
        Suite::RenewalClt,
        Suite::CmjVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EnumerationCheck => "enumeration-check",
            Suite::MeanOracle => "mean-oracle",
            Suite::EmbeddingIdentity => "embedding-identity",
            Suite::Moments => "moments",
            Suite::FluctuationAsymptotics => "fluctuation-asymptotics",
            Suite::LimitProcess => "limit-process",
            Suite::FixedKClt => "fixed-k-clt",
            Suite::MultivariateClt => "multivariate-clt",
            Suite::IntermediateClt => "intermediate-clt",
            Suite::RenewalClt => "renewal-clt",
            Suite::CmjVariance => "cmj-variance",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::EnumerationCheck => {
                "Monte Carlo level PMFs of small trees against exhaustive enumeration (TV distance)"
            }
            Suite::MeanOracle => "mean level sizes against the exact mean profile (z-scores)",
            Suite::EmbeddingIdentity => "tree levels against CMJ generations at the n-th birth (two-sample KS)",
            Suite::Moments => "closed-form U_k, D_k and the variance decomposition and recursion residuals",
            Suite::FluctuationAsymptotics => {
                "fluctuation moment against its leading asymptotic, and the Stirling bound"
            }
            Suite::LimitProcess => "Gaussian limit process: kernel and pathwise samplers, stationary transform",
            Suite::FixedKClt => "KS distance of the fixed-level normalization to N(0,1) along the n ladder",
            Suite::MultivariateClt => "covariance of normalized joint levels against 1/(i+j-1) along the n ladder",
            Suite::IntermediateClt => "variance and correlation of normalized intermediate levels",
            Suite::RenewalClt => "variance of the normalized renewal statistic with non-exponential interarrivals",
            Suite::CmjVariance => "Monte Carlo mean and variance of CMJ generation sizes against U_k and D_k",
        }
    }

    pub(crate) fn defaults(self) -> Defaults {
        let exp = InterarrivalSpec::UNIT_EXPONENTIAL;
        let d = |n_ladder: &[u64], replicates: u64, k: &[u64]| Defaults {
            n_ladder: n_ladder.to_vec(),
            replicates,
            k: k.to_vec(),
            u_grid: vec![1.0],
            t: vec![1.0],
            interarrival: exp,
        };
        match self {
            Suite::EnumerationCheck => d(&[1, 2, 3, 4, 5, 6, 7, 8], 1_000_000, &[1, 2, 3, 4, 5, 6, 7, 8]),
            Suite::MeanOracle => d(&[1_000, 100_000], 10_000, &[1, 2, 3, 4, 5, 6]),
            Suite::EmbeddingIdentity => d(&[100, 1_000], 10_000, &[2, 3]),
            Suite::Moments => Defaults {
                t: vec![0.5, 1.0, 10.0, 100.0],
                ..d(&[1], 1, &(1..=100).collect::<Vec<_>>())
            },
            Suite::FluctuationAsymptotics => Defaults {
                t: vec![1e3, 1e5],
                ..d(&[1], 1, &[15])
            },
            Suite::LimitProcess => d(&[1], 100_000, &[1]),
            Suite::FixedKClt => d(&[1_000, 10_000, 100_000, 1_000_000], 10_000, &[2]),
            Suite::MultivariateClt => d(&[1_000, 100_000], 10_000, &[1, 2]),
            Suite::IntermediateClt => Defaults {
                u_grid: vec![1.0, 2.0],
                ..d(&[1_000_000], 10_000, &[1])
            },
            Suite::RenewalClt => Defaults {
                t: vec![400.0],
                interarrival: InterarrivalSpec::Gamma { shape: 2.0, scale: 0.5 },
                ..d(&[1], 10_000, &[1])
            },
            Suite::CmjVariance => Defaults {
                t: vec![3.0, 4.0, 5.0],
                ..d(&[1], 100_000, &[2, 3, 4])
            },
        }
    }

    /// Suite-specific checks on top of the generic field validation.
    pub(crate) fn validate(self, s: &Settings) -> Result<(), RunError> {
        match self {
            Suite::EnumerationCheck => enumeration::validate(s),
            Suite::MeanOracle | Suite::FixedKClt | Suite::MultivariateClt | Suite::IntermediateClt => {
                increasing_ladder(s)?;
                match self {
                    Suite::MultivariateClt => multivariate::validate(s),
                    Suite::IntermediateClt => intermediate::validate(s),
                    _ => Ok(()),
                }
            }
            Suite::EmbeddingIdentity => embedding::validate(s),
            Suite::Moments => Ok(()),
            Suite::FluctuationAsymptotics => fluctuation::validate(s),
            Suite::LimitProcess => Ok(()),
            Suite::RenewalClt => renewal::validate(s),
            Suite::CmjVariance => cmj_variance::validate(s),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(suite) = Suite::ALL.into_iter().find(|x| x.name() == s) {
            return Ok(suite);
        }
        let nearest = Suite::ALL
            .into_iter()
            .max_by(|a, b| strsim::jaro_winkler(a.name(), s).total_cmp(&strsim::jaro_winkler(b.name(), s)))
            .expect("registry is nonempty");
        Err(format!("unknown suite '{s}'; did you mean '{nearest}'?"))
    }
}

pub(crate) struct SuiteResult {
    pub reports: Vec<TestReport>,
    pub diagnostics: serde_json::Value,
    pub plots: Vec<Plot>,
}

pub(crate) fn execute(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    match s.suite {
        Suite::EnumerationCheck => enumeration::run(s, engine, sink),
        Suite::MeanOracle => mean_oracle::run(s, engine, sink),
        Suite::EmbeddingIdentity => embedding::run(s, engine, sink),
        Suite::Moments => moments::run(s, sink),
        Suite::FluctuationAsymptotics => fluctuation::run(s, sink),
        Suite::LimitProcess => limit::run(s, engine, sink),
        Suite::FixedKClt => fixed_k::run(s, engine, sink),
        Suite::MultivariateClt => multivariate::run(s, engine, sink),
        Suite::IntermediateClt => intermediate::run(s, engine, sink),
        Suite::RenewalClt => renewal::run(s, engine, sink),
        Suite::CmjVariance => cmj_variance::run(s, engine, sink),
    }
}

fn increasing_ladder(s: &Settings) -> Result<(), RunError> {
    if s.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RunError::Config("n_ladder: must be strictly increasing".into()));
    }
    Ok(())
}

/// Pairs `(a_i, b_i)` from two lists of equal length, or one list against
/// a single broadcast value.
fn zip_broadcast<A: Copy, B: Copy>(field: &str, a: &[A], b: &[B]) -> Result<Vec<(A, B)>, RunError> {
    match (a.len(), b.len()) {
        (x, y) if x == y => Ok(a.iter().copied().zip(b.iter().copied()).collect()),
        (_, 1) => Ok(a.iter().map(|&x| (x, b[0])).collect()),
        (1, _) => Ok(b.iter().map(|&y| (a[0], y)).collect()),
        (x, y) => Err(RunError::Config(format!(
            "{field}: lists of length {x} and {y} cannot be paired"
        ))),
    }
}

fn stream(s: &Settings, label: &str, n: u64, replicate: u64) -> rrtlevels::rng::Stream {
    rrtlevels::rng::replicate_stream(s.seed, label, n, replicate)
}

/// Density of `N(0, var)`.
fn gaussian_density(var: f64) -> impl Fn(f64) -> f64 {
    move |x| (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn core_err(s: &Settings) -> impl Fn(rrtlevels::Error) -> RunError + '_ {
    move |e| RunError::core(s.suite, e)
}
