use serde::Serialize;

use super::ks::standard_normal_cdf;

/// Pass threshold on p-values of KS suites.
pub const KS_P_THRESHOLD: f64 = 1e-3;

/// Pass threshold on `|z|` of moment suites.
pub const Z_MAX: f64 = 4.0;

/// How a report's verdict follows from its statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// pass iff `p_value >= threshold`
    PValueAtLeast,
    /// pass iff `|statistic| <= threshold`
    AbsAtMost,
    /// pass iff the checked property holds; `statistic` carries the evidence
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub suite: String,
    pub check: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub rule: Rule,
    pub passed: bool,
    pub sample_sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl TestReport {
    pub fn p_value(suite: &str, check: &str, statistic: f64, p: f64, threshold: f64, sizes: Vec<usize>) -> Self {
        TestReport {
            suite: suite.into(),
            check: check.into(),
            statistic,
            p_value: Some(p),
            threshold,
            rule: Rule::PValueAtLeast,
            passed: p >= threshold,
            sample_sizes: sizes,
            detail: None,
        }
    }

    /// z-test of an estimate against a target with standard error `se`.
    pub fn z_score(suite: &str, check: &str, estimate: f64, target: f64, se: f64, n: usize) -> Self {
        let z = (estimate - target) / se;
        let p = 2.0 * (1.0 - standard_normal_cdf(z.abs()));
        TestReport {
            suite: suite.into(),
            check: check.into(),
            statistic: z,
            p_value: Some(p.clamp(0.0, 1.0)),
            threshold: Z_MAX,
            rule: Rule::AbsAtMost,
            passed: z.abs() <= Z_MAX,
            sample_sizes: vec![n],
            detail: Some(format!("estimate {estimate:.6} target {target:.6} se {se:.3e}")),
        }
    }

    /// Deterministic tolerance: pass iff `|value| <= limit`.
    pub fn at_most(suite: &str, check: &str, value: f64, limit: f64) -> Self {
        TestReport {
            suite: suite.into(),
            check: check.into(),
            statistic: value,
            p_value: None,
            threshold: limit,
            rule: Rule::AbsAtMost,
            passed: value.abs() <= limit,
            sample_sizes: vec![],
            detail: None,
        }
    }

    pub fn holds(suite: &str, check: &str, holds: bool, evidence: f64, detail: impl Into<String>) -> Self {
        TestReport {
            suite: suite.into(),
            check: check.into(),
            statistic: evidence,
            p_value: None,
            threshold: f64::NAN,
            rule: Rule::Holds,
            passed: holds,
            sample_sizes: vec![],
            detail: Some(detail.into()),
        }
    }

    pub fn with_sizes(mut self, sizes: Vec<usize>) -> Self {
        self.sample_sizes = sizes;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}
