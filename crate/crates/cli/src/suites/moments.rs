use rrtlevels::exact_moments::{
    d_k, fluctuation_second_moment, immigration_second_moment, renewal_recursion_residual, u_k,
    variance_decomposition_check,
};
use rrtlevels::stat_verify::TestReport;
use serde::Serialize;
use serde_json::json;

use super::SuiteResult;
use crate::engine::{CsvSink, Row};
use crate::{RunError, Settings};

pub const DECOMPOSITION_TOLERANCE: f64 = 1e-10;
pub const RECURSION_TOLERANCE: f64 = 1e-8;
/// Requested relative accuracy of the quadrature in the recursion check.
const QUADRATURE_TOL: f64 = 1e-11;

/// Closed-form moments at one `(k, t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: u64,
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    pub fluctuation: f64,
    pub immigration: f64,
    pub decomposition_residual: f64,
    /// `None` for `k = 1`, which has no recursion step.
    pub recursion_residual: Option<f64>,
}

pub fn moment_row(k: u64, t: f64) -> Result<MomentRow, RunError> {
    if k < 1 {
        return Err(RunError::Config("k: must be at least 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(RunError::Config(format!("t: must be finite and positive, got {t}")));
    }
    Ok(MomentRow {
        k,
        t,
        mean: u_k(k, t).to_f64(),
        variance: d_k(k, t).to_f64(),
        fluctuation: fluctuation_second_moment(k, t).to_f64(),
        immigration: immigration_second_moment(k, t).to_f64(),
        decomposition_residual: variance_decomposition_check(k, t),
        recursion_residual: (k >= 2).then(|| renewal_recursion_residual(k, t, QUADRATURE_TOL)),
    })
}

/// One CSV row per `(k, t)`: `u` holds `t`, the raw value is `D_k(t)` and
/// the normalized column the decomposition residual.
pub(super) fn run(s: &Settings, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let mut rows = Vec::new();
    let mut worst_decomposition = 0.0f64;
    let mut worst_recursion = 0.0f64;
    let mut recursion_checked = 0usize;
    for &k in &s.k {
        for &t in &s.t {
            let mut row = moment_row(k, t)?;
            if k > s.recursion_k_max {
                row.recursion_residual = None;
            }
            if let Some(r) = row.recursion_residual {
                worst_recursion = worst_recursion.max(r.abs());
                recursion_checked += 1;
            }
            worst_decomposition = worst_decomposition.max(row.decomposition_residual.abs());
            sink.push(Row {
                replicate: rows.len() as u64,
                k_or_m: Some(k),
                u: Some(t),
                raw: row.variance,
                normalized: Some(row.decomposition_residual),
                ..Row::default()
            })?;
            rows.push(row);
        }
    }
    let mut reports = vec![TestReport::at_most(
        name,
        "variance decomposition relative residual",
        worst_decomposition,
        DECOMPOSITION_TOLERANCE,
    )
    .with_sizes(vec![rows.len()])];
    if recursion_checked > 0 {
        reports.push(
            TestReport::at_most(
                name,
                &format!("renewal recursion quadrature residual, 2 <= k <= {}", s.recursion_k_max),
                worst_recursion,
                RECURSION_TOLERANCE,
            )
            .with_sizes(vec![recursion_checked]),
        );
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "rows": rows }),
        plots: Vec::new(),
    })
}
