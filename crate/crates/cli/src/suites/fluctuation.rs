use rrtlevels::exact_moments::{fluctuation_second_moment, leading_asymptotic, stirling_margin};
use rrtlevels::stat_verify::TestReport;
use serde_json::json;

use super::SuiteResult;
use crate::engine::{CsvSink, Row};
use crate::{RunError, Settings};

pub(super) fn validate(s: &Settings) -> Result<(), RunError> {
    if s.k.contains(&1) {
        return Err(RunError::Config("k: the leading asymptotic needs k >= 2".into()));
    }
    if s.t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RunError::Config("t: must be strictly increasing".into()));
    }
    Ok(())
}

/// Rows carry the fluctuation moment (raw) and its ratio to the leading
/// asymptotic (normalized), with `t` in the `u` column.
pub(super) fn run(s: &Settings, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let mut reports = Vec::new();
    let mut cases = Vec::new();
    let mut index = 0u64;
    for &k in &s.k {
        let mut gaps = Vec::new();
        let mut ratios = Vec::new();
        for &t in &s.t {
            let moment = fluctuation_second_moment(k, t);
            let ratio = (moment / leading_asymptotic(k, t)).to_f64();
            sink.push(Row {
                replicate: index,
                k_or_m: Some(k),
                u: Some(t),
                raw: moment.to_f64(),
                normalized: Some(ratio),
                ..Row::default()
            })?;
            index += 1;
            ratios.push(ratio);
            gaps.push((ratio - 1.0).abs());
        }
        cases.push(json!({"k": k, "t": s.t, "ratio": ratios}));
        if s.t.len() >= 2 {
            reports.push(TestReport::holds(
                name,
                &format!("ratio to leading asymptotic strictly closer to 1 as t grows, k={k}"),
                gaps.windows(2).all(|w| w[1] < w[0]),
                *ratios.last().expect("nonempty"),
                format!("ratios {ratios:?} at t {:?}", s.t),
            ));
        }
    }

    let mut worst = (f64::INFINITY, 0, 0);
    let mut checked = 0usize;
    for k in 4..=s.stirling_k_max {
        for i in 1..=k - 3 {
            let m = stirling_margin(i, k);
            checked += 1;
            if m < worst.0 {
                worst = (m, i, k);
            }
        }
    }
    if checked > 0 {
        reports.push(
            TestReport::holds(
                name,
                &format!("Stirling bound on A(i,k) for 1 <= i <= k-3, k <= {}", s.stirling_k_max),
                worst.0 >= 0.0,
                worst.0,
                format!("smallest log margin {:.6e} at i={} k={}", worst.0, worst.1, worst.2),
            )
            .with_sizes(vec![checked]),
        );
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases, "stirling_min_log_margin": worst.0, "stirling_pairs": checked }),
        plots: Vec::new(),
    })
}
