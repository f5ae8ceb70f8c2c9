use rrtlevels::cmj_sim::CmjSimulator;
use rrtlevels::exact_moments::{d_k, u_k};
use rrtlevels::stat_verify::{Estimate, TestReport};
use serde_json::json;

use super::{core_err, stream, zip_broadcast, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::{RunError, Settings};

pub(super) fn validate(s: &Settings) -> Result<(), RunError> {
    zip_broadcast("t", &s.k, &s.t).map(|_| ())
}

/// The closed forms hold for unit-mean exponential interarrivals only;
/// other laws still run but are compared against the same targets.
pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let pairs = zip_broadcast("t", &s.k, &s.t)?;
    let targets: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(k, t)| (u_k(k, t).to_f64(), d_k(k, t).to_f64()))
        .collect();
    CmjSimulator::new(s.interarrival).map_err(core_err(s))?;
    let mut samples = vec![Vec::with_capacity(s.replicates as usize); pairs.len()];
    engine.replicates(
        s.replicates,
        || CmjSimulator::new(s.interarrival).expect("validated"),
        |sim, r| {
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(k, t))| {
                    Ok(sim
                        .at_time(t, k as usize, &mut stream(s, name, i as u64, r))?
                        .count(k as usize) as f64)
                })
                .collect::<rrtlevels::Result<Vec<f64>>>()
        },
        |r, ys: Vec<f64>| {
            for (((&(k, t), &(mean, var)), y), out) in pairs.iter().zip(&targets).zip(ys).zip(samples.iter_mut()) {
                out.push(y);
                sink.push(Row {
                    replicate: r,
                    k_or_m: Some(k),
                    u: Some(t),
                    raw: y,
                    normalized: Some((y - mean) / var.sqrt()),
                    ..Row::default()
                })?;
            }
            Ok(())
        },
    )?;

    let mut reports = Vec::new();
    let mut cases = Vec::new();
    for ((&(k, t), &(u, d)), ys) in pairs.iter().zip(&targets).zip(&samples) {
        let mean = Estimate::mean(ys).map_err(core_err(s))?;
        let var = Estimate::variance(ys).map_err(core_err(s))?;
        reports.push(TestReport::z_score(
            name,
            &format!("mean vs U_{k}({t})"),
            mean.value,
            u,
            mean.se,
            mean.n,
        ));
        reports.push(TestReport::z_score(
            name,
            &format!("variance vs D_{k}({t})"),
            var.value,
            d,
            var.se,
            var.n,
        ));
        cases.push(json!({"k": k, "t": t, "U": u, "D": d, "mean": mean, "variance": var}));
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases, "interarrival": s.interarrival }),
        plots: Vec::new(),
    })
}
