use rrtlevels::cmj_sim::CmjSimulator;
use rrtlevels::stat_verify::ks_two_sample;
use rrtlevels::tree_sim::{ProfileGenerator, TreeConfig};
use serde_json::json;

use super::{core_err, stream, zip_broadcast, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::{RunError, Settings};

pub(super) fn validate(s: &Settings) -> Result<(), RunError> {
    zip_broadcast("k", &s.n_ladder, &s.k).map(|_| ())
}

/// Each CSV row pairs the tree count `X_n(k)` (raw) with an independent CMJ
/// count `Y_k(τ_n)` (normalized column) of the same replicate index.
pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let pairs = zip_broadcast("k", &s.n_ladder, &s.k)?;
    let tree_label = format!("{name}/tree");
    let cmj_label = format!("{name}/cmj");
    CmjSimulator::new(s.interarrival).map_err(core_err(s))?;
    let mut samples = vec![(Vec::new(), Vec::new()); pairs.len()];
    engine.replicates(
        s.replicates,
        || {
            (
                ProfileGenerator::new(),
                CmjSimulator::new(s.interarrival).expect("validated"),
            )
        },
        |(gen, sim), r| {
            pairs
                .iter()
                .map(|&(n, k)| {
                    let cfg = TreeConfig::new(n, s.seed).with_level_cap(k as u32);
                    let x = gen.generate(&cfg, &mut stream(s, &tree_label, n, r))?.count(k as usize);
                    let (_, g) = sim.until_n_births(n, k as usize, &mut stream(s, &cmj_label, n, r))?;
                    Ok((x as f64, g.count(k as usize) as f64))
                })
                .collect::<rrtlevels::Result<Vec<_>>>()
        },
        |r, values: Vec<(f64, f64)>| {
            for (((n, k), (x, y)), (a, b)) in pairs.iter().zip(values).zip(samples.iter_mut()) {
                a.push(x);
                b.push(y);
                sink.push(Row {
                    replicate: r,
                    n: Some(*n),
                    k_or_m: Some(*k),
                    raw: x,
                    normalized: Some(y),
                    ..Row::default()
                })?;
            }
            Ok(())
        },
    )?;

    let mut reports = Vec::new();
    let mut cases = Vec::new();
    for (&(n, k), (a, b)) in pairs.iter().zip(&samples) {
        let mut report = ks_two_sample(name, a, b).map_err(core_err(s))?;
        report.check = format!("ks two-sample tree vs cmj n={n} k={k}");
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        cases.push(json!({
            "n": n, "k": k, "ks_distance": report.statistic, "p_value": report.p_value,
            "tree_mean": mean(a), "cmj_mean": mean(b),
        }));
        reports.push(report);
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases, "interarrival": s.interarrival }),
        plots: Vec::new(),
    })
}
