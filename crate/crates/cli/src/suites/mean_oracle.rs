use rrtlevels::stat_verify::{Estimate, TestReport};
use rrtlevels::tree_sim::{exact_mean_profile, LevelProfile, ProfileGenerator};
use serde_json::json;

use super::{core_err, stream, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::{RunError, Settings};

pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let n_max = *s.n_ladder.last().expect("validated nonempty");
    let k_max = *s.k.iter().max().expect("validated nonempty");
    let exact: Vec<Vec<f64>> = s
        .n_ladder
        .iter()
        .map(|&n| exact_mean_profile(n, k_max as usize))
        .collect::<Result<_, _>>()
        .map_err(core_err(s))?;
    let cap = Some(u32::try_from(k_max).unwrap_or(u32::MAX));
    let mut values = vec![vec![Vec::with_capacity(s.replicates as usize); s.k.len()]; s.n_ladder.len()];
    engine.replicates(
        s.replicates,
        ProfileGenerator::new,
        |gen, r| gen.generate_ladder(&s.n_ladder, cap, &mut stream(s, name, n_max, r)),
        |r, profiles: Vec<LevelProfile>| {
            for (i, (p, &n)) in profiles.iter().zip(&s.n_ladder).enumerate() {
                for (j, &k) in s.k.iter().enumerate() {
                    let x = p.count(k as usize) as f64;
                    values[i][j].push(x);
                    sink.push(Row {
                        replicate: r,
                        n: Some(n),
                        k_or_m: Some(k),
                        raw: x,
                        normalized: Some(x / exact[i][k as usize - 1]),
                        ..Row::default()
                    })?;
                }
            }
            Ok(())
        },
    )?;

    let mut reports = Vec::new();
    let mut cases = Vec::new();
    for (i, &n) in s.n_ladder.iter().enumerate() {
        for (j, &k) in s.k.iter().enumerate() {
            let target = exact[i][k as usize - 1];
            let est = Estimate::mean(&values[i][j]).map_err(core_err(s))?;
            cases.push(json!({"n": n, "k": k, "exact_mean": target, "mean": est.value, "se": est.se}));
            reports.push(TestReport::z_score(
                name,
                &format!("mean n={n} k={k}"),
                est.value,
                target,
                est.se,
                est.n,
            ));
        }
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases }),
        plots: Vec::new(),
    })
}
