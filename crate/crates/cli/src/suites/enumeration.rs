use std::collections::BTreeMap;

use rrtlevels::stat_verify::TestReport;
use rrtlevels::tree_sim::{ExactProfileLaw, LevelProfile, ProfileGenerator, MAX_ENUMERATION_N};
use serde_json::json;

use super::{core_err, stream, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::{RunError, Settings};

const TV_LIMIT: f64 = 0.01;

pub(super) fn validate(s: &Settings) -> Result<(), RunError> {
    super::increasing_ladder(s)?;
    if let Some(&n) = s.n_ladder.iter().find(|&&n| n > MAX_ENUMERATION_N) {
        return Err(RunError::Config(format!(
            "n_ladder: enumeration needs n <= {MAX_ENUMERATION_N}, got {n}"
        )));
    }
    Ok(())
}

pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let n_max = *s.n_ladder.last().expect("validated nonempty");
    let levels = |n: u64| s.k.iter().copied().filter(move |&k| k <= n);
    // hist[i][k][x]: replicates with X_{n_i}(k) = x
    let mut hist: Vec<BTreeMap<u64, Vec<u64>>> = s
        .n_ladder
        .iter()
        .map(|&n| levels(n).map(|k| (k, vec![0; n as usize + 1])).collect())
        .collect();
    engine.replicates(
        s.replicates,
        ProfileGenerator::new,
        |gen, r| gen.generate_ladder(&s.n_ladder, None, &mut stream(s, name, n_max, r)),
        |r, profiles: Vec<LevelProfile>| {
            for ((p, &n), h) in profiles.iter().zip(&s.n_ladder).zip(hist.iter_mut()) {
                for (&k, counts) in h.iter_mut() {
                    let x = p.count(k as usize);
                    counts[x as usize] += 1;
                    sink.push(Row {
                        replicate: r,
                        n: Some(n),
                        k_or_m: Some(k),
                        raw: x as f64,
                        ..Row::default()
                    })?;
                }
            }
            Ok(())
        },
    )?;

    let mut reports = Vec::new();
    let mut cases = Vec::new();
    for (&n, h) in s.n_ladder.iter().zip(&hist) {
        let law = ExactProfileLaw::enumerate(n).map_err(core_err(s))?;
        for (&k, counts) in h {
            let exact = law.pmf(k as usize);
            let total = s.replicates as f64;
            let mut tv = 0.0;
            let mut empirical = BTreeMap::new();
            for (x, &c) in counts.iter().enumerate() {
                let p = exact
                    .get(&(x as u64))
                    .map_or(0.0, |r| *r.numer() as f64 / *r.denom() as f64);
                tv += (c as f64 / total - p).abs();
                if c > 0 {
                    empirical.insert(x.to_string(), c as f64 / total);
                }
            }
            tv *= 0.5;
            let exact_json: BTreeMap<String, String> =
                exact.iter().map(|(x, p)| (x.to_string(), p.to_string())).collect();
            cases.push(json!({"n": n, "k": k, "exact_pmf": exact_json, "empirical_pmf": empirical, "tv_distance": tv}));
            reports.push(
                TestReport::at_most(name, &format!("tv distance n={n} k={k}"), tv, TV_LIMIT)
                    .with_sizes(vec![s.replicates as usize]),
            );
        }
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases }),
        plots: Vec::new(),
    })
}
