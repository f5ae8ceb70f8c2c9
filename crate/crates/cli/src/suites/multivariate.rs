use rrtlevels::stat_verify::{empirical_cov, multivariate_target_cov, normalize_multivariate, TestReport};
use rrtlevels::tree_sim::{LevelProfile, ProfileGenerator};
use serde_json::json;

use super::{core_err, stream, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::svg;
use crate::{RunError, Settings};

pub(super) fn validate(s: &Settings) -> Result<(), RunError> {
    if s.k.len() < 2 || s.k.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RunError::Config(
            "k: need at least two strictly increasing levels".into(),
        ));
    }
    if s.n_ladder.len() < 2 {
        return Err(RunError::Config("n_ladder: a trend needs at least two sizes".into()));
    }
    Ok(())
}

pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let n_max = *s.n_ladder.last().expect("validated nonempty");
    let k_max = *s.k.last().expect("validated nonempty");
    let cap = Some(u32::try_from(k_max).unwrap_or(u32::MAX));
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(s.replicates as usize); s.n_ladder.len()];
    engine.replicates(
        s.replicates,
        ProfileGenerator::new,
        |gen, r| gen.generate_ladder(&s.n_ladder, cap, &mut stream(s, name, n_max, r)),
        |r, profiles: Vec<LevelProfile>| {
            for (i, (p, &n)) in profiles.iter().zip(&s.n_ladder).enumerate() {
                let xs: Vec<f64> = s.k.iter().map(|&k| p.count(k as usize) as f64).collect();
                let zs = normalize_multivariate(&xs, n, &s.k).map_err(core_err(s))?;
                for ((&k, &x), &z) in s.k.iter().zip(&xs).zip(&zs) {
                    sink.push(Row {
                        replicate: r,
                        n: Some(n),
                        k_or_m: Some(k),
                        raw: x,
                        normalized: Some(z),
                        ..Row::default()
                    })?;
                }
                rows[i].push(zs);
            }
            Ok(())
        },
    )?;

    let d = s.k.len();
    let target: Vec<f64> = (0..d * d)
        .map(|ij| multivariate_target_cov(s.k[ij / d], s.k[ij % d]))
        .collect();
    let estimates = rows
        .iter()
        .map(|r| empirical_cov(r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(core_err(s))?;
    let mut reports = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            let (i, j) = (s.k[a], s.k[b]);
            let goal = target[a * d + b];
            let gaps: Vec<f64> = estimates.iter().map(|e| (e.cov(a, b) - goal).abs()).collect();
            let covs: Vec<f64> = estimates.iter().map(|e| e.cov(a, b)).collect();
            reports.push(
                TestReport::holds(
                    name,
                    &format!("cov({i},{j}) moves toward {goal:.6} along n"),
                    gaps.windows(2).all(|w| w[1] < w[0]),
                    covs.last().copied().unwrap_or(f64::NAN),
                    format!("covariances {covs:?} at n {:?}", s.n_ladder),
                )
                .with_sizes(vec![s.replicates as usize; s.n_ladder.len()]),
            );
        }
    }
    let cases: Vec<_> = s
        .n_ladder
        .iter()
        .zip(&estimates)
        .map(|(&n, e)| json!({"n": n, "levels": s.k, "cov": e.cov, "se": e.se, "means": e.means, "target": target}))
        .collect();
    let labels: Vec<String> = s.k.iter().map(|k| format!("k={k}")).collect();
    let last = estimates.last().expect("validated nonempty");
    let plot = svg::heatmaps(
        "cov",
        &format!("normalized level covariance at n={n_max}"),
        &labels,
        [("empirical", &last.cov), ("target 1/(i+j-1)", &target)],
    );
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases }),
        plots: vec![plot],
    })
}
