use rrtlevels::stat_verify::{ks_one_sample, normalize_fixed_k, standard_normal_cdf, Estimate, TestReport};
use rrtlevels::tree_sim::{LevelProfile, ProfileGenerator};
use serde_json::json;

use super::{core_err, gaussian_density, stream, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::svg;
use crate::{RunError, Settings};

pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let n_max = *s.n_ladder.last().expect("validated nonempty");
    let k_max = *s.k.iter().max().expect("validated nonempty");
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
                    let z = normalize_fixed_k(x, n, k).map_err(core_err(s))?;
                    values[i][j].push(z);
                    sink.push(Row {
                        replicate: r,
                        n: Some(n),
                        k_or_m: Some(k),
                        raw: x,
                        normalized: Some(z),
                        ..Row::default()
                    })?;
                }
            }
            Ok(())
        },
    )?;

    let mut reports = Vec::new();
    let mut cases = Vec::new();
    let mut plots = Vec::new();
    for (j, &k) in s.k.iter().enumerate() {
        let mut distances = Vec::new();
        for (i, &n) in s.n_ladder.iter().enumerate() {
            let ks = ks_one_sample(name, &values[i][j], standard_normal_cdf).map_err(core_err(s))?;
            let mean = Estimate::mean(&values[i][j]).map_err(core_err(s))?;
            let var = Estimate::variance(&values[i][j]).map_err(core_err(s))?;
            cases.push(json!({
                "n": n, "k": k, "ks_distance": ks.statistic, "ks_p_value": ks.p_value,
                "mean": mean.value, "variance": var.value, "variance_se": var.se,
            }));
            distances.push(ks.statistic);
        }
        let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
        let evidence = distances.last().copied().unwrap_or(f64::NAN);
        reports.push(
            TestReport::holds(
                name,
                &format!("ks distance to N(0,1) strictly decreasing along n, k={k}"),
                decreasing,
                evidence,
                format!("distances {distances:?} at n {:?}", s.n_ladder),
            )
            .with_sizes(vec![s.replicates as usize; s.n_ladder.len()]),
        );
        let last = s.n_ladder.len() - 1;
        plots.push(svg::histogram(
            &format!("k{k}"),
            &format!("fixed-level normalization, k={k}, n={n_max}, vs N(0,1)"),
            &values[last][j],
            gaussian_density(1.0),
        ));
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases }),
        plots,
    })
}
