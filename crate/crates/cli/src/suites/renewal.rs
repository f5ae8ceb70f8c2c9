use rrtlevels::cmj_sim::simulate_renewal;
use rrtlevels::stat_verify::{empirical_cov, intermediate_target_cov, z_statistic, z_statistic_raw, TestReport};
use serde_json::json;

use super::{core_err, gaussian_density, stream, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::svg;
use crate::{RunError, Settings};

fn level(k: f64, u: f64) -> u64 {
    (k * u).floor() as u64
}

pub(super) fn validate(s: &Settings) -> Result<(), RunError> {
    if s.t.len() != 1 {
        return Err(RunError::Config("t: the renewal suite takes exactly one time".into()));
    }
    s.interarrival
        .validate_for_clt()
        .map_err(|e| RunError::Config(format!("interarrival: {e}")))?;
    if level(s.k_scale, s.u_grid[0]) < 1 {
        return Err(RunError::Config(format!(
            "u_grid: [k u] = [{} * {}] is zero",
            s.k_scale, s.u_grid[0]
        )));
    }
    Ok(())
}

pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let t = s.t[0];
    let (mu, sigma2) = (s.interarrival.mean(), s.interarrival.variance());
    let levels: Vec<u64> = s.u_grid.iter().map(|&u| level(s.k_scale, u)).collect();
    let mut rows = Vec::with_capacity(s.replicates as usize);
    engine.replicates(
        s.replicates,
        || (),
        |_, r| {
            let path = simulate_renewal(&s.interarrival, t, &mut stream(s, name, 0, r))?;
            levels
                .iter()
                .map(|&m| {
                    let raw = z_statistic_raw(&path, t, m, mu)?.to_f64();
                    Ok((raw, z_statistic(&path, t, m, mu, sigma2, s.k_scale)?))
                })
                .collect::<rrtlevels::Result<Vec<(f64, f64)>>>()
        },
        |r, values: Vec<(f64, f64)>| {
            for ((&m, &u), &(raw, z)) in levels.iter().zip(&s.u_grid).zip(&values) {
                sink.push(Row {
                    replicate: r,
                    k_or_m: Some(m),
                    u: Some(u),
                    raw,
                    normalized: Some(z),
                    ..Row::default()
                })?;
            }
            rows.push(values.iter().map(|v| v.1).collect::<Vec<f64>>());
            Ok(())
        },
    )?;

    let d = s.u_grid.len();
    let est = empirical_cov(&rows).map_err(core_err(s))?;
    let mut reports = Vec::new();
    let mut plots = Vec::new();
    for a in 0..d {
        for b in a..d {
            let (u, v) = (s.u_grid[a], s.u_grid[b]);
            let target = intermediate_target_cov(u, v);
            let check = if a == b {
                format!("variance at u={u} vs 1/(2u)")
            } else {
                format!("covariance at u=({u},{v}) vs 1/(u+v)")
            };
            reports.push(TestReport::z_score(
                name,
                &check,
                est.cov(a, b),
                target,
                est.se(a, b),
                est.replicates,
            ));
        }
        let column: Vec<f64> = rows.iter().map(|z| z[a]).collect();
        let u = s.u_grid[a];
        plots.push(svg::histogram(
            &format!("u{u}"),
            &format!(
                "normalized renewal statistic, t={t}, k={}, u={u}, vs N(0, 1/(2u))",
                s.k_scale
            ),
            &column,
            gaussian_density(1.0 / (2.0 * u)),
        ));
    }
    // Large-t variance of the normalized statistic at fixed k: [k] / (2m - 1).
    let finite_k_variance: Vec<f64> = levels.iter().map(|&m| s.k_scale.floor() / (2 * m - 1) as f64).collect();
    Ok(SuiteResult {
        reports,
        diagnostics: json!({
            "t": t, "k": s.k_scale, "levels": levels, "finite_k_variance": finite_k_variance, "u_grid": s.u_grid, "mu": mu, "sigma2": sigma2,
            "interarrival": s.interarrival, "cov": est.cov, "se": est.se,
        }),
        plots,
    })
}
