use rrtlevels::stat_verify::{empirical_cov, intermediate_target_cov, normalize_intermediate, Estimate, TestReport};
use rrtlevels::tree_sim::{LevelProfile, ProfileGenerator};
use serde_json::json;

use super::{core_err, gaussian_density, stream, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::svg;
use crate::{RunError, Settings};

/// Band on `Var / (1/(2u))`, frozen after the pilot run.
pub const VARIANCE_BAND: (f64, f64) = (0.6, 1.4);
/// Allowed absolute gap between empirical and limiting correlation.
pub const CORRELATION_TOLERANCE: f64 = 0.25;

fn level(k_n: f64, u: f64) -> u64 {
    (k_n * u).floor() as u64
}

pub(super) fn validate(s: &Settings) -> Result<(), RunError> {
    for &n in &s.n_ladder {
        if n < 2 {
            return Err(RunError::Config(format!(
                "n_ladder: intermediate levels need n >= 2, got {n}"
            )));
        }
        let k_n = s.k_schedule.level_scale(n);
        if level(k_n, s.u_grid[0]) < 1 {
            return Err(RunError::Config(format!(
                "u_grid: [k_n u] = [{k_n} * {}] is zero at n={n}",
                s.u_grid[0]
            )));
        }
    }
    Ok(())
}

pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let n_max = *s.n_ladder.last().expect("validated nonempty");
    let scales: Vec<f64> = s.n_ladder.iter().map(|&n| s.k_schedule.level_scale(n)).collect();
    let u_max = *s.u_grid.last().expect("validated nonempty");
    let m_max = scales
        .iter()
        .map(|&k_n| level(k_n, u_max))
        .max()
        .expect("validated nonempty");
    let cap = Some(u32::try_from(m_max).unwrap_or(u32::MAX));
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(s.replicates as usize); s.n_ladder.len()];
    engine.replicates(
        s.replicates,
        ProfileGenerator::new,
        |gen, r| gen.generate_ladder(&s.n_ladder, cap, &mut stream(s, name, n_max, r)),
        |r, profiles: Vec<LevelProfile>| {
            for (i, (p, &n)) in profiles.iter().zip(&s.n_ladder).enumerate() {
                let k_n = scales[i];
                let mut zs = Vec::with_capacity(s.u_grid.len());
                for &u in &s.u_grid {
                    let m = level(k_n, u);
                    let x = p.count(m as usize) as f64;
                    let z = normalize_intermediate(x, n, k_n, u).map_err(core_err(s))?;
                    sink.push(Row {
                        replicate: r,
                        n: Some(n),
                        k_or_m: Some(m),
                        u: Some(u),
                        raw: x,
                        normalized: Some(z),
                    })?;
                    zs.push(z);
                }
                rows[i].push(zs);
            }
            Ok(())
        },
    )?;

    let d = s.u_grid.len();
    let target: Vec<f64> = (0..d * d)
        .map(|ij| intermediate_target_cov(s.u_grid[ij / d], s.u_grid[ij % d]))
        .collect();
    let mut reports = Vec::new();
    let mut cases = Vec::new();
    let mut plots = Vec::new();
    for (i, &n) in s.n_ladder.iter().enumerate() {
        let k_n = scales[i];
        let est = empirical_cov(&rows[i]).map_err(core_err(s))?;
        for (a, &u) in s.u_grid.iter().enumerate() {
            let column: Vec<f64> = rows[i].iter().map(|z| z[a]).collect();
            let var = Estimate::variance(&column).map_err(core_err(s))?;
            let goal = target[a * d + a];
            let ratio = var.value / goal;
            reports.push(
                TestReport::holds(
                    name,
                    &format!(
                        "variance ratio in [{}, {}] at n={n} u={u}",
                        VARIANCE_BAND.0, VARIANCE_BAND.1
                    ),
                    (VARIANCE_BAND.0..=VARIANCE_BAND.1).contains(&ratio),
                    ratio,
                    format!(
                        "variance {:.6} (se {:.2e}) target {goal:.6}, level {}",
                        var.value,
                        var.se,
                        level(k_n, u)
                    ),
                )
                .with_sizes(vec![var.n]),
            );
            if n == n_max {
                plots.push(svg::histogram(
                    &format!("u{u}"),
                    &format!("intermediate normalization, n={n}, u={u}, vs N(0, 1/(2u))"),
                    &column,
                    gaussian_density(goal),
                ));
            }
        }
        for a in 0..d {
            for b in a + 1..d {
                let (u, v) = (s.u_grid[a], s.u_grid[b]);
                let goal = target[a * d + b] / (target[a * d + a] * target[b * d + b]).sqrt();
                let corr = est.corr(a, b);
                reports.push(
                    TestReport::holds(
                        name,
                        &format!("correlation within {CORRELATION_TOLERANCE} of {goal:.6} at n={n} u=({u},{v})"),
                        (corr - goal).abs() <= CORRELATION_TOLERANCE,
                        corr,
                        format!("empirical {corr:.6} target {goal:.6}"),
                    )
                    .with_sizes(vec![est.replicates]),
                );
            }
        }
        let levels: Vec<u64> = s.u_grid.iter().map(|&u| level(k_n, u)).collect();
        cases.push(json!({"n": n, "k_n": k_n, "levels": levels, "u_grid": s.u_grid, "cov": est.cov, "se": est.se, "target": target}));
        if n == n_max && d > 1 {
            let labels: Vec<String> = s.u_grid.iter().map(|u| format!("u={u}")).collect();
            plots.push(svg::heatmaps(
                "cov",
                &format!("intermediate-level covariance at n={n}"),
                &labels,
                [("empirical", &est.cov), ("target 1/(u+v)", &target)],
            ));
        }
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({ "cases": cases }),
        plots,
    })
}
