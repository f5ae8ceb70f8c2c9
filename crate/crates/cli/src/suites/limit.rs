use rrtlevels::limit_process::{stationary_covariance, GridSpec, KernelMatrix, PathwiseSampler};
use rrtlevels::stat_verify::{
    empirical_cov, intermediate_target_cov, ks_one_sample, ks_two_sample, standard_normal_cdf, TestReport,
};
use serde_json::json;

use super::{core_err, gaussian_density, stream, SuiteResult};
use crate::engine::{CsvSink, Engine, Row};
use crate::svg;
use crate::{RunError, Settings};

/// Tolerance of the stationary-transform identity.
pub const STATIONARY_TOLERANCE: f64 = 1e-12;
const KERNEL: u64 = 0;
const PATHWISE: u64 = 1;

/// Largest `|e^{a+b} K(e^{2a}, e^{2b}) - 1/(2 cosh(a-b))|` over a 20-point
/// grid of `a` in `[-1.9, 1.9]`, with `K` taken from the kernel matrix.
fn stationary_gap() -> rrtlevels::Result<f64> {
    let a: Vec<f64> = (0..20).map(|i| -1.9 + 0.2 * i as f64).collect();
    let kernel = KernelMatrix::new(GridSpec::new(a.iter().map(|x| (2.0 * x).exp()).collect())?);
    let mut gap = 0.0f64;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let lhs = (a[i] + a[j]).exp() * kernel.entry(i, j);
            gap = gap.max((lhs - stationary_covariance(a[i] - a[j])).abs());
        }
    }
    Ok(gap)
}

/// Kernel draws are written with `k_or_m = 0` and pathwise draws with
/// `k_or_m = 1`; the normalized column holds `√(2u) T(u)`.
pub(super) fn run(s: &Settings, engine: &Engine, sink: &mut CsvSink) -> Result<SuiteResult, RunError> {
    let name = s.suite.name();
    let grid = GridSpec::new(s.u_grid.clone()).map_err(core_err(s))?;
    let kernel = KernelMatrix::new(grid.clone());
    kernel.factor().map_err(core_err(s))?;
    let pathwise = PathwiseSampler::new(grid, s.step, s.tail_tol).map_err(core_err(s))?;
    let d = s.u_grid.len();
    let scale: Vec<f64> = s.u_grid.iter().map(|u| (2.0 * u).sqrt()).collect();

    let mut collect = |label: u64, r: u64, xs: &[f64], into: &mut Vec<Vec<f64>>| -> Result<(), RunError> {
        for ((&u, &x), c) in s.u_grid.iter().zip(xs).zip(&scale) {
            sink.push(Row {
                replicate: r,
                k_or_m: Some(label),
                u: Some(u),
                raw: x,
                normalized: Some(c * x),
                ..Row::default()
            })?;
        }
        into.push(xs.to_vec());
        Ok(())
    };
    let kernel_label = format!("{name}/kernel");
    let mut kernel_rows = Vec::with_capacity(s.replicates as usize);
    engine.replicates(
        s.replicates,
        || (),
        |_, r| kernel.sample(&mut stream(s, &kernel_label, 0, r)),
        |r, xs: Vec<f64>| collect(KERNEL, r, &xs, &mut kernel_rows),
    )?;
    let path_label = format!("{name}/pathwise");
    let mut path_rows = Vec::with_capacity(s.pathwise_replicates as usize);
    engine.replicates(
        s.pathwise_replicates,
        || (),
        |_, r| Ok(pathwise.sample(&mut stream(s, &path_label, 0, r))),
        |r, xs: Vec<f64>| collect(PATHWISE, r, &xs, &mut path_rows),
    )?;

    let target: Vec<f64> = (0..d * d)
        .map(|ij| intermediate_target_cov(s.u_grid[ij / d], s.u_grid[ij % d]))
        .collect();
    let est = empirical_cov(&kernel_rows).map_err(core_err(s))?;
    let mut reports = Vec::new();
    let mut plots = Vec::new();
    for (a, &u) in s.u_grid.iter().enumerate() {
        reports.push(TestReport::z_score(
            name,
            &format!("kernel Var T({u}) vs 1/(2u)"),
            est.cov(a, a),
            target[a * d + a],
            est.se(a, a),
            est.replicates,
        ));
        let kernel_col: Vec<f64> = kernel_rows.iter().map(|x| x[a]).collect();
        let scaled: Vec<f64> = kernel_col.iter().map(|x| scale[a] * x).collect();
        let mut normal = ks_one_sample(name, &scaled, standard_normal_cdf).map_err(core_err(s))?;
        normal.check = format!("ks sqrt(2u) T({u}) vs N(0,1)");
        reports.push(normal);
        let path_col: Vec<f64> = path_rows.iter().map(|x| x[a]).collect();
        let mut two = ks_two_sample(name, &kernel_col, &path_col).map_err(core_err(s))?;
        two.check = format!("ks kernel vs pathwise at u={u}");
        reports.push(two);
        plots.push(svg::histogram(
            &format!("u{u}"),
            &format!("kernel sampler T({u}) vs N(0, 1/(2u))"),
            &kernel_col,
            gaussian_density(target[a * d + a]),
        ));
    }
    for a in 0..d {
        for b in a + 1..d {
            let (u, v) = (s.u_grid[a], s.u_grid[b]);
            reports.push(TestReport::z_score(
                name,
                &format!("kernel Cov(T({u}), T({v})) vs 1/(u+v)"),
                est.cov(a, b),
                target[a * d + b],
                est.se(a, b),
                est.replicates,
            ));
        }
    }
    let gap = stationary_gap().map_err(core_err(s))?;
    reports.push(TestReport::at_most(
        name,
        "stationary transform e^{a+b} K(e^{2a}, e^{2b}) = 1/(2 cosh(a-b)) on 20 points",
        gap,
        STATIONARY_TOLERANCE,
    ));
    if d > 1 {
        let labels: Vec<String> = s.u_grid.iter().map(|u| format!("u={u}")).collect();
        plots.push(svg::heatmaps(
            "cov",
            "kernel sampler covariance",
            &labels,
            [("empirical", &est.cov), ("target 1/(u+v)", &target)],
        ));
    }
    Ok(SuiteResult {
        reports,
        diagnostics: json!({
            "u_grid": s.u_grid, "step": s.step, "tail_tol": s.tail_tol,
            "pathwise_horizon": pathwise.horizon(), "pathwise_steps": pathwise.steps(),
            "kernel_cov": est.cov, "kernel_se": est.se, "target": target, "stationary_gap": gap,
        }),
        plots,
    })
}
