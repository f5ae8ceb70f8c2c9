//! Acceptance criteria, run in order with one PASS/FAIL line each.
//!
//! `cargo test --release -p rrtlevels-cli --test acceptance -- 3 7` runs a
//! subset by number.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rrtlevels::stat_verify::TestReport;
use rrtlevels_cli::{run, ExperimentConfig, RunOutcome, Suite, Threads};

struct Verdict {
    passed: bool,
    detail: Vec<String>,
}

fn config(suite: Suite, out: &Path, threads: Option<Threads>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_suite(suite);
    cfg.threads = threads;
    cfg.output.dir = Some(out.to_path_buf());
    cfg
}

fn run_suite(suite: Suite, out: &Path, threads: Option<Threads>) -> Result<RunOutcome, String> {
    let settings = config(suite, out, threads).resolve().map_err(|e| e.to_string())?;
    run(&settings).map_err(|e| e.to_string())
}

fn describe(r: &TestReport) -> String {
    let p = r.p_value.map_or(String::new(), |p| format!(" p={p:.4}"));
    let detail = r.detail.as_deref().map_or(String::new(), |d| format!(" [{d}]"));
    let stat = if r.statistic != 0.0 && r.statistic.abs() < 1e-3 {
        format!("{:.3e}", r.statistic)
    } else {
        format!("{:.6}", r.statistic)
    };
    format!("{} {}: statistic {stat}{p}{detail}", r.verdict(), r.check)
}

/// Runs `suite` with its default configuration and judges the reports
/// selected by `relevant` together with the runtime budget.
fn suite_criterion(suite: Suite, budget: Duration, relevant: fn(&TestReport) -> bool, scratch: &Path) -> Verdict {
    let out = scratch.join(suite.name());
    match run_suite(suite, &out, None) {
        Err(e) => Verdict {
            passed: false,
            detail: vec![format!("error: {e}")],
        },
        Ok(outcome) => {
            let reports: Vec<&TestReport> = outcome.reports.iter().filter(|r| relevant(r)).collect();
            let in_budget = outcome.elapsed <= budget;
            let mut detail: Vec<String> = reports.iter().map(|r| describe(r)).collect();
            detail.push(format!(
                "{} runtime {:.1}s of {}s",
                if in_budget { "PASS" } else { "FAIL" },
                outcome.elapsed.as_secs_f64(),
                budget.as_secs()
            ));
            let _ = std::fs::remove_dir_all(&out);
            Verdict {
                passed: in_budget && !reports.is_empty() && reports.iter().all(|r| r.passed),
                detail,
            }
        }
    }
}

fn same_bytes(a: &Path, b: &Path) -> std::io::Result<bool> {
    if std::fs::metadata(a)?.len() != std::fs::metadata(b)?.len() {
        return Ok(false);
    }
    let (mut ra, mut rb) = (BufReader::new(File::open(a)?), BufReader::new(File::open(b)?));
    let (mut ba, mut bb) = (vec![0u8; 1 << 16], vec![0u8; 1 << 16]);
    loop {
        let na = ra.read(&mut ba)?;
        if na == 0 {
            return Ok(rb.read(&mut bb)? == 0);
        }
        rb.read_exact(&mut bb[..na])?;
        if ba[..na] != bb[..na] {
            return Ok(false);
        }
    }
}

fn compare_threads(suite: Suite, scratch: &Path) -> Result<String, String> {
    let mut csv = Vec::new();
    for t in [1usize, 8] {
        let out = scratch.join(format!("{}-t{t}", suite.name()));
        csv.push(run_suite(suite, &out, Some(Threads::Count(t)))?.csv_path);
    }
    let same = same_bytes(&csv[0], &csv[1]).map_err(|e| e.to_string())?;
    if same {
        Ok(format!(
            "identical CSV at 1 and 8 threads ({} bytes)",
            file_len(&csv[0])
        ))
    } else {
        Err("CSV differs between 1 and 8 threads".into())
    }
}

fn determinism(scratch: &Path) -> Verdict {
    let mut passed = true;
    let mut detail = Vec::new();
    for suite in [Suite::EnumerationCheck, Suite::LimitProcess, Suite::FixedKClt] {
        match compare_threads(suite, scratch) {
            Ok(msg) => detail.push(format!("PASS {suite}: {msg}")),
            Err(msg) => {
                passed = false;
                detail.push(format!("FAIL {suite}: {msg}"));
            }
        }
        for t in [1, 8] {
            let _ = std::fs::remove_dir_all(scratch.join(format!("{}-t{t}", suite.name())));
        }
    }
    Verdict { passed, detail }
}

fn file_len(p: &Path) -> u64 {
    std::fs::metadata(p).map_or(0, |m| m.len())
}

fn all(_: &TestReport) -> bool {
    true
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let scratch = tempfile::tempdir().expect("temporary directory");
    let dir = scratch.path();
    let minutes = |m: u64| Duration::from_secs(60 * m);
    type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;
    let criteria: Vec<(u32, &str, Check)> = vec![
        (
            1,
            "exact enumeration: level PMFs within TV 0.01, n <= 8",
            Box::new(|| suite_criterion(Suite::EnumerationCheck, minutes(2), all, dir)),
        ),
        (
            2,
            "mean oracle: level means within 4 SE, n in {1e3, 1e5}, k <= 6",
            Box::new(|| suite_criterion(Suite::MeanOracle, minutes(5), all, dir)),
        ),
        (
            3,
            "moment identities: decomposition <= 1e-10, recursion <= 1e-8",
            Box::new(|| suite_criterion(Suite::Moments, minutes(1), all, dir)),
        ),
        (
            4,
            "exponential-case variance of Y_k(t) within 4 SE of D_k(t)",
            Box::new(|| {
                suite_criterion(
                    Suite::CmjVariance,
                    minutes(10),
                    |r| r.check.starts_with("variance"),
                    dir,
                )
            }),
        ),
        (
            5,
            "embedding identity: tree vs CMJ two-sample KS p >= 0.001",
            Box::new(|| suite_criterion(Suite::EmbeddingIdentity, minutes(10), all, dir)),
        ),
        (
            6,
            "fluctuation asymptotics and Stirling bound",
            Box::new(|| suite_criterion(Suite::FluctuationAsymptotics, minutes(1), all, dir)),
        ),
        (
            7,
            "limit process: variance, normality, kernel vs pathwise, stationarity",
            Box::new(|| suite_criterion(Suite::LimitProcess, minutes(5), all, dir)),
        ),
        (
            8,
            "fixed-level CLT: KS distance strictly decreasing along n",
            Box::new(|| suite_criterion(Suite::FixedKClt, minutes(30), all, dir)),
        ),
        (
            9,
            "multivariate covariance moves toward 1/2",
            Box::new(|| suite_criterion(Suite::MultivariateClt, minutes(15), all, dir)),
        ),
        (
            10,
            "intermediate-level CLT: variance band and correlation",
            Box::new(|| suite_criterion(Suite::IntermediateClt, minutes(30), all, dir)),
        ),
        (
            11,
            "renewal statistic variance within 4 SE of 1/2",
            Box::new(|| suite_criterion(Suite::RenewalClt, minutes(15), all, dir)),
        ),
        (
            12,
            "determinism: identical CSV at 1 and 8 threads",
            Box::new(|| determinism(dir)),
        ),
    ];

    let start = Instant::now();
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, check) in &criteria {
        if !selected.is_empty() && !selected.contains(id) {
            continue;
        }
        let t0 = Instant::now();
        let verdict = check();
        ran += 1;
        if !verdict.passed {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2}: {title} ({:.1}s)",
            if verdict.passed { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        for line in verdict.detail {
            println!("        {line}");
        }
    }
    println!(
        "acceptance: {} of {ran} criteria passed in {:.1}s",
        ran - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
