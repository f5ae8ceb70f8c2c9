use std::path::{Path, PathBuf};

use rrtlevels::cmj_sim::InterarrivalSpec;
use serde::{Deserialize, Serialize};

use crate::suites::Suite;
use crate::RunError;

/// Environment variable consulted for the output directory when neither the
/// config nor the command line names one.
pub const OUT_DIR_ENV: &str = "RRTLEVELS_OUT";

pub const DEFAULT_SEED: u64 = 20_180_611;

/// Worker count: a positive integer or `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threads {
    Count(usize),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Threads {
    pub const AUTO: Threads = Threads::Auto(AutoTag::Auto);

    pub fn resolve(self) -> usize {
        match self {
            Threads::Count(n) => n,
            Threads::Auto(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl std::str::FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::AUTO);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Threads::Count(n)),
            _ => Err(format!("expected a positive integer or 'auto', got '{s}'")),
        }
    }
}

/// Intermediate level scale `k_n = ⌈c (log n)^β⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSchedule {
    pub c: f64,
    pub beta: f64,
}

impl KSchedule {
    pub fn level_scale(&self, n: u64) -> f64 {
        (self.c * (n as f64).ln().powf(self.beta)).ceil()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Per-replicate CSV file name, relative to `dir`.
    pub csv: Option<String>,
    /// JSON summary file name, relative to `dir`.
    pub summary: Option<String>,
    pub plots: Option<bool>,
}

/// One experiment as read from JSON. Omitted fields take the suite's
/// defaults, which reproduce the acceptance settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    pub n_ladder: Option<Vec<u64>>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<Threads>,
    /// Levels (tree and CMJ suites) or generation indices.
    pub k: Option<Vec<u64>>,
    pub k_schedule: Option<KSchedule>,
    /// Real scale `k` of the renewal statistic.
    pub k_scale: Option<f64>,
    pub u_grid: Option<Vec<f64>>,
    /// Time points for the moment and CMJ suites.
    pub t: Option<Vec<f64>>,
    pub interarrival: Option<InterarrivalSpec>,
    /// Pathwise sampler step and tail tolerance.
    pub step: Option<f64>,
    pub tail_tol: Option<f64>,
    pub pathwise_replicates: Option<u64>,
    /// Largest `k` in the recursion and bound checks.
    pub recursion_k_max: Option<u64>,
    pub stirling_k_max: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub suite: Suite,
    pub n_ladder: Vec<u64>,
    pub replicates: u64,
    pub seed: u64,
    pub threads: usize,
    pub k: Vec<u64>,
    pub k_schedule: KSchedule,
    pub k_scale: f64,
    pub u_grid: Vec<f64>,
    pub t: Vec<f64>,
    pub interarrival: InterarrivalSpec,
    pub step: f64,
    pub tail_tol: f64,
    pub pathwise_replicates: u64,
    pub recursion_k_max: u64,
    pub stirling_k_max: u64,
    pub out_dir: PathBuf,
    pub csv: String,
    pub summary: String,
    pub plots: bool,
}

fn field(name: &str, msg: impl std::fmt::Display) -> RunError {
    RunError::Config(format!("{name}: {msg}"))
}

impl ExperimentConfig {
    pub fn for_suite(suite: Suite) -> Self {
        ExperimentConfig {
            suite: suite.name().to_string(),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fills omitted fields from the suite defaults and validates the result.
    pub fn resolve(&self) -> Result<Settings, RunError> {
        let suite: Suite = self.suite.parse().map_err(|e| field("suite", e))?;
        let d = suite.defaults();
        let pick = |v: &Option<Vec<u64>>, dv: &[u64]| v.clone().unwrap_or_else(|| dv.to_vec());
        let out_dir = self
            .output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let s = Settings {
            suite,
            n_ladder: pick(&self.n_ladder, &d.n_ladder),
            replicates: self.replicates.unwrap_or(d.replicates),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            threads: self.threads.unwrap_or(Threads::AUTO).resolve(),
            k: pick(&self.k, &d.k),
            k_schedule: self.k_schedule.unwrap_or(KSchedule { c: 1.0, beta: 0.5 }),
            k_scale: self.k_scale.unwrap_or(20.0),
            u_grid: self.u_grid.clone().unwrap_or_else(|| d.u_grid.to_vec()),
            t: self.t.clone().unwrap_or_else(|| d.t.to_vec()),
            interarrival: self.interarrival.unwrap_or(d.interarrival),
            step: self.step.unwrap_or(1e-3),
            tail_tol: self.tail_tol.unwrap_or(1e-8),
            pathwise_replicates: self.pathwise_replicates.unwrap_or(10_000),
            recursion_k_max: self.recursion_k_max.unwrap_or(30),
            stirling_k_max: self.stirling_k_max.unwrap_or(200),
            csv: self
                .output
                .csv
                .clone()
                .unwrap_or_else(|| format!("{}.csv", suite.name())),
            summary: self
                .output
                .summary
                .clone()
                .unwrap_or_else(|| format!("{}.summary.json", suite.name())),
            plots: self.output.plots.unwrap_or(true),
            out_dir,
        };
        s.validate()?;
        Ok(s)
    }
}

impl Settings {
    fn validate(&self) -> Result<(), RunError> {
        if self.replicates < 1 {
            return Err(field("replicates", "must be at least 1"));
        }
        if self.n_ladder.is_empty() {
            return Err(field("n_ladder", "must not be empty"));
        }
        if let Some(n) = self.n_ladder.iter().find(|&&n| n < 1) {
            return Err(field("n_ladder", format!("sizes must be at least 1, got {n}")));
        }
        if self.threads < 1 {
            return Err(field("threads", "must be at least 1"));
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(field("k", "levels must be a nonempty list of positive integers"));
        }
        if self.u_grid.is_empty() || self.u_grid[0] <= 0.0 || !self.u_grid.iter().all(|u| u.is_finite()) {
            return Err(field("u_grid", "must be a nonempty list of finite positive reals"));
        }
        if self.u_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field("u_grid", "must be strictly increasing"));
        }
        if self.t.is_empty() || self.t.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(field("t", "must be a nonempty list of finite positive times"));
        }
        if !(self.k_schedule.c > 0.0 && self.k_schedule.beta > 0.0 && self.k_schedule.beta < 1.0) {
            return Err(field("k_schedule", "need c > 0 and 0 < beta < 1"));
        }
        if !(self.k_scale >= 1.0 && self.k_scale.is_finite()) {
            return Err(field("k_scale", "must be a finite real of at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(field("step", "must be positive"));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(field("tail_tol", "must lie in (0, 1)"));
        }
        if self.pathwise_replicates < 1 {
            return Err(field("pathwise_replicates", "must be at least 1"));
        }
        self.interarrival.validate().map_err(|e| field("interarrival", e))?;
        self.suite.validate(self)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out_dir.join(&self.csv)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out_dir.join(&self.summary)
    }
}
