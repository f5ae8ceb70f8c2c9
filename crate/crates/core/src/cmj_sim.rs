//! Crump–Mode–Jagers process generated by a renewal sequence.
//!
//! Every individual gives birth at the arrival times of its own copy of
//! the renewal process `S_1 < S_2 < …`, shifted to its birth time. The
//! simulation is event driven: each individual owns exactly one pending
//! event (its next birth) in a min-time queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on processed events (births or arrivals).
pub const DEFAULT_EVENT_BUDGET: u64 = 100_000_000;

/// Law of the interarrival time `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InterarrivalSpec {
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { a: f64, b: f64 },
    Deterministic { c: f64 },
}

impl InterarrivalSpec {
    /// Unit-mean exponential: the random recursive tree case.
    pub const UNIT_EXPONENTIAL: InterarrivalSpec = InterarrivalSpec::Exponential { mean: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        let valid = match *self {
            InterarrivalSpec::Exponential { mean } => ok(mean),
            InterarrivalSpec::Gamma { shape, scale } => ok(shape) && ok(scale),
            InterarrivalSpec::Uniform { a, b } => a.is_finite() && b.is_finite() && a >= 0.0 && b > a,
            InterarrivalSpec::Deterministic { c } => ok(c),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "interarrival law {self:?} is not supported on (0, inf)"
            )))
        }
    }

    /// Like [`validate`](Self::validate), and also requires `0 < Var ξ < ∞`.
    pub fn validate_for_clt(&self) -> Result<()> {
        self.validate()?;
        if self.variance() > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("interarrival law {self:?} has zero variance")))
        }
    }

    /// `μ = E ξ`.
    pub fn mean(&self) -> f64 {
        match *self {
            InterarrivalSpec::Exponential { mean } => mean,
            InterarrivalSpec::Gamma { shape, scale } => shape * scale,
            InterarrivalSpec::Uniform { a, b } => 0.5 * (a + b),
            InterarrivalSpec::Deterministic { c } => c,
        }
    }

    /// `σ² = Var ξ`.
    pub fn variance(&self) -> f64 {
        match *self {
            InterarrivalSpec::Exponential { mean } => mean * mean,
            InterarrivalSpec::Gamma { shape, scale } => shape * scale * scale,
            InterarrivalSpec::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            InterarrivalSpec::Deterministic { .. } => 0.0,
        }
    }

    pub fn sampler(&self) -> Result<Interarrival> {
        self.validate()?;
        let bad = |e: &dyn std::fmt::Display| Error::invalid(format!("{self:?}: {e}"));
        Ok(match *self {
            InterarrivalSpec::Exponential { mean } => {
                Interarrival::Exponential(Exp::new(1.0 / mean).map_err(|e| bad(&e))?)
            }
            InterarrivalSpec::Gamma { shape, scale } => {
                Interarrival::Gamma(Gamma::new(shape, scale).map_err(|e| bad(&e))?)
            }
            InterarrivalSpec::Uniform { a, b } => Interarrival::Uniform(Uniform::new(a, b).map_err(|e| bad(&e))?),
            InterarrivalSpec::Deterministic { c } => Interarrival::Deterministic(c),
        })
    }
}

/// Ready-to-draw interarrival distribution.
#[derive(Clone, Debug)]
pub enum Interarrival {
    Exponential(Exp<f64>),
    Gamma(Gamma<f64>),
    Uniform(Uniform<f64>),
    Deterministic(f64),
}

impl Distribution<f64> for Interarrival {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Interarrival::Exponential(d) => d.sample(rng),
            Interarrival::Gamma(d) => d.sample(rng),
            Interarrival::Uniform(d) => d.sample(rng),
            Interarrival::Deterministic(c) => *c,
        }
    }
}

/// Arrival times `S_1 < S_2 < … <= horizon` of one renewal process.
#[derive(Clone, Debug, PartialEq)]
pub struct RenewalPath {
    horizon: f64,
    arrivals: Vec<f64>,
}

impl RenewalPath {
    pub fn new(horizon: f64, arrivals: Vec<f64>) -> Result<Self> {
        if !(horizon >= 0.0) {
            return Err(Error::invalid("renewal horizon must be nonnegative"));
        }
        if arrivals.windows(2).any(|w| w[0] >= w[1]) || arrivals.iter().any(|&s| !(s > 0.0 && s <= horizon)) {
            return Err(Error::invalid(
                "arrivals must be strictly increasing within (0, horizon]",
            ));
        }
        Ok(RenewalPath { horizon, arrivals })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    /// `N(s)` for `s <= horizon`.
    pub fn count_until(&self, s: f64) -> usize {
        self.arrivals.partition_point(|&a| a <= s)
    }

    /// `N(horizon)`.
    pub fn count(&self) -> usize {
        self.arrivals.len()
    }
}

/// Partial sums of `ξ_1, ξ_2, …` up to time `t`.
pub fn simulate_renewal<R: Rng + ?Sized>(spec: &InterarrivalSpec, t: f64, rng: &mut R) -> Result<RenewalPath> {
    simulate_renewal_with_budget(spec, t, rng, DEFAULT_EVENT_BUDGET)
}

pub fn simulate_renewal_with_budget<R: Rng + ?Sized>(
    spec: &InterarrivalSpec,
    t: f64,
    rng: &mut R,
    budget: u64,
) -> Result<RenewalPath> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "horizon must be finite and nonnegative, got {t}"
        )));
    }
    let xi = spec.sampler()?;
    let expected = (t / spec.mean()).ceil();
    if expected > budget as f64 {
        return Err(Error::Budget {
            what: format!("renewal path to t={t}"),
            required: expected as u64,
            budget,
        });
    }
    let mut arrivals = Vec::with_capacity(expected as usize + 8);
    let mut s = 0.0;
    loop {
        s += xi.sample(rng);
        if s > t {
            break;
        }
        if arrivals.len() as u64 >= budget.saturating_mul(2) {
            return Err(Error::Budget {
                what: format!("renewal path to t={t}"),
                required: arrivals.len() as u64,
                budget,
            });
        }
        arrivals.push(s);
    }
    Ok(RenewalPath { horizon: t, arrivals })
}

/// Generation-resolved birth counts `Y_k(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationCounts {
    horizon: f64,
    counts: Vec<u64>,
    beyond: u64,
    birth_times: Option<Vec<f64>>,
}

impl GenerationCounts {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `Y_k` for `k = 1..=k_max`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `Y_k`; zero for `k = 0` or `k > k_max`.
    pub fn count(&self, k: usize) -> u64 {
        if k == 0 {
            return 0;
        }
        self.counts.get(k - 1).copied().unwrap_or(0)
    }

    /// Births in generations deeper than `k_max`; only populated by
    /// [`CmjSimulator::until_n_births`], which has to expand every individual.
    pub fn beyond(&self) -> u64 {
        self.beyond
    }

    /// Chronological birth times (ancestor excluded), when recorded.
    pub fn birth_times(&self) -> Option<&[f64]> {
        self.birth_times.as_deref()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.beyond
    }
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    time: f64,
    seq: u64,
    /// Generation of the individual about to give birth.
    parent_gen: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so the std max-heap pops the earliest event; equal times
    // leave in insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

enum Stop {
    Horizon(f64),
    Births(u64),
}

/// Event-driven CMJ simulator. Reuses its queue between runs.
pub struct CmjSimulator {
    spec: InterarrivalSpec,
    xi: Interarrival,
    budget: u64,
    record_births: bool,
    queue: BinaryHeap<Pending>,
}

impl CmjSimulator {
    pub fn new(spec: InterarrivalSpec) -> Result<Self> {
        Ok(CmjSimulator {
            xi: spec.sampler()?,
            spec,
            budget: DEFAULT_EVENT_BUDGET,
            record_births: false,
            queue: BinaryHeap::new(),
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn recording_birth_times(mut self, yes: bool) -> Self {
        self.record_births = yes;
        self
    }

    pub fn spec(&self) -> &InterarrivalSpec {
        &self.spec
    }

    /// `Y_1(t), …, Y_{k_max}(t)`. Individuals of generation `k_max` are
    /// never expanded since their offspring cannot be counted.
    pub fn at_time<R: Rng + ?Sized>(&mut self, t: f64, k_max: usize, rng: &mut R) -> Result<GenerationCounts> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be finite and nonnegative, got {t}"
            )));
        }
        if k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        // Expected births Σ_k U_k(t), with U_k(t) ≈ (t/μ + 1)^k / k!.
        let rate = t / self.spec.mean() + 1.0;
        let mut term = 1.0;
        let mut expected = 0.0;
        for k in 1..=k_max {
            term *= rate / k as f64;
            expected += term;
        }
        if expected > self.budget as f64 {
            return Err(Error::Budget {
                what: format!("CMJ simulation to t={t} with k_max={k_max}"),
                required: expected.min(u64::MAX as f64) as u64,
                budget: self.budget,
            });
        }
        self.run(Stop::Horizon(t), k_max, true, rng).map(|(_, c)| c)
    }

    /// Runs until the `n`-th birth and returns `(τ_n, Y(τ_n))`, the `n`-th
    /// individual included. All generations are expanded, deeper ones
    /// being counted in [`GenerationCounts::beyond`].
    pub fn until_n_births<R: Rng + ?Sized>(
        &mut self,
        n: u64,
        k_max: usize,
        rng: &mut R,
    ) -> Result<(f64, GenerationCounts)> {
        if n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        if n > self.budget {
            return Err(Error::Budget {
                what: format!("CMJ simulation until birth {n}"),
                required: n,
                budget: self.budget,
            });
        }
        self.run(Stop::Births(n), k_max, false, rng)
    }

    fn run<R: Rng + ?Sized>(
        &mut self,
        stop: Stop,
        k_max: usize,
        prune: bool,
        rng: &mut R,
    ) -> Result<(f64, GenerationCounts)> {
        let horizon = match stop {
            Stop::Horizon(t) => t,
            Stop::Births(_) => f64::INFINITY,
        };
        let target = match stop {
            Stop::Horizon(_) => u64::MAX,
            Stop::Births(n) => n,
        };
        let mut counts = vec![0u64; k_max];
        let mut beyond = 0u64;
        let mut births = 0u64;
        let mut birth_times = self.record_births.then(Vec::new);
        let mut seq = 0u64;
        let mut now = 0.0;

        self.queue.clear();
        let first = self.xi.sample(rng);
        if first <= horizon {
            self.queue.push(Pending {
                time: first,
                seq,
                parent_gen: 0,
            });
            seq += 1;
        }

        while let Some(ev) = self.queue.pop() {
            if births >= self.budget {
                self.queue.clear();
                return Err(Error::EventBudget {
                    budget: self.budget,
                    births,
                    time: now,
                    partial: counts,
                });
            }
            now = ev.time;
            let child_gen = ev.parent_gen + 1;
            births += 1;
            match counts.get_mut(child_gen as usize - 1) {
                Some(c) => *c += 1,
                None => beyond += 1,
            }
            if let Some(times) = birth_times.as_mut() {
                times.push(now);
            }
            if births == target {
                break;
            }
            // Parent's next child first, then the newborn's first child:
            // this order fixes how simultaneous births are resolved.
            let next = now + self.xi.sample(rng);
            if next <= horizon {
                self.queue.push(Pending {
                    time: next,
                    seq,
                    parent_gen: ev.parent_gen,
                });
                seq += 1;
            }
            if !(prune && child_gen as usize >= k_max) {
                let next = now + self.xi.sample(rng);
                if next <= horizon {
                    self.queue.push(Pending {
                        time: next,
                        seq,
                        parent_gen: child_gen,
                    });
                    seq += 1;
                }
            }
        }
        self.queue.clear();
        let at = if horizon.is_finite() { horizon } else { now };
        Ok((
            now,
            GenerationCounts {
                horizon: at,
                counts,
                beyond,
                birth_times,
            },
        ))
    }
}

/// `Y_1(t), …, Y_{k_max}(t)` for one CMJ run.
pub fn simulate_cmj<R: Rng + ?Sized>(
    spec: &InterarrivalSpec,
    t: f64,
    k_max: usize,
    rng: &mut R,
) -> Result<GenerationCounts> {
    CmjSimulator::new(*spec)?.at_time(t, k_max, rng)
}

/// `(τ_n, Y(τ_n))` for one CMJ run.
pub fn simulate_cmj_until_n_births<R: Rng + ?Sized>(
    spec: &InterarrivalSpec,
    n: u64,
    k_max: usize,
    rng: &mut R,
) -> Result<(f64, GenerationCounts)> {
    CmjSimulator::new(*spec)?.until_n_births(n, k_max, rng)
}

/// `E τ_n = H_n` in the unit-exponential case.
pub fn tau_mean(n: u64) -> f64 {
    assert!(n >= 1, "tau_mean needs n >= 1");
    const DIRECT_LIMIT: u64 = 1_000_000;
    if n <= DIRECT_LIMIT {
        // smallest terms first
        (1..=n).rev().map(|i| 1.0 / i as f64).sum()
    } else {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let x = n as f64;
        let inv2 = 1.0 / (x * x);
        x.ln() + EULER_GAMMA + 0.5 / x - inv2 / 12.0 + inv2 * inv2 / 120.0
    }
}
