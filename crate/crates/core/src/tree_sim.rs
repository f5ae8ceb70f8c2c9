//! Uniform random recursive trees and their level profiles.
//!
//! Vertex `j + 1` attaches to a parent chosen uniformly among vertices
//! `1..=j`. Only per-vertex depths are stored; edges never exist in memory.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{self, bounded_u32};

/// Default work budget for [`exact_mean_profile`], in DP cell updates.
pub const DEFAULT_MEAN_BUDGET: u64 = 100_000_000;

/// Largest `n` accepted by the exhaustive enumeration oracle.
pub const MAX_ENUMERATION_N: u64 = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeConfig {
    /// Non-root vertices.
    pub n: u64,
    pub seed: u64,
    /// Deepest level tracked individually; deeper vertices go to the tail bucket.
    pub level_cap: Option<u32>,
}

impl TreeConfig {
    pub fn new(n: u64, seed: u64) -> Self {
        TreeConfig {
            n,
            seed,
            level_cap: None,
        }
    }

    pub fn with_level_cap(mut self, cap: u32) -> Self {
        self.level_cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.level_cap == Some(0) {
            return Err(Error::invalid("level_cap must be at least 1"));
        }
        if self.n >= u64::from(u32::MAX) {
            return Err(Error::invalid(format!(
                "tree size {} exceeds the supported maximum {}",
                self.n,
                u32::MAX - 1
            )));
        }
        Ok(())
    }

    /// The random stream owned by replicate `replicate` of this configuration.
    pub fn stream(&self, replicate: u64) -> rng::Stream {
        rng::replicate_stream(self.seed, "tree", self.n, replicate)
    }
}

/// Occupation numbers `X_n(k)` of one tree, `k >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelProfile {
    n: u64,
    counts: Vec<u64>,
    tail: u64,
    truncated: bool,
}

impl LevelProfile {
    /// Number of non-root vertices.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `X_n(k)`. Levels past the tracked range read as zero; check
    /// [`is_truncated`](Self::is_truncated) before trusting them.
    pub fn count(&self, k: usize) -> u64 {
        if k == 0 {
            return 1;
        }
        self.counts.get(k - 1).copied().unwrap_or(0)
    }

    /// Counts for levels `1..=len`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Vertices deeper than the level cap.
    pub fn tail(&self) -> u64 {
        self.tail
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Deepest nonempty tracked level (0 for the root-only tree).
    pub fn height(&self) -> usize {
        self.counts.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.tail
    }
}

trait Depth: Copy + Default {
    const MAX: u32;
    fn get(self) -> u32;
    fn set(v: u32) -> Self;
}

impl Depth for u8 {
    const MAX: u32 = u8::MAX as u32;
    #[inline]
    fn get(self) -> u32 {
        u32::from(self)
    }
    #[inline]
    fn set(v: u32) -> Self {
        v as u8
    }
}

impl Depth for u16 {
    const MAX: u32 = u16::MAX as u32;
    #[inline]
    fn get(self) -> u32 {
        u32::from(self)
    }
    #[inline]
    fn set(v: u32) -> Self {
        v as u16
    }
}

struct LevelTally {
    counts: Vec<u64>,
    tail: u64,
    cap: Option<u32>,
}

impl LevelTally {
    #[inline]
    fn record(&mut self, depth: u32) {
        let idx = depth as usize - 1;
        if let Some(slot) = self.counts.get_mut(idx) {
            *slot += 1;
            return;
        }
        match self.cap {
            Some(cap) if depth > cap => self.tail += 1,
            _ => {
                self.counts.resize(idx + 1, 0);
                self.counts[idx] += 1;
            }
        }
    }
}

/// Fills `depths[start..=n]`. Returns `Err(j)` if vertex `j` would overflow `T`.
#[inline]
fn fill<T: Depth, F: FnMut(u32) -> u32>(
    depths: &mut [T],
    start: u32,
    n: u32,
    parent: &mut F,
    tally: &mut LevelTally,
) -> std::result::Result<(), u32> {
    for j in start..=n {
        let d = depths[parent(j) as usize].get();
        if d == T::MAX {
            return Err(j);
        }
        depths[j as usize] = T::set(d + 1);
        tally.record(d + 1);
    }
    Ok(())
}

/// Reusable tree generator; keeps its depth buffer between replicates.
#[derive(Default)]
pub struct ProfileGenerator {
    narrow: Vec<u8>,
}

impl ProfileGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn generate<R: RngCore + ?Sized>(&mut self, cfg: &TreeConfig, rng: &mut R) -> Result<LevelProfile> {
        cfg.validate()?;
        // Vertex j (0-based, root = 0) picks its parent among 0..j.
        let n = cfg.n as u32;
        Ok(self
            .grow(&[n], cfg.level_cap, |j| bounded_u32(rng, j))
            .pop()
            .expect("one checkpoint"))
    }

    /// Grows a single tree to the largest size in `ladder` and returns its
    /// profile at every size in `ladder` (which must be nondecreasing). Each
    /// profile has the law of an independent tree of that size; profiles of
    /// the same call are coupled through their common prefix.
    pub fn generate_ladder<R: RngCore + ?Sized>(
        &mut self,
        ladder: &[u64],
        level_cap: Option<u32>,
        rng: &mut R,
    ) -> Result<Vec<LevelProfile>> {
        if ladder.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("ladder sizes must be nondecreasing"));
        }
        for &n in ladder {
            let mut cfg = TreeConfig::new(n, 0);
            cfg.level_cap = level_cap;
            cfg.validate()?;
        }
        let points: Vec<u32> = ladder.iter().map(|&n| n as u32).collect();
        Ok(self.grow(&points, level_cap, |j| bounded_u32(rng, j)))
    }

    fn grow<F: FnMut(u32) -> u32>(
        &mut self,
        checkpoints: &[u32],
        cap: Option<u32>,
        mut parent: F,
    ) -> Vec<LevelProfile> {
        let mut tally = LevelTally {
            counts: Vec::with_capacity(cap.map_or(32, |c| c as usize)),
            tail: 0,
            cap,
        };
        let n = checkpoints.last().copied().unwrap_or(0);
        let len = n as usize + 1;
        if self.narrow.len() < len {
            self.narrow.resize(len, 0);
        }
        self.narrow[0] = 0;
        let mut wide: Option<Vec<u16>> = None;
        let mut next = 1u32;
        let mut out = Vec::with_capacity(checkpoints.len());
        for &stop in checkpoints {
            while next <= stop {
                let res = match wide.as_mut() {
                    None => fill(&mut self.narrow[..len], next, stop, &mut parent, &mut tally),
                    Some(w) => fill(w, next, stop, &mut parent, &mut tally),
                };
                match res {
                    Ok(()) => next = stop + 1,
                    Err(at) if wide.is_none() => {
                        log::warn!(
                            "tree depth exceeded {} at vertex {at}; widening depth cells to 16 bits",
                            u8::MAX
                        );
                        let mut w: Vec<u16> = self.narrow[..at as usize].iter().map(|&d| u16::from(d)).collect();
                        w.resize(len, 0);
                        wide = Some(w);
                        next = at;
                    }
                    Err(at) => panic!("tree depth exceeded {} at vertex {at}", u16::MAX),
                }
            }
            out.push(LevelProfile {
                n: u64::from(stop),
                counts: tally.counts.clone(),
                tail: tally.tail,
                truncated: tally.tail > 0,
            });
        }
        out
    }
}

/// One level profile of a uniform random recursive tree on `cfg.n + 1` vertices.
pub fn generate_profile<R: RngCore + ?Sized>(cfg: &TreeConfig, rng: &mut R) -> Result<LevelProfile> {
    ProfileGenerator::new().generate(cfg, rng)
}

/// Exact law of the whole profile of a tree with `n` non-root vertices,
/// by visiting all `n!` recursive trees.
#[derive(Clone, Debug)]
pub struct ExactProfileLaw {
    n: u64,
    trees: u64,
    /// `histograms[k - 1][x]` = number of trees with `X_n(k) = x`.
    histograms: Vec<Vec<u64>>,
}

impl ExactProfileLaw {
    pub fn enumerate(n: u64) -> Result<Self> {
        if n > MAX_ENUMERATION_N {
            return Err(Error::invalid(format!(
                "exhaustive enumeration limited to n <= {MAX_ENUMERATION_N}, got {n}"
            )));
        }
        let n_us = n as usize;
        let mut law = ExactProfileLaw {
            n,
            trees: 0,
            histograms: vec![vec![0; n_us + 1]; n_us.max(1)],
        };
        let mut depths = vec![0usize; n_us + 1];
        let mut level_counts = vec![0usize; n_us + 2];
        law.visit(1, &mut depths, &mut level_counts);
        Ok(law)
    }

    fn visit(&mut self, j: usize, depths: &mut [usize], level_counts: &mut [usize]) {
        if j > self.n as usize {
            self.trees += 1;
            for (k, hist) in self.histograms.iter_mut().enumerate() {
                hist[level_counts[k + 1]] += 1;
            }
            return;
        }
        for parent in 0..j {
            let d = depths[parent] + 1;
            depths[j] = d;
            level_counts[d] += 1;
            self.visit(j + 1, depths, level_counts);
            level_counts[d] -= 1;
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of recursive trees visited (`n!`).
    pub fn tree_count(&self) -> u64 {
        self.trees
    }

    /// Exact PMF of `X_n(k)`; only values of positive probability appear.
    pub fn pmf(&self, k: usize) -> BTreeMap<u64, Ratio<u64>> {
        let mut out = BTreeMap::new();
        match (k, self.histograms.get(k.wrapping_sub(1))) {
            (1.., Some(hist)) if self.n > 0 => {
                for (x, &c) in hist.iter().enumerate() {
                    if c > 0 {
                        out.insert(x as u64, Ratio::new(c, self.trees));
                    }
                }
            }
            _ => {
                out.insert(0, Ratio::from_integer(1));
            }
        }
        out
    }
}

/// Exact PMF of `X_n(k)` for `n <= 9`.
pub fn enumerate_exact_distribution(n: u64, k: usize) -> Result<BTreeMap<u64, Ratio<u64>>> {
    if k == 0 {
        return Err(Error::invalid("level k must be at least 1"));
    }
    Ok(ExactProfileLaw::enumerate(n)?.pmf(k))
}

/// `E X_n(k)` for `k = 1..=k_max` under the default work budget.
pub fn exact_mean_profile(n: u64, k_max: usize) -> Result<Vec<f64>> {
    exact_mean_profile_with_budget(n, k_max, DEFAULT_MEAN_BUDGET)
}

/// `E X_n(k)` for `k = 1..=k_max`.
///
/// The depth of vertex `m + 1` is a sum of independent Bernoulli(1/i),
/// `i = 1..=m`; its law is advanced one `m` at a time and accumulated.
pub fn exact_mean_profile_with_budget(n: u64, k_max: usize, budget: u64) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let cells = n.saturating_mul(k_max as u64 + 1);
    if cells > budget {
        return Err(Error::Budget {
            what: format!("exact mean profile (n={n}, k_max={k_max})"),
            required: cells,
            budget,
        });
    }
    // law[d] = P(depth = d), truncated at k_max
    let mut law = vec![0.0f64; k_max + 1];
    law[0] = 1.0;
    let mut sums = vec![0.0f64; k_max + 1];
    let mut comps = vec![0.0f64; k_max + 1];
    for m in 1..=n {
        let stay = (m - 1) as f64 / m as f64;
        let step = 1.0 / m as f64;
        for d in (1..=k_max).rev() {
            law[d] = law[d] * stay + law[d - 1] * step;
        }
        law[0] *= stay;
        for d in 1..=k_max {
            let (s, c) = neumaier(sums[d], comps[d], law[d]);
            sums[d] = s;
            comps[d] = c;
        }
    }
    Ok((1..=k_max).map(|d| sums[d] + comps[d]).collect())
}

#[inline]
fn neumaier(sum: f64, comp: f64, x: f64) -> (f64, f64) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        (sum - t) + x
    } else {
        (x - t) + sum
    };
    (t, comp + c)
}
