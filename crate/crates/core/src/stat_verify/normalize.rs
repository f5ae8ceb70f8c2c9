use serde::Serialize;

use crate::cmj_sim::RenewalPath;
use crate::error::{Error, Result};
use crate::logvalue::{ln_factorial, LogValue};

/// `x ↦ scale · (x - center)` with both factors held in log space.
#[derive(Clone, Copy, Debug)]
pub struct LevelNormalizer {
    ln_scale: f64,
    center: LogValue,
    level: u64,
}

impl LevelNormalizer {
    /// Scale `√(2k-1) (k-1)! / L^{k-1/2}`, centre `L^k / k!`, with `L = log n`.
    pub fn fixed_k(log_n: f64, k: u64) -> Result<Self> {
        let extra = 0.5 * ((2 * k - 1) as f64).ln();
        Self::build(log_n, k, extra)
    }

    /// Scale `(j-1)! / L^{j-1/2}`, centre `L^j / j!`.
    pub fn multivariate(log_n: f64, j: u64) -> Result<Self> {
        Self::build(log_n, j, 0.0)
    }

    /// Level `m = [k_n u]`, scale `[k_n]^{1/2} (m-1)! / L^{m-1/2}`, centre `L^m / m!`.
    pub fn intermediate(log_n: f64, k_n: f64, u: f64) -> Result<Self> {
        if !(k_n > 0.0 && u > 0.0) {
            return Err(Error::invalid(format!("k_n and u must be positive, got ({k_n}, {u})")));
        }
        let m = (k_n * u).floor();
        if m < 1.0 {
            return Err(Error::invalid(format!("[k_n u] = [{k_n} * {u}] is zero")));
        }
        let whole = k_n.floor();
        if whole < 1.0 {
            return Err(Error::invalid(format!("[k_n] = [{k_n}] is zero")));
        }
        Self::build(log_n, m as u64, 0.5 * whole.ln())
    }

    fn build(log_n: f64, level: u64, ln_extra: f64) -> Result<Self> {
        if level == 0 {
            return Err(Error::invalid("level must be at least 1"));
        }
        if !(log_n > 0.0 && log_n.is_finite()) {
            return Err(Error::invalid(format!("log n must be positive (n >= 2), got {log_n}")));
        }
        let ln_l = log_n.ln();
        let ln_scale = ln_extra + ln_factorial(level - 1) - (level as f64 - 0.5) * ln_l;
        let center = LogValue::from_log(level as f64 * ln_l - ln_factorial(level));
        Ok(LevelNormalizer {
            ln_scale,
            center,
            level,
        })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// The centring `L^m / m!`.
    pub fn center(&self) -> LogValue {
        self.center
    }

    pub fn apply(&self, x: f64) -> f64 {
        ((LogValue::from_f64(x) - self.center) * LogValue::from_log(self.ln_scale)).to_f64()
    }
}

fn log_of_size(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("tree size must be at least 2, got {n}")));
    }
    Ok((n as f64).ln())
}

/// `√(2k-1) (k-1)! (x - (log n)^k / k!) / (log n)^{k-1/2}`.
pub fn normalize_fixed_k(x: f64, n: u64, k: u64) -> Result<f64> {
    Ok(LevelNormalizer::fixed_k(log_of_size(n)?, k)?.apply(x))
}

/// Componentwise `(j-1)! (x_j - (log n)^j / j!) / (log n)^{j-1/2}`.
pub fn normalize_multivariate(xs: &[f64], n: u64, ks: &[u64]) -> Result<Vec<f64>> {
    if xs.len() != ks.len() {
        return Err(Error::invalid("values and levels differ in length"));
    }
    let log_n = log_of_size(n)?;
    xs.iter()
        .zip(ks)
        .map(|(&x, &j)| Ok(LevelNormalizer::multivariate(log_n, j)?.apply(x)))
        .collect()
}

/// `[k_n]^{1/2} ([k_n u]-1)! (x - (log n)^{[k_n u]} / [k_n u]!) / (log n)^{[k_n u]-1/2}`.
pub fn normalize_intermediate(x: f64, n: u64, k_n: f64, u: f64) -> Result<f64> {
    Ok(LevelNormalizer::intermediate(log_of_size(n)?, k_n, u)?.apply(x))
}

/// Limiting covariance `1/(i+j-1)` of the multivariate statistic.
pub fn multivariate_target_cov(i: u64, j: u64) -> f64 {
    1.0 / (i + j - 1) as f64
}

/// Limiting covariance `1/(u+v)` of the intermediate-level statistic.
pub fn intermediate_target_cov(u: f64, v: f64) -> f64 {
    1.0 / (u + v)
}

fn check_renewal_args(path: &RenewalPath, t: f64, m: u64, mu: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    if !(mu > 0.0) {
        return Err(Error::invalid("mu must be positive"));
    }
    if path.horizon() < t {
        return Err(Error::invalid(format!(
            "renewal path ends at {} before t = {t}",
            path.horizon()
        )));
    }
    Ok(())
}

/// `Σ_j ((t - S_j)/t)^{m-1} 1{S_j <= t} - t/(m μ)`.
fn bracket(path: &RenewalPath, t: f64, m: u64, mu: f64) -> f64 {
    let p = (m - 1) as i32;
    let sum: f64 = path.arrivals()[..path.count_until(t)]
        .iter()
        .map(|&s| ((t - s) / t).powi(p))
        .sum();
    sum - t / (m as f64 * mu)
}

/// `Z = Σ_j (t - S_j)^{m-1} 1{S_j <= t} / ((m-1)! μ^{m-1}) - t^m / (m! μ^m)`.
pub fn z_statistic_raw(path: &RenewalPath, t: f64, m: u64, mu: f64) -> Result<LogValue> {
    check_renewal_args(path, t, m, mu)?;
    let ln_prefix = (m - 1) as f64 * (t / mu).ln() - ln_factorial(m - 1);
    Ok(LogValue::from_f64(bracket(path, t, m, mu)) * LogValue::from_log(ln_prefix))
}

/// `[k]^{1/2} (m-1)! Z / √(σ² μ^{-2m-1} t^{2m-1})`, which simplifies to
/// `√[k] μ^{3/2} / (σ √t) · (Σ_j ((t - S_j)/t)^{m-1} - t/(m μ))`.
pub fn z_statistic(path: &RenewalPath, t: f64, m: u64, mu: f64, sigma2: f64, k: f64) -> Result<f64> {
    check_renewal_args(path, t, m, mu)?;
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("sigma2 must be positive"));
    }
    let whole = k.floor();
    if whole < 1.0 {
        return Err(Error::invalid(format!("[k] = [{k}] is zero")));
    }
    let factor = whole.sqrt() * mu.powf(1.5) / (sigma2 * t).sqrt();
    Ok(factor * bracket(path, t, m, mu))
}

/// Provenance of a normalized sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleMeta {
    pub n: u64,
    pub level: f64,
    pub u_grid: Vec<f64>,
    pub theorem: String,
}

/// One normalized statistic per replicate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizedSample {
    values: Vec<f64>,
    meta: SampleMeta,
}

impl NormalizedSample {
    pub fn new(values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "replicate {i} of {} is not finite",
                meta.theorem
            )));
        }
        Ok(NormalizedSample { values, meta })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    pub fn replicates(&self) -> usize {
        self.values.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive};

    #[test]
    fn centred_values_map_to_zero() {
        let n = 1_000_000u64;
        let l = (n as f64).ln();
        for k in 1..=6u64 {
            let c = LevelNormalizer::fixed_k(l, k).unwrap().center().to_f64();
            assert!(normalize_fixed_k(c, n, k).unwrap().abs() < 1e-9);
            assert!(normalize_intermediate(c, n, k as f64, 1.0).unwrap().abs() < 1e-9);
        }
        let cs: Vec<f64> = (1..=3)
            .map(|j| LevelNormalizer::multivariate(l, j).unwrap().center().to_f64())
            .collect();
        assert!(normalize_multivariate(&cs, n, &[1, 2, 3])
            .unwrap()
            .iter()
            .all(|z| z.abs() < 1e-9));
    }

    #[test]
    fn fixed_k_arithmetic_example() {
        let z = LevelNormalizer::fixed_k(10.0, 2).unwrap().apply(60.0);
        assert_relative_eq!(z, 3f64.sqrt() * 10.0 / 10f64.powf(1.5), max_relative = 1e-13);
        assert!((z - 0.5477).abs() < 1e-4);
    }

    #[test]
    fn fixed_k_matches_exact_rational_evaluation() {
        // L = 40, k = 50: the rational part (k-1)! (x - L^k/k!) / L^{k-1}
        // is exact; only √((2k-1)/L) is applied in floating point.
        let k = 50u64;
        let l = BigInt::from(40);
        let fact = |n: u64| (1..=n).fold(BigInt::one(), |a, i| a * BigInt::from(i));
        let pow = |p: u64| (0..p).fold(BigInt::one(), |a, _| a * &l);
        let center = BigRational::new(pow(k), fact(k));
        for offset in [-3.0e15, -1.0e15, 2.5e15, 7.0e15] {
            let x = (center.to_f64().unwrap() + offset).round();
            let xr = BigRational::from_integer(BigInt::from(x as i64));
            let exact = BigRational::from_integer(fact(k - 1)) * (xr - &center) / BigRational::from_integer(pow(k - 1));
            let expected = exact.to_f64().unwrap() * ((2 * k - 1) as f64 / 40.0).sqrt();
            let got = LevelNormalizer::fixed_k(40.0, k).unwrap().apply(x);
            assert!(((got - expected) / expected).abs() <= 1e-10, "{got} vs {expected}");
        }
    }

    #[test]
    fn intermediate_relates_to_fixed_k() {
        let n = 50_000u64;
        for k in 1..=5u64 {
            for x in [3.0, 40.0, 700.0] {
                let fixed = normalize_fixed_k(x, n, k).unwrap();
                let inter = normalize_intermediate(x, n, k as f64, 1.0).unwrap();
                assert_relative_eq!(
                    inter,
                    fixed * (k as f64).sqrt() / ((2 * k - 1) as f64).sqrt(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn floors_follow_the_definition() {
        // k_n = 2.7, u = 1.5: [k_n u] = 4, [k_n] = 2
        let got = LevelNormalizer::intermediate(9.0, 2.7, 1.5).unwrap();
        assert_eq!(got.level(), 4);
        let by_hand = 2f64.sqrt() * 6.0 * (100.0 - 9f64.powi(4) / 24.0) / 9f64.powf(3.5);
        assert_relative_eq!(got.apply(100.0), by_hand, max_relative = 1e-13);
        assert!(normalize_intermediate(5.0, 100, 0.9, 1.0).is_err());
        assert!(normalize_intermediate(5.0, 100, 2.0, 0.2).is_err());
    }

    #[test]
    fn rejects_tiny_trees() {
        assert!(normalize_fixed_k(1.0, 1, 1).is_err());
        assert!(normalize_multivariate(&[1.0], 0, &[1]).is_err());
        assert!(normalize_multivariate(&[1.0, 2.0], 10, &[1]).is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(multivariate_target_cov(1, 2), 0.5);
        assert_relative_eq!(multivariate_target_cov(2, 2), 1.0 / 3.0);
        assert_eq!(intermediate_target_cov(1.0, 1.0), 0.5);
    }

    #[test]
    fn strictly_increasing_in_x() {
        let norm = LevelNormalizer::fixed_k(12.0, 3).unwrap();
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 3.0).collect();
        assert!(xs.windows(2).all(|w| norm.apply(w[1]) > norm.apply(w[0])));
    }

    #[test]
    fn renewal_statistic_edge_cases() {
        let empty = RenewalPath::new(5.0, vec![]).unwrap();
        // no arrivals: Z = -t^m / (m! μ^m)
        let z = z_statistic_raw(&empty, 5.0, 3, 2.0).unwrap().to_f64();
        assert_relative_eq!(z, -(125.0 / 6.0) / 8.0, max_relative = 1e-13);
        let path = RenewalPath::new(10.0, vec![1.0, 2.5, 4.0, 9.0]).unwrap();
        // m = 1: Z = N(t) - t/μ
        assert_relative_eq!(
            z_statistic_raw(&path, 6.0, 1, 1.5).unwrap().to_f64(),
            3.0 - 4.0,
            max_relative = 1e-13
        );
        assert!(z_statistic(&path, 11.0, 2, 1.0, 1.0, 3.0).is_err());
        assert!(z_statistic(&path, 6.0, 0, 1.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn renewal_statistic_normalization() {
        // Direct evaluation of the printed normalization for small m.
        let path = RenewalPath::new(10.0, vec![1.0, 2.5, 4.0, 9.0]).unwrap();
        let (t, m, mu, s2, k) = (8.0, 3u64, 1.5, 0.7, 4.6);
        let z = z_statistic_raw(&path, t, m, mu).unwrap().to_f64();
        let direct = 4f64.sqrt() * 2.0 * z / (s2 * mu.powi(-(2 * m as i32) - 1) * t.powi(2 * m as i32 - 1)).sqrt();
        assert_relative_eq!(
            z_statistic(&path, t, m, mu, s2, k).unwrap(),
            direct,
            max_relative = 1e-12
        );
    }

    #[test]
    fn normalized_sample_rejects_non_finite() {
        let meta = SampleMeta {
            n: 10,
            level: 2.0,
            u_grid: vec![1.0],
            theorem: "fixed-k".into(),
        };
        assert!(NormalizedSample::new(vec![1.0, f64::INFINITY], meta.clone()).is_err());
        assert_eq!(NormalizedSample::new(vec![1.0, 2.0], meta).unwrap().replicates(), 2);
    }
}
