use statrs::function::erf::erfc;

use crate::error::{Error, Result};

use super::report::TestReport;

/// Smallest sample accepted by the KS tests.
pub const KS_MIN_SAMPLES: usize = 50;

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // small-λ (theta function) form of the CDF
        let pi2 = std::f64::consts::PI.powi(2);
        let x = -pi2 / (8.0 * lambda * lambda);
        let s: f64 = (1..=8).map(|j| ((2 * j - 1) as f64).powi(2) * x).map(f64::exp).sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
            s += if j % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

fn sorted_finite(values: &[f64], what: &str) -> Result<Vec<f64>> {
    if values.len() < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: KS_MIN_SAMPLES,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!("{what} contains non-finite values")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn effective_lambda(n_eff: f64, d: f64) -> f64 {
    let sq = n_eff.sqrt();
    (sq + 0.12 + 0.11 / sq) * d
}

/// One-sample KS test of `values` against the continuous CDF `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(suite: &str, values: &[f64], cdf: F) -> Result<TestReport> {
    let v = sorted_finite(values, "sample")?;
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0f64, f64::max);
    let p = kolmogorov_survival(effective_lambda(n, d));
    Ok(TestReport::p_value(
        suite,
        "ks one-sample",
        d,
        p,
        super::KS_P_THRESHOLD,
        vec![v.len()],
    ))
}

/// Two-sample KS test. Ties are handled by comparing the empirical CDFs
/// only after every copy of a value has been absorbed.
pub fn ks_two_sample(suite: &str, a: &[f64], b: &[f64]) -> Result<TestReport> {
    let a = sorted_finite(a, "first sample")?;
    let b = sorted_finite(b, "second sample")?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    let p = kolmogorov_survival(effective_lambda(n_eff, d));
    Ok(TestReport::p_value(
        suite,
        "ks two-sample",
        d,
        p,
        super::KS_P_THRESHOLD,
        vec![a.len(), b.len()],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_reference_values() {
        // P(K > λ) from scipy.special.kolmogorov.
        for (lambda, p) in [
            (0.5, 0.963_945_244),
            (1.0, 0.269_999_672),
            (1.36, 0.049_485_877),
            (2.0, 0.000_670_925),
        ] {
            assert!((kolmogorov_survival(lambda) - p).abs() < 1e-8, "{lambda}");
        }
        // The two series agree where they meet.
        let pi2 = std::f64::consts::PI.powi(2);
        let theta: f64 = 1.0
            - (2.0 * std::f64::consts::PI).sqrt() / 1.18
                * (1..=8)
                    .map(|j| (-((2 * j - 1) as f64).powi(2) * pi2 / (8.0 * 1.18 * 1.18)).exp())
                    .sum::<f64>();
        assert!((kolmogorov_survival(1.18) - theta).abs() < 1e-10);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn normal_cdf() {
        assert!((standard_normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((standard_normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-10);
    }

    #[test]
    fn constant_sample_fails() {
        let r = ks_one_sample("t", &[0.3; 200], standard_normal_cdf).unwrap();
        assert!(r.statistic > 0.6);
        assert!(r.p_value.unwrap() < 1e-10);
        assert!(!r.passed);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            ks_one_sample("t", &[0.0; 10], standard_normal_cdf),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(ks_two_sample("t", &[0.0; 10], &[0.0; 100]).is_err());
        assert!(ks_one_sample("t", &[f64::NAN; 60], standard_normal_cdf).is_err());
    }

    #[test]
    fn identical_and_disjoint_two_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let same = ks_two_sample("t", &a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, Some(1.0));
        let b: Vec<f64> = a.iter().map(|x| x + 1000.0).collect();
        let apart = ks_two_sample("t", &a, &b).unwrap();
        assert_eq!(apart.statistic, 1.0);
        assert!(!apart.passed);
    }

    #[test]
    fn ties_are_absorbed_before_comparing() {
        // Same discrete law, reordered: distance must be exactly zero.
        let a: Vec<f64> = (0..300).map(|i| (i % 3) as f64).collect();
        let mut b = a.clone();
        b.reverse();
        assert_eq!(ks_two_sample("t", &a, &b).unwrap().statistic, 0.0);
    }

    #[test]
    fn self_test_false_alarm_rate() {
        let seeds = 200;
        let mut fails = 0;
        for seed in 0..seeds {
            let mut r = rng::stream(seed, 11);
            let v: Vec<f64> = (0..10_000).map(|_| r.sample(StandardNormal)).collect();
            if !ks_one_sample("t", &v, standard_normal_cdf).unwrap().passed {
                fails += 1;
            }
        }
        assert!(fails as f64 <= 0.01 * seeds as f64, "{fails} false alarms");
    }

    #[test]
    fn two_sample_self_test_false_alarm_rate() {
        let seeds = 100;
        let mut fails = 0;
        for seed in 0..seeds {
            let mut r = rng::stream(seed, 12);
            let a: Vec<f64> = (0..10_000).map(|_| r.sample(StandardNormal)).collect();
            let b: Vec<f64> = (0..10_000).map(|_| r.sample(StandardNormal)).collect();
            if !ks_two_sample("t", &a, &b).unwrap().passed {
                fails += 1;
            }
        }
        assert!(fails as f64 <= 0.01 * seeds as f64, "{fails} false alarms");
    }

    #[test]
    fn detects_a_shift() {
        let mut r = rng::stream(1, 13);
        let v: Vec<f64> = (0..5_000).map(|_| r.sample::<f64, _>(StandardNormal) + 0.2).collect();
        assert!(!ks_one_sample("t", &v, standard_normal_cdf).unwrap().passed);
    }
}
