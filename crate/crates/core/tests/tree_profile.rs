use proptest::prelude::*;
use rrtlevels::rng::replicate_stream;
use rrtlevels::tree_sim::{
    enumerate_exact_distribution, exact_mean_profile, generate_profile, ProfileGenerator, TreeConfig,
};

fn tv_distance(counts: &[u64], reps: u64, n: u64, k: usize) -> f64 {
    let exact = enumerate_exact_distribution(n, k).unwrap();
    let mut tv = 0.0;
    for (x, &c) in counts.iter().enumerate() {
        let p = exact
            .get(&(x as u64))
            .map_or(0.0, |r| *r.numer() as f64 / *r.denom() as f64);
        tv += (c as f64 / reps as f64 - p).abs();
    }
    for (&x, r) in &exact {
        if x as usize >= counts.len() {
            tv += *r.numer() as f64 / *r.denom() as f64;
        }
    }
    0.5 * tv
}

#[test]
fn empirical_pmf_matches_enumeration() {
    let reps = 200_000u64;
    for n in 1..=7u64 {
        let cfg = TreeConfig::new(n, 11);
        let mut gen = ProfileGenerator::new();
        let mut hist = vec![vec![0u64; n as usize + 1]; n as usize + 1];
        for r in 0..reps {
            let p = gen.generate(&cfg, &mut cfg.stream(r)).unwrap();
            for (k, row) in hist.iter_mut().enumerate().skip(1) {
                row[p.count(k) as usize] += 1;
            }
        }
        for (k, row) in hist.iter().enumerate().skip(1) {
            let tv = tv_distance(row, reps, n, k);
            assert!(tv < 0.01, "n={n} k={k} tv={tv}");
        }
    }
}

#[test]
fn mean_profile_within_four_standard_errors() {
    let n = 1000u64;
    let reps = 4000u64;
    let exact = exact_mean_profile(n, 6).unwrap();
    let cfg = TreeConfig::new(n, 5);
    let mut gen = ProfileGenerator::new();
    let mut sum = [0.0f64; 7];
    let mut sq = [0.0f64; 7];
    for r in 0..reps {
        let p = gen.generate(&cfg, &mut replicate_stream(5, "mean", n, r)).unwrap();
        for k in 1..=6 {
            let x = p.count(k) as f64;
            sum[k] += x;
            sq[k] += x * x;
        }
    }
    for k in 1..=6 {
        let m = sum[k] / reps as f64;
        let var = (sq[k] - reps as f64 * m * m) / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!(((m - exact[k - 1]) / se).abs() < 4.0, "k={k}: {m} vs {}", exact[k - 1]);
    }
}

/// Exact `E X_n(j) X_n(k)` for `j, k <= k_max` by recursion over the
/// attachment steps; level 0 is the root.
fn exact_second_moments(n: u64, k_max: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = k_max + 1;
    let mut mean = vec![0.0; d];
    mean[0] = 1.0;
    let mut second = vec![vec![0.0; d]; d];
    second[0][0] = 1.0;
    for step in 0..n {
        let size = (step + 1) as f64;
        let mut next = second.clone();
        for j in 0..d {
            for k in 0..d {
                let mut add = 0.0;
                if k >= 1 {
                    add += second[j][k - 1];
                }
                if j >= 1 {
                    add += second[k][j - 1];
                }
                if j == k && k >= 1 {
                    add += mean[k - 1];
                }
                next[j][k] += add / size;
            }
        }
        for k in (1..d).rev() {
            mean[k] += mean[k - 1] / size;
        }
        second = next;
    }
    (mean, second)
}

#[test]
fn variance_matches_exact_second_moments() {
    let n = 3000u64;
    let (mean, second) = exact_second_moments(n, 6);
    for (k, m) in exact_mean_profile(n, 6).unwrap().iter().enumerate() {
        assert!((m - mean[k + 1]).abs() <= 1e-10 * m, "k={}", k + 1);
    }
    let cfg = TreeConfig::new(n, 17).with_level_cap(6);
    let mut gen = ProfileGenerator::new();
    let samples: Vec<_> = (0..20_000)
        .map(|r| gen.generate(&cfg, &mut cfg.stream(r)).unwrap())
        .collect();
    for k in 1..=6usize {
        let xs: Vec<f64> = samples.iter().map(|p| p.count(k) as f64).collect();
        let var = rrtlevels::stat_verify::Estimate::variance(&xs).unwrap();
        let exact = second[k][k] - mean[k] * mean[k];
        assert!(var.z_against(exact).abs() < 4.0, "k={k}: {var:?} vs {exact}");
    }
}

#[test]
fn level_cap_keeps_the_total() {
    let cfg = TreeConfig::new(5000, 3).with_level_cap(4);
    let p = generate_profile(&cfg, &mut cfg.stream(0)).unwrap();
    assert!(p.is_truncated());
    assert_eq!(p.counts().iter().sum::<u64>() + p.tail(), 5000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_invariants(n in 0u64..3000, seed in any::<u64>(), rep in 0u64..1000) {
        let cfg = TreeConfig::new(n, seed);
        let p = generate_profile(&cfg, &mut cfg.stream(rep)).unwrap();
        prop_assert_eq!(p.total(), n);
        prop_assert!(p.height() as u64 <= n);
        if n >= 1 {
            prop_assert!(p.count(1) >= 1);
        }
    }

    #[test]
    fn replicate_streams_are_reproducible(n in 1u64..500, seed in any::<u64>(), rep in any::<u64>()) {
        let cfg = TreeConfig::new(n, seed);
        let a = generate_profile(&cfg, &mut cfg.stream(rep)).unwrap();
        let b = generate_profile(&cfg, &mut cfg.stream(rep)).unwrap();
        prop_assert_eq!(a, b);
    }
}
