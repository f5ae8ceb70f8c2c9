use proptest::prelude::*;
use rrtlevels::cmj_sim::{simulate_cmj, simulate_cmj_until_n_births, CmjSimulator, InterarrivalSpec};
use rrtlevels::exact_moments::{d_k, u_k};
use rrtlevels::rng::replicate_stream;
use rrtlevels::stat_verify::{ks_two_sample, Estimate};
use rrtlevels::tree_sim::{ProfileGenerator, TreeConfig};

#[test]
fn generation_sizes_have_exponential_case_moments() {
    let reps = 20_000u64;
    let spec = InterarrivalSpec::UNIT_EXPONENTIAL;
    for (k, t) in [(2usize, 3.0), (3, 4.0)] {
        let mut sim = CmjSimulator::new(spec).unwrap();
        let ys: Vec<f64> = (0..reps)
            .map(|r| {
                sim.at_time(t, k, &mut replicate_stream(9, "cmj", k as u64, r))
                    .unwrap()
                    .count(k) as f64
            })
            .collect();
        let mean = Estimate::mean(&ys).unwrap();
        let var = Estimate::variance(&ys).unwrap();
        assert!(
            mean.z_against(u_k(k as u64, t).to_f64()).abs() < 4.0,
            "k={k} mean {mean:?}"
        );
        assert!(
            var.z_against(d_k(k as u64, t).to_f64()).abs() < 4.0,
            "k={k} var {var:?}"
        );
    }
}

#[test]
fn non_exponential_mean_matches_single_generation_renewal_count() {
    // Generation 1 is the renewal process itself, so E Y_1(t) = E N(t).
    let spec = InterarrivalSpec::Deterministic { c: 0.75 };
    let g = simulate_cmj(&spec, 3.0, 2, &mut replicate_stream(1, "det", 0, 0)).unwrap();
    assert_eq!(g.count(1), 4);
    // Generation 2: child born at 0.75j has children at 0.75j + 0.75i <= 3.
    assert_eq!(g.count(2), 3 + 2 + 1);
}

#[test]
fn embedding_matches_tree_profile() {
    let reps = 3000u64;
    for (n, k) in [(100u64, 2usize), (400, 3)] {
        let cfg = TreeConfig::new(n, 21);
        let mut gen = ProfileGenerator::new();
        let tree: Vec<f64> = (0..reps)
            .map(|r| gen.generate(&cfg, &mut cfg.stream(r)).unwrap().count(k) as f64)
            .collect();
        let mut sim = CmjSimulator::new(InterarrivalSpec::UNIT_EXPONENTIAL).unwrap();
        let cmj: Vec<f64> = (0..reps)
            .map(|r| {
                let (_, g) = sim
                    .until_n_births(n, k, &mut replicate_stream(22, "emb", n, r))
                    .unwrap();
                g.count(k) as f64
            })
            .collect();
        let report = ks_two_sample("embedding", &tree, &cmj).unwrap();
        assert!(report.passed, "n={n} k={k}: {report:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn births_are_chronological_and_complete(n in 1u64..400, seed in any::<u64>()) {
        let mut sim = CmjSimulator::new(InterarrivalSpec::Gamma { shape: 2.0, scale: 0.5 })
            .unwrap()
            .recording_birth_times(true);
        let (tau, g) = sim.until_n_births(n, 3, &mut replicate_stream(seed, "p", n, 0)).unwrap();
        let times = g.birth_times().unwrap();
        prop_assert_eq!(times.len() as u64, n);
        prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*times.last().unwrap(), tau);
        prop_assert_eq!(g.total(), n);
    }

    #[test]
    fn exponential_runs_reproduce(n in 1u64..300, seed in any::<u64>()) {
        let spec = InterarrivalSpec::UNIT_EXPONENTIAL;
        let a = simulate_cmj_until_n_births(&spec, n, 4, &mut replicate_stream(seed, "r", n, 1)).unwrap();
        let b = simulate_cmj_until_n_births(&spec, n, 4, &mut replicate_stream(seed, "r", n, 1)).unwrap();
        prop_assert_eq!(a.0, b.0);
        prop_assert_eq!(a.1.counts(), b.1.counts());
    }
}
