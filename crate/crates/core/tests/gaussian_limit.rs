use rrtlevels::limit_process::{covariance_t, stationary_covariance, GridSpec, KernelMatrix, PathwiseSampler};
use rrtlevels::rng::replicate_stream;
use rrtlevels::stat_verify::{empirical_cov, ks_one_sample, ks_two_sample, standard_normal_cdf, Estimate};

#[test]
fn kernel_marginal_is_normal_with_variance_half() {
    let kernel = KernelMatrix::new(GridSpec::new(vec![1.0]).unwrap());
    let xs: Vec<f64> = (0..20_000)
        .map(|r| kernel.sample(&mut replicate_stream(4, "kernel", 1, r)).unwrap()[0])
        .collect();
    let var = Estimate::variance(&xs).unwrap();
    assert!(var.z_against(0.5).abs() < 4.0, "{var:?}");
    let scaled: Vec<f64> = xs.iter().map(|x| x * 2f64.sqrt()).collect();
    assert!(ks_one_sample("limit", &scaled, standard_normal_cdf).unwrap().passed);
}

#[test]
fn kernel_covariance_on_a_grid() {
    let grid = vec![0.5, 1.0, 2.0, 4.0];
    let kernel = KernelMatrix::new(GridSpec::new(grid.clone()).unwrap());
    let rows: Vec<Vec<f64>> = (0..20_000)
        .map(|r| kernel.sample(&mut replicate_stream(8, "grid", 4, r)).unwrap())
        .collect();
    let est = empirical_cov(&rows).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let target = covariance_t(grid[i], grid[j]).unwrap();
            assert!(((est.cov(i, j) - target) / est.se(i, j)).abs() < 4.0, "({i},{j})");
        }
    }
}

#[test]
fn pathwise_sampler_agrees_with_kernel() {
    let grid = GridSpec::new(vec![1.0]).unwrap();
    let path = PathwiseSampler::new(grid.clone(), 1e-2, 1e-6).unwrap();
    let kernel = KernelMatrix::new(grid);
    let a: Vec<f64> = (0..3000)
        .map(|r| path.sample(&mut replicate_stream(1, "path", 0, r))[0])
        .collect();
    let b: Vec<f64> = (0..3000)
        .map(|r| kernel.sample(&mut replicate_stream(1, "kern", 0, r)).unwrap()[0])
        .collect();
    assert!(ks_two_sample("limit", &a, &b).unwrap().passed);
}

#[test]
fn stationary_transform_of_the_kernel() {
    let us: Vec<f64> = (0..20).map(|i| -2.0 + 0.2 * i as f64).collect();
    for &a in &us {
        for &b in &us {
            let lhs = (a + b).exp() * covariance_t((2.0 * a).exp(), (2.0 * b).exp()).unwrap();
            assert!((lhs - stationary_covariance(a - b)).abs() <= 1e-12);
        }
    }
}
