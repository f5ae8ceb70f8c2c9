//! The centred Gaussian process `T(u) = ∫_{[0,∞)} e^{-uy} dB(y)`, `u > 0`,
//! with covariance `1/(u+v)`.
//!
//! Two independent samplers: exact Gaussian vectors through the Cholesky
//! factor of the kernel matrix, and a discretized Brownian path pushed
//! through `u ∫_0^Y e^{-uy} B(y) dy + e^{-uY} B(Y)`.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Pivots below this fraction of their diagonal entry abort the factorization.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Default cap on pathwise grid points.
pub const DEFAULT_PATH_BUDGET: u64 = 50_000_000;

/// Strictly increasing positive evaluation points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    points: Vec<f64>,
}

impl GridSpec {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid needs at least one point"));
        }
        if let Some(bad) = points.iter().find(|&&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::invalid(format!(
                "grid points must be positive and finite, got {bad}"
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        Ok(GridSpec { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `E T(u) T(v) = 1/(u+v)`.
pub fn covariance_t(u: f64, v: f64) -> Result<f64> {
    if !(u > 0.0 && v > 0.0) {
        return Err(Error::invalid(format!("covariance needs u, v > 0, got ({u}, {v})")));
    }
    Ok(1.0 / (u + v))
}

/// Covariance `1/(2 cosh(lag))` of the stationary process `e^s T(e^{2s})`.
pub fn stationary_covariance(lag: f64) -> f64 {
    0.5 / lag.cosh()
}

/// `C[i][j] = 1/(u_i + u_j)` with a lazily computed Cholesky factor.
#[derive(Debug)]
pub struct KernelMatrix {
    grid: GridSpec,
    entries: Vec<f64>,
    factor: OnceLock<Result<Vec<f64>>>,
}

impl KernelMatrix {
    pub fn new(grid: GridSpec) -> Self {
        let u = grid.points();
        let m = u.len();
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                entries[i * m + j] = 1.0 / (u[i] + u[j]);
            }
        }
        KernelMatrix {
            grid,
            entries,
            factor: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    /// Row-major lower-triangular `L` with `L Lᵀ = C`.
    pub fn factor(&self) -> Result<&[f64]> {
        self.factor
            .get_or_init(|| self.cholesky())
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    fn cholesky(&self) -> Result<Vec<f64>> {
        let m = self.dim();
        let mut l = vec![0.0; m * m];
        for j in 0..m {
            let diag = self.entry(j, j);
            let pivot = diag - (0..j).map(|k| l[j * m + k] * l[j * m + k]).sum::<f64>();
            if !(pivot > PIVOT_TOLERANCE * diag) {
                return Err(self.conditioning_error(j, pivot / diag));
            }
            let d = pivot.sqrt();
            l[j * m + j] = d;
            for i in j + 1..m {
                let s = self.entry(i, j) - (0..j).map(|k| l[i * m + k] * l[j * m + k]).sum::<f64>();
                l[i * m + j] = s / d;
            }
        }
        Ok(l)
    }

    fn conditioning_error(&self, j: usize, pivot: f64) -> Error {
        let u = self.grid.points();
        let i = (0..u.len())
            .filter(|&i| i != j)
            .min_by(|&a, &b| (u[a] / u[j]).ln().abs().total_cmp(&(u[b] / u[j]).ln().abs()))
            .unwrap_or(j);
        let (i, j) = (i.min(j), i.max(j));
        Error::Conditioning {
            index: j,
            i,
            j,
            ui: u[i],
            uj: u[j],
            pivot,
        }
    }

    /// `max |L Lᵀ - C| / max |C|`.
    pub fn reconstruction_error(&self) -> Result<f64> {
        let l = self.factor()?;
        let m = self.dim();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..m {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| l[i * m + k] * l[j * m + k]).sum();
                worst = worst.max((s - self.entry(i, j)).abs());
                scale = scale.max(self.entry(i, j).abs());
            }
        }
        Ok(worst / scale)
    }

    /// Pivots `L_jj²` of the factorization.
    pub fn pivots(&self) -> Result<Vec<f64>> {
        let l = self.factor()?;
        let m = self.dim();
        Ok((0..m).map(|j| l[j * m + j] * l[j * m + j]).collect())
    }

    /// One draw of `(T(u_1), …, T(u_m))`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let l = self.factor()?;
        let m = self.dim();
        let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        Ok((0..m).map(|i| (0..=i).map(|k| l[i * m + k] * z[k]).sum()).collect())
    }
}

/// Exact Gaussian draw of `T` on `grid`.
pub fn sample_t_kernel<R: Rng + ?Sized>(grid: &GridSpec, rng: &mut R) -> Result<Vec<f64>> {
    KernelMatrix::new(grid.clone()).sample(rng)
}

/// Discretized sampler: Brownian motion on `{0, h, …, Nh = Y}`.
///
/// `T(u) ≈ u ∫_0^Y e^{-uy} B(y) dy + e^{-uY} B(Y)` with the integral by the
/// trapezoidal rule, which equals `∫_0^Y e^{-uy} dB(y)` before
/// discretization. `Y` makes the neglected tail variance
/// `e^{-2uY}/(2u)` at most `tail_tol` at the smallest `u`. The covariance
/// carries a discretization bias of order `h²` (never worse than `O(h)`),
/// available exactly from [`exact_covariance`](Self::exact_covariance).
#[derive(Clone, Debug)]
pub struct PathwiseSampler {
    grid: GridSpec,
    step: f64,
    steps: usize,
    /// `coef[l * m + a]`: weight of the `l`-th Brownian increment in `T(u_a)`.
    coef: Vec<f64>,
}

impl PathwiseSampler {
    pub fn new(grid: GridSpec, step: f64, tail_tol: f64) -> Result<Self> {
        Self::with_budget(grid, step, tail_tol, DEFAULT_PATH_BUDGET)
    }

    pub fn with_budget(grid: GridSpec, step: f64, tail_tol: f64, budget: u64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {step}")));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::invalid(format!(
                "tail tolerance must be positive, got {tail_tol}"
            )));
        }
        let u_min = grid.points()[0];
        let horizon = ((1.0 / (2.0 * u_min * tail_tol)).ln() / (2.0 * u_min)).max(step);
        Self::with_horizon_budget(grid, step, horizon, budget)
    }

    /// Explicit truncation point `Y` instead of a tail tolerance.
    pub fn with_horizon(grid: GridSpec, step: f64, horizon: f64) -> Result<Self> {
        Self::with_horizon_budget(grid, step, horizon, DEFAULT_PATH_BUDGET)
    }

    fn with_horizon_budget(grid: GridSpec, step: f64, horizon: f64, budget: u64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("step and horizon must be positive and finite"));
        }
        let steps = (horizon / step).ceil();
        if steps > budget as f64 {
            return Err(Error::Budget {
                what: format!("pathwise grid to Y={horizon} with h={step}"),
                required: steps as u64,
                budget,
            });
        }
        let steps = steps as usize;
        let m = grid.len();
        let y_end = steps as f64 * step;
        let mut coef = vec![0.0; steps * m];
        let sqrt_h = step.sqrt();
        for (a, &u) in grid.points().iter().enumerate() {
            // trapezoid weights on B(y_i), i = 1..=steps, plus the boundary term
            // at Y; coefficient of increment l is the tail sum of weights i >= l.
            let mut tail = (-u * y_end).exp() * (1.0 + 0.5 * u * step);
            for l in (1..=steps).rev() {
                coef[(l - 1) * m + a] = tail * sqrt_h;
                if l > 1 {
                    tail += u * step * (-u * (l - 1) as f64 * step).exp();
                }
            }
        }
        Ok(PathwiseSampler {
            grid,
            step,
            steps,
            coef,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Truncation point `Y`.
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Evaluates `T` on the grid from standard normal increments
    /// `z_l = (B(lh) - B((l-1)h)) / √h` supplied in order.
    pub fn sample_with<F: FnMut() -> f64>(&self, mut next_normal: F) -> Vec<f64> {
        let m = self.grid.len();
        let mut out = vec![0.0; m];
        for row in self.coef.chunks_exact(m) {
            let z = next_normal();
            for (o, c) in out.iter_mut().zip(row) {
                *o += c * z;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with(|| rng.sample(StandardNormal))
    }

    /// Exact covariance matrix (row-major) of the discretized estimator.
    pub fn exact_covariance(&self) -> Vec<f64> {
        let m = self.grid.len();
        let mut cov = vec![0.0; m * m];
        for row in self.coef.chunks_exact(m) {
            for a in 0..m {
                for b in 0..m {
                    cov[a * m + b] += row[a] * row[b];
                }
            }
        }
        cov
    }
}

/// Pathwise draw of `T` on `grid`.
pub fn sample_t_pathwise<R: Rng + ?Sized>(grid: &GridSpec, step: f64, tail_tol: f64, rng: &mut R) -> Result<Vec<f64>> {
    Ok(PathwiseSampler::new(grid.clone(), step, tail_tol)?.sample(rng))
}
