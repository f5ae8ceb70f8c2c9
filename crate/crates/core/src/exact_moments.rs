//! Closed-form moments of the CMJ process with unit-mean exponential
//! interarrivals, evaluated in log space.
//!
//! * `U_k(t) = E Y_k(t) = t^k / k!`
//! * `D_k(t) = Var Y_k(t) = Σ_{i<k} t^{k+i} (2i)! / ((i!)² (k+i)!)`
//! * the fluctuation part `∫_0^t D_{k-1}` of the variance, its leading
//!   asymptotic, and the auxiliary ratio `A(i, k)` with its Stirling bound.

use crate::logvalue::{ln_factorial, log_sum_exp, LogValue};
use crate::quadrature::adaptive_simpson;

fn ln_pow(t: f64, p: u64) -> f64 {
    if t == 0.0 {
        if p == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        p as f64 * t.ln()
    }
}

fn check_time(t: f64) {
    assert!(
        t >= 0.0 && t.is_finite(),
        "time must be finite and nonnegative, got {t}"
    );
}

/// `ln` of the `i`-th summand `t^{k+i} (2i)! / ((i!)² (k+i)!)`.
fn ln_variance_term(i: u64, k: u64, t: f64) -> f64 {
    ln_pow(t, k + i) + ln_factorial(2 * i) - 2.0 * ln_factorial(i) - ln_factorial(k + i)
}

fn variance_sum(k: u64, terms: u64, t: f64) -> LogValue {
    if t == 0.0 || terms == 0 {
        return LogValue::ZERO;
    }
    let logs: Vec<f64> = (0..terms).map(|i| ln_variance_term(i, k, t)).collect();
    LogValue::from_log(log_sum_exp(&logs))
}

/// Renewal function of generation `k`: `U_k(t) = t^k / k!`.
pub fn u_k(k: u64, t: f64) -> LogValue {
    assert!(k >= 1, "generation must be at least 1");
    check_time(t);
    LogValue::from_log(ln_pow(t, k) - ln_factorial(k))
}

/// `D_k(t) = Var Y_k(t)`.
pub fn d_k(k: u64, t: f64) -> LogValue {
    assert!(k >= 1, "generation must be at least 1");
    check_time(t);
    variance_sum(k, k, t)
}

/// `E(Σ_j (Y^{(j)}_{k-1}(t - S_j) - U_{k-1}(t - S_j)) 1{S_j <= t})² = ∫_0^t D_{k-1}`.
pub fn fluctuation_second_moment(k: u64, t: f64) -> LogValue {
    assert!(k >= 1, "generation must be at least 1");
    check_time(t);
    variance_sum(k, k - 1, t)
}

/// `(1/4) (t^{2k} / (k!)²) (k/t)²`.
pub fn leading_asymptotic(k: u64, t: f64) -> LogValue {
    assert!(k >= 2, "leading asymptotic needs k >= 2");
    assert!(t > 0.0 && t.is_finite(), "time must be positive, got {t}");
    LogValue::from_log(-(4.0f64.ln()) + ln_pow(t, 2 * k - 2) - 2.0 * ln_factorial(k) + 2.0 * (k as f64).ln())
}

/// The summand `i = k - 2` of the fluctuation moment,
/// `t^{2k-2} / ((k-2)!)² · (2k-4)! / (2k-2)!`.
pub fn top_fluctuation_term(k: u64, t: f64) -> LogValue {
    assert!(k >= 2, "needs k >= 2");
    check_time(t);
    LogValue::from_log(
        ln_pow(t, 2 * k - 2) - 2.0 * ln_factorial(k - 2) + ln_factorial(2 * k - 4) - ln_factorial(2 * k - 2),
    )
}

/// `A(i, k) = (k!)² (2i)! / ((i!)² (k+i)! k²)`.
///
/// The quantity is usually written with a time argument, but no `t`
/// survives in its definition.
pub fn a_term(i: u64, k: u64) -> LogValue {
    assert!(i >= 1 && i + 3 <= k, "A(i, k) needs 1 <= i <= k - 3 (i={i}, k={k})");
    LogValue::from_log(
        2.0 * ln_factorial(k) + ln_factorial(2 * i)
            - 2.0 * ln_factorial(i)
            - ln_factorial(k + i)
            - 2.0 * (k as f64).ln(),
    )
}

/// Right side `4^i k^{1/2} (k/e)^{k-i-2}` of the Stirling bound on `A(i, k)`.
pub fn stirling_bound(i: u64, k: u64) -> LogValue {
    assert!(i >= 1 && i + 3 <= k, "bound needs 1 <= i <= k - 3 (i={i}, k={k})");
    let kf = k as f64;
    LogValue::from_log(i as f64 * 4.0f64.ln() + 0.5 * kf.ln() + (k - i - 2) as f64 * (kf.ln() - 1.0))
}

/// `ln(bound) - ln(A(i,k) / (√2 e))`; nonnegative iff the bound holds.
pub fn stirling_margin(i: u64, k: u64) -> f64 {
    let lhs = a_term(i, k).log_abs() - 0.5 * 2.0f64.ln() - 1.0;
    stirling_bound(i, k).log_abs() - lhs
}

/// Second moment of the centred immigration part,
/// `2∫_0^t U_{k-1} U_k + ∫_0^t U_{k-1}² - U_k(t)²` with `U_0 = 1`, each
/// piece integrated in closed form.
pub fn immigration_second_moment(k: u64, t: f64) -> LogValue {
    assert!(k >= 1, "generation must be at least 1");
    check_time(t);
    if t == 0.0 {
        return LogValue::ZERO;
    }
    let two = LogValue::from_f64(2.0);
    let cross = LogValue::from_log(ln_pow(t, 2 * k) - ln_factorial(k - 1) - ln_factorial(k) - ((2 * k) as f64).ln());
    let square = LogValue::from_log(ln_pow(t, 2 * k - 1) - 2.0 * ln_factorial(k - 1) - ((2 * k - 1) as f64).ln());
    let u = u_k(k, t);
    two * cross + square - u * u
}

/// Relative residual of `D_k(t) = ∫_0^t D_{k-1} + immigration second moment`.
pub fn variance_decomposition_check(k: u64, t: f64) -> f64 {
    assert!(k >= 1, "generation must be at least 1");
    check_time(t);
    let total = d_k(k, t);
    if total.is_zero() {
        let rhs = fluctuation_second_moment(k, t) + immigration_second_moment(k, t);
        return if rhs.is_zero() { 0.0 } else { f64::INFINITY };
    }
    let rhs = fluctuation_second_moment(k, t) + immigration_second_moment(k, t);
    total.relative_difference(rhs)
}

/// Relative gap between `U_k(t)` and `∫_0^t U_{k-1}` by adaptive quadrature.
pub fn renewal_recursion_residual(k: u64, t: f64, rel_tol: f64) -> f64 {
    assert!(k >= 2, "needs k >= 2");
    check_time(t);
    let exact = u_k(k, t).to_f64();
    if exact == 0.0 {
        return 0.0;
    }
    let integral = adaptive_simpson(|y| u_k(k - 1, y).to_f64(), 0.0, t, rel_tol);
    (integral - exact) / exact
}

/// Relative gap between the closed-form fluctuation moment and `∫_0^t D_{k-1}`.
pub fn fluctuation_quadrature_residual(k: u64, t: f64, rel_tol: f64) -> f64 {
    let exact = fluctuation_second_moment(k, t).to_f64();
    if exact == 0.0 {
        return 0.0;
    }
    let integral = adaptive_simpson(|y| d_k(k - 1, y).to_f64(), 0.0, t, rel_tol);
    (integral - exact) / exact
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn fact(n: u64) -> BigInt {
        (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
    }

    fn rat_pow(t: &BigRational, p: u64) -> BigRational {
        (0..p).fold(BigRational::one(), |acc, _| acc * t)
    }

    /// Exact reference values by rational arithmetic.
    fn u_exact(k: u64, t: &BigRational) -> BigRational {
        rat_pow(t, k) / BigRational::from_integer(fact(k))
    }

    fn d_exact(k: u64, t: &BigRational, terms: u64) -> BigRational {
        (0..terms).fold(BigRational::zero(), |acc, i| {
            let num = rat_pow(t, k + i) * BigRational::from_integer(fact(2 * i));
            let den = BigRational::from_integer(fact(i) * fact(i) * fact(k + i));
            acc + num / den
        })
    }

    fn rational_times() -> Vec<BigRational> {
        [(1, 3), (1, 2), (1, 1), (7, 2), (10, 1), (123, 4), (100, 1)]
            .iter()
            .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
            .collect()
    }

    #[test]
    fn u_k_examples() {
        assert_relative_eq!(u_k(1, 5.0).to_f64(), 5.0, max_relative = 1e-15);
        assert_relative_eq!(u_k(2, 3.0).to_f64(), 4.5, max_relative = 1e-15);
        assert!(u_k(7, 0.0).is_zero());
    }

    #[test]
    fn u_k_matches_rationals() {
        for t in rational_times() {
            let tf = t.to_f64().unwrap();
            for k in 1..=20 {
                let exact = u_exact(k, &t).to_f64().unwrap();
                let got = u_k(k, tf).to_f64();
                assert!(((got - exact) / exact).abs() <= 1e-12, "k={k} t={tf}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn d_k_examples() {
        assert_relative_eq!(d_k(1, 2.0).to_f64(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(d_k(2, 1.0).to_f64(), 5.0 / 6.0, max_relative = 1e-14);
        assert!(d_k(3, 0.0).is_zero());
    }

    #[test]
    fn d_k_matches_rationals() {
        for t in rational_times() {
            let tf = t.to_f64().unwrap();
            for k in 1..=20 {
                let exact = d_exact(k, &t, k).to_f64().unwrap();
                let got = d_k(k, tf).to_f64();
                assert!(((got - exact) / exact).abs() <= 1e-12, "k={k} t={tf}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn d_k_large_generation_matches_rationals() {
        // Values overflow f64 here, so compare logarithms: ln x agreement
        // to 1e-12 absolute is 1e-12 relative in x.
        let t = BigRational::from_integer(BigInt::from(50));
        for k in [60u64, 120, 200] {
            let exact = d_exact(k, &t, k);
            let ln_exact = ln_big_rational(&exact);
            let got = d_k(k, 50.0).log_abs();
            assert!((got - ln_exact).abs() <= 1e-12, "k={k}: {got} vs {ln_exact}");
        }
    }

    fn ln_big_rational(x: &BigRational) -> f64 {
        let n = x.numer();
        let d = x.denom();
        let shift_n = n.bits().saturating_sub(60);
        let shift_d = d.bits().saturating_sub(60);
        let nf = (n >> shift_n).to_f64().unwrap();
        let df = (d >> shift_d).to_f64().unwrap();
        nf.ln() - df.ln() + (shift_n as f64 - shift_d as f64) * 2.0f64.ln()
    }

    #[test]
    fn fluctuation_examples() {
        assert_relative_eq!(fluctuation_second_moment(2, 2.0).to_f64(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(fluctuation_second_moment(3, 1.0).to_f64(), 0.25, max_relative = 1e-14);
        assert!(fluctuation_second_moment(5, 0.0).is_zero());
    }

    #[test]
    fn fluctuation_is_integral_of_lower_variance() {
        for k in [2u64, 3, 5, 10, 20] {
            for t in [0.5, 1.0, 4.0, 15.0] {
                let r = fluctuation_quadrature_residual(k, t, 1e-11);
                assert!(r.abs() <= 1e-8, "k={k} t={t}: {r}");
            }
        }
    }

    #[test]
    fn leading_asymptotic_examples() {
        assert_relative_eq!(leading_asymptotic(2, 10.0).to_f64(), 25.0, max_relative = 1e-14);
        let ratio = |t: f64| (fluctuation_second_moment(15, t) / leading_asymptotic(15, t)).to_f64();
        assert!((ratio(1e5) - 1.0).abs() < (ratio(1e3) - 1.0).abs());
    }

    #[test]
    fn top_term_approaches_leading_asymptotic() {
        let gap = |k: u64| {
            let t = (k * k) as f64;
            ((top_fluctuation_term(k, t) / leading_asymptotic(k, t)).to_f64() - 1.0).abs()
        };
        let gaps: Vec<f64> = [5u64, 10, 20, 40, 80].iter().map(|&k| gap(k)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[4] < 0.05);
    }

    #[test]
    fn a_term_examples() {
        assert_relative_eq!(a_term(1, 4).to_f64(), 0.6, max_relative = 1e-14);
        assert_relative_eq!(a_term(1, 5).to_f64(), 1.6, max_relative = 1e-14);
    }

    #[test]
    fn stirling_bound_holds() {
        for k in 4..=200u64 {
            for i in 1..=k - 3 {
                assert!(stirling_margin(i, k) >= 0.0, "i={i} k={k}");
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        assert!(variance_decomposition_check(2, 1.0).abs() <= 1e-14);
        assert!(variance_decomposition_check(3, 2.0).abs() <= 1e-12);
        assert_eq!(variance_decomposition_check(2, 0.0), 0.0);
        assert_relative_eq!(
            immigration_second_moment(2, 1.0).to_f64(),
            1.0 / 3.0,
            max_relative = 1e-13
        );
        // Generation 1 is a Poisson count: no fluctuation part, variance t.
        assert!(fluctuation_second_moment(1, 4.0).is_zero());
        assert_relative_eq!(immigration_second_moment(1, 4.0).to_f64(), 4.0, max_relative = 1e-13);
        assert!(variance_decomposition_check(1, 4.0).abs() <= 1e-14);
    }

    #[test]
    fn decomposition_holds_widely() {
        for k in 1..=100u64 {
            for t in [0.5, 1.0, 10.0, 100.0, 1000.0] {
                let r = variance_decomposition_check(k, t);
                assert!(r.abs() <= 1e-10, "k={k} t={t}: {r}");
            }
        }
    }

    #[test]
    fn renewal_recursion() {
        for k in 2..=30u64 {
            for t in [0.5, 3.0, 20.0] {
                let r = renewal_recursion_residual(k, t, 1e-11);
                assert!(r.abs() <= 1e-8, "k={k} t={t}: {r}");
            }
        }
    }

    #[test]
    fn monotone_in_time_and_ordered() {
        let grid: Vec<f64> = (0..60).map(|i| i as f64 * 0.75).collect();
        for k in [2u64, 3, 7, 25] {
            for w in grid.windows(2) {
                assert!(u_k(k, w[1]).to_f64() >= u_k(k, w[0]).to_f64());
                assert!(d_k(k, w[1]).log_abs() >= d_k(k, w[0]).log_abs());
                assert!(fluctuation_second_moment(k, w[1]).log_abs() >= fluctuation_second_moment(k, w[0]).log_abs());
            }
            for &t in &grid {
                assert!(d_k(k, t).log_abs() >= fluctuation_second_moment(k, t).log_abs());
            }
        }
    }
}
