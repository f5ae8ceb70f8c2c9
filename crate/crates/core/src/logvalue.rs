//! Signed numbers carried as `(sign, ln |x|)`.
//!
//! Moment formulas involve `t^k / k!` for `k` in the hundreds, which leaves
//! the range of `f64` long before the ratio of two such quantities does.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

#[derive(Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue { sign: 1, log_abs: 0.0 };

    /// Positive value `exp(log_abs)`.
    pub fn from_log(log_abs: f64) -> Self {
        if log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign: 1, log_abs }
        }
    }

    pub fn new(sign: i8, log_abs: f64) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue {
                sign: sign.signum(),
                log_abs,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// `ln |x|`; `-inf` for zero.
    pub fn log_abs(self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_abs
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    pub fn abs(self) -> Self {
        LogValue {
            sign: self.sign.abs(),
            log_abs: self.log_abs,
        }
    }

    pub fn powf(self, p: f64) -> Self {
        assert!(self.sign >= 0, "fractional power of a negative LogValue");
        if self.sign == 0 {
            if p > 0.0 {
                Self::ZERO
            } else {
                Self::ONE
            }
        } else {
            Self::from_log(self.log_abs * p)
        }
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    /// `x / y - 1` computed without leaving log space; NaN when `y` is zero.
    pub fn relative_difference(self, other: LogValue) -> f64 {
        if other.sign == 0 {
            return if self.sign == 0 { 0.0 } else { f64::NAN };
        }
        ((self - other) / other).to_f64()
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "LogValue(0)"),
            s => write!(f, "LogValue({}exp({}))", if s < 0 { "-" } else { "" }, self.log_abs),
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue {
            sign: -self.sign,
            log_abs: self.log_abs,
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        LogValue {
            sign: self.sign * rhs.sign,
            log_abs: self.log_abs + rhs.log_abs,
        }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        assert!(rhs.sign != 0, "LogValue division by zero");
        if self.sign == 0 {
            return Self::ZERO;
        }
        LogValue {
            sign: self.sign * rhs.sign,
            log_abs: self.log_abs - rhs.log_abs,
        }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = match self.log_abs.partial_cmp(&rhs.log_abs) {
            Some(Ordering::Less) => (rhs, self),
            _ => (self, rhs),
        };
        let gap = small.log_abs - big.log_abs;
        if big.sign == small.sign {
            LogValue {
                sign: big.sign,
                log_abs: big.log_abs + gap.exp().ln_1p(),
            }
        } else if gap == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                sign: big.sign,
                log_abs: big.log_abs + ln_one_minus_exp(gap),
            }
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

impl std::iter::Sum for LogValue {
    fn sum<I: Iterator<Item = LogValue>>(iter: I) -> LogValue {
        iter.fold(LogValue::ZERO, |acc, v| acc + v)
    }
}

/// `ln(1 - e^x)` for `x < 0`.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln Σ e^{a_i}`, anchored at the largest term. Empty input gives `-inf`.
pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let s: f64 = logs.iter().map(|&a| (a - max).exp()).sum();
    max + s.ln()
}

const TABLE_LEN: usize = 4096;

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Neumaier-compensated running sum of ln i.
        let mut table = Vec::with_capacity(TABLE_LEN);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        table.push(0.0);
        for i in 1..TABLE_LEN {
            let term = (i as f64).ln();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            table.push(sum + comp);
        }
        table
    })
}

/// `ln n!` (log-gamma at integers).
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        factorial_table()[n as usize]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.fract() == 0.0 && x >= 1.0 && x < TABLE_LEN as f64 {
        ln_factorial(x as u64 - 1)
    } else {
        statrs::function::gamma::ln_gamma(x)
    }
}
