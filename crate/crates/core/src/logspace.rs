//! Log-domain arithmetic for constants that leave the `f64` range.
//!
//! The constant chains produced by the Harris pipeline nest several
//! geometric-trial arguments. Rates end up within `1e-10^k` of one and the
//! prefactors grow like the reciprocal of that distance, so every quantity
//! that can over- or underflow is carried by its logarithm:
//!
//! - [`LogReal`] stores a positive real `x` as `ln x`.
//! - [`Rate`] stores a growth rate `r > 1` as `ln(ln r)`, which keeps
//!   rates such as `1 + 1e-400` distinguishable from one.

use std::fmt;

use crate::error::{invalid, Result};

/// Below this magnitude the series expansions are used instead of
/// `exp_m1`/`ln_1p` round trips.
const SERIES_CUTOFF: f64 = 1e-5;
/// `e^-36` is below half an ulp of one.
const EXP_SATURATION: f64 = 36.0;

/// `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > EXP_SATURATION {
        x + (-x).exp()
    } else if x < -EXP_SATURATION {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(ln(1 + e^x))`, accurate for very negative `x`.
pub fn ln_softplus(x: f64) -> f64 {
    if x < -EXP_SATURATION {
        // ln(e^x - e^{2x}/2 + ...) = x + ln(1 - e^x/2 + ...)
        x + (-0.5 * x.exp()).ln_1p()
    } else {
        softplus(x).ln()
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^t - 1)` given `ln t`, for `t > 0`.
pub fn ln_expm1(ln_t: f64) -> f64 {
    if ln_t == f64::INFINITY {
        return f64::INFINITY;
    }
    let t = ln_t.exp();
    if t < SERIES_CUTOFF {
        ln_t + (0.5 * t + t * t / 6.0).ln_1p()
    } else if t > 700.0 {
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}

/// `ln(1 - e^{-w})` given `ln w`, for `w > 0`.
pub fn ln_one_minus_exp_neg(ln_w: f64) -> f64 {
    if ln_w == f64::INFINITY {
        return 0.0;
    }
    let w = ln_w.exp();
    if w < SERIES_CUTOFF {
        ln_w + (-0.5 * w + w * w / 6.0).ln_1p()
    } else if w > EXP_SATURATION {
        -(-w).exp()
    } else {
        (-(-w).exp_m1()).ln()
    }
}

/// `ln(-ln(1 - c))` given `ln c`, for `0 < c <= 1`. Returns `+inf` at `c = 1`.
pub fn ln_neg_ln1m(ln_c: f64) -> f64 {
    if ln_c >= 0.0 {
        return f64::INFINITY;
    }
    if ln_c < -EXP_SATURATION {
        let c = ln_c.exp();
        // -ln(1-c) = c (1 + c/2 + c^2/3 + ...)
        ln_c + (0.5 * c).ln_1p()
    } else {
        (-(-ln_c.exp()).ln_1p()).ln()
    }
}

/// A nonnegative real carried by its natural logarithm.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct LogReal(f64);

impl LogReal {
    pub const ZERO: LogReal = LogReal(f64::NEG_INFINITY);
    pub const ONE: LogReal = LogReal(0.0);

    pub fn from_ln(ln: f64) -> Self {
        LogReal(ln)
    }

    pub fn from_value(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(invalid(format!("log-domain value must be >= 0, got {x}")));
        }
        Ok(LogReal(x.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// The value as `f64`; overflows to `inf` and underflows to `0`.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// `1 + self`.
    pub fn one_plus(self) -> LogReal {
        LogReal(softplus(self.0))
    }

    pub fn max(self, other: LogReal) -> LogReal {
        if self.0 >= other.0 {
            self
        } else {
            other
        }
    }
}

// products and quotients are sums and differences of logarithms
#[allow(clippy::suspicious_arithmetic_impl)]
impl std::ops::Mul for LogReal {
    type Output = LogReal;
    fn mul(self, other: LogReal) -> LogReal {
        LogReal(self.0 + other.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl std::ops::Div for LogReal {
    type Output = LogReal;
    fn div(self, other: LogReal) -> LogReal {
        LogReal(self.0 - other.0)
    }
}

impl std::ops::Add for LogReal {
    type Output = LogReal;
    fn add(self, other: LogReal) -> LogReal {
        LogReal(log_add_exp(self.0, other.0))
    }
}

impl fmt::Debug for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({:e})", self.0)
    }
}

/// A growth rate `r > 1`, stored as `ln(ln r)`.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct Rate {
    ln_theta: f64,
}

impl Rate {
    pub fn from_value(r: f64) -> Result<Self> {
        if !(r > 1.0) || !r.is_finite() {
            return Err(invalid(format!("rate must be finite and > 1, got {r}")));
        }
        Ok(Rate { ln_theta: r.ln().ln() })
    }

    /// Rate with log-rate `theta = ln r`.
    pub fn from_log_rate(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(invalid(format!("log-rate must be finite and > 0, got {theta}")));
        }
        Ok(Rate { ln_theta: theta.ln() })
    }

    pub fn from_ln_log_rate(ln_theta: f64) -> Result<Self> {
        if !ln_theta.is_finite() {
            return Err(invalid(format!("ln log-rate must be finite, got {ln_theta}")));
        }
        Ok(Rate { ln_theta })
    }

    /// `ln(ln r)`.
    pub fn ln_log_rate(self) -> f64 {
        self.ln_theta
    }

    /// `ln r`.
    pub fn log_rate(self) -> f64 {
        self.ln_theta.exp()
    }

    /// `r` as `f64`; rounds to `1.0` when `r - 1` is below machine precision.
    pub fn value(self) -> f64 {
        self.log_rate().exp()
    }

    /// `r - 1`, carried in log form.
    pub fn excess(self) -> LogReal {
        LogReal(ln_expm1(self.ln_theta))
    }

    /// `1 / r` as `f64`.
    pub fn inverse(self) -> f64 {
        (-self.log_rate()).exp()
    }

    /// `1 - 1/r`, carried in log form.
    pub fn inverse_gap(self) -> LogReal {
        LogReal(ln_one_minus_exp_neg(self.ln_theta))
    }

    /// The rate whose log-rate is `fraction` times this one.
    pub fn scale(self, fraction: f64) -> Result<Rate> {
        if !(fraction > 0.0) || !fraction.is_finite() {
            return Err(invalid(format!("rate fraction must be > 0, got {fraction}")));
        }
        Ok(Rate {
            ln_theta: self.ln_theta + fraction.ln(),
        })
    }

    /// `r^n` in log form.
    pub fn pow(self, n: f64) -> LogReal {
        if n == 0.0 {
            return LogReal::ONE;
        }
        LogReal((self.ln_theta + n.ln()).exp())
    }

    pub fn min(self, other: Rate) -> Rate {
        if self.ln_theta <= other.ln_theta {
            self
        } else {
            other
        }
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rate(exp(exp({:e})))", self.ln_theta)
    }
}
