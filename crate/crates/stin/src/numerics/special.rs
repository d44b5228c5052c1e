//! Small exact combinatorial helpers, gamma-family re-exports, and a signed
//! log-domain scalar for sums spanning extreme magnitudes.

pub use statrs::function::gamma::{gamma as gamma_fn, ln_gamma};

/// Rising factorial (a)_k = a (a+1) … (a+k-1), with (a)_0 = 1.
///
/// Exact in f64 for the small integer arguments used here (|a| ≤ 20, k ≤ 20).
/// Overflow, were it ever reached, surfaces as ±inf.
pub fn pochhammer(a: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    for j in 0..k {
        acc *= a + j as f64;
    }
    acc
}

/// k! as f64; exact through k = 22.
pub fn factorial(k: u32) -> f64 {
    let mut acc = 1.0;
    for j in 2..=k {
        acc *= j as f64;
    }
    acc
}

/// ln(k!), stable for any k.
pub fn ln_factorial(k: u32) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// Binomial coefficient C(n, k) as f64, by the multiplicative rule.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

// ---- Signed log-domain scalar ---------------------------------------------

/// A real number stored as (sign, ln|x|).
///
/// Needed where Laplace-derivative sums mix factors like s^18 (~1e288) with
/// 18th-order derivatives (~1e-190): the products are tame but neither factor
/// is representable alongside the other in plain f64 arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSigned {
    /// -1.0, 0.0, or +1.0.
    pub sign: f64,
    /// ln|x|; -inf when sign == 0.
    pub ln_abs: f64,
}

impl LogSigned {
    pub const ZERO: LogSigned = LogSigned {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub const ONE: LogSigned = LogSigned {
        sign: 1.0,
        ln_abs: 0.0,
    };

    pub fn from_value(x: f64) -> LogSigned {
        if x == 0.0 {
            LogSigned::ZERO
        } else {
            LogSigned {
                sign: x.signum(),
                ln_abs: x.abs().ln(),
            }
        }
    }

    /// Construct from sign and natural log magnitude.
    pub fn new(sign: f64, ln_abs: f64) -> LogSigned {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            LogSigned::ZERO
        } else {
            LogSigned {
                sign: sign.signum(),
                ln_abs,
            }
        }
    }

    /// Back to f64; overflows to ±inf, underflows to 0.
    pub fn value(self) -> f64 {
        self.sign * self.ln_abs.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0.0
    }

    pub fn mul(self, other: LogSigned) -> LogSigned {
        if self.is_zero() || other.is_zero() {
            return LogSigned::ZERO;
        }
        LogSigned {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs + other.ln_abs,
        }
    }

    pub fn mul_value(self, x: f64) -> LogSigned {
        self.mul(LogSigned::from_value(x))
    }

    pub fn neg(self) -> LogSigned {
        LogSigned {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }

    pub fn add(self, other: LogSigned) -> LogSigned {
        LogSigned::sum([self, other].into_iter())
    }

    /// Sum with a single max-shift; same-signed terms accumulate stably, and
    /// opposite-signed cancellation loses no more than plain f64 subtraction.
    pub fn sum<I: Iterator<Item = LogSigned>>(terms: I) -> LogSigned {
        let terms: Vec<LogSigned> = terms.filter(|t| !t.is_zero()).collect();
        let Some(max) = terms
            .iter()
            .map(|t| t.ln_abs)
            .max_by(|a, b| a.total_cmp(b))
        else {
            return LogSigned::ZERO;
        };
        let mut acc = 0.0;
        for t in &terms {
            acc += t.sign * (t.ln_abs - max).exp();
        }
        if acc == 0.0 {
            return LogSigned::ZERO;
        }
        LogSigned {
            sign: acc.signum(),
            ln_abs: max + acc.abs().ln(),
        }
    }
}
