//! Natural-log-domain magnitudes.
//!
//! Every magnitude the library handles (coefficients, terms, the maximum term,
//! the maximum modulus, bound expressions) is carried as its natural logarithm.
//! Negative infinity encodes zero.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

/// Log of a nonnegative magnitude. `-inf` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMagnitude(f64);

impl LogMagnitude {
    pub const ZERO: LogMagnitude = LogMagnitude(f64::NEG_INFINITY);
    pub const ONE: LogMagnitude = LogMagnitude(0.0);

    /// Wraps an already-logarithmic value. NaN is rejected with a panic since it
    /// would break the total order.
    pub fn from_log(value: f64) -> Self {
        assert!(!value.is_nan(), "LogMagnitude cannot hold NaN");
        LogMagnitude(value)
    }

    /// Log of a nonnegative linear value.
    pub fn from_value(x: f64) -> Self {
        assert!(x >= 0.0, "LogMagnitude::from_value expects x >= 0, got {x}");
        LogMagnitude(x.ln())
    }

    pub fn log(self) -> f64 {
        self.0
    }

    /// The encoded magnitude. Overflows to `inf` when the log exceeds ~709.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Sum of a finite list of magnitudes.
    pub fn sum<I: IntoIterator<Item = LogMagnitude>>(items: I) -> LogMagnitude {
        let logs: Vec<f64> = items.into_iter().map(|m| m.0).collect();
        LogMagnitude(log_sum_exp(&logs))
    }
}

impl Eq for LogMagnitude {}

impl Ord for LogMagnitude {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for LogMagnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Product of magnitudes.
impl Mul for LogMagnitude {
    type Output = LogMagnitude;

    fn mul(self, other: LogMagnitude) -> LogMagnitude {
        if self.is_zero() || other.is_zero() {
            LogMagnitude::ZERO
        } else {
            LogMagnitude(self.0 + other.0)
        }
    }
}

/// Sum of magnitudes.
impl Add for LogMagnitude {
    type Output = LogMagnitude;

    fn add(self, other: LogMagnitude) -> LogMagnitude {
        LogMagnitude(log_add_exp(self.0, other.0))
    }
}

impl fmt::Display for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.0)
    }
}

/// `log(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum exp(x_i))` with compensated accumulation in slice order.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_infinite() {
        return m;
    }
    let mut acc = Neumaier::default();
    for &x in xs {
        acc.add((x - m).exp());
    }
    m + acc.total().ln()
}

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_is_neutral_for_add() {
        let a = LogMagnitude::from_log(2.5);
        assert_eq!(a + LogMagnitude::ZERO, a);
        assert_eq!(LogMagnitude::ZERO + LogMagnitude::ZERO, LogMagnitude::ZERO);
        assert!((a * LogMagnitude::ZERO).is_zero());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = Neumaier::default();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-17);
        }
        assert!((acc.total() - (1.0 + 1e-14)).abs() < 1e-28 + 1e-16 * 1e-14);
    }

    proptest! {
        #[test]
        fn ordering_matches_magnitudes(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let la = LogMagnitude::from_log(a);
            let lb = LogMagnitude::from_log(b);
            prop_assert_eq!(la.cmp(&lb), a.exp().partial_cmp(&b.exp()).unwrap());
        }

        #[test]
        fn log_sum_is_bracketed(xs in proptest::collection::vec(-700.0f64..700.0, 1..40)) {
            let s = log_sum_exp(&xs);
            let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s >= m);
            prop_assert!(s <= m + (xs.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn log_add_exp_symmetric(a in -100.0f64..100.0, b in -100.0f64..100.0) {
            prop_assert_eq!(log_add_exp(a, b), log_add_exp(b, a));
            let direct = (a.exp() + b.exp()).ln();
            prop_assert!((log_add_exp(a, b) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }
}
