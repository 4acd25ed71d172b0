use std::cmp::Ordering;
use std::fmt;

use rug::float::Special;
use rug::{Assign, Float};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// A signed real number stored as `sign * exp(log_abs)`.
///
/// Multiplication adds logarithms and same-sign addition is a log-sum-exp,
/// so neither can overflow. For a zero value `log_abs` is `-inf`.
#[derive(Clone, Debug)]
pub struct LogMagnitude {
    sign: Sign,
    log_abs: Float,
}

impl LogMagnitude {
    pub fn zero(prec: u32) -> Self {
        LogMagnitude {
            sign: Sign::Zero,
            log_abs: Float::with_val(prec, Special::NegInfinity),
        }
    }

    pub fn one(prec: u32) -> Self {
        LogMagnitude::from_log(Float::new(prec))
    }

    /// The positive number `exp(log_abs)`.
    pub fn from_log(log_abs: Float) -> Self {
        debug_assert!(!log_abs.is_nan());
        if log_abs.is_infinite() && log_abs.is_sign_negative() {
            return LogMagnitude::zero(log_abs.prec());
        }
        LogMagnitude {
            sign: Sign::Positive,
            log_abs,
        }
    }

    pub fn from_signed_log(sign: Sign, log_abs: Float) -> Self {
        match sign {
            Sign::Zero => LogMagnitude::zero(log_abs.prec()),
            s => {
                let mut v = LogMagnitude::from_log(log_abs);
                if v.sign != Sign::Zero {
                    v.sign = s;
                }
                v
            }
        }
    }

    pub fn from_float(x: &Float) -> Self {
        let prec = x.prec();
        if x.is_zero() {
            return LogMagnitude::zero(prec);
        }
        let sign = if x.is_sign_negative() {
            Sign::Negative
        } else {
            Sign::Positive
        };
        let log_abs = Float::with_val(prec, x.abs_ref()).ln();
        LogMagnitude { sign, log_abs }
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        LogMagnitude::from_float(&Float::with_val(prec, x))
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    pub fn prec(&self) -> u32 {
        self.log_abs.prec()
    }

    /// Natural log of the absolute value; `-inf` for zero.
    pub fn log_abs(&self) -> &Float {
        &self.log_abs
    }

    pub fn log_abs_f64(&self) -> f64 {
        self.log_abs.to_f64()
    }

    pub fn to_float(&self) -> Float {
        let prec = self.prec();
        match self.sign {
            Sign::Zero => Float::new(prec),
            Sign::Positive => Float::with_val(prec, self.log_abs.exp_ref()),
            Sign::Negative => -Float::with_val(prec, self.log_abs.exp_ref()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.to_float().to_f64()
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        LogMagnitude {
            sign: self.sign,
            log_abs: Float::with_val(prec, &self.log_abs),
        }
    }

    pub fn neg(&self) -> Self {
        LogMagnitude {
            sign: self.sign.flip(),
            log_abs: self.log_abs.clone(),
        }
    }

    pub fn abs(&self) -> Self {
        let mut v = self.clone();
        if v.sign == Sign::Negative {
            v.sign = Sign::Positive;
        }
        v
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec().max(other.prec());
        let sign = self.sign.times(other.sign);
        if sign == Sign::Zero {
            return LogMagnitude::zero(prec);
        }
        LogMagnitude {
            sign,
            log_abs: Float::with_val(prec, &self.log_abs + &other.log_abs),
        }
    }

    /// Division; panics on a zero divisor.
    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division of LogMagnitude by zero");
        let prec = self.prec().max(other.prec());
        let sign = self.sign.times(other.sign);
        if sign == Sign::Zero {
            return LogMagnitude::zero(prec);
        }
        LogMagnitude {
            sign,
            log_abs: Float::with_val(prec, &self.log_abs - &other.log_abs),
        }
    }

    pub fn powi(&self, k: u64) -> Self {
        let prec = self.prec();
        if k == 0 {
            return LogMagnitude::one(prec);
        }
        let sign = match self.sign {
            Sign::Negative if k % 2 == 1 => Sign::Negative,
            Sign::Zero => return LogMagnitude::zero(prec),
            _ => Sign::Positive,
        };
        LogMagnitude {
            sign,
            log_abs: Float::with_val(prec, &self.log_abs * k),
        }
    }

    /// Real power of a positive value.
    pub fn powf(&self, exponent: &Float) -> Self {
        assert!(self.is_positive(), "powf needs a positive base");
        let prec = self.prec().max(exponent.prec());
        LogMagnitude::from_log(Float::with_val(prec, &self.log_abs * exponent))
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec().max(other.prec());
        if self.is_zero() {
            return other.with_prec(prec);
        }
        if other.is_zero() {
            return self.with_prec(prec);
        }
        let (big, small) = if self.log_abs >= other.log_abs {
            (self, other)
        } else {
            (other, self)
        };
        // gap <= 0
        let gap = Float::with_val(prec, &small.log_abs - &big.log_abs);
        if big.sign == small.sign {
            let corr = gap.exp().ln_1p();
            return LogMagnitude {
                sign: big.sign,
                log_abs: Float::with_val(prec, &big.log_abs + &corr),
            };
        }
        if gap.is_zero() {
            return LogMagnitude::zero(prec);
        }
        // ln(1 - e^gap) = ln(-expm1(gap))
        let corr = (-gap.exp_m1()).ln();
        LogMagnitude {
            sign: big.sign,
            log_abs: Float::with_val(prec, &big.log_abs + &corr),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Sum of nonnegative values, anchored at the largest term.
    pub fn sum_positive<'a, I>(terms: I, prec: u32) -> Self
    where
        I: IntoIterator<Item = &'a LogMagnitude>,
    {
        let logs: Vec<Float> = terms
            .into_iter()
            .filter(|t| {
                assert!(t.sign != Sign::Negative, "sum_positive given a negative term");
                !t.is_zero()
            })
            .map(|t| t.log_abs.clone())
            .collect();
        match log_sum_exp(&logs, prec) {
            Some(l) => LogMagnitude::from_log(l),
            None => LogMagnitude::zero(prec),
        }
    }

    /// `|self / other - 1|` for two values of the same sign.
    pub fn relative_difference(&self, other: &Self) -> Float {
        let prec = self.prec().max(other.prec());
        match (self.sign, other.sign) {
            (Sign::Zero, Sign::Zero) => Float::new(prec),
            (a, b) if a == b => {
                Float::with_val(prec, &self.log_abs - &other.log_abs).exp_m1().abs()
            }
            _ => Float::with_val(prec, Special::Infinity),
        }
    }

    /// `self / other` as a plain number.
    pub fn ratio(&self, other: &Self) -> Float {
        self.div(other).to_float()
    }
}

impl PartialEq for LogMagnitude {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for LogMagnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let rank = |s: Sign| match s {
            Sign::Negative => 0,
            Sign::Zero => 1,
            Sign::Positive => 2,
        };
        match rank(self.sign).cmp(&rank(other.sign)) {
            Ordering::Equal => match self.sign {
                Sign::Zero => Some(Ordering::Equal),
                Sign::Positive => self.log_abs.partial_cmp(&other.log_abs),
                Sign::Negative => other.log_abs.partial_cmp(&self.log_abs),
            },
            ord => Some(ord),
        }
    }
}

impl fmt::Display for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Positive => write!(f, "exp({:.20e})", self.log_abs),
            Sign::Negative => write!(f, "-exp({:.20e})", self.log_abs),
        }
    }
}

/// `ln(sum exp(t_i))` over the given logs, or `None` for an empty slice.
///
/// The sum is anchored at the largest term; terms more than
/// `(prec + 64) ln 2` below it cannot change the rounded result and are
/// skipped. The remaining terms are accumulated in input order.
pub fn log_sum_exp(logs: &[Float], prec: u32) -> Option<Float> {
    let max = logs
        .iter()
        .filter(|t| !t.is_nan())
        .fold(None::<&Float>, |m, t| match m {
            Some(m) if m >= t => Some(m),
            _ => Some(t),
        })?;
    if max.is_infinite() {
        return Some(Float::with_val(prec, max));
    }
    let cutoff = -((prec as f64 + 64.0) * std::f64::consts::LN_2);
    let mut acc = Float::new(prec);
    let mut gap = Float::new(prec);
    for t in logs {
        gap.assign(t - max);
        if gap.to_f64() < cutoff {
            continue;
        }
        gap.exp_mut();
        acc += &gap;
    }
    let mut out = acc.ln();
    out += max;
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rug::ops::Pow;

    const P: u32 = 256;

    fn lm(x: f64) -> LogMagnitude {
        LogMagnitude::from_f64(x, P)
    }

    #[test]
    fn zero_and_one() {
        assert!(LogMagnitude::zero(P).is_zero());
        assert_eq!(LogMagnitude::one(P).to_f64(), 1.0);
        assert_eq!(lm(0.0).sign(), Sign::Zero);
    }

    #[test]
    fn signed_arithmetic() {
        let a = lm(3.0);
        let b = lm(-5.0);
        assert!((a.add(&b).to_f64() + 2.0).abs() < 1e-15);
        assert!((a.sub(&b).to_f64() - 8.0).abs() < 1e-15);
        assert!((a.mul(&b).to_f64() + 15.0).abs() < 1e-13);
        assert!((b.div(&a).to_f64() + 5.0 / 3.0).abs() < 1e-15);
        assert!(a.sub(&a).is_zero());
        assert!((b.powi(3).to_f64() + 125.0).abs() < 1e-12);
        assert!(b < a);
        assert!(LogMagnitude::zero(P) < a);
    }

    #[test]
    fn huge_values_do_not_overflow() {
        // (10^6)! has about 5.5 million decimal digits
        let big = LogMagnitude::from_log(Float::with_val(P, 1.3e7));
        let sum = big.add(&big);
        let expected = Float::with_val(P, 1.3e7) + Float::with_val(P, 2).ln();
        assert!((sum.log_abs().clone() - expected).abs() < 1e-60);
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let logs: Vec<Float> = (1..=10).map(|k| Float::with_val(P, k).ln()).collect();
        let s = log_sum_exp(&logs, P).unwrap();
        assert!((s.exp().to_f64() - 55.0).abs() < 1e-12);
        assert!(log_sum_exp(&[], P).is_none());
    }

    proptest! {
        #[test]
        fn add_then_subtract_within_sixteen_bits(a in -5.0f64..5.0, d in -5.0f64..5.0) {
            let x = LogMagnitude::from_log(Float::with_val(P, a));
            let y = LogMagnitude::from_log(Float::with_val(P, a + d));
            let back = x.add(&y).sub(&y);
            let tol = Float::with_val(P, 2).pow(16 - P as i32);
            prop_assert!(back.relative_difference(&x) <= tol);
        }

        #[test]
        fn add_then_subtract_round_trips(a in -300.0f64..300.0, d in -300.0f64..140.0) {
            // beyond a gap of about p ln 2 the smaller value is absorbed entirely
            let b = a + d;
            let x = LogMagnitude::from_log(Float::with_val(P, a));
            let y = LogMagnitude::from_log(Float::with_val(P, b));
            let back = x.add(&y).sub(&y);
            // cancellation amplifies the absolute log error by y/x, and that
            // error scales with the magnitude of the logs themselves
            let loss = (b - a).max(0.0) / std::f64::consts::LN_2;
            let scale = a.abs().max(b.abs()).max(1.0).log2();
            let tol = Float::with_val(P, 2).pow(8.0 + loss + scale - P as f64);
            prop_assert!(back.relative_difference(&x) <= tol);
        }

        #[test]
        fn float_round_trip(x in -1e300f64..1e300) {
            prop_assume!(x != 0.0);
            let v = Float::with_val(P, x);
            let back = LogMagnitude::from_float(&v).to_float();
            prop_assert!(crate::numerics::relative_difference(&back, &v) < 1e-70);
        }
    }
}
