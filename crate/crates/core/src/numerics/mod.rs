//! Overflow-safe scalar arithmetic and exact combinatorial tables.
//!
//! `BigReal` and `BigComplex` are MPFR-backed values with a per-value
//! precision in bits. Every MPFR operation is correctly rounded, so a single
//! operation at precision `p` carries relative error at most `2^(1-p)`.
//! Quantities such as `n!`, `C^n` or `ln^n(n+e)` are carried as
//! [`LogMagnitude`] so that products and sums of astronomically large or
//! small terms never leave the representable range.

mod combinatorics;
mod log_magnitude;

pub use combinatorics::{
    binomial_row, log_binomial, log_factorial, stirling_row, touchard, touchard_logs_f64,
    touchard_recurrence, TouchardSequence, LogTables, StirlingTable, STIRLING_TABLE_CAP,
};
pub use log_magnitude::{log_sum_exp, LogMagnitude, Sign};

use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};

/// Arbitrary-precision real number.
pub type BigReal = Float;
/// Arbitrary-precision complex number.
pub type BigComplex = rug::Complex;

pub const DEFAULT_PRECISION: u32 = 256;
pub const MIN_PRECISION: u32 = 64;

pub fn check_precision(bits: u32) -> Result<u32> {
    if bits < MIN_PRECISION {
        return Err(Error::Precondition(format!(
            "precision must be at least {MIN_PRECISION} bits, got {bits}"
        )));
    }
    Ok(bits)
}

/// Euler's number at the requested precision.
pub fn euler(prec: u32) -> Float {
    Float::with_val(prec, 1).exp()
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// `ln(x + e)` for a nonnegative integer `x`; equals 1 at `x = 0`.
pub fn ln_shift_e(x: u64, prec: u32) -> Float {
    let mut v = euler(prec);
    v += x;
    v.ln()
}

/// Parses a decimal string (e.g. `"1.05"`, `"-3"`, `"2.5e-3"`) without going
/// through binary floating point.
pub fn parse_decimal(s: &str, prec: u32) -> Result<Float> {
    let parsed = Float::parse(s.trim())
        .map_err(|e| Error::Domain(format!("cannot parse decimal {s:?}: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_difference(a: &Float, b: &Float) -> Float {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    let scale = Float::with_val(prec, a.abs_ref()).max(&Float::with_val(prec, b.abs_ref()));
    if scale.is_zero() {
        return Float::new(prec);
    }
    diff / scale
}
