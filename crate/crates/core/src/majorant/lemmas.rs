//! Numerical checks of the monotonicity, asymptotic and auxiliary lemmas
//! behind the bootstrap estimate.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use super::ln_split_weight;
use crate::error::{Error, Result};
use crate::numerics::LogTables;
use crate::report::{fmt_sig, CheckRow, LemmaCheckReport};

/// Index ranges `(increasing, decreasing)` checked for a given `n`. Each range
/// lists the `j` for which `a_j` is compared with `a_{j+1}`.
fn monotonicity_ranges(n: u64) -> (std::ops::RangeInclusive<i64>, std::ops::RangeInclusive<i64>) {
    let ln_n = (n as f64).ln();
    let inc_lo = (n / 2) as i64 + 1;
    let inc_hi = (n as f64 - ln_n - 2.0).floor() as i64;
    let dec_lo = (n as f64 - ln_n + 1.0).ceil() as i64;
    let dec_hi = n as i64 - 1;
    (inc_lo..=inc_hi, dec_lo..=dec_hi)
}

/// Checks `a_j <= a_{j+1}` on `n/2 < j <= n - ln n - 2` and `a_j >= a_{j+1}` on
/// `n - ln n + 1 <= j <= n - 1`. Each row carries the ratio in the wrong
/// direction, so a row passes when its ratio is at most one.
pub fn check_monotonicity(n: u64, prec: u32) -> Result<LemmaCheckReport> {
    let tables = LogTables::new(n as usize, prec);
    check_monotonicity_with(&tables, n)
}

pub fn check_monotonicity_with(tables: &LogTables, n: u64) -> Result<LemmaCheckReport> {
    if n < 3 {
        return Err(Error::Domain(format!("monotonicity check needs n >= 3, got {n}")));
    }
    if tables.nmax() < n as usize {
        return Err(Error::Index(format!("tables stop at {}, need {n}", tables.nmax())));
    }
    let (inc, dec) = monotonicity_ranges(n);
    let mut report = LemmaCheckReport::new("monotonicity", tables.prec());
    report.n_grid = vec![n];
    report
        .notes
        .push("j = n/2 for even n is excluded from the increasing range".into());
    let nu = n as usize;
    let mut push = |j: i64, ln_ratio: Float| {
        let ratio = ln_ratio.exp();
        let pass = ratio <= 1;
        report.push(CheckRow { n, j_or_s: Some(j), abscissa: None, ratio, pass });
    };
    for j in inc {
        let a = ln_split_weight(tables, nu, j as usize);
        let b = ln_split_weight(tables, nu, j as usize + 1);
        push(j, a - b);
    }
    for j in dec {
        let a = ln_split_weight(tables, nu, j as usize);
        let b = ln_split_weight(tables, nu, j as usize + 1);
        push(j, b - a);
    }
    report.canonicalize();
    Ok(report)
}

/// Smallest `n` in `[start, stop]` whose monotonicity check has no violations.
pub fn monotonicity_threshold(start: u64, stop: u64, prec: u32) -> Result<Option<u64>> {
    let start = start.max(3);
    let tables = LogTables::new(stop as usize, prec);
    for n in start..=stop {
        if check_monotonicity_with(&tables, n)?.passed() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

fn require_log_range(n: u64) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("asymptotic checks need n >= 3, got {n}")));
    }
    Ok(())
}

/// `ln a_j` for arbitrary `(n, j)` without tables.
fn ln_weight(n: u64, j: u64, prec: u32) -> Float {
    let mut v = crate::numerics::ln_shift_e(j, prec).ln() * j;
    v += crate::numerics::log_factorial(n - j, prec).log_abs();
    -v
}

/// `(n + 1/2) ln ln n`, the shared `(ln n)^{-n-1/2}` factor in log form.
fn ln_log_power(n: u64, prec: u32) -> Float {
    let lnln = Float::with_val(prec, n).ln().ln();
    lnln * (Float::with_val(prec, n) + 0.5f64)
}

/// `a_j / [n (ln n)^{-n-1/2} e^{-3 s^2 / (2 ln n)}]` at `j = n - round(ln n) + s`.
pub fn check_aj_gaussian(n: u64, s: i64, prec: u32) -> Result<Float> {
    require_log_range(n)?;
    let ln_n = Float::with_val(prec, n).ln();
    let bound = 2.0 * ln_n.to_f64().powf(2.0 / 3.0);
    if (s as f64).abs() > bound {
        return Err(Error::Domain(format!(
            "|s| = {} exceeds 2 (ln n)^(2/3) = {bound:.3}",
            s.abs()
        )));
    }
    let j = n as i64 - ln_n.to_f64().round() as i64 + s;
    if j < 0 || j > n as i64 {
        return Err(Error::Range(format!("j = {j} outside [0, {n}]")));
    }
    let mut log = ln_weight(n, j as u64, prec);
    log -= &ln_n;
    log += ln_log_power(n, prec);
    log += Float::with_val(prec, 1.5f64 * (s * s) as f64) / &ln_n;
    Ok(log.exp())
}

/// `a_j / [n^{-L ln(L/e)} (ln n)^{-n-1/2}]` at `j = n - round(L ln n)`.
pub fn check_aj_supergaussian(n: u64, l: &Float) -> Result<Float> {
    let prec = l.prec();
    if *l <= 1 {
        return Err(Error::Precondition(format!("L must exceed 1, got {l}")));
    }
    require_log_range(n)?;
    let ln_n = Float::with_val(prec, n).ln();
    let shift = Float::with_val(prec, l * &ln_n).round().to_f64();
    let j = n as f64 - shift;
    if j < 0.0 {
        return Err(Error::Range(format!("j = n - round(L ln n) = {j} is negative")));
    }
    let mut log = ln_weight(n, j as u64, prec);
    // n^{L ln(L/e)} = exp(L (ln L - 1) ln n)
    let mut exponent = Float::with_val(prec, l.ln_ref());
    exponent -= 1u32;
    exponent *= l;
    log += exponent * &ln_n;
    log += ln_log_power(n, prec);
    Ok(log.exp())
}

/// Choice of the offset `s` in the Gaussian regime, as a function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaussianOffset {
    Zero,
    /// `+floor((ln n)^{2/3})`
    Plus,
    /// `-floor((ln n)^{2/3})`
    Minus,
}

impl GaussianOffset {
    pub fn at(self, n: u64) -> i64 {
        let w = (n as f64).ln().powf(2.0 / 3.0).floor() as i64;
        match self {
            GaussianOffset::Zero => 0,
            GaussianOffset::Plus => w,
            GaussianOffset::Minus => -w,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GaussianOffset::Zero => "s0",
            GaussianOffset::Plus => "splus",
            GaussianOffset::Minus => "sminus",
        }
    }
}

fn ratio_row(n: u64, s: Option<i64>, ratio: Float) -> CheckRow {
    let pass = ratio.is_finite() && ratio > 0;
    CheckRow { n, j_or_s: s, abscissa: None, ratio, pass }
}

/// Gaussian-regime ratios over `grid`. `worst_ratio` is the largest ratio;
/// `ratio_range` gives the spread used for boundedness.
pub fn gaussian_sweep(grid: &[u64], offset: GaussianOffset, prec: u32) -> Result<LemmaCheckReport> {
    let rows: Vec<Result<CheckRow>> = grid
        .par_iter()
        .map(|&n| {
            let s = offset.at(n);
            Ok(ratio_row(n, Some(s), check_aj_gaussian(n, s, prec)?))
        })
        .collect();
    let mut report = LemmaCheckReport::new(format!("aj_gaussian_{}", offset.label()), prec);
    report.n_grid = grid.to_vec();
    for row in rows {
        report.push(row?);
    }
    report.canonicalize();
    Ok(report)
}

pub fn supergaussian_sweep(grid: &[u64], l: &Float) -> Result<LemmaCheckReport> {
    let rows: Vec<Result<CheckRow>> = grid
        .par_iter()
        .map(|&n| Ok(ratio_row(n, None, check_aj_supergaussian(n, l)?)))
        .collect();
    let mut report =
        LemmaCheckReport::new("aj_supergaussian", l.prec()).with_param("L", fmt_sig(l));
    report.n_grid = grid.to_vec();
    for row in rows {
        report.push(row?);
    }
    report.canonicalize();
    Ok(report)
}

const SWEEP_CHUNK: u64 = 8192;

/// Computes `d_n = ln(n+1+e)/(n+1) (ln(n+1+e)/ln(n+e))^n` for `2 <= n <= nmax`.
///
/// Rows are kept at powers of two, at `nmax`, and wherever `d_n >= 6`;
/// `worst_ratio` is the maximum over every `n`. The parameter `max_from_10`
/// records the maximum over `n >= 10`.
pub fn check_dn(nmax: u64, prec: u32) -> Result<LemmaCheckReport> {
    if nmax < 2 {
        return Err(Error::Domain(format!("check_dn needs nmax >= 2, got {nmax}")));
    }
    let e = crate::numerics::euler(prec);
    let ln_six = Float::with_val(prec, 6).ln();
    let chunks: Vec<(u64, u64)> = (2..=nmax)
        .step_by(SWEEP_CHUNK as usize)
        .map(|lo| (lo, (lo + SWEEP_CHUNK - 1).min(nmax)))
        .collect();
    struct Chunk {
        rows: Vec<CheckRow>,
        max_log: Float,
        max_log_from_10: Float,
    }
    let parts: Vec<Chunk> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let neg_inf = Float::with_val(prec, rug::float::Special::NegInfinity);
            let mut out = Chunk { rows: Vec::new(), max_log: neg_inf.clone(), max_log_from_10: neg_inf };
            // lnln_cur = ln ln(n+e)
            let mut lnln_cur = Float::with_val(prec, &e + lo).ln().ln();
            for n in lo..=hi {
                let ln_next = Float::with_val(prec, &e + (n + 1)).ln();
                let lnln_next = Float::with_val(prec, ln_next.ln_ref());
                let mut log_d = Float::with_val(prec, &lnln_next - &lnln_cur) * n;
                log_d += &lnln_next;
                log_d -= Float::with_val(prec, n + 1).ln();
                if log_d > out.max_log {
                    out.max_log.clone_from(&log_d);
                }
                if n >= 10 && log_d > out.max_log_from_10 {
                    out.max_log_from_10.clone_from(&log_d);
                }
                let violation = log_d >= ln_six;
                if violation || n.is_power_of_two() || n == nmax {
                    out.rows.push(CheckRow {
                        n,
                        j_or_s: None,
                        abscissa: None,
                        ratio: log_d.exp(),
                        pass: !violation,
                    });
                }
                lnln_cur = lnln_next;
            }
            out
        })
        .collect();
    let mut report = LemmaCheckReport::new("dn", prec).with_param("nmax", nmax);
    let mut max_log = Float::with_val(prec, rug::float::Special::NegInfinity);
    let mut max_from_10 = max_log.clone();
    for part in parts {
        if part.max_log > max_log {
            max_log = part.max_log;
        }
        if part.max_log_from_10 > max_from_10 {
            max_from_10 = part.max_log_from_10;
        }
        for row in part.rows {
            report.n_grid.push(row.n);
            report.push(row);
        }
    }
    report.worst_ratio = max_log.exp();
    if nmax >= 10 {
        report.params.insert("max_from_10".into(), fmt_sig(&max_from_10.exp()));
    }
    report.canonicalize();
    Ok(report)
}

/// Summary of `(ln(n+10)/ln n)^n` over `2 <= n <= nmax`.
#[derive(Clone, Debug)]
pub struct LogShiftSummary {
    pub sup: Float,
    pub argmax: u64,
    pub at_nmax: Float,
    /// Whether the sequence is nonincreasing from `argmax` on.
    pub nonincreasing_after_max: bool,
}

/// `sup_{2 <= n <= nmax} (ln(n+10)/ln n)^n`
pub fn check_log_shift(nmax: u64, prec: u32) -> Result<Float> {
    Ok(log_shift_summary(nmax, prec)?.sup)
}

pub fn log_shift_summary(nmax: u64, prec: u32) -> Result<LogShiftSummary> {
    if nmax < 2 {
        return Err(Error::Domain(format!("log-shift check needs nmax >= 2, got {nmax}")));
    }
    let chunks: Vec<(u64, u64)> = (2..=nmax)
        .step_by(SWEEP_CHUNK as usize)
        .map(|lo| (lo, (lo + SWEEP_CHUNK - 1).min(nmax)))
        .collect();
    // per chunk: (max log, argmax, first log, last log, last n where the sequence rose)
    let parts: Vec<(Float, u64, Float, Float, Option<u64>)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut max = Float::with_val(prec, rug::float::Special::NegInfinity);
            let mut argmax = lo;
            let mut first = None;
            let mut prev: Option<Float> = None;
            let mut last_rise = None;
            for n in lo..=hi {
                let ratio = Float::with_val(prec, n + 10).ln() / Float::with_val(prec, n).ln();
                let log = ratio.ln() * n;
                if log > max {
                    max.clone_from(&log);
                    argmax = n;
                }
                if matches!(&prev, Some(p) if log > *p) {
                    last_rise = Some(n);
                }
                if first.is_none() {
                    first = Some(log.clone());
                }
                prev = Some(log);
            }
            (max, argmax, first.unwrap(), prev.unwrap(), last_rise)
        })
        .collect();
    let mut sup = Float::with_val(prec, rug::float::Special::NegInfinity);
    let mut argmax = 2;
    let mut last_rise = None;
    let mut prev_last: Option<&Float> = None;
    for ((m, a, first, last, rise), &(lo, _)) in parts.iter().zip(&chunks) {
        if *m > sup {
            sup.clone_from(m);
            argmax = *a;
        }
        if matches!(prev_last, Some(p) if first > p) {
            last_rise = Some(lo);
        }
        if rise.is_some() {
            last_rise = *rise;
        }
        prev_last = Some(last);
    }
    let at_nmax = parts.last().unwrap().3.clone().exp();
    Ok(LogShiftSummary {
        sup: sup.exp(),
        argmax,
        at_nmax,
        nonincreasing_after_max: last_rise.is_none_or(|r| r <= argmax),
    })
}

/// The exact value of `(ln(n+10)/ln n)^n` at one `n`.
pub fn log_shift_term(n: u64, prec: u32) -> Float {
    let ratio = Float::with_val(prec, n + 10).ln() / Float::with_val(prec, n).ln();
    ratio.pow(n as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{euler, relative_difference};

    const P: u32 = 256;

    #[test]
    fn monotonicity_vacuous_at_three() {
        let r = check_monotonicity(3, P).unwrap();
        assert!(r.passed());
        assert!(r.rows.is_empty());
        assert!(check_monotonicity(2, P).is_err());
    }

    #[test]
    fn monotonicity_holds_at_ten_thousand() {
        let r = check_monotonicity(10_000, P).unwrap();
        assert!(r.passed());
        assert!(r.worst_ratio <= 1);
        assert!(r.rows.iter().all(|row| row.j_or_s.unwrap() > 5000));
    }

    #[test]
    fn monotonicity_ranges_use_conservative_rounding() {
        let (inc, dec) = monotonicity_ranges(100);
        // 100 - ln 100 - 2 = 93.39..., 100 - ln 100 + 1 = 96.39...
        assert_eq!((*inc.start(), *inc.end()), (51, 93));
        assert_eq!((*dec.start(), *dec.end()), (97, 99));
    }

    #[test]
    fn monotonicity_matches_direct_f64_comparison() {
        // f64 oracle for a_j on the increasing range at n = 1000
        let n = 1000u64;
        let ln_a = |j: u64| {
            let lf: f64 = (1..=(n - j)).map(|k| (k as f64).ln()).sum();
            -(lf + j as f64 * (j as f64 + std::f64::consts::E).ln().ln())
        };
        let r = check_monotonicity(n, P).unwrap();
        for row in &r.rows {
            let j = row.j_or_s.unwrap() as u64;
            let inc = j as f64 <= n as f64 - (n as f64).ln() - 2.0;
            let expected = if inc { ln_a(j) - ln_a(j + 1) } else { ln_a(j + 1) - ln_a(j) };
            assert!((row.ratio.to_f64().ln() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_ratios_are_finite_and_comparable() {
        let n = 10_000;
        let w = GaussianOffset::Plus.at(n);
        assert_eq!(w, ((n as f64).ln().powf(2.0 / 3.0)).floor() as i64);
        let r0 = check_aj_gaussian(n, 0, P).unwrap().to_f64();
        let rp = check_aj_gaussian(n, w, P).unwrap().to_f64();
        let rm = check_aj_gaussian(n, -w, P).unwrap().to_f64();
        for r in [r0, rp, rm] {
            assert!(r.is_finite() && r > 0.0);
            assert!(r / r0 < 100.0 && r0 / r < 100.0);
        }
        let r5 = check_aj_gaussian(100_000, 0, P).unwrap().to_f64();
        assert!(r5 <= 2.0 * r0);
    }

    #[test]
    fn gaussian_matches_f64_oracle() {
        let n = 2000u64;
        let s = 2i64;
        let nf = n as f64;
        let j = n as i64 - nf.ln().round() as i64 + s;
        let lf: f64 = (1..=(n as i64 - j)).map(|k| (k as f64).ln()).sum();
        let ln_a = -(lf + j as f64 * (j as f64 + std::f64::consts::E).ln().ln());
        let ln_ref = nf.ln() - (nf + 0.5) * nf.ln().ln() - 1.5 * (s * s) as f64 / nf.ln();
        let expected = (ln_a - ln_ref).exp();
        let got = check_aj_gaussian(n, s, P).unwrap().to_f64();
        assert!(((got - expected) / expected).abs() < 1e-9);
    }

    #[test]
    fn gaussian_rejects_large_offsets() {
        assert!(matches!(check_aj_gaussian(100, 20, P), Err(Error::Domain(_))));
    }

    #[test]
    fn supergaussian_values() {
        let l = Float::with_val(P, 3);
        let r4 = check_aj_supergaussian(10_000, &l).unwrap().to_f64();
        let r5 = check_aj_supergaussian(100_000, &l).unwrap().to_f64();
        assert!(r4.is_finite() && r4 > 0.0);
        assert!(r5 / r4 < 10.0 && r4 / r5 < 10.0);
        let one = Float::with_val(P, 1);
        assert!(matches!(check_aj_supergaussian(10_000, &one), Err(Error::Precondition(_))));
        // L ln n > n
        assert!(matches!(check_aj_supergaussian(4, &Float::with_val(P, 5)), Err(Error::Range(_))));
    }

    #[test]
    fn dn_at_two_and_small_sweep() {
        let e = euler(P);
        let l3 = Float::with_val(P, &e + 3u32).ln();
        let l2 = Float::with_val(P, &e + 2u32).ln();
        let d2 = Float::with_val(P, &l3 / 3u32) * Float::with_val(P, &l3 / &l2).square();
        assert!(d2 < 6);
        let r = check_dn(1000, P).unwrap();
        assert!(r.passed());
        let row2 = r.rows.iter().find(|row| row.n == 2).unwrap();
        assert!(relative_difference(&row2.ratio, &d2) < 1e-60);
        assert!(relative_difference(&r.worst_ratio, &d2) < 1e-60);
        let from10: f64 = r.params["max_from_10"].parse().unwrap();
        assert!(from10 < 1.0);
    }

    #[test]
    fn dn_chunks_agree_with_direct_formula() {
        // crosses a chunk boundary
        let r = check_dn(SWEEP_CHUNK + 10, P).unwrap();
        let e = euler(P);
        for row in &r.rows {
            let n = row.n;
            let a = Float::with_val(P, &e + (n + 1)).ln();
            let b = Float::with_val(P, &e + n).ln();
            let d = Float::with_val(P, &a / (n + 1)) * Float::with_val(P, &a / &b).pow(n as u32);
            assert!(relative_difference(&row.ratio, &d) < 1e-60, "n={n}");
        }
    }

    #[test]
    fn log_shift_values() {
        let two = log_shift_term(2, P);
        let expected = (Float::with_val(P, 12).ln() / Float::with_val(P, 2).ln()).square();
        assert!(relative_difference(&two, &expected) < 1e-70);
        let s = log_shift_summary(SWEEP_CHUNK + 100, P).unwrap();
        // the sequence rises briefly before decaying: the maximum sits at n = 9
        assert_eq!(s.argmax, 9);
        let nine = log_shift_term(9, P);
        assert!(relative_difference(&s.sup, &nine) < 1e-60);
        assert!(s.nonincreasing_after_max);
        assert!(two < nine);
        let last = log_shift_term(SWEEP_CHUNK + 100, P);
        assert!(relative_difference(&s.at_nmax, &last) < 1e-60);
    }
}
