use rayon::prelude::*;
use rug::{Float, Integer};

use super::log_magnitude::{log_sum_exp, LogMagnitude};
use super::euler;
use crate::error::{Error, Result};

/// Largest order for which exact Stirling rows are used.
pub const STIRLING_TABLE_CAP: usize = 2000;

/// `ln(n!)` via the correctly rounded log-gamma function.
pub fn log_factorial(n: u64, prec: u32) -> LogMagnitude {
    let mut x = Float::with_val(prec, n);
    x += 1u32;
    LogMagnitude::from_log(x.ln_gamma())
}

/// Row `n` of Pascal's triangle.
pub fn binomial_row(n: u32) -> Vec<Integer> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = Integer::from(1);
    row.push(c.clone());
    for k in 0..n {
        c *= n - k;
        c /= k + 1;
        row.push(c.clone());
    }
    row
}

/// Per-precision tables of `ln k!`, `ln(k+e)` and `ln ln(k+e)` for `0 <= k <= nmax`.
#[derive(Clone, Debug)]
pub struct LogTables {
    prec: u32,
    ln_fact: Vec<Float>,
    ln_shift: Vec<Float>,
    ln_ln_shift: Vec<Float>,
}

impl LogTables {
    pub fn new(nmax: usize, prec: u32) -> Self {
        let ln_k: Vec<Float> = (0..=nmax)
            .into_par_iter()
            .map(|k| {
                if k <= 1 {
                    Float::new(prec)
                } else {
                    Float::with_val(prec, k).ln()
                }
            })
            .collect();
        let mut ln_fact = Vec::with_capacity(nmax + 1);
        let mut acc = Float::new(prec);
        for l in &ln_k {
            acc += l;
            ln_fact.push(acc.clone());
        }
        let e = euler(prec);
        let ln_shift: Vec<Float> = (0..=nmax)
            .into_par_iter()
            .map(|k| {
                let mut v = e.clone();
                v += k as u64;
                v.ln()
            })
            .collect();
        let ln_ln_shift = ln_shift
            .par_iter()
            .map(|v| Float::with_val(prec, v.ln_ref()))
            .collect();
        LogTables {
            prec,
            ln_fact,
            ln_shift,
            ln_ln_shift,
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn nmax(&self) -> usize {
        self.ln_fact.len() - 1
    }

    /// `ln k!`
    pub fn ln_factorial(&self, k: usize) -> &Float {
        &self.ln_fact[k]
    }

    /// `ln(k + e)`
    pub fn ln_shift(&self, k: usize) -> &Float {
        &self.ln_shift[k]
    }

    /// `ln ln(k + e)`
    pub fn ln_ln_shift(&self, k: usize) -> &Float {
        &self.ln_ln_shift[k]
    }

    pub fn ln_binomial(&self, n: usize, k: usize) -> Float {
        let mut v = self.ln_fact[n].clone();
        v -= &self.ln_fact[k];
        v -= &self.ln_fact[n - k];
        v
    }
}

/// `ln binom(n, k)` at the given precision.
pub fn log_binomial(n: u64, k: u64, prec: u32) -> Float {
    assert!(k <= n);
    let a = log_factorial(n, prec);
    let b = log_factorial(k, prec);
    let c = log_factorial(n - k, prec);
    let mut v = a.log_abs().clone();
    v -= b.log_abs();
    v -= c.log_abs();
    v
}

/// Exact Stirling numbers of the second kind `S(n, k)`, `0 <= k <= n <= nmax`.
#[derive(Clone, Debug)]
pub struct StirlingTable {
    rows: Vec<Vec<Integer>>,
}

impl StirlingTable {
    pub fn new(nmax: usize) -> Result<Self> {
        Self::with_cap(nmax, STIRLING_TABLE_CAP)
    }

    pub fn with_cap(nmax: usize, cap: usize) -> Result<Self> {
        if nmax > cap {
            return Err(Error::Resource(format!(
                "Stirling table of order {nmax} exceeds the cap {cap}"
            )));
        }
        let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(nmax + 1);
        rows.push(vec![Integer::from(1)]);
        for n in 1..=nmax {
            let next = next_stirling_row(&rows[n - 1]);
            rows.push(next);
        }
        Ok(StirlingTable { rows })
    }

    pub fn nmax(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, n: usize) -> Option<&[Integer]> {
        self.rows.get(n).map(|r| r.as_slice())
    }

    /// `S(n, k)`; zero for `k > n`. Panics if `n` exceeds the table.
    pub fn get(&self, n: usize, k: usize) -> Integer {
        self.rows[n].get(k).cloned().unwrap_or_default()
    }

    /// `T_n(a) = sum_k S(n,k) a^k` from the stored row.
    pub fn touchard(&self, n: usize, a: &Float) -> Result<LogMagnitude> {
        let row = self
            .row(n)
            .ok_or_else(|| Error::Index(format!("order {n} beyond table size {}", self.nmax())))?;
        Ok(touchard_from_row(row, a))
    }
}

fn next_stirling_row(prev: &[Integer]) -> Vec<Integer> {
    let n = prev.len();
    let mut next = Vec::with_capacity(n + 1);
    next.push(Integer::new());
    for k in 1..=n {
        // S(n,k) = k S(n-1,k) + S(n-1,k-1)
        let mut v = Integer::new();
        if k < n {
            v += &prev[k];
            v *= k as u32;
        }
        v += &prev[k - 1];
        next.push(v);
    }
    next
}

/// Row `n` of the Stirling triangle, built without storing earlier rows.
pub fn stirling_row(n: usize) -> Vec<Integer> {
    let mut row = vec![Integer::from(1)];
    for _ in 0..n {
        row = next_stirling_row(&row);
    }
    row
}

pub(crate) fn touchard_from_row(row: &[Integer], a: &Float) -> LogMagnitude {
    let prec = a.prec();
    let mut sum = Float::new(prec);
    let mut power = Float::with_val(prec, 1);
    let mut term = Float::new(prec);
    for s in row {
        if *s != 0 {
            use rug::Assign;
            term.assign(s);
            term *= &power;
            sum += &term;
        }
        power *= a;
    }
    LogMagnitude::from_float(&sum)
}

/// Touchard polynomial `T_n(a) = sum_k S(n,k) a^k` for `a > 0`.
///
/// Exact Stirling rows are used up to [`STIRLING_TABLE_CAP`]; beyond it the
/// positive recurrence `T_{n+1} = a sum_k binom(n,k) T_k` runs in
/// double-precision log space.
pub fn touchard(n: usize, a: &Float) -> LogMagnitude {
    assert!(*a > 0, "touchard needs a > 0");
    if n <= STIRLING_TABLE_CAP {
        return touchard_from_row(&stirling_row(n), a);
    }
    let logs = touchard_logs_f64(n, a.to_f64().ln());
    LogMagnitude::from_log(Float::with_val(a.prec(), logs[n]))
}

/// `T_0(a) .. T_nmax(a)` via the positive recurrence, in log space at the
/// precision of `a`.
pub fn touchard_recurrence(nmax: usize, a: &Float) -> Vec<LogMagnitude> {
    let prec = a.prec();
    let tables = LogTables::new(nmax, prec);
    let ln_a = Float::with_val(prec, a.ln_ref());
    let mut logs: Vec<Float> = vec![Float::new(prec)];
    for n in 0..nmax {
        let terms: Vec<Float> = (0..=n)
            .map(|k| {
                let mut t = tables.ln_binomial(n, k);
                t += &logs[k];
                t
            })
            .collect();
        let mut next = log_sum_exp(&terms, prec).expect("nonempty");
        next += &ln_a;
        logs.push(next);
    }
    logs.into_iter().map(LogMagnitude::from_log).collect()
}

/// Streams `T_0(a), T_1(a), ...` through the positive recurrence with a
/// running Pascal row, at the precision of `a`. All terms are positive, so the
/// sums carry no cancellation.
#[derive(Clone, Debug)]
pub struct TouchardSequence {
    a: Float,
    pascal: Vec<Float>,
    values: Vec<Float>,
}

impl TouchardSequence {
    pub fn new(a: &Float) -> Self {
        assert!(*a > 0, "TouchardSequence needs a > 0");
        let prec = a.prec();
        TouchardSequence {
            a: a.clone(),
            pascal: vec![Float::with_val(prec, 1)],
            values: vec![Float::with_val(prec, 1)],
        }
    }

    /// Values computed so far; entry `n` is `T_n(a)`.
    pub fn values(&self) -> &[Float] {
        &self.values
    }

    /// Computes the next value and returns its index.
    pub fn advance(&mut self) -> usize {
        let prec = self.a.prec();
        let n = self.values.len() - 1;
        let mut acc = Float::new(prec);
        for (b, t) in self.pascal.iter().zip(&self.values) {
            acc += Float::with_val(prec, b * t);
        }
        acc *= &self.a;
        self.values.push(acc);
        let mut next = Vec::with_capacity(n + 2);
        next.push(Float::with_val(prec, 1));
        for k in 1..=n {
            next.push(Float::with_val(prec, &self.pascal[k - 1] + &self.pascal[k]));
        }
        next.push(Float::with_val(prec, 1));
        self.pascal = next;
        n + 1
    }

    /// Extends the sequence through index `nmax`.
    pub fn extend_to(&mut self, nmax: usize) -> &[Float] {
        while self.values.len() <= nmax {
            self.advance();
        }
        &self.values[..=nmax]
    }
}

/// `ln T_0(a) .. ln T_nmax(a)` in double precision, `ln_a = ln a`.
pub fn touchard_logs_f64(nmax: usize, ln_a: f64) -> Vec<f64> {
    let mut logs = vec![0.0];
    extend_touchard_logs_f64(&mut logs, nmax, ln_a);
    logs
}

/// Continues a prefix `ln T_0 .. ln T_m` of the positive recurrence up to `nmax`.
pub(crate) fn extend_touchard_logs_f64(logs: &mut Vec<f64>, nmax: usize, ln_a: f64) {
    let mut ln_fact = Vec::with_capacity(nmax + 1);
    let mut acc = 0.0f64;
    for k in 0..=nmax {
        if k > 1 {
            acc += (k as f64).ln();
        }
        ln_fact.push(acc);
    }
    let mut terms = Vec::with_capacity(nmax + 1);
    while logs.len() <= nmax {
        let n = logs.len() - 1;
        terms.clear();
        terms.extend((0..=n).map(|k| ln_fact[n] - ln_fact[k] - ln_fact[n - k] + logs[k]));
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
        logs.push(ln_a + m + s.ln());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::relative_difference;
    use rug::ops::Pow;

    const P: u32 = 256;

    #[test]
    fn streamed_sequence_matches_log_recurrence() {
        let a = Float::with_val(P, 1) / 26u32;
        let mut seq = TouchardSequence::new(&a);
        let direct = seq.extend_to(150).to_vec();
        let logs = touchard_recurrence(150, &a);
        for n in 0..=150 {
            assert!(logs[n].relative_difference(&LogMagnitude::from_float(&direct[n])) < 1e-60, "n={n}");
        }
    }

    /// Number of set partitions of {0..n} into exactly k blocks, by
    /// enumerating restricted growth strings.
    fn count_partitions(n: usize, k: usize) -> u64 {
        fn go(pos: usize, n: usize, max: usize, k: usize, count: &mut u64) {
            if pos == n {
                if max == k {
                    *count += 1;
                }
                return;
            }
            for b in 0..=max.min(k - 1) {
                let next_max = if b == max { max + 1 } else { max };
                go(pos + 1, n, next_max, k, count);
            }
        }
        if k == 0 {
            return (n == 0) as u64;
        }
        let mut c = 0;
        go(0, n, 0, k, &mut c);
        c
    }

    /// Bell numbers from the Bell triangle.
    fn bell_triangle(n: usize) -> u64 {
        let mut row = vec![1u64];
        for _ in 0..n {
            let mut next = vec![*row.last().unwrap()];
            for v in &row {
                let last = *next.last().unwrap();
                next.push(last + v);
            }
            row = next;
        }
        row[0]
    }

    #[test]
    fn log_factorial_small_values() {
        assert!(log_factorial(0, P).log_abs().is_zero());
        let v = log_factorial(5, P);
        let expected = Float::with_val(P, 120).ln();
        assert!(relative_difference(v.log_abs(), &expected) < Float::with_val(P, 2).pow(8 - P as i32));
    }

    #[test]
    fn log_factorial_matches_stirling_series() {
        let n = 10_000f64;
        let series = n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n);
        let v = log_factorial(10_000, P).log_abs().to_f64();
        assert!(((v - series) / series).abs() < 1e-8);
    }

    #[test]
    fn stirling_entries_match_enumeration() {
        let t = StirlingTable::new(8).unwrap();
        for n in 0..=8 {
            assert_eq!(t.get(n, n), 1);
            if n >= 1 {
                assert_eq!(t.get(n, 1), 1);
            }
            for k in 0..=n {
                assert_eq!(t.get(n, k), count_partitions(n, k), "S({n},{k})");
            }
        }
        assert_eq!(t.get(3, 2), 3);
        assert_eq!(t.get(4, 2), 7);
        assert_eq!(stirling_row(8), t.row(8).unwrap());
    }

    #[test]
    fn stirling_table_cap_is_enforced() {
        assert!(matches!(StirlingTable::new(2001), Err(Error::Resource(_))));
        assert!(StirlingTable::with_cap(20, 10).is_err());
    }

    #[test]
    fn binomial_rows() {
        assert_eq!(binomial_row(0), vec![Integer::from(1)]);
        let r: Vec<u32> = binomial_row(5).iter().map(|v| v.to_u32().unwrap()).collect();
        assert_eq!(r, vec![1, 5, 10, 10, 5, 1]);
        for n in 0..=64u32 {
            let sum: Integer = binomial_row(n).iter().sum();
            assert_eq!(sum, Integer::from(1) << n);
        }
    }

    #[test]
    fn touchard_small_orders() {
        let a = Float::with_val(P, 0.3);
        assert!(touchard(0, &a).log_abs().is_zero());
        let t2 = touchard(2, &a).to_float();
        let expected = Float::with_val(P, &a + Float::with_val(P, &a * &a));
        assert!(relative_difference(&t2, &expected) < 1e-70);
        for n in 0..=12 {
            let one = Float::with_val(P, 1);
            let bell = touchard(n, &one).to_float();
            assert!(relative_difference(&bell, &Float::with_val(P, bell_triangle(n))) < 1e-70);
        }
        assert_eq!(bell_triangle(5), 52);
    }

    #[test]
    fn table_and_recurrence_agree() {
        let table = StirlingTable::new(200).unwrap();
        let mut params: Vec<Float> = vec![Float::with_val(P, 0.5), Float::with_val(P, 1)];
        for c0 in [1u32, 5, 40] {
            let c2 = Float::with_val(P, c0 * c0 + 1);
            params.push(Float::with_val(P, 1) / c2);
        }
        let tol = Float::with_val(P, 1e-25);
        for a in &params {
            let rec = touchard_recurrence(200, a);
            for n in 0..=200 {
                let exact = table.touchard(n, a).unwrap();
                assert!(exact.relative_difference(&rec[n]) < tol, "n={n}");
            }
        }
    }

    #[test]
    fn f64_recurrence_tracks_exact_values() {
        let a = Float::with_val(P, 0.5);
        let logs = touchard_logs_f64(300, 0.5f64.ln());
        let table = StirlingTable::new(300).unwrap();
        for n in [10, 100, 300] {
            let exact = table.touchard(n, &a).unwrap().log_abs_f64();
            assert!(((logs[n] - exact) / exact.abs().max(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_results() {
        let a = Float::with_val(P, 0.7);
        let x = touchard_recurrence(50, &a);
        let y = touchard_recurrence(50, &a);
        for (p, q) in x.iter().zip(&y) {
            assert_eq!(p.log_abs(), q.log_abs());
        }
    }
}
