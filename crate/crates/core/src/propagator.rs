//! Forward propagation of derivative-norm bounds through the Leibniz
//! recurrence, and fitting of the envelope constant `K`.

use rug::Float;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::majorant::kappa_factor;
use crate::numerics::{binomial_row, LogMagnitude, LogTables};
use crate::report::fmt_sig;

/// Hypothesis `sup |d^a W|, sup |d^a V| <= C0^|a|` on the coefficients.
#[derive(Clone, Debug)]
pub struct CoefficientBounds {
    pub c0: Float,
}

impl CoefficientBounds {
    pub fn new(c0: Float) -> Result<Self> {
        if c0 <= 0 {
            return Err(Error::Domain(format!("C0 must be positive, got {c0}")));
        }
        Ok(CoefficientBounds { c0 })
    }
}

/// Bounds on `||u||`, `||u'||`, `||u''||` from the interpolation constant `c_p`.
#[derive(Clone, Debug)]
pub struct BaseCase {
    pub c_p: Float,
    pub b0: Float,
    pub b1: Float,
    pub b2: Float,
}

pub fn base_case(c_p: &Float) -> Result<BaseCase> {
    if *c_p < 1 {
        return Err(Error::Domain(format!("c_p must be at least 1, got {c_p}")));
    }
    let prec = c_p.prec();
    let b2 = Float::with_val(prec, c_p.square_ref()) + 2u32;
    let b1 = Float::with_val(prec, b2.sqrt_ref()) * c_p;
    Ok(BaseCase {
        c_p: c_p.clone(),
        b0: Float::with_val(prec, 1),
        b1,
        b2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquationKind {
    SecondOrder,
    FirstOrder,
}

impl EquationKind {
    pub fn name(self) -> &'static str {
        match self {
            EquationKind::SecondOrder => "second_order",
            EquationKind::FirstOrder => "first_order",
        }
    }
}

/// Propagated bounds `b_0..=b_N`.
#[derive(Clone, Debug)]
pub struct BoundSequence {
    pub kind: EquationKind,
    pub c0: Float,
    pub base: Option<BaseCase>,
    pub bounds: Vec<LogMagnitude>,
}

impl BoundSequence {
    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// `ln b_n` for every index.
    pub fn log_values(&self) -> Vec<Float> {
        self.bounds.iter().map(|b| b.log_abs().clone()).collect()
    }

    pub fn prec(&self) -> u32 {
        self.c0.prec()
    }

    /// CSV with columns `n, log_b_n, implied_C_n, envelope_margin`. The margin is
    /// `ln` of the closed majorant at `envelope_c` minus `ln b_n`.
    pub fn to_csv(&self, envelope_c: &Float) -> String {
        let logs = self.log_values();
        let implied = implied_constants(&logs, None);
        let tables = LogTables::new(logs.len().saturating_sub(1), self.prec());
        let ln_c = Float::with_val(self.prec(), envelope_c.ln_ref());
        let mut out = String::from("n,log_b_n,implied_C_n,envelope_margin\n");
        for (n, log_b) in logs.iter().enumerate() {
            let c_n = if n == 0 { String::new() } else { fmt_sig(&implied[n - 1]) };
            let margin = Float::with_val(self.prec(), ln_envelope(&tables, n, &ln_c) - log_b);
            out.push_str(&format!("{n},{},{c_n},{}\n", fmt_sig(log_b), fmt_sig(&margin)));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let base = self.base.as_ref().map(|b| {
            json!({
                "c_p": fmt_sig(&b.c_p),
                "b0": fmt_sig(&b.b0),
                "b1": fmt_sig(&b.b1),
                "b2": fmt_sig(&b.b2),
                "source": "interpolation base case b2 = 2 + c_p^2, b1 = c_p sqrt(b2)",
            })
        });
        json!({
            "equation_kind": self.kind.name(),
            "c0": fmt_sig(&self.c0),
            "precision_bits": self.prec(),
            "base_case": base,
            "log_bounds": self.bounds.iter().map(|b| fmt_sig(b.log_abs())).collect::<Vec<_>>(),
        })
    }
}

fn check_c0(c0: &Float) -> Result<()> {
    if *c0 < 0 || c0.is_nan() {
        return Err(Error::Domain(format!("C0 must be nonnegative, got {c0}")));
    }
    Ok(())
}

fn powers(x: &Float, n: usize) -> Vec<Float> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = Float::with_val(x.prec(), 1);
    for _ in 0..=n {
        out.push(p.clone());
        p *= x;
    }
    out
}

/// `sum_{j <= m} binom(m, j) C0^{m-j} b_j`
fn leibniz_sum(m: usize, c0_pow: &[Float], b: &[Float], prec: u32) -> Float {
    let row = binomial_row(m as u32);
    let mut acc = Float::new(prec);
    for (j, binom) in row.iter().enumerate() {
        let mut t = Float::with_val(prec, binom);
        t *= &c0_pow[m - j];
        t *= &b[j];
        acc += t;
    }
    acc
}

/// Runs `b_{n+1} = sum_{l+j=n} binom(n,j) C0^l b_j + sum_{l+j=n-1} binom(n-1,j) C0^l b_j`
/// for `n >= 2`, starting from the base case.
pub fn propagate_second_order(c0: &Float, base: &BaseCase, n_max: usize) -> Result<BoundSequence> {
    check_c0(c0)?;
    if n_max < 3 {
        return Err(Error::Domain(format!("second-order propagation needs N >= 3, got {n_max}")));
    }
    let prec = c0.prec();
    let c0_pow = powers(c0, n_max);
    let mut b = vec![
        Float::with_val(prec, &base.b0),
        Float::with_val(prec, &base.b1),
        Float::with_val(prec, &base.b2),
    ];
    for n in 2..n_max {
        let mut next = leibniz_sum(n, &c0_pow, &b, prec);
        next += leibniz_sum(n - 1, &c0_pow, &b, prec);
        b.push(next);
    }
    Ok(BoundSequence {
        kind: EquationKind::SecondOrder,
        c0: c0.clone(),
        base: Some(base.clone()),
        bounds: b.iter().map(LogMagnitude::from_float).collect(),
    })
}

/// Runs `b_{n+1} = sum_{l+j=n} binom(n,j) C0^l b_j` from `b_0 = 1`.
pub fn propagate_first_order(c0: &Float, n_max: usize) -> Result<BoundSequence> {
    check_c0(c0)?;
    if n_max < 1 {
        return Err(Error::Domain("first-order propagation needs N >= 1".into()));
    }
    let prec = c0.prec();
    let c0_pow = powers(c0, n_max);
    let mut b = vec![Float::with_val(prec, 1)];
    for n in 0..n_max {
        let next = leibniz_sum(n, &c0_pow, &b, prec);
        b.push(next);
    }
    Ok(BoundSequence {
        kind: EquationKind::FirstOrder,
        c0: c0.clone(),
        base: None,
        bounds: b.iter().map(LogMagnitude::from_float).collect(),
    })
}

/// `ln[C^n n! / ln^n(n+e)]` from tables.
fn ln_envelope(tables: &LogTables, n: usize, ln_c: &Float) -> Float {
    let prec = tables.prec();
    let mut v = Float::with_val(prec, ln_c * n as u64);
    v += tables.ln_factorial(n);
    v -= Float::with_val(prec, tables.ln_ln_shift(n) * n as u64);
    v
}

/// Implied constants `C_n = (b_n ln^n(n+e) / (P n!))^{1/n}` for `n >= 1`, where
/// `log_b[n] = ln b_n` and `P` is an optional prefactor. Entry `n - 1` holds `C_n`.
pub fn implied_constants(log_b: &[Float], prefactor: Option<&Float>) -> Vec<Float> {
    if log_b.len() < 2 {
        return Vec::new();
    }
    let prec = log_b[0].prec();
    let tables = LogTables::new(log_b.len() - 1, prec);
    let ln_p = prefactor.map(|p| Float::with_val(prec, p.ln_ref()));
    (1..log_b.len())
        .map(|n| {
            let mut v = Float::with_val(prec, &log_b[n]);
            v -= tables.ln_factorial(n);
            v += Float::with_val(prec, tables.ln_ln_shift(n) * n as u64);
            if let Some(lp) = &ln_p {
                v -= lp;
            }
            v /= n as u64;
            v.exp()
        })
        .collect()
}

fn check_kappa(kappa: &Float) -> Result<()> {
    if *kappa <= 1 {
        return Err(Error::Domain(format!("kappa must exceed 1, got {kappa}")));
    }
    Ok(())
}

/// Smallest `K >= 0` with `b_n <= P (kappa C0 + K (1/ln kappa + 1))^n n!/ln^n(n+e)`
/// for `1 <= n < log_b.len()`; `P = 1` when no prefactor is given.
pub fn fit_k_logs(log_b: &[Float], kappa: &Float, c0: &Float, prefactor: Option<&Float>) -> Result<Float> {
    check_kappa(kappa)?;
    if let Some(p) = prefactor {
        if *p <= 0 {
            return Err(Error::Domain(format!("prefactor must be positive, got {p}")));
        }
    }
    let prec = kappa.prec().max(c0.prec());
    let floor = Float::with_val(prec, kappa * c0);
    // excesses within rounding of the floor count as ties and resolve to 0
    let tie = Float::with_val(prec, &floor * Float::with_val(prec, Float::i_exp(1, 16 - prec as i32)));
    let mut worst = Float::new(prec);
    for c_n in implied_constants(log_b, prefactor) {
        let excess = c_n - &floor;
        if excess > worst && excess > tie {
            worst = excess;
        }
    }
    Ok(worst / kappa_factor(kappa))
}

pub fn fit_k(seq: &BoundSequence, kappa: &Float, c0: &Float) -> Result<Float> {
    fit_k_logs(&seq.log_values(), kappa, c0, None)
}

/// Whether `values` is strictly decreasing over its last `window` entries.
pub fn decreasing_tail(values: &[Float], window: usize) -> bool {
    let start = values.len().saturating_sub(window);
    values[start..].windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::closed_majorant;
    use crate::numerics::{relative_difference, touchard};

    const P: u32 = 256;

    fn f(x: f64) -> Float {
        Float::with_val(P, x)
    }

    #[test]
    fn base_case_values() {
        let b = base_case(&f(2.0)).unwrap();
        assert_eq!(b.b2, 6);
        let six = Float::with_val(P, 6).sqrt() * 2u32;
        assert!(relative_difference(&b.b1, &six) < 1e-70);
        let b = base_case(&f(1.0)).unwrap();
        assert!(relative_difference(&b.b1, &Float::with_val(P, 3).sqrt()) < 1e-70);
        for c in [1.0, 1.7, 3.25] {
            let b = base_case(&f(c)).unwrap();
            let lhs = Float::with_val(P, b.b1.square_ref());
            let rhs = Float::with_val(P, &b.b2 * Float::with_val(P, f(c).square_ref()));
            assert!(relative_difference(&lhs, &rhs) < 1e-70);
        }
        assert!(matches!(base_case(&f(0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn second_order_without_coefficient_growth_is_fibonacci_like() {
        let base = base_case(&f(2.0)).unwrap();
        let seq = propagate_second_order(&f(0.0), &base, 20).unwrap();
        let b: Vec<Float> = seq.bounds.iter().map(|x| x.to_float()).collect();
        for n in 2..20 {
            let expected = Float::with_val(P, &b[n] + &b[n - 1]);
            assert!(relative_difference(&b[n + 1], &expected) < 1e-70);
        }
    }

    #[test]
    fn second_order_first_step_expands() {
        let base = base_case(&f(2.0)).unwrap();
        let c0 = f(1.5);
        let seq = propagate_second_order(&c0, &base, 3).unwrap();
        let (b0, b1, b2) = (&base.b0, &base.b1, &base.b2);
        let first = Float::with_val(P, b2 + Float::with_val(P, b1 * f(3.0)))
            + Float::with_val(P, b0 * f(2.25));
        let second = Float::with_val(P, b1 + Float::with_val(P, b0 * f(1.5)));
        let expected = first + second;
        assert!(relative_difference(&seq.bounds[3].to_float(), &expected) < 1e-70);
        assert!(propagate_second_order(&c0, &base, 2).is_err());
    }

    #[test]
    fn first_order_small_cases_and_touchard_identity() {
        let seq = propagate_first_order(&f(0.0), 30).unwrap();
        assert!(seq.bounds.iter().all(|b| b.log_abs().is_zero()));
        let c0 = f(0.75);
        let seq = propagate_first_order(&c0, 60).unwrap();
        assert_eq!(seq.bounds[1].to_float(), 1);
        assert!(relative_difference(&seq.bounds[2].to_float(), &f(1.75)) < 1e-70);
        // b_n = C0^n T_n(1/C0)
        let a = Float::with_val(P, c0.recip_ref());
        for n in [5usize, 17, 60] {
            let expected = touchard(n, &a).mul(&LogMagnitude::from_float(&c0).powi(n as u64));
            assert!(seq.bounds[n].relative_difference(&expected) < 1e-60, "n={n}");
        }
    }

    #[test]
    fn prefix_stability_is_exact() {
        let base = base_case(&f(2.0)).unwrap();
        let long = propagate_second_order(&f(1.0), &base, 80).unwrap();
        let short = propagate_second_order(&f(1.0), &base, 40).unwrap();
        for (a, b) in short.bounds.iter().zip(&long.bounds) {
            assert_eq!(a.log_abs(), b.log_abs());
        }
    }

    #[test]
    fn monotone_in_c0() {
        let base = base_case(&f(2.0)).unwrap();
        let pairs = [(0.5, 0.6), (1.0, 2.0), (3.0, 3.01)];
        for (lo, hi) in pairs {
            let a = propagate_second_order(&f(lo), &base, 60).unwrap();
            let b = propagate_second_order(&f(hi), &base, 60).unwrap();
            for n in 0..=60 {
                assert!(b.bounds[n] >= a.bounds[n]);
            }
        }
    }

    #[test]
    fn fit_k_inverts_closed_majorant() {
        let kappa = f(2.0);
        let c0 = f(1.0);
        for c_star in [1.5, 2.0, 3.7] {
            let cs = f(c_star);
            let logs: Vec<Float> = (0..=50).map(|n| closed_majorant(n, &cs).log_abs().clone()).collect();
            let k = fit_k_logs(&logs, &kappa, &c0, None).unwrap();
            let excess = (c_star - 2.0f64).max(0.0);
            let expected = f(excess) / kappa_factor(&kappa);
            if excess == 0.0 {
                assert!(k.is_zero());
            } else {
                assert!(relative_difference(&k, &expected) < 1e-60);
            }
        }
        assert!(fit_k_logs(&[f(0.0), f(0.0)], &f(1.0), &c0, None).is_err());
    }

    #[test]
    fn fit_k_is_monotone_in_the_sequence() {
        let base = base_case(&f(2.0)).unwrap();
        let seq = propagate_second_order(&f(1.0), &base, 100).unwrap();
        let logs = seq.log_values();
        let bumped: Vec<Float> = logs.iter().map(|l| Float::with_val(P, l + 0.1f64)).collect();
        let k1 = fit_k_logs(&logs, &f(2.0), &f(1.0), None).unwrap();
        let k2 = fit_k_logs(&bumped, &f(2.0), &f(1.0), None).unwrap();
        assert!(k2 >= k1);
        // a prefactor larger than one can only lower K
        let k3 = fit_k_logs(&logs, &f(2.0), &f(1.0), Some(&f(10.0))).unwrap();
        assert!(k3 <= k1);
    }

    #[test]
    fn csv_has_expected_columns() {
        let base = base_case(&f(2.0)).unwrap();
        let seq = propagate_second_order(&f(1.0), &base, 5).unwrap();
        let csv = seq.to_csv(&f(4.0));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,log_b_n,implied_C_n,envelope_margin"));
        assert_eq!(lines.count(), 6);
        assert!(seq.to_json()["base_case"]["b2"].is_string());
    }
}
