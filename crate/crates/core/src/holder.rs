//! Grid estimates of Hölder seminorms (exponent 1/2) for periodic functions,
//! applied to the coefficients and derivatives of the sharp example.

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::report::{fmt_sig_f64, CheckRow, LemmaCheckReport};
use crate::sharp_example::{BracketEngine, SharpExample};

/// Default number of samples per period.
pub const DEFAULT_SAMPLES: usize = 1024;
/// The Hölder exponent used throughout.
pub const DELTA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct HolderEstimate {
    pub delta: f64,
    pub grid_size: usize,
    pub seminorm: f64,
    /// Largest pair separation taken into account.
    pub short_range_cap: f64,
    /// `h^{1-delta} sup|f'|` when a derivative bound is supplied: the size of
    /// what pairs closer than the grid spacing can add.
    pub correction: Option<f64>,
}

/// Samples of a function on a uniform grid over one period.
#[derive(Clone, Debug)]
pub struct PeriodicSamples {
    pub period: f64,
    pub values: Vec<Complex64>,
}

impl PeriodicSamples {
    pub fn spacing(&self) -> f64 {
        self.period / self.values.len() as f64
    }
}

/// `max |f(x_i) - f(x_j)| / d(x_i, x_j)^delta` over all pairs, with `d` the
/// distance on the circle of length `period`. Pairs farther apart than `cap`
/// are skipped when a cap is given. The result never exceeds the true seminorm.
pub fn holder_seminorm(
    samples: &PeriodicSamples,
    delta: f64,
    cap: Option<f64>,
    derivative_bound: Option<f64>,
) -> Result<HolderEstimate> {
    let n = samples.values.len();
    if n < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let h = samples.spacing();
    let half = samples.period / 2.0;
    let cap = cap.unwrap_or(half).min(half);
    // separations only depend on the index gap
    let max_gap = ((cap / h).floor() as usize).min(n / 2).max(1);
    let weights: Vec<f64> = (0..=max_gap).map(|g| (g as f64 * h).powf(-delta)).collect();
    let vals = &samples.values;
    let seminorm = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for g in 1..=max_gap {
                let j = (i + g) % n;
                let q = (vals[i] - vals[j]).norm() * weights[g];
                best = best.max(q);
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(HolderEstimate {
        delta,
        grid_size: n,
        seminorm,
        short_range_cap: max_gap as f64 * h,
        correction: derivative_bound.map(|m| m * h.powf(1.0 - delta)),
    })
}

fn check_c0(c0: f64) -> Result<()> {
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::Domain(format!("C0 must be positive, got {c0}")));
    }
    Ok(())
}

/// One line of a Hölder table: `k_or_beta, estimate, bound, ratio`.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderRow {
    pub k_or_beta: u32,
    pub estimate: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn holder_csv(rows: &[HolderRow]) -> String {
    let mut out = String::from("k_or_beta,estimate,bound,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.k_or_beta,
            fmt_sig_f64(r.estimate),
            fmt_sig_f64(r.bound),
            fmt_sig_f64(r.ratio)
        ));
    }
    out
}

/// Samples of `D^beta W = A (i C0)^{beta+1} e^{i C0 x}` over one period.
pub fn coefficient_samples(c0: f64, beta: u32, grid_size: usize) -> PeriodicSamples {
    let a = 1.0 / (1.0 + c0 * c0);
    let period = std::f64::consts::TAU / c0;
    let factor = Complex64::new(0.0, c0).powu(beta + 1) * a;
    let values = (0..grid_size)
        .map(|i| factor * Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / grid_size as f64))
        .collect();
    PeriodicSamples { period, values }
}

/// `[D^beta W]_{1/2} / C0^{beta+1/2}` for `0 <= beta <= beta_max`.
pub fn coeff_holder_rows(c0: f64, beta_max: u32, grid_size: usize) -> Result<Vec<HolderRow>> {
    check_c0(c0)?;
    (0..=beta_max)
        .map(|beta| {
            let s = coefficient_samples(c0, beta, grid_size);
            let est = holder_seminorm(&s, DELTA, None, None)?;
            let bound = c0.powf(beta as f64 + DELTA);
            Ok(HolderRow { k_or_beta: beta, estimate: est.seminorm, bound, ratio: est.seminorm / bound })
        })
        .collect()
}

/// Rows carry the ratio for each `beta`; the parameter `spread` is
/// `max/min - 1` over `beta`.
pub fn check_coeff_holder(c0: f64, beta_max: u32, grid_size: usize) -> Result<LemmaCheckReport> {
    if beta_max < 1 {
        return Err(Error::Domain("beta_max must be at least 1".into()));
    }
    let rows = coeff_holder_rows(c0, beta_max, grid_size)?;
    let mut report = LemmaCheckReport::new("coeff_holder", 53)
        .with_param("c0", c0)
        .with_param("grid_size", grid_size);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    for r in &rows {
        report.push(CheckRow {
            n: r.k_or_beta as u64,
            j_or_s: None,
            abscissa: None,
            ratio: Float::with_val(53, r.ratio),
            pass: r.ratio.is_finite() && r.ratio > 0.0,
        });
    }
    report.params.insert("spread".into(), fmt_sig_f64(hi / lo - 1.0));
    Ok(report)
}

/// Per-order data of the interpolation check.
#[derive(Clone, Debug)]
pub struct InterpolationRow {
    pub k: u32,
    pub sup_norm: f64,
    pub upper_seminorm: HolderEstimate,
    pub lower_seminorm: HolderEstimate,
    /// `sup|u^{(k)}| / ([u]_{k+1/2} [u]_{k-1/2})^{1/2}`
    pub constant: f64,
}

pub fn interpolation_rows(c0: f64, kmax: u32, grid_size: usize) -> Result<Vec<InterpolationRow>> {
    check_c0(c0)?;
    if kmax < 1 {
        return Err(Error::Domain("kmax must be at least 1".into()));
    }
    let ex = SharpExample::new(&Float::with_val(128, c0))?;
    let engine = BracketEngine::new(&ex, kmax as usize + 1)?;
    let period = ex.period.to_f64();
    let samples: Vec<PeriodicSamples> = (0..=kmax as usize + 1)
        .map(|m| PeriodicSamples { period, values: engine.samples_f64(m, grid_size) })
        .collect();
    let sup = |m: usize| samples[m].values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    (1..=kmax as usize)
        .map(|k| {
            let upper = holder_seminorm(&samples[k], DELTA, None, Some(sup(k + 1)))?;
            let lower = holder_seminorm(&samples[k - 1], DELTA, None, Some(sup(k)))?;
            let s = sup(k);
            let geo = (upper.seminorm * lower.seminorm).sqrt();
            let constant = if s == 0.0 { 0.0 } else { s / geo };
            Ok(InterpolationRow { k: k as u32, sup_norm: s, upper_seminorm: upper, lower_seminorm: lower, constant })
        })
        .collect()
}

/// Fits `c` in `sup|u^{(k)}| <= c ([u]_{k+1/2} [u]_{k-1/2})^{1/2}` for
/// `1 <= k <= kmax`; `worst_ratio` is the fitted `c`.
pub fn check_mollifier_interpolation(c0: f64, kmax: u32, grid_size: usize) -> Result<LemmaCheckReport> {
    let rows = interpolation_rows(c0, kmax, grid_size)?;
    let mut report = LemmaCheckReport::new("mollifier_interpolation", 53)
        .with_param("c0", c0)
        .with_param("grid_size", grid_size);
    for r in &rows {
        report.push(CheckRow {
            n: r.k as u64,
            j_or_s: None,
            abscissa: None,
            ratio: Float::with_val(53, r.constant),
            pass: r.constant.is_finite(),
        });
    }
    Ok(report)
}

pub fn interpolation_csv(rows: &[InterpolationRow]) -> String {
    let table: Vec<HolderRow> = rows
        .iter()
        .map(|r| {
            let bound = (r.upper_seminorm.seminorm * r.lower_seminorm.seminorm).sqrt();
            HolderRow { k_or_beta: r.k, estimate: r.sup_norm, bound, ratio: r.constant }
        })
        .collect();
    holder_csv(&table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_seminorm() {
        let s = PeriodicSamples { period: 1.0, values: vec![Complex64::new(2.0, -1.0); 64] };
        assert_eq!(holder_seminorm(&s, DELTA, None, None).unwrap().seminorm, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let s = PeriodicSamples { period: 1.0, values: vec![Complex64::new(0.0, 0.0)] };
        assert!(holder_seminorm(&s, DELTA, None, None).is_err());
        let s = PeriodicSamples { period: 1.0, values: vec![Complex64::new(0.0, 0.0); 4] };
        assert!(holder_seminorm(&s, 1.0, None, None).is_err());
    }

    #[test]
    fn cap_limits_separation() {
        let s = coefficient_samples(1.0, 0, 256);
        let full = holder_seminorm(&s, DELTA, None, None).unwrap();
        let short = holder_seminorm(&s, DELTA, Some(0.1), None).unwrap();
        assert!(short.seminorm <= full.seminorm);
        assert!(short.short_range_cap <= 0.1);
    }
}
