//! Split weights `a_j = 1/(l! ln^j(j+e))`, the closed-form majorant, the
//! convolution sum controlling the induction step, and numerical checks of
//! the supporting lemmas.

mod lemmas;

pub use lemmas::{
    check_aj_gaussian, check_aj_supergaussian, check_dn, check_log_shift, check_monotonicity,
    check_monotonicity_with, gaussian_sweep, log_shift_summary, log_shift_term,
    monotonicity_threshold, supergaussian_sweep, GaussianOffset, LogShiftSummary,
};

use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, LogMagnitude, LogTables};
use crate::report::{CheckRow, LemmaCheckReport};

/// The weight `a_j` for the split `j + l = n`.
#[derive(Clone, Debug)]
pub struct SplitWeight {
    pub n: u64,
    pub j: u64,
    pub l: u64,
    pub value: LogMagnitude,
}

/// Parameters `(C0, kappa, K)` of the envelope `C = kappa C0 + K (1/ln kappa + 1)`.
#[derive(Clone, Debug)]
pub struct MajorantParams {
    pub c0: Float,
    pub kappa: Float,
    pub k: Float,
    pub c: Float,
}

impl MajorantParams {
    pub fn new(c0: Float, kappa: Float, k: Float) -> Result<Self> {
        if c0 <= 0 {
            return Err(Error::Domain(format!("C0 must be positive, got {c0}")));
        }
        if kappa <= 1 {
            return Err(Error::Domain(format!("kappa must exceed 1, got {kappa}")));
        }
        if k < 0 {
            return Err(Error::Domain(format!("K must be nonnegative, got {k}")));
        }
        let c = envelope_constant(&c0, &kappa, &k);
        Ok(MajorantParams { c0, kappa, k, c })
    }

    /// Replaces `C` by a caller-supplied value, which must satisfy `C >= kappa C0`.
    pub fn with_c(mut self, c: Float) -> Result<Self> {
        let floor = Float::with_val(c.prec(), &self.kappa * &self.c0);
        if c < floor {
            return Err(Error::Precondition(format!(
                "C = {c} is below kappa*C0 = {floor}"
            )));
        }
        self.c = c;
        Ok(self)
    }

    pub fn prec(&self) -> u32 {
        self.c.prec()
    }

    /// `1/ln kappa + 1`
    pub fn kappa_factor(&self) -> Float {
        kappa_factor(&self.kappa)
    }
}

/// `1/ln kappa + 1`
pub fn kappa_factor(kappa: &Float) -> Float {
    let mut v = Float::with_val(kappa.prec(), kappa.ln_ref()).recip();
    v += 1u32;
    v
}

/// `kappa C0 + K (1/ln kappa + 1)`
pub fn envelope_constant(c0: &Float, kappa: &Float, k: &Float) -> Float {
    let prec = c0.prec().max(kappa.prec()).max(k.prec());
    let mut c = Float::with_val(prec, kappa * c0);
    c += Float::with_val(prec, k * kappa_factor(kappa));
    c
}

/// `ln a_j` from precomputed tables.
pub(crate) fn ln_split_weight(tables: &LogTables, n: usize, j: usize) -> Float {
    let mut v = Float::with_val(tables.prec(), tables.ln_ln_shift(j) * (j as u64));
    v += tables.ln_factorial(n - j);
    -v
}

pub fn split_weight(n: u64, j: u64, prec: u32) -> Result<SplitWeight> {
    if j > n {
        return Err(Error::Index(format!("split index j = {j} exceeds n = {n}")));
    }
    let l = n - j;
    let ln_fact = crate::numerics::log_factorial(l, prec);
    let ln_ln = crate::numerics::ln_shift_e(j, prec).ln();
    let mut log = Float::with_val(prec, &ln_ln * j);
    log += ln_fact.log_abs();
    Ok(SplitWeight {
        n,
        j,
        l,
        value: LogMagnitude::from_log(-log),
    })
}

/// `C^n n! / ln^n(n+e)`
pub fn closed_majorant(n: u64, c: &Float) -> LogMagnitude {
    assert!(*c > 0, "closed_majorant needs C > 0");
    let prec = c.prec();
    let mut log = Float::with_val(prec, c.ln_ref()) * n;
    log += crate::numerics::log_factorial(n, prec).log_abs();
    log -= crate::numerics::ln_shift_e(n, prec).ln() * n;
    LogMagnitude::from_log(log)
}

/// `sum_{l+j=n} C0^l C^j / (l! ln^j(j+e))` using shared tables.
pub(crate) fn convolution_sum_with(
    tables: &LogTables,
    n: usize,
    ln_c0: &Float,
    ln_c: &Float,
) -> LogMagnitude {
    let prec = tables.prec();
    let terms: Vec<Float> = (0..=n)
        .map(|j| {
            let mut t = ln_split_weight(tables, n, j);
            t += Float::with_val(prec, ln_c0 * ((n - j) as u64));
            t += Float::with_val(prec, ln_c * (j as u64));
            t
        })
        .collect();
    LogMagnitude::from_log(log_sum_exp(&terms, prec).expect("n + 1 terms"))
}

pub fn convolution_sum(n: u64, c0: &Float, c: &Float) -> LogMagnitude {
    assert!(*c0 > 0 && *c > 0, "convolution_sum needs C0, C > 0");
    let prec = c0.prec().max(c.prec());
    let tables = LogTables::new(n as usize, prec);
    let ln_c0 = Float::with_val(prec, c0.ln_ref());
    let ln_c = Float::with_val(prec, c.ln_ref());
    convolution_sum_with(&tables, n as usize, &ln_c0, &ln_c)
}

/// `ln[(1/ln kappa + 1) (n+1) C^n / ln^{n+1}(n+1+e)]`; tables must reach `n + 1`.
fn ln_bootstrap_denominator(tables: &LogTables, n: usize, ln_factor: &Float, ln_c: &Float) -> Float {
    let prec = tables.prec();
    let mut v = Float::with_val(prec, ln_c * (n as u64));
    v += ln_factor;
    v += Float::with_val(prec, (n + 1) as u64).ln();
    v -= Float::with_val(prec, tables.ln_ln_shift(n + 1) * ((n + 1) as u64));
    v
}

/// Ratio of the convolution sum to the bootstrap bound
/// `(1/ln kappa + 1)(n+1) C^n / ln^{n+1}(n+1+e)`.
pub fn bootstrap_ratio(n: u64, params: &MajorantParams) -> Result<Float> {
    check_bootstrap_params(params)?;
    let tables = LogTables::new(n as usize + 1, params.prec());
    Ok(BootstrapContext::new(params, &tables).ratio(n as usize))
}

fn check_bootstrap_params(params: &MajorantParams) -> Result<()> {
    let floor = Float::with_val(params.prec(), &params.kappa * &params.c0);
    if params.c < floor {
        return Err(Error::Precondition(format!(
            "C = {} is below kappa*C0 = {floor}",
            params.c
        )));
    }
    Ok(())
}

struct BootstrapContext<'a> {
    tables: &'a LogTables,
    ln_c0: Float,
    ln_c: Float,
    ln_factor: Float,
}

impl<'a> BootstrapContext<'a> {
    fn new(params: &MajorantParams, tables: &'a LogTables) -> Self {
        let prec = tables.prec();
        BootstrapContext {
            tables,
            ln_c0: Float::with_val(prec, params.c0.ln_ref()),
            ln_c: Float::with_val(prec, params.c.ln_ref()),
            ln_factor: Float::with_val(prec, params.kappa_factor().ln_ref()),
        }
    }

    fn ratio(&self, n: usize) -> Float {
        let sum = convolution_sum_with(self.tables, n, &self.ln_c0, &self.ln_c);
        let mut log = sum.log_abs().clone();
        log -= ln_bootstrap_denominator(self.tables, n, &self.ln_factor, &self.ln_c);
        log.exp()
    }
}

/// `{ceil(2^{k/2})}` up to `cap`, deduplicated, with `cap` itself appended.
pub fn geometric_grid(cap: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut k = 0i32;
    loop {
        let v = 2f64.powf(k as f64 / 2.0).ceil() as u64;
        if v > cap {
            break;
        }
        if grid.last() != Some(&v) {
            grid.push(v);
        }
        k += 1;
    }
    if grid.last() != Some(&cap) {
        grid.push(cap);
    }
    grid
}

/// Evaluates the bootstrap ratio over `grid`; `worst_ratio` is the measured `K1`.
pub fn bootstrap_sweep(grid: &[u64], params: &MajorantParams) -> Result<LemmaCheckReport> {
    check_bootstrap_params(params)?;
    let nmax = grid.iter().copied().max().unwrap_or(0) as usize;
    let tables = LogTables::new(nmax + 1, params.prec());
    bootstrap_sweep_with(grid, params, &tables)
}

/// As [`bootstrap_sweep`], reusing tables that reach at least `max(grid) + 1`.
pub fn bootstrap_sweep_with(
    grid: &[u64],
    params: &MajorantParams,
    tables: &LogTables,
) -> Result<LemmaCheckReport> {
    use rayon::prelude::*;
    check_bootstrap_params(params)?;
    let ctx = BootstrapContext::new(params, tables);
    let ratios: Vec<(u64, Float)> = grid
        .par_iter()
        .map(|&n| (n, ctx.ratio(n as usize)))
        .collect();
    let mut report = LemmaCheckReport::new("bootstrap", tables.prec())
        .with_param("c0", crate::report::fmt_sig(&params.c0))
        .with_param("kappa", crate::report::fmt_sig(&params.kappa))
        .with_param("C", crate::report::fmt_sig(&params.c));
    report.n_grid = grid.to_vec();
    for (n, ratio) in ratios {
        let pass = ratio.is_finite() && ratio > 0;
        report.push(CheckRow {
            n,
            j_or_s: None,
            abscissa: None,
            ratio,
            pass,
        });
    }
    report.canonicalize();
    Ok(report)
}
