//! The periodic example `u(x) = e^{-A} exp(A e^{i C0 x})` with `A = 1/(1+C0^2)`:
//! exact derivatives, sup-norm brackets, the Cauchy-estimate bound and the
//! searches showing that neither the logarithmic power nor the factor `kappa`
//! in the envelope can be lowered.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use rug::float::Constant;
use rug::{Complex, Float};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numerics::{touchard, LogMagnitude, LogTables, StirlingTable, TouchardSequence};
use crate::report::fmt_sig;

/// Grid size used when none is requested.
pub const DEFAULT_GRID: usize = 4096;
/// Largest grid reached by automatic refinement.
pub const MAX_GRID: usize = 1 << 17;
/// Relative bracket width at which automatic refinement stops.
pub const TARGET_WIDTH: f64 = 1e-3;
/// Inflation applied to the next derivative's grid maximum.
pub const SAFETY: f64 = 1.1;
/// Agreement required between the two grid evaluation methods.
pub const DUAL_TOLERANCE: f64 = 1e-20;

#[derive(Clone, Debug)]
pub struct SharpExample {
    pub c0: Float,
    pub a: Float,
    pub period: Float,
}

impl SharpExample {
    pub fn new(c0: &Float) -> Result<Self> {
        if *c0 <= 0 {
            return Err(Error::Domain(format!("C0 must be positive, got {c0}")));
        }
        let prec = c0.prec();
        let mut a = Float::with_val(prec, c0.square_ref());
        a += 1u32;
        a.recip_mut();
        let mut period = Float::with_val(prec, Constant::Pi) * 2u32;
        period /= c0;
        Ok(SharpExample { c0: c0.clone(), a, period })
    }

    pub fn prec(&self) -> u32 {
        self.c0.prec()
    }

    /// `sup |d^n W| = A C0^{n+1}` for the first-order coefficient `W = phi'`.
    pub fn w_derivative_norm(&self, n: u64) -> Float {
        Float::with_val(self.prec(), self.c0.pow_ref_u(n + 1)) * &self.a
    }

    /// `sup |d^n V| = A C0^{n+2}` for `V = phi''`.
    pub fn v_derivative_norm(&self, n: u64) -> Float {
        Float::with_val(self.prec(), self.c0.pow_ref_u(n + 2)) * &self.a
    }

    /// `|u^{(n)}(0)| = C0^n T_n(A)`
    pub fn magnitude_at_zero(&self, n: usize) -> LogMagnitude {
        touchard(n, &self.a).mul(&LogMagnitude::from_float(&self.c0).powi(n as u64))
    }
}

trait PowU {
    fn pow_ref_u(&self, k: u64) -> Float;
}

impl PowU for Float {
    fn pow_ref_u(&self, k: u64) -> Float {
        use rug::ops::Pow;
        Float::with_val(self.prec(), self.pow(k as u32))
    }
}

/// `i^n` as a complex number with exact components.
fn i_power(n: usize, prec: u32) -> Complex {
    let (re, im) = match n % 4 {
        0 => (1, 0),
        1 => (0, 1),
        2 => (-1, 0),
        _ => (0, -1),
    };
    Complex::with_val(prec, (re, im))
}

/// `(i C0)^n`
fn i_c0_power(ex: &SharpExample, n: usize) -> Complex {
    let prec = ex.prec();
    i_power(n, prec) * ex.c0.pow_ref_u(n as u64)
}

/// `u^{(n)}(0) = (i C0)^n T_n(A)`
pub fn derivative_at_zero(ex: &SharpExample, n: usize) -> Complex {
    let t = touchard(n, &ex.a).to_float();
    i_c0_power(ex, n) * t
}

/// `u^{(0)}(0), ..., u^{(nmax)}(0)` from `u' = phi' u`, i.e.
/// `u^{(m+1)}(0) = sum_k binom(m,k) phi^{(k+1)}(0) u^{(m-k)}(0)` with
/// `phi^{(j)}(0) = (i C0)^j A`. Independent of the Stirling closed form.
pub fn leibniz_at_zero(ex: &SharpExample, nmax: usize) -> Vec<Complex> {
    let prec = ex.prec();
    let phi: Vec<Complex> = (1..=nmax + 1).map(|j| i_c0_power(ex, j) * &ex.a).collect();
    let mut u = vec![Complex::with_val(prec, 1)];
    for m in 0..nmax {
        let row = crate::numerics::binomial_row(m as u32);
        let mut acc = Complex::new(prec);
        for (k, b) in row.iter().enumerate() {
            acc += Complex::with_val(prec, &phi[k] * &u[m - k]) * Float::with_val(prec, b);
        }
        u.push(acc);
    }
    u
}

fn unit(theta: &Float) -> Complex {
    let prec = theta.prec();
    let (s, c) = theta.clone().sin_cos(Float::new(prec));
    Complex::with_val(prec, (c, s))
}

/// `e^{-A} exp(A z)` for `|z| = 1`.
fn base_value(ex: &SharpExample, z: &Complex) -> Complex {
    let prec = ex.prec();
    let mut w = Complex::with_val(prec, z * &ex.a);
    w -= &ex.a;
    w.exp()
}

/// `sum_k S(n,k) A^k z^k` by Horner's rule.
fn stirling_polynomial(row_coeffs: &[Float], z: &Complex) -> Complex {
    let prec = z.prec().0;
    let mut p = Complex::new(prec);
    for c in row_coeffs.iter().rev() {
        p *= z;
        p += c;
    }
    p
}

fn stirling_coeffs(row: &[rug::Integer], a: &Float) -> Vec<Float> {
    let prec = a.prec();
    let mut power = Float::with_val(prec, 1);
    row.iter()
        .map(|s| {
            let c = Float::with_val(prec, s) * &power;
            power *= a;
            c
        })
        .collect()
}

/// Closed form `u^{(n)}(x) = e^{-A} (i C0)^n e^{A z} sum_k S(n,k) A^k z^k`, `z = e^{i C0 x}`.
pub fn derivative_at(ex: &SharpExample, n: usize, x: &Float) -> Complex {
    let prec = ex.prec();
    let theta = Float::with_val(prec, x * &ex.c0);
    let z = unit(&theta);
    let coeffs = stirling_coeffs(&crate::numerics::stirling_row(n), &ex.a);
    let mut v = stirling_polynomial(&coeffs, &z);
    v *= base_value(ex, &z);
    v * i_c0_power(ex, n)
}

fn grid_units(ex: &SharpExample, grid_size: usize) -> Vec<Complex> {
    let prec = ex.prec();
    let two_pi = Float::with_val(prec, Constant::Pi) * 2u32;
    (0..grid_size)
        .into_par_iter()
        .map(|i| {
            let theta = Float::with_val(prec, &two_pi * i as u64) / grid_size as u64;
            unit(&theta)
        })
        .collect()
}

fn complex_abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// Values of `u^{(0)}, ..., u^{(nmax)}` on the uniform grid `x_i = i period / grid_size`.
///
/// The closed form is checked against the Leibniz recurrence
/// `u^{(m+1)} = sum_k binom(m,k) phi^{(k+1)} u^{(m-k)}` at every order; a
/// disagreement above `1e-20` relative to the order's grid maximum is
/// reported as a precision error.
pub fn derivatives_on_grid(ex: &SharpExample, nmax: usize, grid_size: usize) -> Result<Vec<Vec<Complex>>> {
    if grid_size < 16 {
        return Err(Error::Domain(format!("grid size must be at least 16, got {grid_size}")));
    }
    let prec = ex.prec();
    let table = StirlingTable::new(nmax)?;
    let units = grid_units(ex, grid_size);
    let base: Vec<Complex> = units.par_iter().map(|z| base_value(ex, z)).collect();
    let i_pows: Vec<Complex> = (0..=nmax + 1).map(|k| i_c0_power(ex, k)).collect();

    // Leibniz recurrence, per grid point
    let coeff_rows: Vec<Vec<Complex>> = (0..nmax)
        .map(|m| {
            crate::numerics::binomial_row(m as u32)
                .iter()
                .enumerate()
                .map(|(k, b)| Complex::with_val(prec, &i_pows[k + 1] * Float::with_val(prec, b)) * &ex.a)
                .collect()
        })
        .collect();
    let leibniz: Vec<Vec<Complex>> = units
        .par_iter()
        .zip(&base)
        .map(|(z, u0)| {
            let mut vals = vec![u0.clone()];
            for row in &coeff_rows {
                let m = vals.len() - 1;
                let mut acc = Complex::new(prec);
                for (k, c) in row.iter().enumerate() {
                    acc += Complex::with_val(prec, c * &vals[m - k]);
                }
                acc *= z;
                vals.push(acc);
            }
            vals
        })
        .collect();

    let mut out = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        let coeffs = stirling_coeffs(table.row(n).expect("row within table"), &ex.a);
        let closed: Vec<Complex> = units
            .par_iter()
            .zip(&base)
            .map(|(z, b)| {
                let mut v = stirling_polynomial(&coeffs, z);
                v *= b;
                v * &i_pows[n]
            })
            .collect();
        let mut max_abs = Float::new(prec);
        let mut max_diff = Float::new(prec);
        for (c, l) in closed.iter().zip(&leibniz) {
            max_abs.max_mut(&complex_abs(c));
            max_diff.max_mut(&complex_abs(&Complex::with_val(prec, c - &l[n])));
        }
        if max_diff > Float::with_val(prec, &max_abs * DUAL_TOLERANCE) {
            return Err(Error::Precision(format!(
                "order {n}: grid methods differ by {} relative to {}; retry at higher precision",
                max_diff.to_f64(),
                max_abs.to_f64()
            )));
        }
        out.push(closed);
    }
    Ok(out)
}

pub fn derivative_on_grid(ex: &SharpExample, n: usize, grid_size: usize) -> Result<Vec<Complex>> {
    Ok(derivatives_on_grid(ex, n, grid_size)?.pop().expect("at least one order"))
}

/// Bracket `lower <= ||u^{(n)}||_inf <= upper` from a uniform grid.
#[derive(Clone, Debug)]
pub struct SupNormBracket {
    pub n: u64,
    pub lower: LogMagnitude,
    pub upper: LogMagnitude,
    pub grid_size: usize,
}

impl SupNormBracket {
    /// `upper/lower - 1`
    pub fn relative_width(&self) -> f64 {
        let d = Float::with_val(self.lower.prec(), self.upper.log_abs() - self.lower.log_abs());
        d.exp_m1().to_f64()
    }
}

/// Precomputed scales `C0^m T_m(A)` and normalized Stirling weights for the
/// sup-norm brackets of orders up to `nmax`.
///
/// With `w_k = S(m,k) A^k / T_m(A)`, one has
/// `|u^{(m)}(x)| = C0^m T_m(A) e^{A(cos C0x - 1)} |sum_k w_k e^{ik C0 x}|`; the
/// normalized profile is evaluated in double precision and the scale is kept
/// in log space.
#[derive(Clone, Debug)]
pub struct BracketEngine {
    ex: SharpExample,
    nmax: usize,
    log_scales: Vec<Float>,
    weights: Vec<Vec<f64>>,
}

impl BracketEngine {
    pub fn new(ex: &SharpExample, nmax: usize) -> Result<Self> {
        let top = nmax + 2;
        let table = StirlingTable::new(top)?;
        let prec = ex.prec();
        let ln_c0 = Float::with_val(prec, ex.c0.ln_ref());
        let (log_scales, weights): (Vec<Float>, Vec<Vec<f64>>) = (0..=top)
            .into_par_iter()
            .map(|m| {
                let coeffs = stirling_coeffs(table.row(m).expect("row within table"), &ex.a);
                let mut total = Float::new(prec);
                for c in &coeffs {
                    total += c;
                }
                let w: Vec<f64> = coeffs.iter().map(|c| Float::with_val(prec, c / &total).to_f64()).collect();
                let mut log_scale = total.ln();
                log_scale += Float::with_val(prec, &ln_c0 * m as u64);
                (log_scale, w)
            })
            .unzip();
        Ok(BracketEngine { ex: ex.clone(), nmax, log_scales, weights })
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// `ln(C0^m T_m(A))`
    pub fn log_scale(&self, m: usize) -> &Float {
        &self.log_scales[m]
    }

    /// Grid maximum of the normalized profile of `u^{(m)}`. The grid is
    /// symmetric under `x -> -x`, where the modulus is even.
    pub fn profile_max(&self, m: usize, grid_size: usize) -> f64 {
        let w = &self.weights[m];
        let a = self.ex.a.to_f64();
        (0..=grid_size / 2)
            .into_par_iter()
            .map(|i| {
                let theta = std::f64::consts::TAU * i as f64 / grid_size as f64;
                let z = Complex64::from_polar(1.0, theta);
                let mut p = Complex64::new(0.0, 0.0);
                for c in w.iter().rev() {
                    p = p * z + c;
                }
                p.norm() * (a * (theta.cos() - 1.0)).exp()
            })
            .reduce(|| 0.0, f64::max)
    }

    fn log_grid_max(&self, m: usize, grid_size: usize) -> Float {
        let prec = self.ex.prec();
        Float::with_val(prec, &self.log_scales[m]) + Float::with_val(prec, self.profile_max(m, grid_size)).ln()
    }

    fn assemble(&self, n: usize, grid_size: usize, maxima: [Float; 3]) -> SupNormBracket {
        let prec = self.ex.prec();
        let [m0, m1, m2] = maxima;
        let h = Float::with_val(prec, &self.ex.period / grid_size as u64);
        let ln_h = Float::with_val(prec, h.ln_ref());
        let ln_safety = Float::with_val(prec, SAFETY).ln();
        // mean-value bound: (h/2) 1.1 max|u^{(n+1)}|
        let first = ln_h.clone() - Float::with_val(prec, 2).ln() + &ln_safety + m1;
        // at a maximum of |f|, Re(conj(f) f') = 0, so |f| drops by at most (h^2/8) max|f''|
        let second = Float::with_val(prec, &ln_h * 2u32) - Float::with_val(prec, 8).ln() + &ln_safety + m2;
        let slack = if first < second { first } else { second };
        let lower = LogMagnitude::from_log(m0);
        let upper = lower.add(&LogMagnitude::from_log(slack));
        SupNormBracket { n: n as u64, lower, upper, grid_size }
    }

    pub fn bracket(&self, n: usize, grid_size: usize) -> Result<SupNormBracket> {
        if n > self.nmax {
            return Err(Error::Index(format!("order {n} beyond engine limit {}", self.nmax)));
        }
        if grid_size < 16 {
            return Err(Error::Domain(format!("grid size must be at least 16, got {grid_size}")));
        }
        let maxima = [0, 1, 2].map(|d| self.log_grid_max(n + d, grid_size));
        Ok(self.assemble(n, grid_size, maxima))
    }

    /// Starts at [`DEFAULT_GRID`] and doubles until the relative width is at
    /// most [`TARGET_WIDTH`] or the grid reaches [`MAX_GRID`].
    pub fn bracket_auto(&self, n: usize) -> Result<SupNormBracket> {
        let mut grid = DEFAULT_GRID;
        loop {
            let b = self.bracket(n, grid)?;
            if b.relative_width() <= TARGET_WIDTH || grid >= MAX_GRID {
                return Ok(b);
            }
            grid *= 2;
        }
    }

    /// Brackets for every order `0..=nmax` on one grid.
    pub fn brackets(&self, grid_size: usize) -> Result<Vec<SupNormBracket>> {
        if grid_size < 16 {
            return Err(Error::Domain(format!("grid size must be at least 16, got {grid_size}")));
        }
        let maxima: Vec<Float> = (0..=self.nmax + 2).map(|m| self.log_grid_max(m, grid_size)).collect();
        Ok((0..=self.nmax)
            .map(|n| self.assemble(n, grid_size, [maxima[n].clone(), maxima[n + 1].clone(), maxima[n + 2].clone()]))
            .collect())
    }

    /// Double-precision samples of `u^{(m)}` at `x_i = i period / grid_size`.
    pub fn samples_f64(&self, m: usize, grid_size: usize) -> Vec<Complex64> {
        let w = &self.weights[m];
        let a = self.ex.a.to_f64();
        let scale = self.log_scales[m].to_f64().exp();
        let phase = Complex64::i().powu(m as u32);
        (0..grid_size)
            .into_par_iter()
            .map(|i| {
                let theta = std::f64::consts::TAU * i as f64 / grid_size as f64;
                let z = Complex64::from_polar(1.0, theta);
                let mut p = Complex64::new(0.0, 0.0);
                for c in w.iter().rev() {
                    p = p * z + c;
                }
                // e^{A(z - 1)}
                let e = Complex64::from_polar((a * (theta.cos() - 1.0)).exp(), a * theta.sin());
                phase * e * p * scale
            })
            .collect()
    }
}

pub fn sup_norm_bracket(ex: &SharpExample, n: usize, grid_size: usize) -> Result<SupNormBracket> {
    BracketEngine::new(ex, n)?.bracket(n, grid_size)
}

/// Cauchy-estimate bound `n! r^{-n} e^{-A} e^{A e^{C0 r}}` at a chosen radius
/// and at the numerically minimizing radius.
#[derive(Clone, Debug)]
pub struct CauchyBound {
    pub n: u64,
    pub r: Float,
    pub bound: LogMagnitude,
    pub r_min: Float,
    pub minimized: LogMagnitude,
}

/// `r = ln(n / (A ln n)) / C0`, for which `A e^{C0 r} = n / ln n`.
pub fn default_cauchy_radius(ex: &SharpExample, n: u64) -> Result<Float> {
    let prec = ex.prec();
    if n < 2 {
        return Err(Error::Domain(format!("default radius needs n >= 2, got {n}")));
    }
    let ln_n = Float::with_val(prec, n).ln();
    let mut r = Float::with_val(prec, n) / Float::with_val(prec, &ex.a * &ln_n);
    r = r.ln() / &ex.c0;
    if r <= 0 {
        return Err(Error::Domain(format!("default radius {r} is not positive for n = {n}")));
    }
    Ok(r)
}

fn ln_cauchy(ex: &SharpExample, n: u64, ln_fact: &Float, r: &Float) -> Float {
    let prec = ex.prec();
    let mut v = Float::with_val(prec, ln_fact);
    v -= Float::with_val(prec, r.ln_ref()) * n;
    v -= &ex.a;
    v += Float::with_val(prec, r * &ex.c0).exp() * &ex.a;
    v
}

/// Derivative in `r` of the log bound: `-n/r + A C0 e^{C0 r}`.
fn ln_cauchy_slope(ex: &SharpExample, n: u64, r: &Float) -> Float {
    let prec = ex.prec();
    let growth = Float::with_val(prec, r * &ex.c0).exp() * &ex.a * &ex.c0;
    growth - Float::with_val(prec, n) / r
}

/// Golden-section minimization of the log bound over `r > 0`.
fn minimize_radius(ex: &SharpExample, n: u64, ln_fact: &Float) -> Float {
    let prec = ex.prec();
    let mut lo = Float::with_val(prec, ex.c0.recip_ref());
    while ln_cauchy_slope(ex, n, &lo) >= 0 {
        lo /= 2u32;
    }
    let mut hi = Float::with_val(prec, ex.c0.recip_ref());
    while ln_cauchy_slope(ex, n, &hi) <= 0 {
        hi *= 2u32;
    }
    let inv_phi = (Float::with_val(prec, 5).sqrt() - 1u32) / 2u32;
    let mut x1 = Float::with_val(prec, &hi - &lo) * &inv_phi;
    x1 = Float::with_val(prec, &hi - &x1);
    let mut x2 = Float::with_val(prec, &hi - &lo) * &inv_phi + &lo;
    let mut f1 = ln_cauchy(ex, n, ln_fact, &x1);
    let mut f2 = ln_cauchy(ex, n, ln_fact, &x2);
    let iterations = (prec as f64 * 0.75) as usize + 20;
    for _ in 0..iterations {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = Float::with_val(prec, &hi - Float::with_val(prec, &hi - &lo) * &inv_phi);
            f1 = ln_cauchy(ex, n, ln_fact, &x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = Float::with_val(prec, &lo + Float::with_val(prec, &hi - &lo) * &inv_phi);
            f2 = ln_cauchy(ex, n, ln_fact, &x2);
        }
    }
    if f1 < f2 {
        x1
    } else {
        x2
    }
}

/// Cauchy bound at radius `r` (the default radius when `None`) together with
/// the minimized bound, which never exceeds the bound at the default radius.
pub fn cauchy_bound(ex: &SharpExample, n: u64, r: Option<&Float>) -> Result<CauchyBound> {
    let prec = ex.prec();
    let r = match r {
        Some(r) if *r <= 0 => return Err(Error::Domain(format!("radius must be positive, got {r}"))),
        Some(r) => r.clone(),
        None => default_cauchy_radius(ex, n)?,
    };
    let ln_fact = crate::numerics::log_factorial(n, prec).log_abs().clone();
    let bound = ln_cauchy(ex, n, &ln_fact, &r);
    let (r_min, mut best) = if n == 0 {
        (Float::new(prec), Float::new(prec))
    } else {
        let r_min = minimize_radius(ex, n, &ln_fact);
        let v = ln_cauchy(ex, n, &ln_fact, &r_min);
        (r_min, v)
    };
    let mut r_best = r_min;
    if n >= 2 {
        if let Ok(r_def) = default_cauchy_radius(ex, n) {
            let at_default = ln_cauchy(ex, n, &ln_fact, &r_def);
            if at_default < best {
                best = at_default;
                r_best = r_def;
            }
        }
    }
    Ok(CauchyBound {
        n,
        r,
        bound: LogMagnitude::from_log(bound),
        r_min: r_best,
        minimized: LogMagnitude::from_log(best),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FalsificationTarget {
    LambdaBound,
    KappaBound,
}

impl FalsificationTarget {
    pub fn name(self) -> &'static str {
        match self {
            FalsificationTarget::LambdaBound => "lambda_bound",
            FalsificationTarget::KappaBound => "kappa_bound",
        }
    }
}

/// Outcome of a scan for the smallest `n` at which `|u^{(n)}(0)|` exceeds a
/// proposed bound. Without a violation, `lhs_over_rhs_at_n` is the largest
/// ratio seen and `ratio_n` its index.
#[derive(Clone, Debug)]
pub struct FalsificationResult {
    pub target: FalsificationTarget,
    pub parameters: BTreeMap<String, String>,
    pub violating_n: Option<u64>,
    pub lhs_over_rhs_at_n: Float,
    pub ratio_n: u64,
    pub nmax: u64,
}

impl FalsificationResult {
    pub fn to_json(&self) -> Value {
        json!({
            "target": self.target.name(),
            "parameters": self.parameters,
            "violating_n": self.violating_n,
            "lhs_over_rhs_at_n": fmt_sig(&self.lhs_over_rhs_at_n),
            "ratio_n": self.ratio_n,
            "nmax": self.nmax,
        })
    }
}

/// Scans `n = 0..=nmax` comparing `ln|u^{(n)}(0)|` with `n ln C_eff + ln n! - p n ln ln(n+e)`.
fn scan(ex: &SharpExample, ln_c_eff: &Float, log_power: &Float, nmax: u64) -> (Option<u64>, Float, u64) {
    let prec = ex.prec();
    let ln_c0 = Float::with_val(prec, ex.c0.ln_ref());
    let mut seq = TouchardSequence::new(&ex.a);
    let tables = LogTables::new(nmax as usize, prec);
    let mut best: Option<(Float, u64)> = None;
    for n in 0..=nmax {
        if n > 0 {
            seq.advance();
        }
        let mut lhs = Float::with_val(prec, seq.values()[n as usize].ln_ref());
        lhs += Float::with_val(prec, &ln_c0 * n);
        let mut rhs = Float::with_val(prec, ln_c_eff * n);
        rhs += tables.ln_factorial(n as usize);
        rhs -= Float::with_val(prec, tables.ln_ln_shift(n as usize) * log_power) * n;
        let log_ratio = lhs - rhs;
        if log_ratio > 0 {
            return (Some(n), log_ratio.exp(), n);
        }
        if best.as_ref().is_none_or(|(b, _)| log_ratio > *b) {
            best = Some((log_ratio, n));
        }
    }
    let (b, n) = best.expect("scan covers n = 0");
    (None, b.exp(), n)
}

/// Smallest `n <= nmax` with `C0^n T_n(A) > C^n n! / ln^{lambda n}(n+e)`.
pub fn falsify_lambda(ex: &SharpExample, c: &Float, lambda: &Float, nmax: u64) -> Result<FalsificationResult> {
    if *c <= 0 {
        return Err(Error::Domain(format!("C must be positive, got {c}")));
    }
    if *lambda < 1 {
        return Err(Error::Domain(format!("lambda must be at least 1, got {lambda}")));
    }
    let ln_c = Float::with_val(ex.prec(), c.ln_ref());
    let (violating_n, ratio, ratio_n) = scan(ex, &ln_c, lambda, nmax);
    let mut parameters = BTreeMap::new();
    parameters.insert("c0".into(), fmt_sig(&ex.c0));
    parameters.insert("C".into(), fmt_sig(c));
    parameters.insert("lambda".into(), fmt_sig(lambda));
    Ok(FalsificationResult {
        target: FalsificationTarget::LambdaBound,
        parameters,
        violating_n,
        lhs_over_rhs_at_n: ratio,
        ratio_n,
        nmax,
    })
}

/// Smallest `n <= nmax` with `C0^n T_n(A) > (kappa C0 + C)^n n! / ln^n(n+e)`.
pub fn falsify_kappa(ex: &SharpExample, kappa: &Float, c: &Float, nmax: u64) -> Result<FalsificationResult> {
    if *kappa <= 0 || *kappa >= 1 {
        return Err(Error::Domain(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    if *c <= 0 {
        return Err(Error::Domain(format!("C must be positive, got {c}")));
    }
    let prec = ex.prec();
    let c_eff = Float::with_val(prec, kappa * &ex.c0) + c;
    let ln_c = c_eff.ln();
    let (violating_n, ratio, ratio_n) = scan(ex, &ln_c, &Float::with_val(prec, 1), nmax);
    let mut parameters = BTreeMap::new();
    parameters.insert("c0".into(), fmt_sig(&ex.c0));
    parameters.insert("C".into(), fmt_sig(c));
    parameters.insert("kappa".into(), fmt_sig(kappa));
    Ok(FalsificationResult {
        target: FalsificationTarget::KappaBound,
        parameters,
        violating_n,
        lhs_over_rhs_at_n: ratio,
        ratio_n,
        nmax,
    })
}

/// `C0^n T_n(A) / [(kappa C0 + C)^n n! / ln^n(n+e)]` at a single `n`.
pub fn kappa_ratio(ex: &SharpExample, kappa: &Float, c: &Float, n: u64) -> Float {
    let prec = ex.prec();
    let c_eff = Float::with_val(prec, kappa * &ex.c0) + c;
    let envelope = crate::majorant::closed_majorant(n, &c_eff);
    ex.magnitude_at_zero(n as usize).ratio(&envelope)
}

/// `C0^n T_n(A) / [C^n n! / ln^{lambda n}(n+e)]` at a single `n`.
pub fn lambda_ratio(ex: &SharpExample, c: &Float, lambda: &Float, n: u64) -> Float {
    let prec = ex.prec();
    let mut log = ex.magnitude_at_zero(n as usize).log_abs().clone();
    log -= crate::majorant::closed_majorant(n, c).log_abs();
    let extra = Float::with_val(prec, lambda - 1u32) * n;
    log += crate::numerics::ln_shift_e(n, prec).ln() * extra;
    log.exp()
}

/// `|u(iy)| = e^{-A} e^{A e^{-C0 y}}`
pub fn imaginary_axis_growth(ex: &SharpExample, y: &Float) -> LogMagnitude {
    let prec = ex.prec();
    let mut log = (-Float::with_val(prec, y * &ex.c0)).exp();
    log -= 1u32;
    log *= &ex.a;
    LogMagnitude::from_log(log)
}

/// CSV with columns `n, log_sup_lower, log_sup_upper, log_cauchy_bound,
/// log_theorem_envelope, margin`; the margin is `log_theorem_envelope - log_sup_upper`.
pub fn sharp_table(ex: &SharpExample, brackets: &[SupNormBracket], envelope_c: &Float) -> Result<String> {
    let mut out = String::from("n,log_sup_lower,log_sup_upper,log_cauchy_bound,log_theorem_envelope,margin\n");
    for b in brackets {
        let cauchy = if b.n == 0 {
            LogMagnitude::one(ex.prec())
        } else {
            cauchy_bound(ex, b.n, Some(&Float::with_val(ex.prec(), ex.c0.recip_ref())))?.minimized
        };
        let envelope = crate::majorant::closed_majorant(b.n, envelope_c);
        let margin = Float::with_val(ex.prec(), envelope.log_abs() - b.upper.log_abs());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            b.n,
            fmt_sig(b.lower.log_abs()),
            fmt_sig(b.upper.log_abs()),
            fmt_sig(cauchy.log_abs()),
            fmt_sig(envelope.log_abs()),
            fmt_sig(&margin)
        ));
    }
    Ok(out)
}
