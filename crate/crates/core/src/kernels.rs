//! Bessel potential kernels `G_s` on `R^d`, evaluated by quadrature after the
//! substitution `t = e^v`, and checks of their local, decay and gradient bounds.

use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::report::{CheckRow, LemmaCheckReport};

/// Largest dimension handled by the radial reductions.
pub const MAX_DIM: u32 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureConfig {
    /// Relative tolerance of every one-dimensional integral.
    pub tolerance: f64,
    /// Tails are cut where the log-integrand falls this far below its peak.
    pub tail_drop: f64,
    /// Maximum bisection depth of the adaptive driver.
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { tolerance: 1e-12, tail_drop: 60.0, max_depth: 12 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    pub s: f64,
    pub d: u32,
    pub quadrature: QuadratureConfig,
}

impl KernelParams {
    pub fn new(s: f64, d: u32) -> Result<Self> {
        let p = KernelParams { s, d, quadrature: QuadratureConfig::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        self.quadrature.tolerance = tolerance;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::Domain(format!("s must be positive, got {}", self.s)));
        }
        if self.d == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(self.quadrature.tolerance > 0.0) {
            return Err(Error::Domain("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }

    fn require_radial(&self) -> Result<()> {
        if self.d > MAX_DIM {
            return Err(Error::Domain(format!("radial integrals need d <= {MAX_DIM}, got {}", self.d)));
        }
        Ok(())
    }

    /// `(2 sqrt(pi))^{-d} / Gamma(s/2)`
    pub fn normalization(&self) -> f64 {
        let gamma = Float::with_val(64, self.s / 2.0).gamma().to_f64();
        (2.0 * std::f64::consts::PI.sqrt()).powi(-(self.d as i32)) / gamma
    }

    /// `(s - d)/2`
    fn exponent(&self) -> f64 {
        (self.s - self.d as f64) / 2.0
    }
}

/// Result of an adaptive quadrature.
#[derive(Clone, Copy, Debug)]
struct Integral {
    value: f64,
    error: f64,
    evaluations: u32,
}

/// Double-exponential quadrature with bisection until each piece meets `abs_tol`.
fn adaptive<F: Fn(f64) -> f64 + Copy>(f: F, lo: f64, hi: f64, abs_tol: f64, depth: u32) -> Integral {
    let o = quadrature::integrate(f, lo, hi, abs_tol);
    // below a few ulps of the piece the estimate is rounding noise
    let floor = 8.0 * f64::EPSILON * o.integral.abs();
    if o.error_estimate <= abs_tol.max(floor) || depth == 0 {
        return Integral { value: o.integral, error: o.error_estimate, evaluations: o.num_function_evaluations };
    }
    let mid = 0.5 * (lo + hi);
    let a = adaptive(f, lo, mid, abs_tol / 2.0, depth - 1);
    let b = adaptive(f, mid, hi, abs_tol / 2.0, depth - 1);
    Integral { value: a.value + b.value, error: a.error + b.error, evaluations: a.evaluations + b.evaluations }
}

/// `J(a, r) = int_R exp(-e^v - (r^2/4) e^{-v} + a v) dv`, returned as
/// `(ln J, number of integrand evaluations)`.
fn log_j(a: f64, r: f64, cfg: &QuadratureConfig) -> Result<(f64, u32)> {
    let q = r * r / 4.0;
    if q == 0.0 && a <= 0.0 {
        return Err(Error::Singularity(format!("integral diverges at r = 0 with exponent {a}")));
    }
    // peak: e^v solves -x^2 + a x + r^2/4 = 0
    let root = (a * a + r * r).sqrt();
    let x_peak = if a >= 0.0 { (a + root) / 2.0 } else { q * 2.0 / (root - a) };
    let v_peak = x_peak.ln();
    let g = |v: f64| -v.exp() - q * (-v).exp() + a * v;
    let g_peak = g(v_peak);
    let width = 1.0 / (x_peak + q / x_peak).sqrt();
    let reach = |dir: f64| {
        let mut step = width;
        while g(v_peak + dir * step) - g_peak > -cfg.tail_drop {
            step *= 2.0;
        }
        v_peak + dir * step
    };
    let (lo, hi) = (reach(-1.0), reach(1.0));
    let f = move |v: f64| {
        let e = -v.exp() - q * (-v).exp() + a * v - g_peak;
        e.exp()
    };
    let abs_tol = cfg.tolerance * width;
    let left = adaptive(f, lo, v_peak, abs_tol / 2.0, cfg.max_depth);
    let right = adaptive(f, v_peak, hi, abs_tol / 2.0, cfg.max_depth);
    let value = left.value + right.value;
    let error = left.error + right.error;
    if !(value > 0.0) || !(error <= cfg.tolerance * value * 10.0) {
        return Err(Error::ToleranceNotMet(format!(
            "kernel integral at a = {a}, r = {r}: estimate {value:e} with error {error:e}"
        )));
    }
    Ok((g_peak + value.ln(), left.evaluations + right.evaluations))
}

/// `ln G_s(r)`
pub fn log_bessel_kernel(params: &KernelParams, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
    }
    if r == 0.0 && params.s <= params.d as f64 {
        return Err(Error::Singularity(format!(
            "G_s is singular at the origin for s = {} <= d = {}",
            params.s, params.d
        )));
    }
    let (lj, _) = log_j(params.exponent(), r, &params.quadrature)?;
    Ok(params.normalization().ln() + lj)
}

/// `G_s(r)`, `r = |x|`.
pub fn bessel_kernel(params: &KernelParams, r: f64) -> Result<f64> {
    Ok(log_bessel_kernel(params, r)?.exp())
}

/// `|d/dr G_s(r)| = (2 sqrt(pi))^{-d}/Gamma(s/2) (r/2) J((s-d)/2 - 1, r)`
pub fn kernel_radial_derivative(params: &KernelParams, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain(format!("radial derivative needs r > 0, got {r}")));
    }
    let (lj, _) = log_j(params.exponent() - 1.0, r, &params.quadrature)?;
    Ok((params.normalization().ln() + (r / 2.0).ln() + lj).exp())
}

/// Surface measure of the unit sphere in `R^d` for `d <= 3`.
pub fn sphere_area(d: u32) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("sphere_area supports d <= 3"),
    }
}

/// `|S^{d-1}| int_0^inf f(r) r^{d-1} dr` with `r = e^rho`, cut at `r_min` and `r_max`.
fn radial_integral<F>(d: u32, f: F, r_min: f64, r_max: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let integrand = |rho: f64| {
        let r = rho.exp();
        f(r).map(|v| v * r.powi(d as i32)).unwrap_or(f64::NAN)
    };
    // panels of unit width in rho keep each piece smooth
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let panels = ((hi - lo).ceil() as usize).max(1);
    let step = (hi - lo) / panels as f64;
    let parts: Vec<Integral> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let a = lo + step * k as f64;
            adaptive(integrand, a, a + step, cfg.tolerance * 1e-2, cfg.max_depth)
        })
        .collect();
    let value: f64 = parts.iter().map(|p| p.value).sum();
    let error: f64 = parts.iter().map(|p| p.error).sum();
    if !value.is_finite() || error > cfg.tolerance.max(1e-10) * value.abs() * 100.0 {
        return Err(Error::ToleranceNotMet(format!("radial integral {value:e} with error {error:e}")));
    }
    Ok(sphere_area(d) * value)
}

/// Lower radial cutoff below which the neglected mass is under `1e-14`.
fn radial_floor(local_exponent: f64) -> f64 {
    (1e-14f64.ln() / local_exponent.max(0.25)).exp().max(1e-300)
}

/// `int_{R^d} G_s`, expected to equal 1.
pub fn kernel_mass(params: &KernelParams) -> Result<f64> {
    params.require_radial()?;
    let local = params.s.min(params.d as f64);
    radial_integral(params.d, |r| bessel_kernel(params, r), radial_floor(local), 80.0, &params.quadrature)
}

/// `int_{R^d} |grad G_2|`
pub fn grad_kernel_l1(d: u32) -> Result<f64> {
    let params = KernelParams::new(2.0, d)?;
    params.require_radial()?;
    // |grad G_2| ~ r^{1-d} near 0, so the weighted integrand behaves like r
    radial_integral(d, |r| kernel_radial_derivative(&params, r), radial_floor(1.0), 80.0, &params.quadrature)
}

/// `n` log-spaced points from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Local majorant near the origin: `1 + r^{s-d}`, `1 + ln(2/r)` or `1`.
pub fn local_majorant(params: &KernelParams, r: f64) -> f64 {
    let d = params.d as f64;
    if params.s < d {
        1.0 + r.powf(params.s - d)
    } else if params.s == d {
        1.0 + (2.0 / r).ln()
    } else {
        1.0
    }
}

/// Points used by the kernel checks: near the origin (`1e-6 <= r < 2`) and far (`2 <= r <= 40`).
pub fn near_grid() -> Vec<f64> {
    let mut g = log_grid(1e-6, 2.0, 61);
    g.pop();
    g
}

pub fn far_grid() -> Vec<f64> {
    (0..=38).map(|k| 2.0 + k as f64).collect()
}

const NEAR: i64 = 0;
const FAR: i64 = 1;

fn row(index: usize, region: i64, r: f64, ratio: f64) -> CheckRow {
    CheckRow {
        n: index as u64,
        j_or_s: Some(region),
        abscissa: Some(r),
        ratio: Float::with_val(53, ratio),
        pass: ratio.is_finite() && ratio > 0.0,
    }
}

/// Sample of a kernel sweep: `(region, r, G_s(r), ratio)`.
#[derive(Clone, Debug)]
pub struct KernelSample {
    pub region: i64,
    pub r: f64,
    pub value: f64,
    pub ratio: f64,
}

/// `G_s / local majorant` on the near grid and `G_s e^{r/2}` on the far grid.
pub fn kernel_samples(params: &KernelParams) -> Result<Vec<KernelSample>> {
    params.require_radial()?;
    let near = near_grid();
    let far = far_grid();
    let points: Vec<(i64, f64)> = near
        .iter()
        .map(|&r| (NEAR, r))
        .chain(far.iter().map(|&r| (FAR, r)))
        .collect();
    points
        .par_iter()
        .map(|&(region, r)| {
            let value = bessel_kernel(params, r)?;
            let ratio = if region == NEAR { value / local_majorant(params, r) } else { value * (r / 2.0).exp() };
            Ok(KernelSample { region, r, value, ratio })
        })
        .collect()
}

pub fn check_kernel_bounds(params: &KernelParams) -> Result<LemmaCheckReport> {
    let samples = kernel_samples(params)?;
    let mut report = LemmaCheckReport::new("kernel_bounds", 53)
        .with_param("s", params.s)
        .with_param("d", params.d);
    report.notes.push("j_or_s = 0: ratio to the local majorant for r < 2; j_or_s = 1: G_s e^{r/2} for 2 <= r <= 40".into());
    for (i, smp) in samples.iter().enumerate() {
        report.push(row(i, smp.region, smp.r, smp.ratio));
    }
    Ok(report)
}

/// CSV with columns `s, d, r, G_value, bound_ratio`.
pub fn kernel_table(params: &KernelParams) -> Result<String> {
    use crate::report::fmt_sig_f64;
    let mut out = String::from("s,d,r,G_value,bound_ratio\n");
    for smp in kernel_samples(params)? {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            params.s,
            params.d,
            fmt_sig_f64(smp.r),
            fmt_sig_f64(smp.value),
            fmt_sig_f64(smp.ratio)
        ));
    }
    Ok(out)
}

/// `|d/dr G_s(r)| / G_{s-1}(r/sqrt 2)` on a log grid over `[1e-6, 40]`.
pub fn check_grad_bound(params: &KernelParams) -> Result<LemmaCheckReport> {
    params.require_radial()?;
    if params.s <= 1.0 {
        return Err(Error::Domain(format!("gradient bound needs s > 1, got {}", params.s)));
    }
    let lower = KernelParams { s: params.s - 1.0, ..params.clone() };
    let grid = log_grid(1e-6, 40.0, 81);
    let ratios: Vec<Result<f64>> = grid
        .par_iter()
        .map(|&r| {
            let num = kernel_radial_derivative(params, r)?;
            let den = bessel_kernel(&lower, r / std::f64::consts::SQRT_2)?;
            Ok(num / den)
        })
        .collect();
    let mut report = LemmaCheckReport::new("kernel_grad", 53)
        .with_param("s", params.s)
        .with_param("d", params.d);
    for (i, (r, ratio)) in grid.iter().zip(ratios).enumerate() {
        report.push(row(i, NEAR, *r, ratio?));
    }
    Ok(report)
}
