//! One function per subcommand. Each returns the data file body in the
//! requested format plus a pass/fail verdict.

use clap::{Args, ValueEnum};
use rug::Float;
use serde_json::{json, Value};
use ultrana_core::report::{fmt_sig, fmt_sig_f64, LemmaCheckReport};
use ultrana_core::{acceptance, holder, kernels, majorant, multiindex, propagator, sharp_example};

use crate::config::{Format, RunConfig};
use crate::{CliError, Outcome};

fn render(cfg: &RunConfig, csv: String, json: Value, passed: bool, summary: Value) -> Outcome {
    let data = match cfg.format {
        Format::Csv => csv,
        Format::Json => serde_json::to_string_pretty(&json).expect("report serializes") + "\n",
    };
    Outcome { data, passed, summary }
}

fn report_outcome(cfg: &RunConfig, report: &LemmaCheckReport) -> Outcome {
    let summary = json!({
        "lemma_id": report.lemma_id,
        "worst_ratio": fmt_sig(&report.worst_ratio),
        "violations": report.violations.len(),
    });
    render(cfg, report.to_csv(), report.to_json(), report.passed(), summary)
}

fn single(values: Vec<String>, what: &str) -> Result<String, CliError> {
    match <[String; 1]>::try_from(values) {
        Ok([v]) => Ok(v),
        Err(v) => Err(CliError::Usage(format!("this command takes one {what}, got {}", v.len()))),
    }
}

fn real_param(cfg: &RunConfig, flag: &Option<String>, key: &str, default: &str) -> Result<Float, CliError> {
    cfg.real(&cfg.param(flag, key).unwrap_or_else(|| default.to_string()))
}

fn int_param<T: std::str::FromStr>(cfg: &RunConfig, flag: &Option<String>, key: &str, default: T) -> Result<T, CliError> {
    match cfg.param(flag, key) {
        None => Ok(default),
        Some(t) => t.trim().parse().map_err(|_| CliError::Usage(format!("{key} must be an integer, got {t:?}"))),
    }
}

fn f64_of(x: &Float) -> f64 {
    x.to_f64()
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Lemma {
    Monotonicity,
    Threshold,
    Gaussian,
    Supergaussian,
    Dn,
    LogShift,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Offset {
    Zero,
    Plus,
    Minus,
}

#[derive(Debug, Args)]
pub struct MajorantArgs {
    #[arg(long, value_enum, default_value = "monotonicity")]
    lemma: Lemma,
    /// Offset s for the Gaussian regime
    #[arg(long, value_enum, default_value = "zero")]
    offset: Offset,
    /// Exponent L > 1 for the super-Gaussian regime (default 3)
    #[arg(long = "L")]
    l: Option<String>,
    /// First order scanned by `--lemma threshold` (default 100)
    #[arg(long)]
    start: Option<String>,
}

pub fn majorant(a: &MajorantArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prec = cfg.precision_bits;
    match a.lemma {
        Lemma::Monotonicity => Ok(report_outcome(cfg, &majorant::check_monotonicity(cfg.nmax_or(100_000), prec)?)),
        Lemma::Dn => Ok(report_outcome(cfg, &majorant::check_dn(cfg.nmax_or(1_000_000), prec)?)),
        Lemma::Gaussian => {
            let offset = match a.offset {
                Offset::Zero => majorant::GaussianOffset::Zero,
                Offset::Plus => majorant::GaussianOffset::Plus,
                Offset::Minus => majorant::GaussianOffset::Minus,
            };
            let grid = asymptotic_grid(cfg.nmax_or(100_000));
            Ok(report_outcome(cfg, &majorant::gaussian_sweep(&grid, offset, prec)?))
        }
        Lemma::Supergaussian => {
            let l = real_param(cfg, &a.l, "L", "3")?;
            let grid = asymptotic_grid(cfg.nmax_or(100_000));
            Ok(report_outcome(cfg, &majorant::supergaussian_sweep(&grid, &l)?))
        }
        Lemma::Threshold => {
            let start = int_param(cfg, &a.start, "start", 100u64)?;
            let stop = cfg.nmax_or(2000);
            let found = majorant::monotonicity_threshold(start, stop, prec)?;
            let n_star = found.map(|n| n.to_string()).unwrap_or_default();
            let csv = format!("start,stop,n_star\n{start},{stop},{n_star}\n");
            let body = json!({ "start": start, "stop": stop, "n_star": found });
            Ok(render(cfg, csv, body.clone(), found.is_some(), body))
        }
        Lemma::LogShift => {
            let nmax = cfg.nmax_or(1_000_000);
            let s = majorant::log_shift_summary(nmax, prec)?;
            let passed = s.sup.is_finite() && s.nonincreasing_after_max && s.at_nmax <= 1.001;
            let csv = format!(
                "nmax,sup,argmax,value_at_nmax,nonincreasing_after_max\n{nmax},{},{},{},{}\n",
                fmt_sig(&s.sup),
                s.argmax,
                fmt_sig(&s.at_nmax),
                s.nonincreasing_after_max
            );
            let body = json!({
                "nmax": nmax,
                "sup": fmt_sig(&s.sup),
                "argmax": s.argmax,
                "value_at_nmax": fmt_sig(&s.at_nmax),
                "nonincreasing_after_max": s.nonincreasing_after_max,
            });
            Ok(render(cfg, csv, body.clone(), passed, body))
        }
    }
}

/// Geometric grid from 16, where every Gaussian offset is in range.
fn asymptotic_grid(cap: u64) -> Vec<u64> {
    majorant::geometric_grid(cap).into_iter().filter(|&n| n >= 16).collect()
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    /// Envelope slack K >= 0 (default 0)
    #[arg(long = "K")]
    k: Option<String>,
    /// Explicit C, replacing kappa C0 + K (1/ln kappa + 1); must be at least kappa C0
    #[arg(long = "C")]
    c: Option<String>,
}

pub fn bootstrap_ratio(a: &BootstrapArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = majorant::geometric_grid(cfg.nmax_or(100_000));
    let k = real_param(cfg, &a.k, "K", "0")?;
    let mut csv = String::from("c0,kappa,C,n,R\n");
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    for c0_text in cfg.c0_values("1") {
        for kappa_text in cfg.kappa_values("2") {
            let mut params = majorant::MajorantParams::new(cfg.real(&c0_text)?, cfg.real(&kappa_text)?, k.clone())?;
            if let Some(c) = cfg.param(&a.c, "C") {
                params = params.with_c(cfg.real(&c)?)?;
            }
            let report = majorant::bootstrap_sweep(&grid, &params)?;
            let c = fmt_sig(&params.c);
            for row in &report.rows {
                csv.push_str(&format!("{c0_text},{kappa_text},{c},{},{}\n", row.n, fmt_sig(&row.ratio)));
            }
            passed &= report.passed();
            summary.push(json!({ "c0": c0_text, "kappa": kappa_text, "C": c, "K1": fmt_sig(&report.worst_ratio) }));
            let mut body = report.to_json();
            body["params"]["c0"] = json!(c0_text);
            body["params"]["kappa"] = json!(kappa_text);
            reports.push(body);
        }
    }
    Ok(render(cfg, csv, Value::Array(reports), passed, Value::Array(summary)))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    /// Interpolation constant c_p >= 1 for the second-order base case (default 2)
    #[arg(long)]
    cp: Option<String>,
    #[arg(long, value_enum, default_value = "second")]
    order: Order,
}

fn propagate_sequence(cfg: &RunConfig, c0: &Float, cp: &Option<String>, order: Order, n: usize) -> Result<propagator::BoundSequence, CliError> {
    Ok(match order {
        Order::Second => {
            let base = propagator::base_case(&real_param(cfg, cp, "cp", "2")?)?;
            propagator::propagate_second_order(c0, &base, n)?
        }
        Order::First => propagator::propagate_first_order(c0, n)?,
    })
}

pub fn propagate(a: &PropagateArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c0_text = single(cfg.c0_values("1"), "C0")?;
    let kappa_text = single(cfg.kappa_values("2"), "kappa")?;
    let (c0, kappa) = (cfg.real(&c0_text)?, cfg.real(&kappa_text)?);
    let seq = propagate_sequence(cfg, &c0, &a.cp, a.order, cfg.nmax_or(500) as usize)?;
    let k = propagator::fit_k(&seq, &kappa, &c0)?;
    let c = majorant::envelope_constant(&c0, &kappa, &k);
    let summary = json!({ "c0": c0_text, "kappa": kappa_text, "K": fmt_sig(&k), "C": fmt_sig(&c), "N": seq.len() - 1 });
    let mut body = seq.to_json();
    body["fit"] = summary.clone();
    Ok(render(cfg, seq.to_csv(&c), body, k.is_finite(), summary))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Source {
    Propagator,
    Sharp,
}

#[derive(Debug, Args)]
pub struct FitKArgs {
    #[arg(long, value_enum, default_value = "propagator")]
    source: Source,
    #[arg(long)]
    cp: Option<String>,
    #[arg(long, value_enum, default_value = "second")]
    order: Order,
}

pub fn fit_k(a: &FitKArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut csv = String::from("c0,kappa,K,C,implied_tail_decreasing\n");
    let mut rows = Vec::new();
    let mut passed = true;
    for c0_text in cfg.c0_values("1") {
        let c0 = cfg.real(&c0_text)?;
        let (logs, decreasing) = match a.source {
            Source::Propagator => {
                let seq = propagate_sequence(cfg, &c0, &a.cp, a.order, cfg.nmax_or(500) as usize)?;
                let logs = seq.log_values();
                let implied = propagator::implied_constants(&logs, None);
                let window = 100.min(implied.len());
                (logs, Some(propagator::decreasing_tail(&implied, window)))
            }
            Source::Sharp => {
                let ex = sharp_example::SharpExample::new(&c0)?;
                let nmax = cfg.nmax_or(200) as usize;
                let brackets = acceptance::refined_brackets(&ex, nmax, cfg.grid_or(sharp_example::DEFAULT_GRID))?;
                (brackets.iter().map(|b| b.upper.log_abs().clone()).collect(), None)
            }
        };
        for kappa_text in cfg.kappa_values("2") {
            let kappa = cfg.real(&kappa_text)?;
            let k = propagator::fit_k_logs(&logs, &kappa, &c0, None)?;
            let c = majorant::envelope_constant(&c0, &kappa, &k);
            passed &= k.is_finite() && decreasing.unwrap_or(true);
            let dec = decreasing.map(|d| d.to_string()).unwrap_or_default();
            csv.push_str(&format!("{c0_text},{kappa_text},{},{},{dec}\n", fmt_sig(&k), fmt_sig(&c)));
            rows.push(json!({
                "c0": c0_text, "kappa": kappa_text, "K": fmt_sig(&k), "C": fmt_sig(&c),
                "implied_tail_decreasing": decreasing,
            }));
        }
    }
    let body = Value::Array(rows);
    Ok(render(cfg, csv, body.clone(), passed, body))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Falsify {
    Lambda,
    Kappa,
}

#[derive(Debug, Args)]
pub struct SharpArgs {
    /// Search for the first order violating a candidate bound instead of tabulating brackets
    #[arg(long, value_enum)]
    falsify: Option<Falsify>,
    /// Exponent of the candidate bound C^n n!/ln^(lambda n)(n+e) (default 2)
    #[arg(long)]
    lambda: Option<String>,
    /// Constant of the candidate bound
    #[arg(long = "C")]
    c: Option<String>,
}

pub fn sharp(a: &SharpArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c0_text = single(cfg.c0_values("1"), "C0")?;
    let ex = sharp_example::SharpExample::new(&cfg.real(&c0_text)?)?;
    let result = match a.falsify {
        None => return sharp_brackets(cfg, &ex, &c0_text),
        Some(Falsify::Lambda) => {
            let lambda = real_param(cfg, &a.lambda, "lambda", "2")?;
            let c = real_param(cfg, &a.c, "C", "5")?;
            sharp_example::falsify_lambda(&ex, &c, &lambda, cfg.nmax_or(2000))?
        }
        Some(Falsify::Kappa) => {
            let kappa = cfg.real(&single(cfg.kappa_values("0.5"), "kappa")?)?;
            let c = real_param(cfg, &a.c, "C", "1")?;
            sharp_example::falsify_kappa(&ex, &kappa, &c, cfg.nmax_or(5000))?
        }
    };
    let body = result.to_json();
    let csv = format!(
        "target,c0,violating_n,lhs_over_rhs_at_n,ratio_n,nmax\n{},{c0_text},{},{},{},{}\n",
        body["target"].as_str().unwrap_or_default(),
        result.violating_n.map(|n| n.to_string()).unwrap_or_default(),
        fmt_sig(&result.lhs_over_rhs_at_n),
        result.ratio_n,
        result.nmax
    );
    Ok(render(cfg, csv, body.clone(), true, body))
}

fn sharp_brackets(cfg: &RunConfig, ex: &sharp_example::SharpExample, c0_text: &str) -> Result<Outcome, CliError> {
    let kappa_text = single(cfg.kappa_values("2"), "kappa")?;
    let kappa = cfg.real(&kappa_text)?;
    let nmax = cfg.nmax_or(200) as usize;
    let brackets = acceptance::refined_brackets(ex, nmax, cfg.grid_or(sharp_example::DEFAULT_GRID))?;
    let k = acceptance::fit_example_k(&brackets, nmax, &kappa, &ex.c0)?;
    let c = majorant::envelope_constant(&ex.c0, &kappa, &k);
    let csv = sharp_example::sharp_table(ex, &brackets, &c)?;
    let widest = brackets.iter().map(|b| b.relative_width()).fold(0.0, f64::max);
    let summary = json!({
        "c0": c0_text, "kappa": kappa_text, "K": fmt_sig(&k), "C": fmt_sig(&c),
        "max_relative_width": fmt_sig_f64(widest),
    });
    let rows: Vec<Value> = brackets
        .iter()
        .map(|b| {
            json!({
                "n": b.n,
                "log_lower": fmt_sig(b.lower.log_abs()),
                "log_upper": fmt_sig(b.upper.log_abs()),
                "grid_size": b.grid_size,
            })
        })
        .collect();
    let body = json!({ "fit": summary, "brackets": rows });
    let passed = k.is_finite() && widest <= sharp_example::TARGET_WIDTH;
    Ok(render(cfg, csv, body, passed, summary))
}

#[derive(Debug, Args)]
pub struct MultiindexArgs {
    /// Largest dimension for the exhaustive identity sweep (default 4)
    #[arg(long)]
    dmax: Option<String>,
    /// Largest order for the exhaustive identity sweep (default 8)
    #[arg(long)]
    order_max: Option<String>,
    /// Number of random reduction cases (default 100)
    #[arg(long)]
    count: Option<String>,
    /// Largest order of a random reduction case (default 12)
    #[arg(long)]
    reduction_order: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

pub fn multiindex(a: &MultiindexArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sweep = multiindex::vandermonde_sweep(int_param(cfg, &a.dmax, "dmax", 4)?, int_param(cfg, &a.order_max, "order_max", 8)?)?;
    let count = int_param(cfg, &a.count, "count", 100usize)?;
    let order = int_param(cfg, &a.reduction_order, "reduction_order", 12u32)?;
    let seed = int_param(cfg, &a.seed, "seed", 1u64)?;
    let checks = multiindex::random_reduction_checks(count, 3, order, seed, cfg.precision_bits)?;
    let failed: Vec<Value> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| json!({ "alpha": c.alpha.to_string(), "relative_difference": fmt_sig(&c.relative_difference) }))
        .collect();
    let passed = sweep.passed() && failed.is_empty();
    let summary = json!({
        "vandermonde": sweep.to_json(),
        "reduction": { "cases": checks.len(), "seed": seed, "failures": failed },
    });
    Ok(render(cfg, sweep.failures_csv(), summary.clone(), passed, summary))
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Order s > 0 (default 2)
    #[arg(long)]
    s: Option<String>,
    /// Dimension 1 to 3 (default 1)
    #[arg(long)]
    d: Option<String>,
}

pub fn kernel(a: &KernelArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = f64_of(&real_param(cfg, &a.s, "s", "2")?);
    let d = int_param(cfg, &a.d, "d", 1u32)?;
    let params = kernels::KernelParams::new(s, d)?;
    let bounds = kernels::check_kernel_bounds(&params)?;
    let grad = if s > 1.0 { Some(kernels::check_grad_bound(&params)?) } else { None };
    let mass = kernels::kernel_mass(&params)?;
    let grad_l1 = if s == 2.0 { Some(kernels::grad_kernel_l1(d)?) } else { None };
    let passed = bounds.passed() && grad.as_ref().is_none_or(|g| g.passed());
    let summary = json!({
        "s": s, "d": d,
        "mass": fmt_sig_f64(mass),
        "grad_l1": grad_l1.map(fmt_sig_f64),
        "worst_decay_ratio": fmt_sig(&bounds.worst_ratio),
        "worst_gradient_ratio": grad.as_ref().map(|g| fmt_sig(&g.worst_ratio)),
    });
    let body = json!({
        "summary": summary,
        "decay": bounds.to_json(),
        "gradient": grad.as_ref().map(|g| g.to_json()),
    });
    Ok(render(cfg, kernels::kernel_table(&params)?, body, passed, summary))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum HolderCheck {
    Coeff,
    Interpolation,
}

#[derive(Debug, Args)]
pub struct HolderArgs {
    #[arg(long, value_enum, default_value = "coeff")]
    check: HolderCheck,
    /// Largest derivative order of the coefficient (default 20)
    #[arg(long)]
    beta_max: Option<String>,
    /// Largest derivative order of the solution (default 10)
    #[arg(long)]
    kmax: Option<String>,
}

pub fn holder(a: &HolderArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c0 = f64_of(&cfg.real(&single(cfg.c0_values("1"), "C0")?)?);
    let grid = cfg.grid_or(holder::DEFAULT_SAMPLES);
    let (csv, report) = match a.check {
        HolderCheck::Coeff => {
            let beta_max = int_param(cfg, &a.beta_max, "beta_max", 20u32)?;
            let rows = holder::coeff_holder_rows(c0, beta_max, grid)?;
            (holder::holder_csv(&rows), holder::check_coeff_holder(c0, beta_max, grid)?)
        }
        HolderCheck::Interpolation => {
            let kmax = int_param(cfg, &a.kmax, "kmax", 10u32)?;
            let rows = holder::interpolation_rows(c0, kmax, grid)?;
            (holder::interpolation_csv(&rows), holder::check_mollifier_interpolation(c0, kmax, grid)?)
        }
    };
    let mut out = report_outcome(cfg, &report);
    if cfg.format == Format::Csv {
        out.data = csv;
    }
    Ok(out)
}

#[derive(Debug, Args)]
pub struct AcceptanceArgs {
    /// Run one criterion (1 to 11) or the criteria of one module
    #[arg(long)]
    only: Option<String>,
}

pub fn acceptance(a: &AcceptanceArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ids = acceptance::select(a.only.as_deref())
        .ok_or_else(|| CliError::Usage(format!("unknown criterion or module {:?}", a.only.as_deref().unwrap_or(""))))?;
    let mut outcomes = Vec::new();
    for id in ids {
        let o = acceptance::run_criterion(id, cfg.precision_bits);
        eprintln!("{}", o.line());
        outcomes.push(o);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let mut csv = String::from("criterion,title,passed,elapsed_s,budget_s,failed_checks\n");
    for o in &outcomes {
        let failed: Vec<&str> = o.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        csv.push_str(&format!(
            "{},\"{}\",{},{:.1},{},\"{}\"\n",
            o.id,
            o.title,
            o.passed,
            o.elapsed_s,
            o.budget_s,
            failed.join("; ")
        ));
    }
    let vector: Vec<Value> = outcomes.iter().map(|o| json!({ "criterion": o.id, "passed": o.passed })).collect();
    let body = json!({ "precision_bits": cfg.precision_bits, "passed": passed, "criteria": outcomes });
    Ok(render(cfg, csv, body, passed, Value::Array(vector)))
}
