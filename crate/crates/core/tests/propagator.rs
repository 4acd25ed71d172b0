use rug::Float;
use ultrana_core::numerics::{euler, parse_decimal};
use ultrana_core::propagator::{
    base_case, decreasing_tail, fit_k, implied_constants, propagate_first_order, propagate_second_order,
};

const P: u32 = 256;

fn f(x: f64) -> Float {
    Float::with_val(P, x)
}

#[test]
fn base_case_matches_closed_forms() {
    let b = base_case(&f(2.0)).unwrap();
    assert_eq!(b.b2, 6);
    assert!((b.b1.to_f64() - 2.0 * 6f64.sqrt()).abs() < 1e-14);
    assert!(base_case(&f(0.5)).is_err());
}

#[test]
fn bounds_grow_with_c0() {
    let base = base_case(&f(2.0)).unwrap();
    let lo = propagate_second_order(&f(0.5), &base, 120).unwrap();
    let hi = propagate_second_order(&f(0.75), &base, 120).unwrap();
    for (a, b) in lo.bounds.iter().zip(&hi.bounds) {
        assert!(b >= a);
    }
}

#[test]
fn prefixes_are_exact() {
    let base = base_case(&f(2.0)).unwrap();
    let long = propagate_second_order(&f(1.0), &base, 200).unwrap();
    let short = propagate_second_order(&f(1.0), &base, 80).unwrap();
    assert_eq!(&long.log_values()[..short.len()], &short.log_values()[..]);
    let long = propagate_first_order(&f(1.0), 200).unwrap();
    let short = propagate_first_order(&f(1.0), 80).unwrap();
    assert_eq!(&long.log_values()[..short.len()], &short.log_values()[..]);
}

#[test]
fn fitted_k_stable_under_doubling() {
    let base = base_case(&f(2.0)).unwrap();
    let full = propagate_second_order(&f(1.0), &base, 500).unwrap();
    let logs = full.log_values();
    let k500 = fit_k(&full, &f(2.0), &f(1.0)).unwrap();
    let k250 = ultrana_core::propagator::fit_k_logs(&logs[..=250], &f(2.0), &f(1.0), None).unwrap();
    let diff = Float::with_val(P, &k500 - &k250).abs();
    assert!(k500.is_finite() && diff <= Float::with_val(P, &k500 * 0.05f64));
}

/// Envelope closure over the full parameter grid, N = 500.
#[test]
fn envelope_closure() {
    let base = base_case(&f(2.0)).unwrap();
    let kappas = [parse_decimal("1.1", P).unwrap(), f(2.0), euler(P), f(10.0)];
    let mut failures = Vec::new();
    for c0 in ["0.5", "1", "10"] {
        let c0v = parse_decimal(c0, P).unwrap();
        let seq = propagate_second_order(&c0v, &base, 500).unwrap();
        let implied = implied_constants(&seq.log_values(), None);
        for kappa in &kappas {
            let k = fit_k(&seq, kappa, &c0v).unwrap();
            if !k.is_finite() {
                failures.push(format!("C0 = {c0}, kappa = {}: K not finite", kappa.to_f64()));
            }
        }
        if !decreasing_tail(&implied, 100) {
            failures.push(format!(
                "C0 = {c0}: implied C_n not decreasing ({} at n = 400, {} at n = 500)",
                implied[399].to_f64(),
                implied[499].to_f64()
            ));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
