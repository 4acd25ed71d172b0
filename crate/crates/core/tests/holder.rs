use num_complex::Complex64;
use ultrana_core::holder::*;

/// `sup_{0 < h <= pi/c0} 2|sin(c0 h/2)| / h^{1/2}` by golden-section search on
/// the unimodal quotient.
fn exponential_seminorm(c0: f64) -> f64 {
    let q = |h: f64| 2.0 * (c0 * h / 2.0).sin().abs() / h.sqrt();
    let (mut lo, mut hi) = (1e-9, std::f64::consts::PI / c0);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if q(a) > q(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    q(0.5 * (lo + hi))
}

fn unit_wave(c0: f64, n: usize) -> PeriodicSamples {
    let period = std::f64::consts::TAU / c0;
    let values = (0..n)
        .map(|i| Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / n as f64))
        .collect();
    PeriodicSamples { period, values }
}

#[test]
fn exponential_wave_matches_oracle() {
    for c0 in [1.0, 4.0] {
        let exact = exponential_seminorm(c0);
        let est = holder_seminorm(&unit_wave(c0, 4096), 0.5, None, Some(c0)).unwrap();
        assert!(est.seminorm <= exact * (1.0 + 1e-12));
        assert!((exact - est.seminorm) / exact < 1e-3, "{} vs {exact}", est.seminorm);
        assert!(est.correction.unwrap() > 0.0);
    }
}

#[test]
fn refinement_never_decreases() {
    let mut prev = 0.0;
    for n in [64, 128, 256, 512, 1024] {
        let est = holder_seminorm(&unit_wave(2.0, n), 0.5, None, None).unwrap();
        assert!(est.seminorm >= prev);
        prev = est.seminorm;
    }
}

#[test]
fn coefficient_ratio_is_beta_independent() {
    let report = check_coeff_holder(1.0, 20, 1024).unwrap();
    assert!(report.passed());
    let (lo, hi) = report.ratio_range().unwrap();
    assert!((hi.to_f64() - lo.to_f64()) / lo.to_f64() < 1e-10);
    // beta = 0 equals A C0 times the seminorm of e^{i C0 x}, over C0^{1/2}
    let wave = holder_seminorm(&unit_wave(1.0, 1024), 0.5, None, None).unwrap().seminorm;
    let expected = 0.5 * wave;
    assert!((report.rows[0].ratio.to_f64() - expected).abs() < 1e-13);
}

#[test]
fn coefficient_ratio_across_c0() {
    let r1 = check_coeff_holder(1.0, 5, 1024).unwrap().worst_ratio.to_f64();
    let r4 = check_coeff_holder(4.0, 5, 1024).unwrap().worst_ratio.to_f64();
    assert!(r4 / r1 < 10.0 && r1 / r4 < 10.0);
}

#[test]
fn interpolation_constant_is_finite_and_stable() {
    let coarse = check_mollifier_interpolation(1.0, 10, 1024).unwrap();
    let fine = check_mollifier_interpolation(1.0, 10, 2048).unwrap();
    let (c1, c2) = (coarse.worst_ratio.to_f64(), fine.worst_ratio.to_f64());
    assert!(c1.is_finite() && c1 > 0.0);
    assert!((c2 - c1).abs() / c1 < 0.2);
    let rows = interpolation_rows(1.0, 1, 512).unwrap();
    assert!(rows[0].constant.is_finite());
    let csv = interpolation_csv(&rows);
    assert!(csv.starts_with("k_or_beta,estimate,bound,ratio\n"));
}
