use rug::{Integer, Rational};
use ultrana_core::multiindex::{
    binomial_mass, enumerate, highdim_reduction_check, random_reduction_checks, vandermonde_check,
    vandermonde_sweep, MultiIndex,
};

#[test]
fn exhaustive_vandermonde() {
    let sweep = vandermonde_sweep(4, 8).unwrap();
    assert!(sweep.passed(), "{}", sweep.failures_csv());
    assert!(sweep.cases > 0);
}

#[test]
fn vandermonde_hand_case() {
    let c = vandermonde_check(&MultiIndex::new(vec![2, 1]), 2).unwrap();
    assert!(c.passed());
    assert_eq!(c.lhs, c.rhs);
}

#[test]
fn binomial_mass_over_sub_indices() {
    for d in 1..=3 {
        for total in 0..=7 {
            for alpha in enumerate(d, total).unwrap() {
                let direct: Integer = alpha
                    .sub_indices()
                    .iter()
                    .map(|b| alpha.factorial() / (b.factorial() * alpha.minus(b).factorial()))
                    .sum();
                assert_eq!(direct, binomial_mass(&alpha));
                assert_eq!(direct, Integer::from(1) << total);
            }
        }
    }
}

#[test]
fn reduction_invariant_under_permutation() {
    let c0 = Rational::from((3, 2));
    let c = Rational::from((7, 2));
    let a = highdim_reduction_check(&MultiIndex::new(vec![4, 1, 3]), &c0, &c, 256).unwrap();
    let b = highdim_reduction_check(&MultiIndex::new(vec![3, 4, 1]), &c0, &c, 256).unwrap();
    assert!(a.passed() && b.passed());
    assert_eq!(a.lhs, b.lhs);
    assert_eq!(a.rhs, b.rhs);
}

#[test]
fn random_reductions_pass_and_are_seeded() {
    let a = random_reduction_checks(100, 3, 12, 7, 256).unwrap();
    let b = random_reduction_checks(100, 3, 12, 7, 256).unwrap();
    assert!(a.iter().all(|c| c.passed()));
    let alphas = |v: &[ultrana_core::multiindex::ReductionCheck]| v.iter().map(|c| c.alpha.clone()).collect::<Vec<_>>();
    assert_eq!(alphas(&a), alphas(&b));
}

#[test]
fn oversized_reduction_is_rejected() {
    let one = Rational::from(1);
    assert!(highdim_reduction_check(&MultiIndex::new(vec![7, 6]), &one, &Rational::from(2), 256).is_err());
}
