//! Multi-indices and the exact identities behind the reduction of the
//! `d`-dimensional convolution sum to the one-dimensional one.

use rayon::prelude::*;
use rug::{Complete, Float, Integer, Rational};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numerics::LogTables;

/// Largest enumeration size accepted by [`enumerate`].
pub const ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    pub components: Vec<u32>,
}

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex { components }
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex { components: vec![0; d] }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `|alpha|`
    pub fn order(&self) -> u32 {
        self.components.iter().sum()
    }

    /// `alpha! = alpha_1! ... alpha_d!`
    pub fn factorial(&self) -> Integer {
        self.components
            .iter()
            .fold(Integer::from(1), |acc, &c| acc * Integer::factorial(c).complete())
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.components.iter().zip(&other.components).all(|(a, b)| a <= b)
    }

    /// `self - other`, assuming `other <= self`.
    pub fn minus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex::new(self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect())
    }

    /// All `beta <= self`, in lexicographic order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.dim()];
        loop {
            out.push(MultiIndex::new(cur.clone()));
            // odometer increment from the last coordinate
            let mut i = self.dim();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < self.components[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
            }
        }
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All `alpha` with `d` components and `|alpha| = total`, in descending
/// lexicographic order (so `(2,0)` precedes `(1,1)`).
pub fn enumerate(d: usize, total: u32) -> Result<Vec<MultiIndex>> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let count = Integer::binomial_u(total + d as u32 - 1, d as u32 - 1).complete();
    if count > ENUMERATION_CAP {
        return Err(Error::Resource(format!(
            "{count} multi-indices exceed the cap of {ENUMERATION_CAP}"
        )));
    }
    let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
    let mut cur = vec![0u32; d];
    fill(&mut cur, 0, total, &mut out);
    Ok(out)
}

fn fill(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex::new(cur.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        fill(cur, pos + 1, remaining - v, out);
    }
}

/// Both sides of `sum_{beta <= alpha, |beta| = l} (l!/beta!) ((|alpha|-l)!/(alpha-beta)!) = |alpha|!/alpha!`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VandermondeCheck {
    pub alpha: MultiIndex,
    pub l: u32,
    pub lhs: Integer,
    pub rhs: Integer,
}

impl VandermondeCheck {
    pub fn passed(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub fn vandermonde_check(alpha: &MultiIndex, l: u32) -> Result<VandermondeCheck> {
    let n = alpha.order();
    if l > n {
        return Err(Error::Index(format!("l = {l} exceeds |alpha| = {n}")));
    }
    let l_fact = Integer::factorial(l).complete();
    let rest_fact = Integer::factorial(n - l).complete();
    let mut lhs = Integer::new();
    for beta in alpha.sub_indices() {
        if beta.order() != l {
            continue;
        }
        let gamma = alpha.minus(&beta);
        let left = l_fact.clone() / beta.factorial();
        let right = rest_fact.clone() / gamma.factorial();
        lhs += left * right;
    }
    let rhs = Integer::factorial(n).complete() / alpha.factorial();
    Ok(VandermondeCheck { alpha: alpha.clone(), l, lhs, rhs })
}

/// `sum_{beta <= alpha} alpha!/(beta!(alpha-beta)!)`, which equals `2^{|alpha|}`.
pub fn binomial_mass(alpha: &MultiIndex) -> Integer {
    let a_fact = alpha.factorial();
    alpha
        .sub_indices()
        .iter()
        .map(|beta| a_fact.clone() / (beta.factorial() * alpha.minus(beta).factorial()))
        .sum()
}

/// Exhaustive Vandermonde sweep over `1 <= d <= dmax`, `|alpha| <= order_max`, all `l`.
#[derive(Clone, Debug)]
pub struct VandermondeSweep {
    pub cases: u64,
    pub failures: Vec<VandermondeCheck>,
}

impl VandermondeSweep {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Failing cases only; a header line when everything passed.
    pub fn failures_csv(&self) -> String {
        let mut out = String::from("alpha,l,lhs,rhs\n");
        for f in &self.failures {
            out.push_str(&format!("\"{}\",{},{},{}\n", f.alpha, f.l, f.lhs, f.rhs));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({ "check": "vandermonde", "cases": self.cases, "failures": self.failures.len(), "passed": self.passed() })
    }
}

pub fn vandermonde_sweep(dmax: usize, order_max: u32) -> Result<VandermondeSweep> {
    let mut alphas = Vec::new();
    for d in 1..=dmax {
        for total in 0..=order_max {
            alphas.extend(enumerate(d, total)?);
        }
    }
    let results: Vec<Vec<VandermondeCheck>> = alphas
        .par_iter()
        .map(|a| (0..=a.order()).map(|l| vandermonde_check(a, l).expect("l within range")).collect())
        .collect();
    let mut cases = 0;
    let mut failures = Vec::new();
    for r in results.into_iter().flatten() {
        cases += 1;
        if !r.passed() {
            failures.push(r);
        }
    }
    Ok(VandermondeSweep { cases, failures })
}

/// Both sides of the reduction identity
/// `sum_{beta+gamma=alpha} (alpha!/(beta!gamma!)) C0^|beta| C^|gamma| |gamma|!/ln^|gamma|(|gamma|+e)
///  = sum_{l+j=|alpha|} |alpha|! C0^l C^j / (l! ln^j(j+e))`.
#[derive(Clone, Debug)]
pub struct ReductionCheck {
    pub alpha: MultiIndex,
    pub lhs: Float,
    pub rhs: Float,
    pub relative_difference: Float,
    pub tolerance: Float,
}

impl ReductionCheck {
    pub fn passed(&self) -> bool {
        self.relative_difference <= self.tolerance
    }
}

/// Largest `|alpha|` accepted by [`highdim_reduction_check`].
pub const REDUCTION_ORDER_CAP: u32 = 12;

/// Evaluates both sides with exact rational coefficients and a shared table
/// of `ln(j+e)`; passes when they agree to relative `2^(32 - prec)`.
pub fn highdim_reduction_check(alpha: &MultiIndex, c0: &Rational, c: &Rational, prec: u32) -> Result<ReductionCheck> {
    if *c0 <= 0 || *c <= 0 {
        return Err(Error::Domain("C0 and C must be positive".into()));
    }
    let n = alpha.order();
    if n > REDUCTION_ORDER_CAP {
        return Err(Error::Domain(format!("|alpha| = {n} exceeds {REDUCTION_ORDER_CAP}")));
    }
    let tables = LogTables::new(n as usize, prec);
    // 1 / ln^j(j+e), shared by both sides
    let inv_log_powers: Vec<Float> = (0..=n as usize)
        .map(|j| (-Float::with_val(prec, tables.ln_ln_shift(j) * j as u64)).exp())
        .collect();
    let c0_pow: Vec<Rational> = (0..=n).map(|k| rational_pow(c0, k)).collect();
    let c_pow: Vec<Rational> = (0..=n).map(|k| rational_pow(c, k)).collect();

    let a_fact = alpha.factorial();
    let mut lhs = Float::new(prec);
    for beta in alpha.sub_indices() {
        let gamma = alpha.minus(&beta);
        let (b, g) = (beta.order(), gamma.order());
        let multinom = a_fact.clone() / (beta.factorial() * gamma.factorial());
        let coeff = Rational::from(multinom * Integer::factorial(g).complete())
            * &c0_pow[b as usize]
            * &c_pow[g as usize];
        lhs += Float::with_val(prec, &coeff) * &inv_log_powers[g as usize];
    }

    let n_fact = Integer::factorial(n).complete();
    let mut rhs = Float::new(prec);
    for j in 0..=n {
        let l = n - j;
        let coeff = Rational::from((n_fact.clone(), Integer::factorial(l).complete()))
            * &c0_pow[l as usize]
            * &c_pow[j as usize];
        rhs += Float::with_val(prec, &coeff) * &inv_log_powers[j as usize];
    }

    let relative_difference = crate::numerics::relative_difference(&lhs, &rhs);
    let tolerance = Float::with_val(prec, Float::i_exp(1, 32 - prec as i32));
    Ok(ReductionCheck { alpha: alpha.clone(), lhs, rhs, relative_difference, tolerance })
}

fn rational_pow(x: &Rational, k: u32) -> Rational {
    let mut out = Rational::from(1);
    for _ in 0..k {
        out *= x;
    }
    out
}

/// Seeded random reduction checks with `1 <= d <= dmax`, `|alpha| <= order_max`
/// and `C0, C` drawn as ratios of small integers.
pub fn random_reduction_checks(count: usize, dmax: usize, order_max: u32, seed: u64, prec: u32) -> Result<Vec<ReductionCheck>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count);
    for _ in 0..count {
        let d = rng.gen_range(1..=dmax);
        let total = rng.gen_range(0..=order_max);
        let alphas = enumerate(d, total)?;
        let alpha = alphas[rng.gen_range(0..alphas.len())].clone();
        let c0 = Rational::from((rng.gen_range(1..=50u32), rng.gen_range(1..=20u32)));
        let c = Rational::from((rng.gen_range(1..=80u32), rng.gen_range(1..=20u32)));
        cases.push((alpha, c0, c));
    }
    cases
        .par_iter()
        .map(|(a, c0, c)| highdim_reduction_check(a, c0, c, prec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[u32]) -> MultiIndex {
        MultiIndex::new(c.to_vec())
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate(2, 2).unwrap(), vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
        assert_eq!(enumerate(1, 7).unwrap(), vec![mi(&[7])]);
        assert_eq!(enumerate(4, 8).unwrap().len(), 165);
        assert!(matches!(enumerate(12, 60), Err(Error::Resource(_))));
        assert!(enumerate(0, 1).is_err());
    }

    #[test]
    fn enumeration_counts_follow_stars_and_bars() {
        for d in 1..=4usize {
            for t in 0..=8u32 {
                let all = enumerate(d, t).unwrap();
                let expected = Integer::binomial_u(t + d as u32 - 1, d as u32 - 1).complete();
                assert_eq!(Integer::from(all.len()), expected);
                assert!(all.iter().all(|a| a.order() == t));
                assert!(all.windows(2).all(|w| w[0] > w[1]));
            }
        }
    }

    #[test]
    fn vandermonde_hand_cases() {
        let r = vandermonde_check(&mi(&[1, 1]), 1).unwrap();
        assert_eq!((r.lhs.to_u32(), r.rhs.to_u32()), (Some(2), Some(2)));
        let r = vandermonde_check(&mi(&[2, 1]), 1).unwrap();
        assert_eq!((r.lhs.to_u32(), r.rhs.to_u32()), (Some(3), Some(3)));
        assert!(vandermonde_check(&mi(&[1]), 2).is_err());
    }

    #[test]
    fn binomial_mass_is_power_of_two() {
        for d in 1..=3 {
            for t in 0..=8 {
                for a in enumerate(d, t).unwrap() {
                    assert_eq!(binomial_mass(&a), Integer::from(1) << t);
                }
            }
        }
    }

    #[test]
    fn reduction_small_cases() {
        let one = Rational::from(1);
        let r = highdim_reduction_check(&mi(&[0, 0]), &one, &Rational::from(3), 256).unwrap();
        assert!(r.passed());
        assert_eq!(r.lhs, 1);
        let r = highdim_reduction_check(&mi(&[1, 1]), &one, &Rational::from(2), 256).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn reduction_is_permutation_invariant() {
        let c0 = Rational::from((3, 2));
        let c = Rational::from((7, 3));
        let base = highdim_reduction_check(&mi(&[4, 2, 3]), &c0, &c, 256).unwrap();
        assert!(base.passed());
        for p in [[2, 4, 3], [3, 2, 4], [4, 3, 2]] {
            let r = highdim_reduction_check(&mi(&p), &c0, &c, 256).unwrap();
            assert!(r.passed());
            assert!(crate::numerics::relative_difference(&r.lhs, &base.lhs) < base.tolerance);
            assert!(crate::numerics::relative_difference(&r.rhs, &base.rhs) < base.tolerance);
        }
    }
}
