//! Closed-form cumulants of the purity statistics, evaluated exactly.
//!
//! Every rational quantity is built from exact binomial and trinomial
//! integers and kept as a [`BigRational`]; the float `value` is produced by
//! a single final conversion.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::bitcomb::{binom, trinom};
use crate::error::{Error, Result};
use crate::states::EnsembleKind;

/// Upper limit on `n` for closed-form evaluation.
pub const ANALYTIC_MAX_QUBITS: u32 = 1024;

/// Phase-alphabet size of a Hadamard ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseOrder {
    Finite(u32),
    /// Continuous phases (Hadamard-typical states).
    Infinite,
}

impl PhaseOrder {
    /// Variance multiplier: 2 for real (hypergraph) phases, 1 otherwise.
    pub fn c_q(self) -> u32 {
        match self {
            PhaseOrder::Finite(2) => 2,
            _ => 1,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            PhaseOrder::Finite(q) if q < 2 => Err(Error::PhaseOrder(q)),
            _ => Ok(()),
        }
    }

    pub fn from_kind(kind: EnsembleKind) -> Option<Self> {
        match kind {
            EnsembleKind::Haar => None,
            EnsembleKind::Butson(q) => Some(PhaseOrder::Finite(q)),
            EnsembleKind::HadamardTypical => Some(PhaseOrder::Infinite),
        }
    }
}

impl fmt::Display for PhaseOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseOrder::Finite(q) => write!(f, "{q}"),
            PhaseOrder::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryValue {
    pub name: &'static str,
    pub n: Option<u32>,
    pub n_a: Option<u32>,
    pub q: Option<PhaseOrder>,
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl TheoryValue {
    fn rational(name: &'static str, n: u32, exact: BigRational) -> Self {
        Self {
            name,
            n: Some(n),
            n_a: None,
            q: None,
            value: ratio_to_f64(&exact),
            exact: Some(exact),
        }
    }

    fn real(name: &'static str, n: Option<u32>, value: f64) -> Self {
        Self {
            name,
            n,
            n_a: None,
            q: None,
            value,
            exact: None,
        }
    }

    fn with_n_a(mut self, n_a: u32) -> Self {
        self.n_a = Some(n_a);
        self
    }

    fn with_q(mut self, q: PhaseOrder) -> Self {
        self.q = Some(q);
        self
    }

    pub fn exact_num(&self) -> Option<&BigInt> {
        self.exact.as_ref().map(|r| r.numer())
    }

    pub fn exact_den(&self) -> Option<&BigInt> {
        self.exact.as_ref().map(|r| r.denom())
    }

    pub fn to_row(&self) -> TheoryRow {
        TheoryRow {
            name: self.name,
            n: self.n,
            n_a: self.n_a,
            q: self.q.map(|q| q.to_string()),
            value: self.value,
            exact_num: self.exact_num().map(|x| x.to_string()),
            exact_den: self.exact_den().map(|x| x.to_string()),
        }
    }
}

/// One CSV row of the `theory` table.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryRow {
    pub name: &'static str,
    pub n: Option<u32>,
    #[serde(rename = "n_A")]
    pub n_a: Option<u32>,
    pub q: Option<String>,
    pub value: f64,
    pub exact_num: Option<String>,
    pub exact_den: Option<String>,
}

/// Nearest double to an exact ratio, robust to numerators and denominators
/// beyond the `f64` range.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let (num, den) = (r.numer().abs(), r.denom().clone());
    let shift = num.bits() as i64 - den.bits() as i64;
    // scale so the integer quotient carries 64 significant bits
    let scaled = if shift > 64 {
        &num / (&den << (shift - 64) as usize)
    } else {
        (&num << (64 - shift) as usize) / &den
    };
    let mantissa = scaled.to_f64().unwrap_or(f64::NAN);
    let value = mantissa * (2f64).powi((shift - 64).max(i32::MIN as i64) as i32);
    if r.is_negative() {
        -value
    } else {
        value
    }
}

fn big(x: BigUint) -> BigInt {
    BigInt::from(x)
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k as usize
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn check_n(n: u32) -> Result<()> {
    if !(2..=ANALYTIC_MAX_QUBITS).contains(&n) {
        return Err(Error::QubitCount {
            n,
            min: 2,
            max: ANALYTIC_MAX_QUBITS,
        });
    }
    Ok(())
}

fn check_split(n: u32, n_a: u32) -> Result<()> {
    check_n(n)?;
    if n_a < 1 || n_a > n - n_a {
        return Err(Error::Bipartition(format!(
            "need 1 <= n_A <= n - n_A, got n_A = {n_a}, n = {n}"
        )));
    }
    Ok(())
}

fn halves(n: u32) -> (u32, u32) {
    (n / 2, n.div_ceil(2))
}

/// `2^floor(n/2) + 2^ceil(n/2)`.
fn balanced_sum(n: u32) -> BigInt {
    let (lo, hi) = halves(n);
    pow2(lo) + pow2(hi)
}

/// Haar mean purity of a fixed bipartition.
pub fn mu_a_haar(n: u32, n_a: u32) -> Result<TheoryValue> {
    check_split(n, n_a)?;
    let exact = ratio(pow2(n_a) + pow2(n - n_a), pow2(n) + 1);
    Ok(TheoryValue::rational("mu_A_haar", n, exact).with_n_a(n_a))
}

/// Haar purity variance of a fixed bipartition.
pub fn sigma2_a_haar(n: u32, n_a: u32) -> Result<TheoryValue> {
    check_split(n, n_a)?;
    let big_n = pow2(n);
    let num = BigInt::from(2) * (pow2(2 * n_a) - 1) * (pow2(2 * (n - n_a)) - 1);
    let den = (&big_n + 1) * (&big_n + 1) * (&big_n + 2) * (&big_n + 3);
    Ok(TheoryValue::rational("sigma2_A_haar", n, ratio(num, den)).with_n_a(n_a))
}

pub fn mu_me_haar(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    let exact = ratio(balanced_sum(n), pow2(n) + 1);
    Ok(TheoryValue::rational("mu_ME_haar", n, exact))
}

pub fn sigma2_me_haar(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    let f2 = f2_exact(n);
    let big_n = ratio(pow2(n), BigInt::one());
    let one = BigRational::one();
    let a = ratio(balanced_sum(n), BigInt::one());
    let num = (&big_n + &one) * f2 - ratio(BigInt::from(2), BigInt::one()) * &a * &a;
    let den = (&big_n + &one)
        * (&big_n + &one)
        * (&big_n + ratio(BigInt::from(2), BigInt::one()))
        * (&big_n + ratio(BigInt::from(3), BigInt::one()));
    Ok(TheoryValue::rational("sigma2_ME_haar", n, num / den))
}

/// Squared bracket `[C(h,s)C(H,t) + C(h,t)C(H,s)]^2` over the trinomial.
fn f2_cell(n: u32, s: u32, t: u32) -> Option<BigRational> {
    let (lo, hi) = halves(n);
    let (s, t) = (s as i64, t as i64);
    let bracket = big(binom(lo, s) * binom(hi, t) + binom(lo, t) * binom(hi, s));
    if bracket.is_zero() {
        // vanishing numerator: skip before dividing by a possibly-zero trinomial
        return None;
    }
    Some(ratio(&bracket * &bracket, big(trinom(n, s, t))))
}

fn f2_range(n: u32, start: u32) -> BigRational {
    let top = n.div_ceil(2);
    let mut acc = BigRational::zero();
    for s in start..=top {
        for t in start..=top {
            if let Some(cell) = f2_cell(n, s, t) {
                acc += cell;
            }
        }
    }
    acc
}

fn f2_exact(n: u32) -> BigRational {
    f2_range(n, 0)
}

fn f2star_exact(n: u32) -> BigRational {
    f2_range(n, 1)
}

fn h2_exact(n: u32) -> BigRational {
    let (lo, hi) = halves(n);
    let mut acc = BigRational::zero();
    for s in 0..=hi as i64 {
        let b = big(binom(lo, s) + binom(hi, s));
        if !b.is_zero() {
            acc += ratio(&b * &b, big(binom(n, s)));
        }
    }
    acc
}

/// `f2(n) = 4 sum_{k,l} g(k,l)^2` via the trinomial double sum.
pub fn f2_sum(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    Ok(TheoryValue::rational("f2", n, f2_exact(n)))
}

/// `f2*(n)`: the same sum restricted to nonzero indices.
pub fn f2star_sum(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    Ok(TheoryValue::rational("f2star", n, f2star_exact(n)))
}

/// `h2(n) = 4 sum_l g(l,0)^2`, the `t = 0` slice of `f2`.
pub fn h2_sum(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    Ok(TheoryValue::rational("h2", n, h2_exact(n)))
}

/// Per-distance contributions `(f2 term, h2 term)` for `d = 0..=floor(n/2)`,
/// where `d = |A intersect complement(B)|` between two balanced bipartitions.
/// Both already include the `C(n, floor(n/2))^{-1}` normalisation.
fn distance_terms_exact(n: u32) -> Vec<(BigRational, BigRational)> {
    let (lo, hi) = halves(n);
    let norm = big(binom(n, lo as i64));
    let spread = balanced_sum(n);
    (0..=lo)
        .map(|d| {
            let mult = big(binom(lo, d as i64) * binom(hi, d as i64));
            // 2^{n/2+1} [2^{n/2-2d} + 2^{-(n/2-2d)}] = 2^{n+1-2d} + 2^{2d+1}
            let f = ratio(
                &mult * (pow2(n + 1 - 2 * d) + pow2(2 * d + 1)),
                norm.clone(),
            );
            let h = ratio(&mult * (&spread + pow2(2 * d + 1)), &norm * pow2(d));
            (f, h)
        })
        .collect()
}

pub fn f2_by_distance(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    let sum = distance_terms_exact(n)
        .into_iter()
        .fold(BigRational::zero(), |acc, (f, _)| acc + f);
    Ok(TheoryValue::rational("f2_by_distance", n, sum))
}

pub fn h2_by_distance(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    let sum = distance_terms_exact(n)
        .into_iter()
        .fold(BigRational::zero(), |acc, (_, h)| acc + h);
    Ok(TheoryValue::rational("h2_by_distance", n, sum))
}

/// Per-distance terms of the `f2` and `h2` distance sums as floats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistanceTerm {
    pub d: u32,
    pub f2_term: f64,
    pub h2_term: f64,
}

pub fn distance_terms(n: u32) -> Result<Vec<DistanceTerm>> {
    check_n(n)?;
    Ok(distance_terms_exact(n)
        .iter()
        .zip(0..)
        .map(|((f, h), d)| DistanceTerm {
            d,
            f2_term: ratio_to_f64(f),
            h2_term: ratio_to_f64(h),
        })
        .collect())
}

/// Hadamard mean purity of a fixed bipartition.
pub fn mu_a_hadamard(n: u32, n_a: u32) -> Result<TheoryValue> {
    check_split(n, n_a)?;
    let exact = ratio(pow2(n_a) + pow2(n - n_a) - 1, pow2(n));
    Ok(TheoryValue::rational("mu_A_hadamard", n, exact).with_n_a(n_a))
}

/// `2 c_q (2^{n_A} - 1)(2^{n - n_A} - 1) / 2^{3n}`.
pub fn sigma2_a_hadamard(n: u32, n_a: u32, q: PhaseOrder) -> Result<TheoryValue> {
    check_split(n, n_a)?;
    q.validate()?;
    let num = BigInt::from(2 * q.c_q()) * (pow2(n_a) - 1) * (pow2(n - n_a) - 1);
    Ok(
        TheoryValue::rational("sigma2_A_hadamard", n, ratio(num, pow2(3 * n)))
            .with_n_a(n_a)
            .with_q(q),
    )
}

pub fn mu_me_hadamard(n: u32) -> Result<TheoryValue> {
    check_n(n)?;
    let exact = ratio(balanced_sum(n) - 1, pow2(n));
    Ok(TheoryValue::rational("mu_ME_hadamard", n, exact))
}

/// `c_q f2*(n) / 2^{3n}`.
pub fn sigma2_me_hadamard(n: u32, q: PhaseOrder) -> Result<TheoryValue> {
    check_n(n)?;
    q.validate()?;
    let exact = f2star_exact(n) * BigInt::from(q.c_q()) / pow2(3 * n);
    Ok(TheoryValue::rational("sigma2_ME_hadamard", n, exact).with_q(q))
}

/// Distance, in ensemble standard deviations, between the Hadamard mean of
/// the potential and its absolute minimum `2^{-floor(n/2)}`.
pub fn k_distance(n: u32, q: PhaseOrder) -> Result<TheoryValue> {
    check_n(n)?;
    q.validate()?;
    let f2star = ratio_to_f64(&f2star_exact(n));
    let gap = (2f64).powi((n / 2) as i32) - 1.0;
    let value = gap * (n as f64 / 2.0).exp2() / (q.c_q() as f64 * f2star).sqrt();
    Ok(TheoryValue::real("k_distance", Some(n), value).with_q(q))
}

/// Growth exponent of `f2`: `log2(3/2)`.
pub fn alpha() -> f64 {
    1.5f64.log2()
}

/// Growth exponent of `h2`: `log2((1 + sqrt 2) / 2)`.
pub fn gamma() -> f64 {
    ((1.0 + std::f64::consts::SQRT_2) / 2.0).log2()
}

/// Haar minus Hadamard mean of the potential.
pub fn delta_mu_me(n: u32) -> Result<TheoryValue> {
    let haar = mu_me_haar(n)?.exact.unwrap();
    let had = mu_me_hadamard(n)?.exact.unwrap();
    Ok(TheoryValue::rational("delta_mu_ME", n, haar - had))
}

/// Leading asymptotic form `3 sqrt(2) (3/2)^n` shared by `f2` and `f2*`.
pub fn f2_asymptotic(n: u32) -> f64 {
    3.0 * std::f64::consts::SQRT_2 * 1.5f64.powi(n as i32)
}

/// Saddle-point form `2^{1/4} (2 + sqrt 2) ((1 + sqrt 2)/2)^n`, times
/// `(4 + 3 sqrt 2)/8` for odd `n`.
pub fn h2_asymptotic(n: u32) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    let base = 2f64.powf(0.25) * (2.0 + s2) * ((1.0 + s2) / 2.0).powi(n as i32);
    if n % 2 == 1 {
        base * (4.0 + 3.0 * s2) / 8.0
    } else {
        base
    }
}

/// `3 sqrt(2) c (3/16)^n`, the large-`n` variance of the potential.
pub fn sigma2_me_asymptotic(n: u32, c: u32) -> f64 {
    3.0 * std::f64::consts::SQRT_2 * c as f64 * (3.0f64 / 16.0).powi(n as i32)
}

/// Growth constants plus, for each `n` in `2..=n_max`, the mean gap between
/// the Haar and Hadamard ensembles, the ratio of each ensemble's standard
/// deviation to that gap, and the asymptotic reference curves.
pub fn asymptotics_table(n_max: u32) -> Result<Vec<TheoryValue>> {
    check_n(n_max)?;
    let mut rows = vec![
        TheoryValue::real("alpha", None, alpha()),
        TheoryValue::real("gamma", None, gamma()),
    ];
    for n in 2..=n_max {
        let delta = delta_mu_me(n)?;
        let gap = delta.value;
        rows.push(delta);
        let haar_sd = sigma2_me_haar(n)?.value.sqrt();
        rows.push(TheoryValue::real(
            "sigma_over_delta_mu_ME_haar",
            Some(n),
            haar_sd / gap,
        ));
        for q in [PhaseOrder::Finite(2), PhaseOrder::Infinite] {
            let sd = sigma2_me_hadamard(n, q)?.value.sqrt();
            rows.push(
                TheoryValue::real("sigma_over_delta_mu_ME_hadamard", Some(n), sd / gap).with_q(q),
            );
        }
        rows.push(TheoryValue::real(
            "f2_asymptotic",
            Some(n),
            f2_asymptotic(n),
        ));
        rows.push(TheoryValue::real(
            "h2_asymptotic",
            Some(n),
            h2_asymptotic(n),
        ));
        rows.push(TheoryValue::real(
            "sigma2_ME_haar_asymptotic",
            Some(n),
            sigma2_me_asymptotic(n, 1),
        ));
        for q in [PhaseOrder::Finite(2), PhaseOrder::Infinite] {
            rows.push(
                TheoryValue::real(
                    "sigma2_ME_hadamard_asymptotic",
                    Some(n),
                    sigma2_me_asymptotic(n, q.c_q()),
                )
                .with_q(q),
            );
        }
    }
    Ok(rows)
}

/// Every theory value for one `n`: Haar cumulants, then per-`q` Hadamard
/// cumulants and `k`, then the combinatorial sums.
pub fn theory_rows(n: u32, orders: &[PhaseOrder]) -> Result<Vec<TheoryValue>> {
    check_n(n)?;
    let h = n / 2;
    let mut rows = vec![
        mu_a_haar(n, h)?,
        sigma2_a_haar(n, h)?,
        mu_me_haar(n)?,
        sigma2_me_haar(n)?,
    ];
    for &q in orders {
        rows.push(mu_a_hadamard(n, h)?.with_q(q));
        rows.push(sigma2_a_hadamard(n, h, q)?);
        rows.push(mu_me_hadamard(n)?.with_q(q));
        rows.push(sigma2_me_hadamard(n, q)?);
        rows.push(k_distance(n, q)?);
    }
    rows.push(f2_sum(n)?);
    rows.push(f2star_sum(n)?);
    rows.push(h2_sum(n)?);
    rows.push(delta_mu_me(n)?);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcomb::BitString;
    use crate::purity::coupling_g;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    fn exact(v: TheoryValue) -> BigRational {
        v.exact.unwrap()
    }

    const Q2: PhaseOrder = PhaseOrder::Finite(2);
    const Q3: PhaseOrder = PhaseOrder::Finite(3);
    const Q4: PhaseOrder = PhaseOrder::Finite(4);

    /// `4 sum g(k,l)^2` over the requested index sets, by enumeration.
    fn brute_g2(n: u32, nonzero: bool, m_zero_only: bool) -> f64 {
        let dim = 1u32 << n;
        let mut acc = 0.0;
        for k in 0..dim {
            for l in 0..dim {
                if nonzero && (k == 0 || l == 0) {
                    continue;
                }
                if m_zero_only && l != 0 {
                    continue;
                }
                let g = coupling_g(BitString(k), BitString(l), n);
                acc += g * g;
            }
        }
        4.0 * acc
    }

    #[test]
    fn haar_examples() {
        assert_eq!(exact(mu_a_haar(2, 1).unwrap()), r(4, 5));
        assert_eq!(exact(mu_a_haar(4, 2).unwrap()), r(8, 17));
        assert_eq!(exact(sigma2_a_haar(2, 1).unwrap()), r(3, 175));
        assert_eq!(exact(mu_me_haar(2).unwrap()), r(4, 5));
        assert_eq!(exact(mu_me_haar(7).unwrap()), r(24, 129));
        assert!((mu_me_haar(7).unwrap().value - 0.18605).abs() < 1e-5);
        assert_eq!(exact(mu_me_haar(6).unwrap()), r(16, 65));
        assert_eq!(exact(sigma2_me_haar(2).unwrap()), r(3, 175));
        assert!(mu_a_haar(4, 3).is_err());
        assert!(mu_a_haar(4, 0).is_err());
        assert!(mu_me_haar(1).is_err());
    }

    #[test]
    fn haar_fixed_variance_scaling() {
        let v = sigma2_a_haar(20, 10).unwrap().value;
        let scaled = v * (40f64).exp2() / 2.0;
        assert!((scaled - 1.0).abs() < 1e-5, "{scaled}");
    }

    #[test]
    fn sums_small_values() {
        assert_eq!(exact(f2_sum(2).unwrap()), r(10, 1));
        assert_eq!(exact(f2_sum(3).unwrap()), r(14, 1));
        assert_eq!(exact(f2star_sum(2).unwrap()), r(2, 1));
        assert_eq!(exact(f2star_sum(3).unwrap()), r(10, 3));
        assert_eq!(exact(f2star_sum(4).unwrap()), r(26, 3));
        assert_eq!(exact(h2_sum(2).unwrap()), r(6, 1));
        assert_eq!(exact(h2_sum(3).unwrap()), r(22, 3));
    }

    #[test]
    fn closed_sums_match_brute_force() {
        for n in 2..=10u32 {
            let f2 = f2_sum(n).unwrap().value;
            let f2s = f2star_sum(n).unwrap().value;
            let h2 = h2_sum(n).unwrap().value;
            assert!((f2 - brute_g2(n, false, false)).abs() < 1e-9, "f2 n={n}");
            assert!((f2s - brute_g2(n, true, false)).abs() < 1e-9, "f2* n={n}");
            assert!((h2 - brute_g2(n, false, true)).abs() < 1e-9, "h2 n={n}");
        }
    }

    #[test]
    fn f2star_chain_identity() {
        for n in 2..=30 {
            let lhs = exact(f2star_sum(n).unwrap());
            let rhs =
                exact(f2_sum(n).unwrap()) - exact(h2_sum(n).unwrap()) * BigInt::from(2) + r(4, 1);
            assert_eq!(lhs, rhs, "n={n}");
        }
    }

    #[test]
    fn distance_forms_agree() {
        for n in 2..=20 {
            assert_eq!(
                exact(f2_by_distance(n).unwrap()),
                exact(f2_sum(n).unwrap()),
                "n={n}"
            );
            assert_eq!(
                exact(h2_by_distance(n).unwrap()),
                exact(h2_sum(n).unwrap()),
                "n={n}"
            );
        }
        let a = f2_by_distance(100).unwrap().value;
        let b = f2_sum(100).unwrap().value;
        assert!(((a - b) / b).abs() < 1e-9);
    }

    #[test]
    fn distance_term_maxima_are_interior() {
        let terms = distance_terms(100).unwrap();
        assert_eq!(terms.len(), 51);
        let argmax = |f: &dyn Fn(&DistanceTerm) -> f64| {
            terms
                .iter()
                .max_by(|a, b| f(a).partial_cmp(&f(b)).unwrap())
                .unwrap()
                .d
        };
        let f_peak = argmax(&|t| t.f2_term);
        let h_peak = argmax(&|t| t.h2_term);
        assert!(f_peak > 0 && f_peak < 50);
        assert!(h_peak > 0 && h_peak < 50);
        assert_ne!(f_peak, h_peak);
        // dominance: the largest f2 term dwarfs the largest h2 term
        assert!(terms[f_peak as usize].f2_term > 1e3 * terms[h_peak as usize].h2_term);
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(exact(mu_a_hadamard(2, 1).unwrap()), r(3, 4));
        assert_eq!(exact(mu_a_hadamard(6, 3).unwrap()), r(15, 64));
        assert_eq!(exact(sigma2_a_hadamard(2, 1, Q4).unwrap()), r(1, 32));
        assert_eq!(exact(sigma2_a_hadamard(2, 1, Q2).unwrap()), r(1, 16));
        assert_eq!(
            exact(sigma2_a_hadamard(2, 1, PhaseOrder::Infinite).unwrap()),
            r(1, 32)
        );
        assert_eq!(exact(mu_me_hadamard(3).unwrap()), r(5, 8));
        assert_eq!(exact(mu_me_hadamard(7).unwrap()), r(23, 128));
        assert_eq!(exact(sigma2_me_hadamard(3, Q2).unwrap()), r(5, 384));
        assert_eq!(exact(sigma2_me_hadamard(3, Q3).unwrap()), r(5, 768));
        assert_eq!(exact(sigma2_me_hadamard(2, Q3).unwrap()), r(1, 32));
        assert!(sigma2_a_hadamard(2, 1, PhaseOrder::Finite(1)).is_err());
    }

    #[test]
    fn hadamard_fixed_mean_below_haar() {
        for n in 2..=20 {
            for n_a in 1..=n / 2 {
                let had = exact(mu_a_hadamard(n, n_a).unwrap());
                let haar = exact(mu_a_haar(n, n_a).unwrap());
                assert!(had < haar, "n={n} n_A={n_a}");
            }
        }
    }

    #[test]
    fn ordering_properties() {
        for n in 2..=30 {
            assert!(exact(mu_me_hadamard(n).unwrap()) < exact(mu_me_haar(n).unwrap()));
            let s3 = exact(sigma2_me_hadamard(n, Q3).unwrap());
            let s2 = exact(sigma2_me_hadamard(n, Q2).unwrap());
            assert_eq!(s2, &s3 * BigInt::from(2));
            assert_eq!(
                exact(sigma2_me_hadamard(n, PhaseOrder::Infinite).unwrap()),
                s3
            );
            let haar = exact(sigma2_me_haar(n).unwrap());
            if n >= 4 {
                assert!(s3 < haar, "n={n}");
                assert!(s2 > haar, "n={n}");
            }
        }
    }

    #[test]
    fn two_qubit_degeneracies() {
        assert_eq!(
            exact(sigma2_me_haar(2).unwrap()),
            exact(sigma2_a_haar(2, 1).unwrap())
        );
        for q in [Q2, Q3, PhaseOrder::Infinite] {
            assert_eq!(
                exact(sigma2_me_hadamard(2, q).unwrap()),
                exact(sigma2_a_hadamard(2, 1, q).unwrap())
            );
        }
    }

    #[test]
    fn k_distance_reported_values() {
        let rounded: Vec<f64> = (4..=8)
            .map(|n| k_distance(n, Q2).unwrap().value)
            .map(|k| {
                if k < 10.0 {
                    (k * 10.0).round() / 10.0
                } else {
                    k.round()
                }
            })
            .collect();
        assert_eq!(rounded, vec![2.9, 3.2, 7.5, 8.4, 19.0]);
    }

    #[test]
    fn constants() {
        assert!((alpha() - 0.5849625007211562).abs() < 1e-15);
        assert!((gamma() - 0.2715533031).abs() < 1e-9);
        assert!(alpha() > 2.0 * gamma());
    }

    #[test]
    fn haar_variance_asymptotics() {
        let ratio = |n| sigma2_me_haar(n).unwrap().value / sigma2_me_asymptotic(n, 1);
        let (r24, r26) = (ratio(24), ratio(26));
        assert!((r24 - 1.0).abs() < 0.01 && (r26 - 1.0).abs() < 0.01);
        assert!((r26 - 1.0).abs() < (r24 - 1.0).abs());
    }

    #[test]
    fn f2_growth_trends() {
        let ratio = |n| f2star_sum(n).unwrap().value / f2_asymptotic(n);
        let (r40, r60) = (ratio(40), ratio(60));
        assert!((0.9..=1.1).contains(&r40));
        assert!((r60 - 1.0).abs() < (r40 - 1.0).abs());
        assert!(h2_sum(40).unwrap().value / f2_sum(40).unwrap().value < 1e-3);
        // f2*/f2 climbs towards one
        let seq: Vec<f64> = (6..=60)
            .map(|n| ratio_to_f64(&(f2star_exact(n) / f2_exact(n))))
            .collect();
        assert!(seq.windows(2).all(|w| w[1] > w[0]));
        assert!(*seq.last().unwrap() < 1.0);
    }

    #[test]
    fn h2_saddle_point_trend() {
        let ratio = |n| h2_sum(n).unwrap().value / h2_asymptotic(n);
        for n in [40, 60] {
            assert!((ratio(n) - 1.0).abs() < 1e-2, "n={n}");
        }
        assert!((ratio(60) - 1.0).abs() < (ratio(40) - 1.0).abs());
        for n in [41, 61] {
            assert!((ratio(n) - 1.0).abs() < 0.05, "n={n}");
        }
    }

    #[test]
    fn delta_mu_scaling() {
        for n in 4..=30 {
            let scaled = delta_mu_me(n).unwrap().value * (n as f64).exp2();
            assert!(scaled > 0.5 && scaled < 1.0, "n={n}: {scaled}");
        }
    }

    #[test]
    fn asymptotics_table_contents() {
        let rows = asymptotics_table(12).unwrap();
        assert_eq!(rows[0].name, "alpha");
        assert_eq!(rows[1].name, "gamma");
        let ratios: Vec<f64> = rows
            .iter()
            .filter(|r| {
                r.name == "sigma_over_delta_mu_ME_hadamard" && r.q == Some(PhaseOrder::Infinite)
            })
            .map(|r| r.value)
            .collect();
        assert_eq!(ratios.len(), 11);
        // sigma / delta shrinks like (3/8)^{n/2}
        assert!(ratios.last().unwrap() < &ratios[4]);
    }

    #[test]
    fn rational_values_consistent() {
        for row in theory_rows(9, &[Q2, Q4, PhaseOrder::Infinite]).unwrap() {
            if let Some(x) = &row.exact {
                let direct = x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap();
                assert!(
                    (row.value - direct).abs() <= 1e-14 * direct.abs().max(1.0),
                    "{}",
                    row.name
                );
            }
        }
        let huge = BigRational::new(BigInt::one() << 3000usize, (BigInt::one() << 2999usize) * 3);
        assert!((ratio_to_f64(&huge) - 2.0 / 3.0).abs() < 1e-15);
    }
}
