//! End-to-end checks behind `entstats verify`.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::{enumerate_statistic, standard_ensembles, Statistic, EXACT_TOL};
use crate::analytics::{self, PhaseOrder};
use crate::bitcomb::{balanced_bipartitions, Bipartition, BitString};
use crate::error::Result;
use crate::purity::{coupling_g, purity_direct, purity_me, purity_me_direct, purity_rdm};
use crate::states::EnsembleSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst < tol,
        detail: format!("worst deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn all_bipartitions(n: u32) -> Vec<Bipartition> {
    (1..(1u32 << n) - 1)
        .map(|m| Bipartition::new(n, BitString(m)).expect("proper subset"))
        .collect()
}

/// Reduced-density-matrix purity against the literal index sum, over every
/// bipartition of `per` states per ensemble and `n` in `2..=n_max`.
pub fn check_purity_oracle(seed: u64, per: u64, n_max: u32) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        let bips = all_bipartitions(n);
        for kind in standard_ensembles() {
            let spec = EnsembleSpec::new(kind, n, seed, 100 + kind.tag())?;
            for i in 0..per {
                let s = spec.sample_at(i);
                for b in &bips {
                    let d = purity_direct(&s, b)?.value - purity_rdm(&s, b)?.value;
                    worst = worst.max(d.abs());
                }
            }
        }
    }
    Ok(check("purity_oracle", worst, 1e-10))
}

/// Potential via balanced reshapes against the coupling-weighted sum.
pub fn check_me_oracle(seed: u64, per: u64, n_max: u32) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        for kind in standard_ensembles() {
            let spec = EnsembleSpec::new(kind, n, seed, 200 + kind.tag())?;
            for i in 0..per {
                let s = spec.sample_at(i);
                let d = purity_me_direct(&s)?.value - purity_me(&s)?.value;
                worst = worst.max(d.abs());
            }
        }
    }
    Ok(check("purity_me_oracle", worst, 1e-10))
}

/// Closed `f2`, `f2*`, `h2` against `4 sum g^2` with the supplied coupling.
pub fn check_f2_bruteforce_with(
    n_max: u32,
    g: &dyn Fn(BitString, BitString, u32) -> f64,
) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        let (mut f2, mut f2s, mut h2) = (0.0, 0.0, 0.0);
        for l in 0..1u32 << n {
            for m in 0..1u32 << n {
                let w = g(BitString(l), BitString(m), n);
                let w2 = 4.0 * w * w;
                f2 += w2;
                if l != 0 && m != 0 {
                    f2s += w2;
                }
                if m == 0 {
                    h2 += w2;
                }
            }
        }
        for (brute, closed) in [
            (f2, analytics::f2_sum(n)?.value),
            (f2s, analytics::f2star_sum(n)?.value),
            (h2, analytics::h2_sum(n)?.value),
        ] {
            worst = worst.max((brute - closed).abs());
        }
    }
    Ok(check("f2_bruteforce", worst, 1e-9))
}

pub fn check_f2star_identity(n_max: u32) -> Result<Check> {
    let mut failures = Vec::new();
    for n in 2..=n_max {
        let ex = |v: analytics::TheoryValue| v.exact.expect("rational");
        let lhs = ex(analytics::f2star_sum(n)?);
        let rhs = ex(analytics::f2_sum(n)?) - ex(analytics::h2_sum(n)?) * BigInt::from(2)
            + BigRational::from_integer(BigInt::from(4));
        if lhs != rhs {
            failures.push(n);
        }
    }
    Ok(Check {
        name: "f2star_identity",
        passed: failures.is_empty(),
        detail: format!("exact for n = 2..={n_max}; failures at {failures:?}"),
    })
}

pub fn check_distance_forms(n_max: u32) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        for (a, b) in [
            (
                analytics::f2_by_distance(n)?.value,
                analytics::f2_sum(n)?.value,
            ),
            (
                analytics::h2_by_distance(n)?.value,
                analytics::h2_sum(n)?.value,
            ),
        ] {
            worst = worst.max(((a - b) / b).abs());
        }
    }
    Ok(check("distance_forms", worst, 1e-12))
}

/// Population moments of whole Butson ensembles against the closed forms,
/// with the variance multiplier supplied by `c_q`.
pub fn check_enumeration_with(c_q: &dyn Fn(PhaseOrder) -> u32) -> Result<Check> {
    let mut worst = 0.0f64;
    for (n, q) in [(3, 2), (3, 3), (3, 4), (4, 2)] {
        let s = enumerate_statistic(n, q, Statistic::PiMe)?;
        let mean = analytics::mu_me_hadamard(n)?.value;
        let f2s = analytics::f2star_sum(n)?.value;
        let var = c_q(PhaseOrder::Finite(q)) as f64 * f2s / (3.0 * n as f64).exp2();
        worst = worst
            .max((s.mean - mean).abs())
            .max((s.population_variance() - var).abs());
    }
    for (n, q) in [(3, 2), (4, 2), (3, 4)] {
        let stat = Statistic::PiA(None).resolve(n)?;
        let s = enumerate_statistic(n, q, stat)?;
        let h = n / 2;
        let mean = analytics::mu_a_hadamard(n, h)?.value;
        let order = PhaseOrder::Finite(q);
        let var =
            2.0 * c_q(order) as f64 * ((h as f64).exp2() - 1.0) * (((n - h) as f64).exp2() - 1.0)
                / (3.0 * n as f64).exp2();
        worst = worst
            .max((s.mean - mean).abs())
            .max((s.population_variance() - var).abs());
    }
    Ok(check("enumeration_exact", worst, EXACT_TOL))
}

pub fn check_k_values() -> Result<Check> {
    let got = (4..=8)
        .map(|n| Ok(analytics::k_distance(n, PhaseOrder::Finite(2))?.value))
        .collect::<Result<Vec<f64>>>()?;
    let rounded: Vec<f64> = got
        .iter()
        .map(|&k| {
            if k < 10.0 {
                (k * 10.0).round() / 10.0
            } else {
                k.round()
            }
        })
        .collect();
    Ok(Check {
        name: "k_distance",
        passed: rounded == [2.9, 3.2, 7.5, 8.4, 19.0],
        detail: format!("k(4..8) = {got:.3?}"),
    })
}

pub fn check_orderings(n_max: u32) -> Result<Check> {
    let mut failures = Vec::new();
    for n in 2..=n_max {
        let ex = |v: analytics::TheoryValue| v.exact.expect("rational");
        let mean_ok = ex(analytics::mu_me_hadamard(n)?) < ex(analytics::mu_me_haar(n)?);
        let s3 = ex(analytics::sigma2_me_hadamard(n, PhaseOrder::Finite(3))?);
        let s2 = ex(analytics::sigma2_me_hadamard(n, PhaseOrder::Finite(2))?);
        let haar = ex(analytics::sigma2_me_haar(n)?);
        let ratio_ok = s2 == &s3 * BigInt::from(2);
        let var_ok = n < 4 || s3 < haar;
        if !(mean_ok && ratio_ok && var_ok) {
            failures.push(n);
        }
    }
    Ok(Check {
        name: "orderings",
        passed: failures.is_empty(),
        detail: format!("n = 2..={n_max}; failures at {failures:?}"),
    })
}

/// Every balanced cut is counted once per complementary pair only for even `n`.
pub fn check_bipartition_counts(n_max: u32) -> Result<Check> {
    let mut failures = Vec::new();
    for n in 2..=n_max {
        let count = balanced_bipartitions(n)?.len() as u128;
        if count != crate::bitcomb::binom_u128(n, (n / 2) as i64) {
            failures.push(n);
        }
    }
    Ok(Check {
        name: "bipartition_counts",
        passed: failures.is_empty(),
        detail: format!("n = 2..={n_max}; failures at {failures:?}"),
    })
}

pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        check_bipartition_counts(20)?,
        check_purity_oracle(seed, 20, 6)?,
        check_me_oracle(seed, 20, 5)?,
        check_f2_bruteforce_with(10, &coupling_g)?,
        check_f2star_identity(30)?,
        check_distance_forms(20)?,
        check_enumeration_with(&|q: PhaseOrder| q.c_q())?,
        check_k_values()?,
        check_orderings(30)?,
    ])
}
