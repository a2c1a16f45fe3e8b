//! Searches over Hadamard phase words for small potential of multipartite
//! entanglement.

use rayon::prelude::*;
use serde::Serialize;

use crate::bitcomb::check_qubits;
use crate::error::{Error, Result};
use crate::purity::{purity_me_direct, BipartitionTable, Workspace, ME_DIRECT_MAX_QUBITS};
use crate::states::{flat_modulus, roots_of_unity, EnsembleSpec, PhaseWord, PhaseWordRecord};

/// A neighbour must beat the current value by more than this to be taken.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

/// Absolute minimum `2^{-floor(n/2)}` of the potential.
pub fn me_bound(n: u32) -> f64 {
    (-((n / 2) as f64)).exp2()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best_state: PhaseWord,
    pub best_value: f64,
    pub bound: f64,
    /// `best_value - bound`.
    pub gap: f64,
    /// Number of potential evaluations spent.
    pub evaluations: u64,
    pub seed: u64,
    pub stream: u64,
    /// Sample index of the best draw, or of the descent's starting point.
    pub index: u64,
    /// Descent moves taken; zero for pure sampling.
    pub moves: u64,
    /// Whether the descent stopped at a local minimum rather than the pass limit.
    pub converged: bool,
}

impl SearchResult {
    fn new(word: PhaseWord, value: f64, evaluations: u64) -> Self {
        let bound = me_bound(word.n());
        Self {
            best_state: word,
            best_value: value,
            bound,
            gap: value - bound,
            evaluations,
            seed: 0,
            stream: 0,
            index: 0,
            moves: 0,
            converged: false,
        }
    }

    fn at(mut self, spec: &EnsembleSpec, index: u64) -> Self {
        self.seed = spec.seed;
        self.stream = spec.stream;
        self.index = index;
        self
    }

    pub fn to_record(&self, label: &'static str) -> SearchRecord {
        let (phase_word, angles) = match &self.best_state {
            w @ PhaseWord::Discrete { .. } => (w.to_record(), None),
            PhaseWord::Continuous { angles, .. } => (None, Some(angles.clone())),
        };
        SearchRecord {
            record: label,
            n: self.best_state.n(),
            best_value: self.best_value,
            bound: self.bound,
            gap: self.gap,
            evaluations: self.evaluations,
            seed: self.seed,
            stream: self.stream,
            index: self.index,
            moves: self.moves,
            converged: self.converged,
            phase_word,
            angles,
        }
    }
}

/// JSON form of a [`SearchResult`].
#[derive(Clone, Debug, Serialize)]
pub struct SearchRecord {
    pub record: &'static str,
    pub n: u32,
    pub best_value: f64,
    pub bound: f64,
    pub gap: f64,
    pub evaluations: u64,
    pub seed: u64,
    pub stream: u64,
    pub index: u64,
    pub moves: u64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_word: Option<PhaseWordRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
}

/// Lowest potential among samples `0..count` of a Hadamard ensemble; ties
/// go to the earliest index.
pub fn best_of_sample(spec: &EnsembleSpec, count: u64) -> Result<SearchResult> {
    if count == 0 {
        return Err(Error::Config("best_of_sample needs count >= 1".into()));
    }
    check_qubits(spec.n, 2)?;
    let table = BipartitionTable::shared(spec.n)?;
    let mut ws = Workspace::default();
    let mut best: Option<(u64, PhaseWord, f64)> = None;
    for i in 0..count {
        let word = spec.phase_word_at(i)?;
        let v = table.purity_me_with(&word.to_state(), &mut ws)?.value;
        if best.as_ref().is_none_or(|b| v < b.2) {
            best = Some((i, word, v));
        }
    }
    let (i, word, v) = best.unwrap();
    Ok(SearchResult::new(word, v, count).at(spec, i))
}

fn discrete_parts(word: &PhaseWord) -> Result<(u32, u32, &[u32])> {
    match word {
        PhaseWord::Discrete { n, q, exponents } => Ok((*n, *q, exponents)),
        PhaseWord::Continuous { .. } => Err(Error::Ensemble(
            "local search needs a Butson phase word".into(),
        )),
    }
}

/// Best-improvement descent over single-entry phase changes. Each pass
/// scores every neighbour from scratch and moves to the lowest one if it
/// improves on the current value; ties go to the lowest site, then the
/// lowest exponent.
pub fn greedy_flip_descent(start: &PhaseWord, max_passes: u64) -> Result<SearchResult> {
    let (n, q, exps) = discrete_parts(start)?;
    check_qubits(n, 2)?;
    let table = BipartitionTable::shared(n)?;
    let mut ws = Workspace::default();
    let roots: Vec<_> = roots_of_unity(q)
        .into_iter()
        .map(|z| z * flat_modulus(n))
        .collect();
    let mut exps = exps.to_vec();
    let mut state = start.to_state();
    let mut value = table.purity_me_with(&state, &mut ws)?.value;
    let mut evaluations = 1u64;
    let mut moves = 0u64;
    let mut converged = false;
    for _ in 0..max_passes {
        let mut best: Option<(usize, u32, f64)> = None;
        for (k, &current) in exps.iter().enumerate() {
            for r in (0..q).filter(|&r| r != current) {
                state.set_amplitude(k, roots[r as usize]);
                let v = table.purity_me_with(&state, &mut ws)?.value;
                evaluations += 1;
                if best.is_none_or(|b| v < b.2) {
                    best = Some((k, r, v));
                }
            }
            state.set_amplitude(k, roots[current as usize]);
        }
        match best {
            Some((k, r, v)) if v < value - IMPROVEMENT_TOL => {
                exps[k] = r;
                state.set_amplitude(k, roots[r as usize]);
                value = v;
                moves += 1;
            }
            _ => {
                converged = true;
                break;
            }
        }
    }
    let word = PhaseWord::Discrete {
        n,
        q,
        exponents: exps,
    };
    let mut result = SearchResult::new(word, value, evaluations);
    result.moves = moves;
    result.converged = converged;
    Ok(result)
}

/// One descent per start `spec.phase_word_at(i)`, `i < restarts`, run in
/// parallel and returned in restart order.
pub fn multistart_runs(
    spec: &EnsembleSpec,
    restarts: u64,
    max_passes: u64,
) -> Result<Vec<SearchResult>> {
    if restarts == 0 {
        return Err(Error::Config("multistart needs restarts >= 1".into()));
    }
    (0..restarts)
        .into_par_iter()
        .map(|i| {
            let start = spec.phase_word_at(i)?;
            Ok(greedy_flip_descent(&start, max_passes)?.at(spec, i))
        })
        .collect()
}

/// Lowest result of [`multistart_runs`]; ties go to the lowest restart
/// index. `evaluations` is the total over all restarts.
pub fn multistart(spec: &EnsembleSpec, restarts: u64, max_passes: u64) -> Result<SearchResult> {
    Ok(best_of_runs(&multistart_runs(spec, restarts, max_passes)?))
}

pub fn best_of_runs(runs: &[SearchResult]) -> SearchResult {
    let total: u64 = runs.iter().map(|r| r.evaluations).sum();
    let mut best = runs
        .iter()
        .reduce(|a, b| if b.best_value < a.best_value { b } else { a })
        .expect("at least one run")
        .clone();
    best.evaluations = total;
    best
}

/// Outcome of re-scoring every single-entry neighbour of a phase word.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NeighborCheck {
    pub value: f64,
    pub lowest_neighbor: f64,
    pub is_local_minimum: bool,
}

/// Independent local-minimum certificate: each neighbour word is rebuilt
/// and scored with the literal four-amplitude sum (`n <= 5`) or the
/// undeduplicated bipartition average.
pub fn neighbor_recheck(word: &PhaseWord, tol: f64) -> Result<NeighborCheck> {
    let (n, q, exps) = discrete_parts(word)?;
    let table = BipartitionTable::balanced(n, false)?;
    let score = |w: &PhaseWord| -> Result<f64> {
        let s = w.to_state();
        if n <= ME_DIRECT_MAX_QUBITS {
            Ok(purity_me_direct(&s)?.value)
        } else {
            Ok(table.purity_me(&s)?.value)
        }
    };
    let value = score(word)?;
    let mut lowest = f64::INFINITY;
    for k in 0..exps.len() {
        for r in (0..q).filter(|&r| r != exps[k]) {
            let mut e = exps.to_vec();
            e[k] = r;
            lowest = lowest.min(score(&PhaseWord::discrete(n, q, e)?)?);
        }
    }
    Ok(NeighborCheck {
        value,
        lowest_neighbor: lowest,
        is_local_minimum: lowest >= value - tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::purity::purity_me;
    use crate::states::{enumerate_phase_words, EnsembleKind};

    fn spec(q: u32, n: u32, seed: u64) -> EnsembleSpec {
        EnsembleSpec::new(EnsembleKind::Butson(q), n, seed, 0).unwrap()
    }

    fn exhaustive_min(n: u32, q: u32) -> f64 {
        enumerate_phase_words(n, q)
            .unwrap()
            .map(|w| purity_me_direct(&w.to_state()).unwrap().value)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn single_draw() {
        let s = spec(2, 4, 1);
        let r = best_of_sample(&s, 1).unwrap();
        let v = purity_me(&s.sample_at(0)).unwrap().value;
        assert_eq!(r.best_value, v);
        assert_eq!(r.index, 0);
        assert_eq!(r.evaluations, 1);
        assert!(best_of_sample(&s, 0).is_err());
        let haar = EnsembleSpec::new(EnsembleKind::Haar, 4, 1, 0).unwrap();
        assert!(best_of_sample(&haar, 3).is_err());
    }

    #[test]
    fn sampling_reaches_three_qubit_minimum() {
        let truth = exhaustive_min(3, 2);
        assert!((truth - 0.5).abs() < 1e-12);
        let r = best_of_sample(&spec(2, 3, 2), 2000).unwrap();
        assert!((r.best_value - truth).abs() < 1e-12);
        assert!(r.gap >= -1e-12);
    }

    #[test]
    fn two_qubit_q4_minimum_is_bell_like() {
        assert!((exhaustive_min(2, 4) - 0.5).abs() < 1e-12);
        let r = multistart(&spec(4, 2, 3), 8, 20).unwrap();
        assert!((r.best_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_is_returned_unchanged() {
        // |00> + |01> + |10> - |11> is maximally entangled
        let word = PhaseWord::discrete(2, 2, vec![0, 0, 0, 1]).unwrap();
        let r = greedy_flip_descent(&word, 10).unwrap();
        assert_eq!(r.best_state, word);
        assert_eq!(r.moves, 0);
        assert!(r.converged);
        assert!((r.best_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn descent_certificates_three_qubits() {
        for w in enumerate_phase_words(3, 2).unwrap().step_by(7) {
            let start = purity_me(&w.to_state()).unwrap().value;
            let r = greedy_flip_descent(&w, 100).unwrap();
            assert!(r.best_value <= start);
            assert!(r.converged);
            let check = neighbor_recheck(&r.best_state, 1e-11).unwrap();
            assert!(check.is_local_minimum, "{check:?}");
            assert!((check.value - r.best_value).abs() < 1e-12);
        }
    }

    #[test]
    fn pass_limit_is_respected() {
        let start = spec(2, 5, 4).phase_word_at(0).unwrap();
        let r = greedy_flip_descent(&start, 1).unwrap();
        assert!(r.moves <= 1);
        assert_eq!(r.evaluations, 1 + 32);
        let zero = greedy_flip_descent(&start, 0).unwrap();
        assert_eq!(zero.best_state, start);
        assert!(!zero.converged);
    }

    #[test]
    fn four_qubit_gap_is_positive() {
        let s = spec(2, 4, 5);
        let r = multistart(&s, 64, 100).unwrap();
        assert!(r.best_value >= 0.25 - 1e-12);
        assert!(r.gap > 1e-6, "{}", r.gap);
        assert!(
            neighbor_recheck(&r.best_state, 1e-11)
                .unwrap()
                .is_local_minimum
        );
    }

    #[test]
    fn multistart_single_restart_and_replay() {
        let s = spec(3, 4, 6);
        let one = multistart(&s, 1, 50).unwrap();
        let direct = greedy_flip_descent(&s.phase_word_at(0).unwrap(), 50).unwrap();
        assert_eq!(one.best_state, direct.best_state);
        assert_eq!(one.best_value, direct.best_value);
        assert_eq!(
            multistart(&s, 5, 50).unwrap(),
            multistart(&s, 5, 50).unwrap()
        );
    }

    #[test]
    fn descent_not_worse_than_budget_matched_sampling() {
        let s = spec(2, 5, 7);
        let ms = multistart(&s, 16, 100).unwrap();
        let bs = best_of_sample(&s, ms.evaluations).unwrap();
        assert!(
            ms.best_value <= bs.best_value + 1e-12,
            "{} vs {}",
            ms.best_value,
            bs.best_value
        );
        assert!(ms.best_value >= me_bound(5) - 1e-12);
    }

    #[test]
    fn records_serialise() {
        let r = best_of_sample(&spec(2, 3, 8), 4).unwrap();
        let json = serde_json::to_value(r.to_record("best")).unwrap();
        assert_eq!(json["record"], "best");
        assert_eq!(json["phase_word"]["exponents"].as_array().unwrap().len(), 8);
        let typ = EnsembleSpec::new(EnsembleKind::HadamardTypical, 3, 1, 0).unwrap();
        let r = best_of_sample(&typ, 4).unwrap();
        let json = serde_json::to_value(r.to_record("best")).unwrap();
        assert_eq!(json["angles"].as_array().unwrap().len(), 8);
        assert!(greedy_flip_descent(&r.best_state, 3).is_err());
    }
}
