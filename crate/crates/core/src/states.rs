//! Pure-state construction and the random ensembles: Haar-typical states,
//! Butson `P_q` states (hypergraph states at `q = 2`) and Hadamard-typical
//! states with continuous phases.
//!
//! Every sampled state is addressed by `(seed, stream, index)`. The index
//! selects a disjoint window of the ChaCha keystream, so the state drawn at
//! a given index does not depend on which worker draws it or in what order.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bitcomb::{check_qubits, MAX_QUBITS};
use crate::error::{Error, Result};

/// Normalisation slack for user-supplied states.
pub const FIXED_STATE_NORM_TOL: f64 = 1e-9;

/// Keystream words reserved for each sample index (`2^36` 32-bit words).
const WORDS_PER_SAMPLE_LOG2: u32 = 36;

/// Largest ensemble `enumerate_butson` will walk: `q^(2^n) <= 2^26`.
pub const ENUMERATION_LIMIT: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: u32,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps amplitudes without renormalising. Caller guarantees unit norm.
    pub(crate) fn from_raw(n: u32, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n);
        Self { n, amplitudes }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Overwrites one amplitude; the caller keeps the state normalised.
    pub(crate) fn set_amplitude(&mut self, k: usize, z: Complex64) {
        self.amplitudes[k] = z;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// True when every amplitude has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.amplitudes.iter().all(|z| z.im == 0.0)
    }

    /// Largest deviation of `|z_k|^2` from `2^-n`.
    pub fn flatness_error(&self) -> f64 {
        let target = 1.0 / self.dim() as f64;
        self.amplitudes
            .iter()
            .map(|z| (z.norm_sqr() - target).abs())
            .fold(0.0, f64::max)
    }

    /// Multiplies every amplitude by `phase` (expected to have unit modulus).
    pub fn with_global_phase(&self, phase: Complex64) -> Self {
        Self {
            n: self.n,
            amplitudes: self.amplitudes.iter().map(|z| z * phase).collect(),
        }
    }

    /// Relabels qubits: qubit `j` of `self` becomes qubit `perm[j]` of the
    /// result (both zero-based).
    pub fn permute_qubits(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.n as usize {
            return Err(Error::State(format!(
                "permutation of length {} for {} qubits",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p as usize >= perm.len() || std::mem::replace(&mut seen[p as usize], true) {
                return Err(Error::State(format!("{perm:?} is not a permutation")));
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (k, z) in self.amplitudes.iter().enumerate() {
            let mut target = 0usize;
            for (j, &p) in perm.iter().enumerate() {
                if k >> j & 1 == 1 {
                    target |= 1 << p;
                }
            }
            out[target] = *z;
        }
        Ok(Self {
            n: self.n,
            amplitudes: out,
        })
    }

    pub fn to_record(&self) -> StateRecord {
        StateRecord {
            n: self.n,
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_record(record: &StateRecord) -> Result<Self> {
        let amps: Vec<Complex64> = record
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        let state = fixed_state(amps)?;
        if state.n != record.n {
            return Err(Error::State(format!(
                "record declares n = {} but holds {} amplitudes",
                record.n,
                state.dim()
            )));
        }
        Ok(state)
    }
}

/// JSON form of a state: `{"n": .., "amplitudes": [[re, im], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub n: u32,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Loads a user-supplied amplitude vector. The length must be a power of two
/// and the norm within `1e-9` of one; the result is renormalised exactly.
pub fn fixed_state(amplitudes: Vec<Complex64>) -> Result<PureState> {
    let len = amplitudes.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::State(format!(
            "amplitude count {len} is not a power of two >= 2"
        )));
    }
    let n = len.trailing_zeros();
    check_qubits(n, 1)?;
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::State("zero or non-finite norm".into()));
    }
    if (norm - 1.0).abs() > FIXED_STATE_NORM_TOL {
        return Err(Error::State(format!(
            "norm {norm} differs from 1 by more than {FIXED_STATE_NORM_TOL}"
        )));
    }
    Ok(PureState {
        n,
        amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
    })
}

/// Which distribution to draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    Haar,
    /// Phases uniform on the `q`-th roots of unity; `q = 2` are hypergraph
    /// states.
    Butson(u32),
    /// Phases uniform on the whole unit circle (`q = infinity`).
    HadamardTypical,
}

impl EnsembleKind {
    pub fn validate(self) -> Result<()> {
        match self {
            EnsembleKind::Butson(q) if q < 2 => Err(Error::PhaseOrder(q)),
            _ => Ok(()),
        }
    }

    pub fn is_hadamard(self) -> bool {
        !matches!(self, EnsembleKind::Haar)
    }

    /// A small integer used to derive default per-ensemble substreams.
    pub fn tag(self) -> u64 {
        match self {
            EnsembleKind::Haar => 0,
            EnsembleKind::HadamardTypical => 1,
            EnsembleKind::Butson(q) => 1 + q as u64,
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleKind::Haar => f.write_str("haar"),
            EnsembleKind::Butson(q) => write!(f, "butson:{q}"),
            EnsembleKind::HadamardTypical => f.write_str("hadamard"),
        }
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().as_str() {
            "haar" => EnsembleKind::Haar,
            "hadamard" | "hadamard-typical" | "butson:inf" => EnsembleKind::HadamardTypical,
            "hypergraph" => EnsembleKind::Butson(2),
            other => match other.strip_prefix("butson:") {
                Some(q) => EnsembleKind::Butson(
                    q.parse()
                        .map_err(|_| Error::Config(format!("bad phase order in {s:?}")))?,
                ),
                None => return Err(Error::Config(format!("unknown ensemble {s:?}"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Distribution plus RNG address.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: u32,
    pub seed: u64,
    pub stream: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: u32, seed: u64, stream: u64) -> Result<Self> {
        kind.validate()?;
        check_qubits(n, 1)?;
        Ok(Self {
            kind,
            n,
            seed,
            stream,
        })
    }

    /// The RNG positioned at the start of sample `index`'s keystream window.
    pub fn rng_at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos((index as u128) << WORDS_PER_SAMPLE_LOG2);
        rng
    }

    /// Draws sample `index`. Pure function of `(self, index)`.
    pub fn sample_at(&self, index: u64) -> PureState {
        let mut rng = self.rng_at(index);
        match self.kind {
            EnsembleKind::Haar => draw_haar(self.n, &mut rng),
            EnsembleKind::Butson(q) => draw_butson_word(self.n, q, &mut rng).to_state(),
            EnsembleKind::HadamardTypical => draw_typical_word(self.n, &mut rng).to_state(),
        }
    }

    /// The phase word of sample `index`, for Hadamard ensembles.
    pub fn phase_word_at(&self, index: u64) -> Result<PhaseWord> {
        let mut rng = self.rng_at(index);
        match self.kind {
            EnsembleKind::Haar => Err(Error::Ensemble("Haar states have no phase word".into())),
            EnsembleKind::Butson(q) => Ok(draw_butson_word(self.n, q, &mut rng)),
            EnsembleKind::HadamardTypical => Ok(draw_typical_word(self.n, &mut rng)),
        }
    }

    /// Iterates over samples `0, 1, 2, ...`.
    pub fn samples(&self) -> impl Iterator<Item = PureState> + '_ {
        (0u64..).map(move |i| self.sample_at(i))
    }
}

fn draw_haar<R: Rng>(n: u32, rng: &mut R) -> PureState {
    let dim = 1usize << n;
    loop {
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return PureState::from_raw(n, amps.into_iter().map(|z| z / norm).collect());
        }
    }
}

fn draw_butson_word<R: Rng>(n: u32, q: u32, rng: &mut R) -> PhaseWord {
    let exponents = (0..1usize << n).map(|_| rng.random_range(0..q)).collect();
    PhaseWord::Discrete { n, q, exponents }
}

fn draw_typical_word<R: Rng>(n: u32, rng: &mut R) -> PhaseWord {
    let angles = (0..1usize << n)
        .map(|_| rng.random::<f64>() * TAU)
        .collect();
    PhaseWord::Continuous { n, angles }
}

fn ensure_kind(spec: &EnsembleSpec, want: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Ensemble(format!(
            "expected a {want} ensemble, got {}",
            spec.kind
        )))
    }
}

/// First Haar draw at `spec`'s address: a normalised vector of i.i.d.
/// standard complex Gaussians, uniform on the unit sphere.
pub fn sample_haar(spec: &EnsembleSpec) -> Result<PureState> {
    ensure_kind(spec, "Haar", spec.kind == EnsembleKind::Haar)?;
    Ok(spec.sample_at(0))
}

pub fn sample_butson(spec: &EnsembleSpec) -> Result<PureState> {
    ensure_kind(spec, "Butson", matches!(spec.kind, EnsembleKind::Butson(_)))?;
    spec.kind.validate()?;
    Ok(spec.sample_at(0))
}

pub fn sample_hadamard_typical(spec: &EnsembleSpec) -> Result<PureState> {
    ensure_kind(
        spec,
        "Hadamard-typical",
        spec.kind == EnsembleKind::HadamardTypical,
    )?;
    Ok(spec.sample_at(0))
}

/// The `q`-th roots of unity, exact at multiples of a quarter turn.
pub fn roots_of_unity(q: u32) -> Vec<Complex64> {
    (0..q)
        .map(|r| {
            if (4 * r as u64).is_multiple_of(q as u64) {
                match (4 * r as u64) / q as u64 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                }
            } else {
                Complex64::from_polar(1.0, TAU * r as f64 / q as f64)
            }
        })
        .collect()
}

/// `2^{-n/2}` with exact powers of two for even `n`.
pub(crate) fn flat_modulus(n: u32) -> f64 {
    let half = (-((n / 2) as i32)) as f64;
    let base = half.exp2();
    if n % 2 == 1 {
        base * FRAC_1_SQRT_2
    } else {
        base
    }
}

/// Phases of a Hadamard state.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseWord {
    /// Exponents `r_k` of `exp(2 pi i r_k / q)`.
    Discrete { n: u32, q: u32, exponents: Vec<u32> },
    /// Angles in `[0, 2 pi)`.
    Continuous { n: u32, angles: Vec<f64> },
}

impl PhaseWord {
    pub fn discrete(n: u32, q: u32, exponents: Vec<u32>) -> Result<Self> {
        check_qubits(n, 1)?;
        if q < 2 {
            return Err(Error::PhaseOrder(q));
        }
        if exponents.len() != 1 << n {
            return Err(Error::State(format!(
                "phase word of length {} for n = {n}",
                exponents.len()
            )));
        }
        if let Some(bad) = exponents.iter().find(|&&r| r >= q) {
            return Err(Error::State(format!(
                "exponent {bad} out of range for q = {q}"
            )));
        }
        Ok(PhaseWord::Discrete { n, q, exponents })
    }

    pub fn n(&self) -> u32 {
        match self {
            PhaseWord::Discrete { n, .. } | PhaseWord::Continuous { n, .. } => *n,
        }
    }

    pub fn to_state(&self) -> PureState {
        let n = self.n();
        let scale = flat_modulus(n);
        let amps = match self {
            PhaseWord::Discrete { q, exponents, .. } => {
                let roots = roots_of_unity(*q);
                exponents
                    .iter()
                    .map(|&r| roots[r as usize] * scale)
                    .collect()
            }
            PhaseWord::Continuous { angles, .. } => angles
                .iter()
                .map(|&phi| Complex64::from_polar(scale, phi))
                .collect(),
        };
        PureState::from_raw(n, amps)
    }

    pub fn to_record(&self) -> Option<PhaseWordRecord> {
        match self {
            PhaseWord::Discrete { n, q, exponents } => Some(PhaseWordRecord {
                n: *n,
                q: *q,
                exponents: exponents.clone(),
            }),
            PhaseWord::Continuous { .. } => None,
        }
    }

    pub fn from_record(record: &PhaseWordRecord) -> Result<Self> {
        Self::discrete(record.n, record.q, record.exponents.clone())
    }
}

/// JSON form of a Butson phase word: `{"n": .., "q": .., "exponents": [..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseWordRecord {
    pub n: u32,
    pub q: u32,
    pub exponents: Vec<u32>,
}

/// `q^(2^n)` if it does not exceed [`ENUMERATION_LIMIT`].
pub fn enumeration_size(n: u32, q: u32) -> Result<u64> {
    if q < 2 {
        return Err(Error::PhaseOrder(q));
    }
    check_qubits(n, 1)?;
    let mut total = 1u64;
    for _ in 0..(1u64 << n.min(MAX_QUBITS)) {
        total = total.saturating_mul(q as u64);
        if total > ENUMERATION_LIMIT {
            return Err(Error::InfeasibleEnumeration { n, q });
        }
    }
    Ok(total)
}

/// Every `P_q` phase word on `n` qubits, in lexicographic exponent order
/// (the last entry varies fastest).
#[derive(Clone, Debug)]
pub struct PhaseWordEnumeration {
    n: u32,
    q: u32,
    current: Option<Vec<u32>>,
    remaining: u64,
}

impl Iterator for PhaseWordEnumeration {
    type Item = PhaseWord;

    fn next(&mut self) -> Option<PhaseWord> {
        let word = self.current.take()?;
        self.remaining -= 1;
        let mut next = word.clone();
        let mut carry = true;
        for r in next.iter_mut().rev() {
            *r += 1;
            if *r < self.q {
                carry = false;
                break;
            }
            *r = 0;
        }
        if !carry {
            self.current = Some(next);
        }
        Some(PhaseWord::Discrete {
            n: self.n,
            q: self.q,
            exponents: word,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

impl ExactSizeIterator for PhaseWordEnumeration {}

pub fn enumerate_phase_words(n: u32, q: u32) -> Result<PhaseWordEnumeration> {
    let total = enumeration_size(n, q)?;
    Ok(PhaseWordEnumeration {
        n,
        q,
        current: Some(vec![0; 1 << n]),
        remaining: total,
    })
}

/// Every Butson `P_q` state on `n` qubits.
pub fn enumerate_butson(n: u32, q: u32) -> Result<impl ExactSizeIterator<Item = PureState>> {
    Ok(enumerate_phase_words(n, q)?.map(|w| w.to_state()))
}
