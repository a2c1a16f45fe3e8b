//! Bipartite purity `Tr(rho_A^2)` and its average over balanced bipartitions.
//!
//! The fast path reshapes the amplitude vector into a matrix `M` whose rows
//! index the smaller subsystem and evaluates `||M M^dagger||_F^2`. Only the
//! upper triangle of the Hermitian Gram matrix is formed. The brute-force
//! index sums are kept as independent oracles for small `n`.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::bitcomb::{
    and_weight, balanced_bipartitions, binom_u128, bit_scatter, check_qubits, Bipartition,
    BitString, MAX_QUBITS,
};
use crate::error::{Error, Result};
use crate::states::PureState;
use crate::sum::CompensatedSum;

/// Largest `n` accepted by [`purity_direct`].
pub const DIRECT_MAX_QUBITS: u32 = 8;
/// Largest `n` accepted by [`purity_me_direct`].
pub const ME_DIRECT_MAX_QUBITS: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PurityKind {
    FixedBipartition(BitString),
    AverageMe,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PuritySample {
    pub value: f64,
    pub kind: PurityKind,
    pub n: u32,
}

impl PuritySample {
    /// Smallest value the statistic can take on a pure state.
    pub fn lower_bound(&self) -> f64 {
        let k = match self.kind {
            PurityKind::FixedBipartition(mask) => mask.weight().min(self.n - mask.weight()),
            PurityKind::AverageMe => self.n / 2,
        };
        (-(k as f64)).exp2()
    }

    pub fn within_bounds(&self, slack: f64) -> bool {
        self.value >= self.lower_bound() - slack && self.value <= 1.0 + slack
    }
}

/// Row and column offsets realising the reshape of a state into the
/// `2^{n_small} x 2^{n_large}` matrix of a bipartition: entry `(r, c)` is
/// amplitude `rows[r] | cols[c]`.
#[derive(Clone, Debug)]
pub struct Reshape {
    bip: Bipartition,
    rows: Vec<u32>,
    cols: Vec<u32>,
}

impl Reshape {
    pub fn new(bip: Bipartition) -> Self {
        let (small, large) = if bip.is_canonical() {
            (bip.mask(), bip.complement_mask())
        } else {
            (bip.complement_mask(), bip.mask())
        };
        let rows = (0..1u32 << small.weight())
            .map(|r| bit_scatter(r, small).bits())
            .collect();
        let cols = (0..1u32 << large.weight())
            .map(|c| bit_scatter(c, large).bits())
            .collect();
        Self { bip, rows, cols }
    }

    pub fn bipartition(&self) -> Bipartition {
        self.bip
    }

    fn check(&self, state: &PureState) -> Result<()> {
        if state.n() != self.bip.n() {
            return Err(Error::DimensionMismatch {
                state: state.n(),
                expected: self.bip.n(),
            });
        }
        Ok(())
    }

    /// `Tr(rho_A^2)`, with `real` selecting the real-arithmetic kernel.
    fn purity(&self, amps: &[Complex64], real: bool, ws: &mut Workspace) -> f64 {
        let (nr, nc) = (self.rows.len(), self.cols.len());
        ws.re.clear();
        ws.im.clear();
        for &r in &self.rows {
            for &c in &self.cols {
                let z = amps[(r | c) as usize];
                ws.re.push(z.re);
                if !real {
                    ws.im.push(z.im);
                }
            }
        }
        if real {
            quartic_trace_real(&ws.re, nr, nc)
        } else {
            quartic_trace_complex(&ws.re, &ws.im, nr, nc)
        }
    }
}

/// Scratch buffers reused across purity evaluations.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[inline]
fn dot_real(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ac, ar) = a.split_at(a.len() / 4 * 4);
    let (bc, br) = b.split_at(ac.len());
    for (x, y) in ac.chunks_exact(4).zip(bc.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ar.iter().zip(br) {
        s += x * y;
    }
    s
}

/// `sum_j a_j conj(b_j)` split into real and imaginary parts.
#[inline]
fn dot_complex(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let len = ar.len() / 4 * 4;
    for j in (0..len).step_by(4) {
        for l in 0..4 {
            let (a, b, c, d) = (ar[j + l], ai[j + l], br[j + l], bi[j + l]);
            re[l] += a * c + b * d;
            im[l] += b * c - a * d;
        }
    }
    let mut s_re = (re[0] + re[1]) + (re[2] + re[3]);
    let mut s_im = (im[0] + im[1]) + (im[2] + im[3]);
    for j in len..ar.len() {
        let (a, b, c, d) = (ar[j], ai[j], br[j], bi[j]);
        s_re += a * c + b * d;
        s_im += b * c - a * d;
    }
    (s_re, s_im)
}

fn quartic_trace_real(m: &[f64], nr: usize, nc: usize) -> f64 {
    let mut acc = CompensatedSum::default();
    for i in 0..nr {
        let ri = &m[i * nc..(i + 1) * nc];
        let d = dot_real(ri, ri);
        acc.add(d * d);
        for k in i + 1..nr {
            let g = dot_real(ri, &m[k * nc..(k + 1) * nc]);
            acc.add(2.0 * g * g);
        }
    }
    acc.value()
}

fn quartic_trace_complex(re: &[f64], im: &[f64], nr: usize, nc: usize) -> f64 {
    let mut acc = CompensatedSum::default();
    for i in 0..nr {
        let (ri, ii) = (&re[i * nc..(i + 1) * nc], &im[i * nc..(i + 1) * nc]);
        let (d, _) = dot_complex(ri, ii, ri, ii);
        acc.add(d * d);
        for k in i + 1..nr {
            let (g_re, g_im) =
                dot_complex(ri, ii, &re[k * nc..(k + 1) * nc], &im[k * nc..(k + 1) * nc]);
            acc.add(2.0 * (g_re * g_re + g_im * g_im));
        }
    }
    acc.value()
}

/// `Tr(rho_A^2)` through the reduced density matrix.
pub fn purity_rdm(state: &PureState, bip: &Bipartition) -> Result<PuritySample> {
    let reshape = Reshape::new(*bip);
    reshape.check(state)?;
    let value = reshape.purity(
        state.amplitudes(),
        state.is_real(),
        &mut Workspace::default(),
    );
    Ok(PuritySample {
        value,
        kind: PurityKind::FixedBipartition(bip.mask()),
        n: state.n(),
    })
}

/// Literal four-amplitude index sum over `k`, `l` inside `A`, `m` inside the
/// complement.
pub fn purity_direct(state: &PureState, bip: &Bipartition) -> Result<PuritySample> {
    let n = state.n();
    if n > DIRECT_MAX_QUBITS {
        return Err(Error::TooLargeForOracle {
            n,
            limit: DIRECT_MAX_QUBITS,
        });
    }
    if n != bip.n() {
        return Err(Error::DimensionMismatch {
            state: n,
            expected: bip.n(),
        });
    }
    let z = state.amplitudes();
    let mut acc = CompensatedSum::default();
    for k in 0..z.len() {
        for l in bip.mask().submasks() {
            let kl = k ^ l.bits() as usize;
            let a = z[k] * z[kl].conj();
            for m in bip.complement_mask().submasks() {
                let m = m.bits() as usize;
                acc.add((a * z[kl ^ m] * z[k ^ m].conj()).re);
            }
        }
    }
    Ok(PuritySample {
        value: acc.value(),
        kind: PurityKind::FixedBipartition(bip.mask()),
        n,
    })
}

/// The balanced bipartitions of an `n`-qubit register with their reshapes,
/// built once and shared between evaluations.
#[derive(Clone, Debug)]
pub struct BipartitionTable {
    n: u32,
    entries: Vec<(Reshape, f64)>,
    total: usize,
}

impl BipartitionTable {
    /// With `dedup` set and `n` even, only the member of each complementary
    /// pair with the smaller mask is kept, weighted twice.
    pub fn balanced(n: u32, dedup: bool) -> Result<Self> {
        let all = balanced_bipartitions(n)?;
        let total = all.len();
        let entries = if dedup && n.is_multiple_of(2) {
            all.into_iter()
                .filter(|b| b.mask() < b.complement_mask())
                .map(|b| (Reshape::new(b), 2.0))
                .collect()
        } else {
            all.into_iter().map(|b| (Reshape::new(b), 1.0)).collect()
        };
        Ok(Self { n, entries, total })
    }

    /// Process-wide deduplicated table for `n`.
    pub fn shared(n: u32) -> Result<Arc<Self>> {
        static TABLES: [OnceLock<Arc<BipartitionTable>>; MAX_QUBITS as usize + 1] =
            [const { OnceLock::new() }; MAX_QUBITS as usize + 1];
        check_qubits(n, 2)?;
        if let Some(t) = TABLES[n as usize].get() {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::balanced(n, true)?);
        Ok(TABLES[n as usize].get_or_init(|| table).clone())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `C(n, floor(n/2))`.
    pub fn bipartition_count(&self) -> usize {
        self.total
    }

    /// Number of distinct reshapes actually evaluated.
    pub fn evaluated_count(&self) -> usize {
        self.entries.len()
    }

    pub fn purity_me_with(&self, state: &PureState, ws: &mut Workspace) -> Result<PuritySample> {
        if state.n() != self.n {
            return Err(Error::DimensionMismatch {
                state: state.n(),
                expected: self.n,
            });
        }
        let real = state.is_real();
        let amps = state.amplitudes();
        let mut acc = CompensatedSum::default();
        for (reshape, w) in &self.entries {
            acc.add(w * reshape.purity(amps, real, ws));
        }
        Ok(PuritySample {
            value: acc.value() / self.total as f64,
            kind: PurityKind::AverageMe,
            n: self.n,
        })
    }

    pub fn purity_me(&self, state: &PureState) -> Result<PuritySample> {
        self.purity_me_with(state, &mut Workspace::default())
    }
}

/// Evaluator for one fixed bipartition with reusable buffers.
#[derive(Clone, Debug)]
pub struct FixedPurity {
    reshape: Reshape,
}

impl FixedPurity {
    pub fn new(bip: Bipartition) -> Self {
        Self {
            reshape: Reshape::new(bip),
        }
    }

    pub fn evaluate(&self, state: &PureState, ws: &mut Workspace) -> Result<PuritySample> {
        self.reshape.check(state)?;
        Ok(PuritySample {
            value: self.reshape.purity(state.amplitudes(), state.is_real(), ws),
            kind: PurityKind::FixedBipartition(self.reshape.bip.mask()),
            n: state.n(),
        })
    }
}

/// Potential of multipartite entanglement: mean purity over all balanced
/// bipartitions.
pub fn purity_me(state: &PureState) -> Result<PuritySample> {
    BipartitionTable::shared(state.n().clamp(2, MAX_QUBITS))?.purity_me(state)
}

/// `g_hat(s, t) = [C(n-s-t, h-s) + C(n-s-t, h-t)] / (2 C(n, h))`, `h = floor(n/2)`;
/// zero when `s + t > n`.
pub fn coupling_g_hat(s: u32, t: u32, n: u32) -> f64 {
    if s + t > n {
        return 0.0;
    }
    let h = (n / 2) as i64;
    let rest = n - s - t;
    let num = binom_u128(rest, h - s as i64) + binom_u128(rest, h - t as i64);
    num as f64 / (2.0 * binom_u128(n, h) as f64)
}

/// Coupling weight of the index pair `(l, m)`: zero unless the supports are
/// disjoint.
pub fn coupling_g(l: BitString, m: BitString, n: u32) -> f64 {
    if and_weight(l, m) != 0 {
        return 0.0;
    }
    coupling_g_hat(l.weight(), m.weight(), n)
}

/// The `g`-weighted triple index sum over `k, l, m`.
pub fn purity_me_direct(state: &PureState) -> Result<PuritySample> {
    let n = state.n();
    if n > ME_DIRECT_MAX_QUBITS {
        return Err(Error::TooLargeForOracle {
            n,
            limit: ME_DIRECT_MAX_QUBITS,
        });
    }
    check_qubits(n, 2)?;
    let size = n as usize + 1;
    let mut g_hat = vec![0.0; size * size];
    for s in 0..=n {
        for t in 0..=n {
            g_hat[s as usize * size + t as usize] = coupling_g_hat(s, t, n);
        }
    }
    let z = state.amplitudes();
    let dim = z.len();
    let mut acc = CompensatedSum::default();
    for k in 0..dim {
        for l in 0..dim {
            let kl = k ^ l;
            let a = z[k] * z[kl].conj();
            for m in 0..dim {
                if l & m != 0 {
                    continue;
                }
                let g = g_hat[l.count_ones() as usize * size + m.count_ones() as usize];
                acc.add(g * (a * z[kl ^ m] * z[k ^ m].conj()).re);
            }
        }
    }
    Ok(PuritySample {
        value: acc.value(),
        kind: PurityKind::AverageMe,
        n,
    })
}
