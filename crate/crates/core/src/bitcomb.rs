//! Bit-level index arithmetic and bipartition combinatorics.
//!
//! Qubit `j` (1-based) of an `n`-qubit register corresponds to bit `j - 1`
//! of a computational-basis index, so the subsystem `A = {1, ..., h}` has
//! mask `(1 << h) - 1`.

use std::fmt;
use std::ops::{BitAnd, BitOr, BitXor, Not};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest supported register size. Indices fit one `u32` word.
pub const MAX_QUBITS: u32 = 30;

/// An `n`-bit computational-basis index or qubit subset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(pub u32);

impl BitString {
    pub const ZERO: BitString = BitString(0);

    /// The all-ones word on `n` bits.
    pub fn full(n: u32) -> Self {
        debug_assert!(n <= 32);
        if n == 32 {
            BitString(u32::MAX)
        } else {
            BitString((1u32 << n) - 1)
        }
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn contains(self, bit: u32) -> bool {
        self.0 >> bit & 1 == 1
    }

    /// Checks the ambient-width invariant `bits < 2^n`.
    pub fn fits(self, n: u32) -> bool {
        n >= 32 || self.0 >> n == 0
    }

    /// Iterates over every submask of `self` in ascending numeric order,
    /// starting at zero and ending at `self`.
    pub fn submasks(self) -> Submasks {
        Submasks {
            mask: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

impl BitXor for BitString {
    type Output = BitString;
    #[inline]
    fn bitxor(self, rhs: Self) -> Self {
        BitString(self.0 ^ rhs.0)
    }
}

impl BitAnd for BitString {
    type Output = BitString;
    #[inline]
    fn bitand(self, rhs: Self) -> Self {
        BitString(self.0 & rhs.0)
    }
}

impl BitOr for BitString {
    type Output = BitString;
    #[inline]
    fn bitor(self, rhs: Self) -> Self {
        BitString(self.0 | rhs.0)
    }
}

impl Not for BitString {
    type Output = BitString;
    #[inline]
    fn not(self) -> Self {
        BitString(!self.0)
    }
}

/// Ascending submask enumeration (carry-rippler).
#[derive(Clone, Debug)]
pub struct Submasks {
    mask: u32,
    next: Option<u32>,
}

impl Iterator for Submasks {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some(cur.wrapping_sub(self.mask) & self.mask)
        };
        Some(BitString(cur))
    }
}

#[inline]
pub fn xor(a: BitString, b: BitString) -> BitString {
    a ^ b
}

/// `|a AND b|`, the number of positions set in both words.
#[inline]
pub fn and_weight(a: BitString, b: BitString) -> u32 {
    (a & b).weight()
}

/// Compacts the bits of `k` selected by `mask` into the low-order bits of
/// the result, keeping their relative order (software `pext`).
#[inline]
pub fn bit_gather(k: BitString, mask: BitString) -> u32 {
    let mut out = 0u32;
    let mut m = mask.0;
    let mut pos = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if k.0 & low != 0 {
            out |= 1 << pos;
        }
        pos += 1;
        m ^= low;
    }
    out
}

/// Inverse of [`bit_gather`]: spreads the low bits of `x` onto the positions
/// set in `mask`.
#[inline]
pub fn bit_scatter(x: u32, mask: BitString) -> BitString {
    let mut out = 0u32;
    let mut m = mask.0;
    let mut pos = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if x >> pos & 1 == 1 {
            out |= low;
        }
        pos += 1;
        m ^= low;
    }
    BitString(out)
}

pub(crate) fn check_qubits(n: u32, min: u32) -> Result<()> {
    if n < min || n > MAX_QUBITS {
        return Err(Error::QubitCount {
            n,
            min,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

/// A split of the `n` qubits into a subsystem `A` (the mask) and its
/// complement.
///
/// Any nonempty proper subset is accepted so that complements can be
/// represented; [`Bipartition::is_canonical`] tests the `n_A <= n_Abar`
/// convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bipartition {
    mask: BitString,
    n: u32,
}

impl Bipartition {
    pub fn new(n: u32, mask: BitString) -> Result<Self> {
        check_qubits(n, 2)?;
        if !mask.fits(n) {
            return Err(Error::Bipartition(format!(
                "mask {mask} has bits beyond n = {n}"
            )));
        }
        if mask.0 == 0 || mask == BitString::full(n) {
            return Err(Error::Bipartition(format!(
                "mask {mask} must select a nonempty proper subset of {n} qubits"
            )));
        }
        Ok(Self { mask, n })
    }

    /// The default fixed bipartition `A = {1, ..., floor(n/2)}`.
    pub fn leading_half(n: u32) -> Result<Self> {
        check_qubits(n, 2)?;
        Self::new(n, BitString::full(n / 2))
    }

    #[inline]
    pub fn mask(&self) -> BitString {
        self.mask
    }

    #[inline]
    pub fn complement_mask(&self) -> BitString {
        !self.mask & BitString::full(self.n)
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn n_a(&self) -> u32 {
        self.mask.weight()
    }

    #[inline]
    pub fn n_abar(&self) -> u32 {
        self.n - self.n_a()
    }

    pub fn complement(&self) -> Self {
        Self {
            mask: self.complement_mask(),
            n: self.n,
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.n_a() <= self.n_abar()
    }

    pub fn is_balanced(&self) -> bool {
        self.n_a() == self.n / 2
    }
}

/// All subsets of size `floor(n/2)`, in ascending mask order.
pub fn balanced_bipartitions(n: u32) -> Result<Vec<Bipartition>> {
    check_qubits(n, 2)?;
    let h = n / 2;
    let limit = 1u64 << n;
    let mut out = Vec::new();
    let mut mask = (1u64 << h) - 1;
    while mask < limit {
        out.push(Bipartition {
            mask: BitString(mask as u32),
            n,
        });
        // Gosper's hack: next word with the same popcount.
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Ok(out)
}

/// Binomial coefficient `C(n, k)`, zero when `k < 0` or `k > n`.
pub fn binom(n: u32, k: i64) -> BigUint {
    if k < 0 || k > n as i64 {
        return BigUint::zero();
    }
    let k = (k as u32).min(n - k as u32);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Trinomial coefficient `n! / (s! t! (n-s-t)!)`, zero outside
/// `s, t >= 0, s + t <= n`.
pub fn trinom(n: u32, s: i64, t: i64) -> BigUint {
    if s < 0 || t < 0 || s + t > n as i64 {
        return BigUint::zero();
    }
    binom(n, s) * binom(n - s as u32, t)
}

/// `C(n, k)` as `u128`; exact (no intermediate overflow) for `n <= 126`.
pub fn binom_u128(n: u32, k: i64) -> u128 {
    if k < 0 || k > n as i64 {
        return 0;
    }
    let k = (k as u32).min(n - k as u32) as u128;
    let n = n as u128;
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}
