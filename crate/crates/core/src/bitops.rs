//! Broadword kernels for packed modulo-3 arithmetic and GF(2) rows.
//!
//! A modulo-3 vector is packed 32 elements per 64-bit word, element `i` at
//! bits `2i` and `2i + 1`. Every kernel works on whole words with a constant
//! number of operations; a lane-by-lane reference implementation lives in
//! [`scalar`] and can be selected at run time through [`Kernels`].

use std::fmt;
use std::ops::{Add, Sub};

use crate::error::LengthMismatch;

/// Low bit of every 2-bit lane.
pub const LOW_LANES: u64 = 0x5555_5555_5555_5555;
/// High bit of every 2-bit lane.
pub const HIGH_LANES: u64 = 0xAAAA_AAAA_AAAA_AAAA;
/// Number of modulo-3 lanes in a word.
pub const LANES_PER_WORD: usize = 32;

/// Lanewise `(x + y) mod 3` on canonical packed words.
#[inline(always)]
pub fn add_mod3(x: u64, y: u64) -> u64 {
    let xy = x | y;
    // MSB set if (x or y == 2) and (x or y == 1).
    let mut mask = (xy << 1) & xy;
    // MSB set if x == 2 and y == 2.
    mask |= x & y;
    mask &= HIGH_LANES;
    mask |= mask >> 1;
    x.wrapping_add(y).wrapping_sub(mask)
}

/// Lanewise `(x - y) mod 3` on canonical packed words.
#[inline(always)]
pub fn sub_mod3(x: u64, y: u64) -> u64 {
    // Every lane becomes 3 - y_i, which is in [1..3].
    let y = u64::MAX - y;
    let mut mask = x;
    mask |= ((x | y) << 1) & y;
    mask &= HIGH_LANES;
    mask |= mask >> 1;
    x.wrapping_add(y).wrapping_sub(mask)
}

/// A value congruent modulo 3 to the scalar product of two packed words.
///
/// The result is not reduced; summing the partial products of a whole row and
/// reducing once at the end is the intended use.
#[inline(always)]
pub fn prod_mod3(x: u64, y: u64) -> u32 {
    let high = x & HIGH_LANES;
    let low = x & LOW_LANES;
    // Every 10 becomes 11, everything else 00.
    let high_shift = high >> 1;
    // Exchange ones with twos where x is 2, and turn 00 into 11.
    let t = (y ^ (high | high_shift)) & (x | high_shift | (low << 1));
    (t & HIGH_LANES).count_ones() * 2 + (t & LOW_LANES).count_ones()
}

/// Number of 2-bit lanes of `x` that are not zero.
#[inline(always)]
pub fn count_nonzero_pairs(x: u64) -> u32 {
    ((x | (x >> 1)) & LOW_LANES).count_ones()
}

/// Lanewise negation modulo 3.
#[inline(always)]
pub fn neg_mod3(x: u64) -> u64 {
    sub_mod3(0, x)
}

/// Returns lane `i` of a packed word.
#[inline(always)]
pub fn lane(x: u64, i: usize) -> u64 {
    (x >> (2 * i)) & 3
}

/// Whether every lane of `x` is in `{0, 1, 2}`.
#[inline]
pub fn is_canonical(x: u64) -> bool {
    x & (x >> 1) & LOW_LANES == 0
}

/// Positions of the set bits of a sequence of words, in increasing order.
///
/// Bit `j` of word `i` is position `64 i + j`.
pub fn iterate_ones(words: &[u64]) -> Ones<'_> {
    Ones {
        words,
        index: 0,
        current: words.first().copied().unwrap_or(0),
    }
}

/// Iterator returned by [`iterate_ones`].
#[derive(Clone)]
pub struct Ones<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
        let bit = self.current.trailing_zeros() as usize;
        // Clear the lowest set bit.
        self.current &= self.current.wrapping_sub(1);
        Some(self.index * 64 + bit)
    }
}

/// Positions of the nonzero lanes of a packed modulo-3 vector.
pub fn iterate_nonzero_lanes(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| {
        let mut m = (w | (w >> 1)) & LOW_LANES;
        std::iter::from_fn(move || {
            if m == 0 {
                return None;
            }
            let bit = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i * LANES_PER_WORD + bit / 2)
        })
    })
}

/// Sign of the scalar in a row operation `x ± y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Lanewise `dst ± src` modulo 3.
pub fn mod3_vector_addsub(dst: &mut [u64], src: &[u64], sign: Sign) -> Result<(), LengthMismatch> {
    check_len(dst.len(), src.len())?;
    Kernels::Broadword.mod3_addsub(dst, src, sign);
    Ok(())
}

fn check_len(left: usize, right: usize) -> Result<(), LengthMismatch> {
    if left == right {
        Ok(())
    } else {
        Err(LengthMismatch { left, right })
    }
}

/// A packed word of 32 modulo-3 lanes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PackedMod3Word(pub u64);

impl PackedMod3Word {
    /// Packs up to 32 lane values; values are reduced modulo 3.
    pub fn from_lanes(lanes: &[u8]) -> Self {
        assert!(lanes.len() <= LANES_PER_WORD);
        let mut w = 0;
        for (i, &v) in lanes.iter().enumerate() {
            w |= u64::from(v % 3) << (2 * i);
        }
        PackedMod3Word(w)
    }

    pub fn lane(self, i: usize) -> u8 {
        lane(self.0, i) as u8
    }

    pub fn is_canonical(self) -> bool {
        is_canonical(self.0)
    }

    /// Scalar product reduced modulo 3.
    pub fn dot(self, other: Self) -> u8 {
        (prod_mod3(self.0, other.0) % 3) as u8
    }

    pub fn nonzero_lanes(self) -> u32 {
        count_nonzero_pairs(self.0)
    }
}

impl Add for PackedMod3Word {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        PackedMod3Word(add_mod3(self.0, rhs.0))
    }
}

impl Sub for PackedMod3Word {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        PackedMod3Word(sub_mod3(self.0, rhs.0))
    }
}

impl fmt::Debug for PackedMod3Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PackedMod3Word(")?;
        for i in (0..LANES_PER_WORD).rev() {
            write!(f, "{}", self.lane(i))?;
        }
        write!(f, ")")
    }
}

/// A GF(2) row: one bit per variable plus a right-hand side of up to 64 bits.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Gf2Row {
    bits: Vec<u64>,
    num_vars: usize,
    pub rhs: u64,
}

impl Gf2Row {
    pub fn zero(num_vars: usize) -> Self {
        Gf2Row {
            bits: vec![0; num_vars.div_ceil(64)],
            num_vars,
            rhs: 0,
        }
    }

    pub fn from_vars(num_vars: usize, vars: &[usize], rhs: u64) -> Self {
        let mut row = Self::zero(num_vars);
        for &v in vars {
            row.flip(v);
        }
        row.rhs = rhs;
        row
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn get(&self, var: usize) -> bool {
        assert!(var < self.num_vars);
        self.bits[var / 64] >> (var % 64) & 1 != 0
    }

    pub fn flip(&mut self, var: usize) {
        assert!(var < self.num_vars);
        self.bits[var / 64] ^= 1 << (var % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> Ones<'_> {
        iterate_ones(&self.bits)
    }

    /// `self ^= other`, bits and right-hand side.
    pub fn xor_row_accumulate(&mut self, other: &Gf2Row) -> Result<(), LengthMismatch> {
        check_len(self.num_vars, other.num_vars)?;
        Kernels::Broadword.xor(&mut self.bits, &other.bits);
        self.rhs ^= other.rhs;
        Ok(())
    }
}

/// Selects the word-parallel kernels or the lane-by-lane reference ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Kernels {
    #[default]
    Broadword,
    Scalar,
}

impl Kernels {
    /// `dst ^= src` over GF(2) bit vectors.
    #[inline]
    pub fn xor(self, dst: &mut [u64], src: &[u64]) {
        debug_assert_eq!(dst.len(), src.len());
        match self {
            Kernels::Broadword => {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d ^= s;
                }
            }
            Kernels::Scalar => scalar::xor(dst, src),
        }
    }

    /// `dst ± src` over packed modulo-3 vectors.
    #[inline]
    pub fn mod3_addsub(self, dst: &mut [u64], src: &[u64], sign: Sign) {
        debug_assert_eq!(dst.len(), src.len());
        match (self, sign) {
            (Kernels::Broadword, Sign::Plus) => {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = add_mod3(*d, s);
                }
            }
            (Kernels::Broadword, Sign::Minus) => {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = sub_mod3(*d, s);
                }
            }
            (Kernels::Scalar, _) => {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = match sign {
                        Sign::Plus => scalar::add_mod3(*d, s),
                        Sign::Minus => scalar::sub_mod3(*d, s),
                    };
                }
            }
        }
    }

    /// Lanewise negation of a packed modulo-3 vector.
    #[inline]
    pub fn mod3_neg(self, v: &mut [u64]) {
        for w in v {
            *w = match self {
                Kernels::Broadword => neg_mod3(*w),
                Kernels::Scalar => scalar::sub_mod3(0, *w),
            };
        }
    }

    /// Scalar product of two packed modulo-3 vectors, reduced.
    #[inline]
    pub fn mod3_dot(self, x: &[u64], y: &[u64]) -> u8 {
        debug_assert_eq!(x.len(), y.len());
        let sum: u64 = match self {
            Kernels::Broadword => x.iter().zip(y).map(|(&a, &b)| u64::from(prod_mod3(a, b))).sum(),
            Kernels::Scalar => x.iter().zip(y).map(|(&a, &b)| u64::from(scalar::prod_mod3(a, b))).sum(),
        };
        (sum % 3) as u8
    }

    #[inline]
    pub fn count_nonzero_pairs(self, x: u64) -> u32 {
        match self {
            Kernels::Broadword => count_nonzero_pairs(x),
            Kernels::Scalar => scalar::count_nonzero_pairs(x),
        }
    }
}

/// Lane-by-lane and bit-by-bit reference implementations.
pub mod scalar {
    use super::{lane, LANES_PER_WORD};

    fn map_lanes(x: u64, y: u64, f: impl Fn(u64, u64) -> u64) -> u64 {
        let mut out = 0;
        for i in 0..LANES_PER_WORD {
            out |= f(lane(x, i), lane(y, i)) << (2 * i);
        }
        out
    }

    pub fn add_mod3(x: u64, y: u64) -> u64 {
        map_lanes(x, y, |a, b| (a + b) % 3)
    }

    pub fn sub_mod3(x: u64, y: u64) -> u64 {
        map_lanes(x, y, |a, b| (a + 3 - b) % 3)
    }

    pub fn prod_mod3(x: u64, y: u64) -> u32 {
        let mut sum = 0;
        for i in 0..LANES_PER_WORD {
            sum += lane(x, i) * lane(y, i);
        }
        (sum % 3) as u32
    }

    pub fn count_nonzero_pairs(x: u64) -> u32 {
        (0..LANES_PER_WORD).filter(|&i| lane(x, i) != 0).count() as u32
    }

    pub fn xor(dst: &mut [u64], src: &[u64]) {
        for (d, &s) in dst.iter_mut().zip(src) {
            for bit in 0..64 {
                if s >> bit & 1 != 0 {
                    *d ^= 1 << bit;
                }
            }
        }
    }

    pub fn ones(words: &[u64]) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, &w) in words.iter().enumerate() {
            for bit in 0..64 {
                if w >> bit & 1 != 0 {
                    out.push(i * 64 + bit);
                }
            }
        }
        out
    }
}
