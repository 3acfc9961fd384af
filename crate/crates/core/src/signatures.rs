//! Key signatures and the derivation of chunks and hyperedges from them.

use xxhash_rust::xxh3::{xxh3_128_with_seed, xxh3_64_with_seed};

use crate::error::TooFewVertices;

/// Identifier of the signature hash, written into serialized headers.
///
/// `1`: XXH3-128 for the first two words, XXH3-64 under a derived seed for
/// the third.
pub const HASH_ID: u8 = 1;

/// Maximum supported hyperedge degree.
pub const MAX_DEGREE: usize = 4;

const THIRD_WORD_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

/// A 192-bit key fingerprint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature(pub [u64; 3]);

impl Signature {
    #[inline]
    pub fn s0(&self) -> u64 {
        self.0[0]
    }
}

/// Hashes a key to its signature under `global_seed`.
#[inline]
pub fn sign(key: &[u8], global_seed: u64) -> Signature {
    let h = xxh3_128_with_seed(key, global_seed);
    let s2 = xxh3_64_with_seed(key, global_seed ^ THIRD_WORD_SEED);
    Signature([(h >> 64) as u64, h as u64, s2])
}

/// The chunk of a signature: the `chunk_bits` highest bits of its first word.
#[inline]
pub fn chunk_of(sig: &Signature, chunk_bits: u32) -> usize {
    debug_assert!(chunk_bits <= 32);
    if chunk_bits == 0 {
        0
    } else {
        (sig.0[0] >> (64 - chunk_bits)) as usize
    }
}

/// 64-bit finalizer (the SplitMix64 output function). A bijection.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The chunk seed used at a given attempt. Attempt 0 is the default seed.
#[inline]
pub fn seed_sequence(global_seed: u64, attempt: u64) -> u64 {
    mix64(global_seed.wrapping_add(attempt.wrapping_add(1).wrapping_mul(THIRD_WORD_SEED)))
}

/// `⌊x · n / 2^64⌋`.
#[inline(always)]
fn reduce(x: u64, n: usize) -> usize {
    ((u128::from(x) * n as u128) >> 64) as usize
}

/// A hyperedge: `degree` distinct local vertices, vertex `j` in segment `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    vertices: [usize; MAX_DEGREE],
    degree: u8,
}

impl Edge {
    pub fn from_vertices(vs: &[usize]) -> Self {
        assert!(vs.len() <= MAX_DEGREE);
        let mut vertices = [0; MAX_DEGREE];
        vertices[..vs.len()].copy_from_slice(vs);
        Edge {
            vertices,
            degree: vs.len() as u8,
        }
    }

    #[inline]
    pub fn vertices(&self) -> &[usize] {
        &self.vertices[..self.degree as usize]
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree as usize
    }
}

/// Start and length of segment `j` when `[0, vertices)` is split into
/// `degree` parts, the first `vertices % degree` of which are one larger.
#[inline]
pub fn segment(vertices: usize, degree: usize, j: usize) -> (usize, usize) {
    let base = vertices / degree;
    let extra = vertices % degree;
    (j * base + j.min(extra), base + usize::from(j < extra))
}

/// The local hyperedge of a signature in a chunk of `vertices` vertices.
pub fn edge_of(
    sig: &Signature,
    chunk_seed: u64,
    vertices: usize,
    degree: usize,
) -> Result<Edge, TooFewVertices> {
    if vertices < degree || !(1..=MAX_DEGREE).contains(&degree) {
        return Err(TooFewVertices { vertices, degree });
    }
    Ok(edge_unchecked(sig, chunk_seed, vertices, degree))
}

/// [`edge_of`] without the precondition check.
#[inline]
pub fn edge_unchecked(sig: &Signature, chunk_seed: u64, vertices: usize, degree: usize) -> Edge {
    let [s0, s1, s2] = sig.0;
    let a = mix64(s1 ^ chunk_seed);
    let b = mix64(s2 ^ s0.rotate_left(32) ^ chunk_seed.rotate_left(23));
    let base = vertices / degree;
    let extra = vertices % degree;
    let mut out = [0; MAX_DEGREE];
    let mut start = 0;
    for (j, slot) in out.iter_mut().enumerate().take(degree) {
        let len = base + usize::from(j < extra);
        let h = mix64(a.wrapping_add(b.wrapping_mul(j as u64 + 1)));
        *slot = start + reduce(h, len);
        start += len;
    }
    Edge {
        vertices: out,
        degree: degree as u8,
    }
}
