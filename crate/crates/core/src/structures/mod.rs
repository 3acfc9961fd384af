//! Static functions, minimal perfect hash functions and approximate
//! dictionaries: builders, lookups, verification and the on-disk format.
//!
//! All three share one layout. A header, one 64-bit descriptor per chunk
//! packing the number of keys in preceding chunks and the seed attempt that
//! succeeded, and a bit-packed array of vertex values. A chunk holding `s`
//! keys after `S` keys owns the `⌈c(S+s)⌉ − ⌈cS⌉ + r` vertices starting at
//! `⌈cS⌉ + r·chunk`, so the offsets need not be stored.

mod build;
mod mphf;
mod serial;
mod sf;
mod verify;

pub use build::{rebuild_chunk, BuildStats, ChunkFailure, ChunkOutcome, ORIENTATION_TRIALS};
pub use mphf::Mphf;
pub use serial::{deserialize, read_from, AnyStructure, MAGIC, VERSION};
pub use sf::{dict_fingerprint, ApproxDict, StaticFunction};
pub use verify::{Mismatch, VerifyReport};

use crate::config::{Kind, Ratio};
use crate::sharder::{unpack_chunk_word, vertex_span};
use crate::signatures::{self, chunk_of, seed_sequence, Edge, Signature};

/// Parameters shared by every structure, as serialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub kind: Kind,
    pub degree: usize,
    pub hash_id: u8,
    pub chunk_bits: u32,
    pub value_bits: u32,
    pub ratio: Ratio,
    pub n: u64,
    pub global_seed: u64,
}

/// Fixed-width values packed into 64-bit words, little-endian bit order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedArray {
    words: Vec<u64>,
    width: u32,
    len: usize,
}

impl PackedArray {
    pub fn new(len: usize, width: u32) -> Self {
        assert!((1..=64).contains(&width));
        PackedArray {
            words: vec![0; Self::words_for(len, width)],
            width,
            len,
        }
    }

    pub fn words_for(len: usize, width: u32) -> usize {
        (len * width as usize).div_ceil(64)
    }

    pub(crate) fn from_words(words: Vec<u64>, width: u32, len: usize) -> Option<Self> {
        (words.len() == Self::words_for(len, width) && (1..=64).contains(&width)).then_some(PackedArray { words, width, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1 << self.width) - 1
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        let bit = i * self.width as usize;
        let (w, b) = (bit / 64, bit % 64);
        let mut x = self.words[w] >> b;
        if b + self.width as usize > 64 {
            x |= self.words[w + 1] << (64 - b);
        }
        x & self.mask()
    }

    pub fn set(&mut self, i: usize, value: u64) {
        assert!(i < self.len);
        let mask = self.mask();
        let value = value & mask;
        let bit = i * self.width as usize;
        let (w, b) = (bit / 64, bit % 64);
        self.words[w] = self.words[w] & !(mask << b) | value << b;
        if b + self.width as usize > 64 {
            let spill = 64 - b;
            self.words[w + 1] = self.words[w + 1] & !(mask >> spill) | value >> spill;
        }
    }
}

/// Where a chunk lives and which seed it uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkGeometry {
    pub chunk: usize,
    /// Keys in preceding chunks.
    pub prior: u64,
    /// Keys in this chunk.
    pub size: u64,
    pub attempt: u64,
    /// Index of the chunk's first vertex in the value array.
    pub offset: usize,
    pub vertices: usize,
}

/// Header, chunk descriptors and vertex values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub header: Header,
    pub descriptors: Vec<u64>,
    pub values: PackedArray,
}

impl Layout {
    pub fn num_chunks(&self) -> usize {
        self.descriptors.len()
    }

    #[inline]
    pub fn geometry(&self, chunk: usize) -> ChunkGeometry {
        let n = self.header.n;
        let (prior, attempt) = unpack_chunk_word(self.descriptors[chunk], n);
        let next = match self.descriptors.get(chunk + 1) {
            Some(&w) => unpack_chunk_word(w, n).0,
            None => n,
        };
        let (offset, vertices) = vertex_span(prior, next - prior, chunk, self.header.ratio, self.header.degree);
        ChunkGeometry {
            chunk,
            prior,
            size: next - prior,
            attempt,
            offset,
            vertices,
        }
    }

    /// Geometry of the chunk of `sig` and the signature's local edge.
    #[inline]
    pub fn locate(&self, sig: &Signature) -> (ChunkGeometry, Edge) {
        let g = self.geometry(chunk_of(sig, self.header.chunk_bits));
        let seed = seed_sequence(self.header.global_seed, g.attempt);
        let edge = signatures::edge_unchecked(sig, seed, g.vertices, self.header.degree);
        (g, edge)
    }

    #[inline]
    pub fn sign(&self, key: &[u8]) -> Signature {
        signatures::sign(key, self.header.global_seed)
    }

    /// Total serialized size in bytes.
    pub fn serialized_len(&self) -> usize {
        serial::HEADER_BYTES + 8 * self.descriptors.len() + 8 + 8 * self.values.words().len()
    }

    pub fn bits_per_key(&self) -> f64 {
        if self.header.n == 0 {
            0.0
        } else {
            self.serialized_len() as f64 * 8.0 / self.header.n as f64
        }
    }
}
