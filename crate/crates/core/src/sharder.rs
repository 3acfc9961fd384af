//! Signature bucketing, sorting, duplicate detection and chunk layout.
//!
//! Keys are hashed once into a [`SignatureStore`] of 256 physical buckets
//! selected by the top 8 bits of the signature. [`SignatureStore::finalize`]
//! sorts the buckets and rejects duplicate signatures; afterwards the store
//! can be cut into virtual chunks of any power-of-two count. Buckets may spill
//! to temporary files as little-endian `(s0, s1, s2, value)` records.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};

use crate::config::Ratio;
use crate::error::BuildError;
use crate::signatures::{chunk_of, sign, Signature};

pub const PHYSICAL_BUCKET_BITS: u32 = 8;
pub const PHYSICAL_BUCKETS: usize = 1 << PHYSICAL_BUCKET_BITS;
const RECORD_BYTES: usize = 32;

/// A signature with its 64-bit payload.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct SigVal {
    pub sig: Signature,
    pub value: u64,
}

impl SigVal {
    fn to_bytes(self) -> [u8; RECORD_BYTES] {
        let mut out = [0; RECORD_BYTES];
        for (i, w) in self.sig.0.iter().chain(Some(&self.value)).enumerate() {
            out[i * 8..i * 8 + 8].copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    fn from_bytes(b: &[u8; RECORD_BYTES]) -> Self {
        let w = |i: usize| u64::from_le_bytes(b[i * 8..i * 8 + 8].try_into().unwrap());
        SigVal {
            sig: Signature([w(0), w(1), w(2)]),
            value: w(3),
        }
    }
}

struct Spill {
    writer: BufWriter<File>,
    records: usize,
}

pub struct SignatureStore {
    buckets: Vec<Vec<SigVal>>,
    spills: Vec<Option<Spill>>,
    in_memory: usize,
    spill_threshold: Option<usize>,
    len: usize,
    sorted: Option<Sorted>,
}

struct Sorted {
    sigs: Vec<SigVal>,
    /// `bounds[i]..bounds[i + 1]` is physical bucket `i`.
    bounds: Vec<usize>,
}

impl SignatureStore {
    pub fn new(spill_threshold: Option<usize>) -> Self {
        SignatureStore {
            buckets: vec![Vec::new(); PHYSICAL_BUCKETS],
            spills: (0..PHYSICAL_BUCKETS).map(|_| None).collect(),
            in_memory: 0,
            spill_threshold,
            len: 0,
            sorted: None,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sizes of the 256 physical buckets.
    pub fn bucket_sizes(&self) -> Vec<usize> {
        match &self.sorted {
            Some(s) => s.bounds.windows(2).map(|w| w[1] - w[0]).collect(),
            None => self
                .buckets
                .iter()
                .zip(&self.spills)
                .map(|(b, s)| b.len() + s.as_ref().map_or(0, |s| s.records))
                .collect(),
        }
    }

    /// Whether any bucket has been written to disk.
    pub fn has_spilled(&self) -> bool {
        self.spills.iter().any(Option::is_some)
    }

    pub fn push(&mut self, sv: SigVal) -> io::Result<()> {
        assert!(self.sorted.is_none(), "push after finalize");
        let bucket = chunk_of(&sv.sig, PHYSICAL_BUCKET_BITS);
        self.buckets[bucket].push(sv);
        self.in_memory += 1;
        self.len += 1;
        if self.spill_threshold.is_some_and(|t| self.in_memory > t) {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> io::Result<()> {
        for (bucket, spill) in self.buckets.iter_mut().zip(self.spills.iter_mut()) {
            if bucket.is_empty() {
                continue;
            }
            if spill.is_none() {
                *spill = Some(Spill {
                    writer: BufWriter::new(tempfile::tempfile()?),
                    records: 0,
                });
            }
            let spill = spill.as_mut().unwrap();
            spill.records += bucket.len();
            for sv in bucket.drain(..) {
                spill.writer.write_all(&sv.to_bytes())?;
            }
        }
        self.in_memory = 0;
        Ok(())
    }

    /// Sorts every bucket and checks that no two signatures are equal.
    ///
    /// Calling it again on a finalized store is a no-op.
    pub fn finalize(&mut self) -> Result<(), BuildError> {
        if self.sorted.is_some() {
            return Ok(());
        }
        let mut sigs = Vec::with_capacity(self.len);
        let mut bounds = Vec::with_capacity(PHYSICAL_BUCKETS + 1);
        bounds.push(0);
        for (bucket, spill) in self.buckets.iter_mut().zip(self.spills.iter_mut()) {
            let start = sigs.len();
            if let Some(spill) = spill.take() {
                read_spill(spill, &mut sigs)?;
            }
            sigs.append(bucket);
            sigs[start..].sort_unstable_by_key(|sv| sv.sig);
            if sigs[start..].windows(2).any(|w| w[0].sig == w[1].sig) {
                return Err(BuildError::DuplicateSignature);
            }
            bounds.push(sigs.len());
        }
        self.buckets = Vec::new();
        self.sorted = Some(Sorted { sigs, bounds });
        Ok(())
    }

    /// All signatures in sorted order. Panics if the store is not finalized.
    pub fn sorted(&self) -> &[SigVal] {
        &self.sorted.as_ref().expect("store not finalized").sigs
    }

    /// Every virtual chunk for `chunk_bits`, empty ones included, in index
    /// order. Panics if the store is not finalized.
    pub fn virtual_chunks(&self, chunk_bits: u32) -> VirtualChunks<'_> {
        VirtualChunks {
            sigs: self.sorted(),
            chunk_bits,
            next: 0,
            start: 0,
        }
    }
}

fn read_spill(mut spill: Spill, out: &mut Vec<SigVal>) -> io::Result<()> {
    spill.writer.flush()?;
    let mut file = spill.writer.into_inner().map_err(|e| e.into_error())?;
    file.seek(SeekFrom::Start(0))?;
    let mut reader = BufReader::new(file);
    let mut record = [0u8; RECORD_BYTES];
    loop {
        match reader.read_exact(&mut record) {
            Ok(()) => out.push(SigVal::from_bytes(&record)),
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e),
        }
    }
}

/// Iterator over `(chunk index, signatures)` pairs.
pub struct VirtualChunks<'a> {
    sigs: &'a [SigVal],
    chunk_bits: u32,
    next: usize,
    start: usize,
}

impl<'a> Iterator for VirtualChunks<'a> {
    type Item = (usize, &'a [SigVal]);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= 1usize << self.chunk_bits {
            return None;
        }
        let index = self.next;
        let rest = &self.sigs[self.start..];
        let len = rest.partition_point(|sv| chunk_of(&sv.sig, self.chunk_bits) <= index);
        self.start += len;
        self.next += 1;
        Some((index, &rest[..len]))
    }
}

/// Hashes every key into a new store. `values`, if given, must have the same
/// length as `keys`; otherwise every payload is 0.
pub fn ingest<K, I, V>(
    keys: I,
    values: Option<V>,
    global_seed: u64,
    spill_threshold: Option<usize>,
) -> Result<SignatureStore, BuildError>
where
    K: AsRef<[u8]>,
    I: IntoIterator<Item = K>,
    V: IntoIterator<Item = u64>,
{
    let mut store = SignatureStore::new(spill_threshold);
    let mut values = values.map(IntoIterator::into_iter);
    for (i, key) in keys.into_iter().enumerate() {
        let value = match values.as_mut() {
            Some(vs) => vs.next().ok_or(BuildError::ValueCount { keys: i + 1, values: i })?,
            None => 0,
        };
        store.push(SigVal {
            sig: sign(key.as_ref(), global_seed),
            value,
        })?;
    }
    if let Some(mut vs) = values {
        if vs.next().is_some() {
            return Err(BuildError::ValueCount {
                keys: store.len(),
                values: store.len() + 1 + vs.count(),
            });
        }
    }
    Ok(store)
}

/// `⌈log2(n + 1)⌉`: the number of bits holding a key count in `[0, n]`.
#[inline]
pub fn count_bits(n: u64) -> u32 {
    64 - n.leading_zeros()
}

/// Packs the cumulative key count `s` and the attempt index into one word.
pub fn pack_chunk_word(s: u64, attempt: u64, n: u64) -> Result<u64, BuildError> {
    debug_assert!(s <= n);
    let q = count_bits(n);
    if q == 64 {
        return if attempt == 0 { Ok(s) } else { Err(BuildError::AttemptOverflow { attempt }) };
    }
    if attempt.checked_shr(64 - q).unwrap_or(0) != 0 {
        return Err(BuildError::AttemptOverflow { attempt });
    }
    Ok(attempt << q | s)
}

/// Inverse of [`pack_chunk_word`]: `(S, attempt)`.
#[inline]
pub fn unpack_chunk_word(word: u64, n: u64) -> (u64, u64) {
    let q = count_bits(n);
    if q == 64 {
        (word, 0)
    } else {
        (word & ((1u64 << q) - 1), word >> q)
    }
}

/// Global offset and vertex count of a chunk holding `s` keys after `prior`
/// keys in `chunk` preceding chunks.
#[inline]
pub fn vertex_span(prior: u64, s: u64, chunk: usize, ratio: Ratio, degree: usize) -> (usize, usize) {
    let start = ratio.ceil_mul(prior);
    let end = ratio.ceil_mul(prior + s);
    let offset = start as usize + degree * chunk;
    (offset, (end - start) as usize + degree)
}

/// Total number of vertices for `n` keys in `num_chunks` chunks.
pub fn total_vertices(n: u64, num_chunks: usize, ratio: Ratio, degree: usize) -> usize {
    ratio.ceil_mul(n) as usize + degree * num_chunks
}
