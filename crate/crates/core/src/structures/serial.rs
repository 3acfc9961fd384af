//! Little-endian on-disk format.
//!
//! | bytes | field |
//! |---|---|
//! | 8 | magic `GOVFUNC1` |
//! | 1 | version |
//! | 1 | kind (1 static function, 2 MPHF, 3 dictionary) |
//! | 1 | degree r |
//! | 1 | signature hash id |
//! | 1 | chunk bits |
//! | 2 | reserved, zero |
//! | 2 | value bits b |
//! | 4 + 4 | ratio numerator, denominator |
//! | 8 | keys n |
//! | 8 | global seed |
//! | 8 | chunk count |
//! | 8 each | chunk descriptors |
//! | 8 | value array length in words |
//! | 8 each | value words |

use std::io::{self, Read, Write};

use super::{ApproxDict, Header, Layout, Mphf, PackedArray, StaticFunction};
use crate::config::{Kind, Ratio};
use crate::error::ParseError;
use crate::sharder::{total_vertices, unpack_chunk_word};
use crate::signatures::HASH_ID;

pub const MAGIC: &[u8; 8] = b"GOVFUNC1";
pub const VERSION: u8 = 1;
pub(crate) const HEADER_BYTES: usize = 49;

/// Any deserialized structure.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyStructure {
    StaticFunction(StaticFunction),
    Mphf(Mphf),
    Dict(ApproxDict),
}

impl AnyStructure {
    pub fn header(&self) -> &Header {
        &self.layout().header
    }

    pub(crate) fn layout(&self) -> &Layout {
        match self {
            AnyStructure::StaticFunction(s) => &s.layout,
            AnyStructure::Mphf(m) => &m.layout,
            AnyStructure::Dict(d) => &d.sf.layout,
        }
    }

    pub fn bits_per_key(&self) -> f64 {
        self.layout().bits_per_key()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.layout().to_bytes()
    }
}

impl Layout {
    pub(crate) fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let h = &self.header;
        let mut head = Vec::with_capacity(HEADER_BYTES);
        head.extend_from_slice(MAGIC);
        head.extend_from_slice(&[VERSION, h.kind.code(), h.degree as u8, h.hash_id, h.chunk_bits as u8, 0, 0]);
        head.extend_from_slice(&(h.value_bits as u16).to_le_bytes());
        head.extend_from_slice(&h.ratio.num.to_le_bytes());
        head.extend_from_slice(&h.ratio.den.to_le_bytes());
        head.extend_from_slice(&h.n.to_le_bytes());
        head.extend_from_slice(&h.global_seed.to_le_bytes());
        head.extend_from_slice(&(self.descriptors.len() as u64).to_le_bytes());
        debug_assert_eq!(head.len(), HEADER_BYTES);
        w.write_all(&head)?;
        for d in &self.descriptors {
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&(self.values.words().len() as u64).to_le_bytes())?;
        for x in self.values.words() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub(crate) fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}

macro_rules! serializable {
    ($t:ty, $($layout:tt)+) => {
        impl $t {
            pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
                self.$($layout)+.write_to(w)
            }

            pub fn to_bytes(&self) -> Vec<u8> {
                self.$($layout)+.to_bytes()
            }

            pub fn serialized_len(&self) -> usize {
                self.$($layout)+.serialized_len()
            }
        }
    };
}

serializable!(StaticFunction, layout);
serializable!(Mphf, layout);
serializable!(ApproxDict, sf.layout);

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N], ParseError> {
        let mut buf = [0; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => ParseError::Truncated(what),
            _ => ParseError::Io(e),
        })?;
        Ok(buf)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, ParseError> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, ParseError> {
        Ok(u16::from_le_bytes(self.bytes(what)?))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, ParseError> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, ParseError> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    /// Reads `count` words without trusting `count` for the allocation.
    fn words(&mut self, count: u64, what: &'static str) -> Result<Vec<u64>, ParseError> {
        let mut out = Vec::with_capacity(count.min(1 << 16) as usize);
        for _ in 0..count {
            out.push(self.u64(what)?);
        }
        Ok(out)
    }
}

fn invalid(field: &'static str, value: u64) -> ParseError {
    ParseError::InvalidField { field, value }
}

/// Reads one structure from `r`. Bytes after the structure are left unread.
pub fn read_from<R: Read>(r: R) -> Result<AnyStructure, ParseError> {
    let mut r = Reader { inner: r };
    if &r.bytes::<8>("magic")? != MAGIC {
        return Err(ParseError::BadMagic);
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(ParseError::UnsupportedVersion(version));
    }
    let kind_code = r.u8("kind")?;
    let kind = Kind::from_code(kind_code).ok_or(invalid("kind", kind_code.into()))?;
    let degree = r.u8("degree")?;
    if !(3..=4).contains(&degree) || (kind == Kind::Mphf && degree != 3) {
        return Err(invalid("degree", degree.into()));
    }
    let hash_id = r.u8("hash id")?;
    if hash_id != HASH_ID {
        return Err(invalid("hash id", hash_id.into()));
    }
    let chunk_bits = r.u8("chunk bits")?;
    if chunk_bits > 32 {
        return Err(invalid("chunk bits", chunk_bits.into()));
    }
    let reserved = r.u16("reserved")?;
    if reserved != 0 {
        return Err(invalid("reserved", reserved.into()));
    }
    let value_bits = r.u16("value bits")?;
    if !(1..=64).contains(&value_bits) || (kind == Kind::Mphf && value_bits != 2) {
        return Err(invalid("value bits", value_bits.into()));
    }
    let ratio = Ratio::new(r.u32("ratio numerator")?, r.u32("ratio denominator")?);
    if ratio.den == 0 || ratio.num < ratio.den {
        return Err(invalid("ratio", u64::from(ratio.num) << 32 | u64::from(ratio.den)));
    }
    let n = r.u64("key count")?;
    let global_seed = r.u64("global seed")?;
    let num_chunks = r.u64("chunk count")?;
    if num_chunks != 1u64 << chunk_bits {
        return Err(invalid("chunk count", num_chunks));
    }
    let descriptors = r.words(num_chunks, "chunk descriptors")?;
    let mut prev = 0;
    for &d in &descriptors {
        let (s, _) = unpack_chunk_word(d, n);
        if s < prev || s > n {
            return Err(invalid("chunk descriptor", d));
        }
        prev = s;
    }
    if descriptors.first().is_some_and(|&d| unpack_chunk_word(d, n).0 != 0) {
        return Err(invalid("chunk descriptor", descriptors[0]));
    }
    let width = if kind == Kind::Mphf { 2 } else { u32::from(value_bits) };
    let vertices = (u128::from(ratio.num) * u128::from(n)).div_ceil(u128::from(ratio.den)) + u128::from(degree) * u128::from(num_chunks);
    let word_count = r.u64("value length")?;
    if u128::from(word_count) != (vertices * u128::from(width)).div_ceil(64) {
        return Err(invalid("value length", word_count));
    }
    let vertices = total_vertices(n, num_chunks as usize, ratio, degree.into());
    let words = r.words(word_count, "values")?;
    let values = PackedArray::from_words(words, width, vertices).ok_or(invalid("value length", word_count))?;
    let layout = Layout {
        header: Header {
            kind,
            degree: degree.into(),
            hash_id,
            chunk_bits: chunk_bits.into(),
            value_bits: value_bits.into(),
            ratio,
            n,
            global_seed,
        },
        descriptors,
        values,
    };
    Ok(match kind {
        Kind::StaticFunction => AnyStructure::StaticFunction(StaticFunction { layout, stats: None }),
        Kind::Mphf => AnyStructure::Mphf(Mphf { layout, stats: None }),
        Kind::Dict => AnyStructure::Dict(ApproxDict {
            sf: StaticFunction { layout, stats: None },
        }),
    })
}

/// Parses a complete byte buffer holding exactly one structure.
pub fn deserialize(bytes: &[u8]) -> Result<AnyStructure, ParseError> {
    let mut cursor = bytes;
    let s = read_from(&mut cursor)?;
    if !cursor.is_empty() {
        return Err(ParseError::TrailingBytes);
    }
    Ok(s)
}
