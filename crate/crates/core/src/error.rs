use std::io;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("length mismatch: {left} vs {right}")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("an edge of degree {degree} needs at least {degree} vertices, got {vertices}")]
pub struct TooFewVertices {
    pub vertices: usize,
    pub degree: usize,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("two keys have the same 192-bit signature")]
    DuplicateSignature,
    #[error("duplicate signatures under {attempts} global seeds: the input likely contains duplicate keys")]
    LikelyDuplicateKeys { attempts: u32 },
    #[error("chunk {chunk} found no solvable system in {attempts} attempts")]
    ChunkExhausted { chunk: usize, attempts: u32 },
    #[error("build failed under {attempts} global seeds: last error: {last}")]
    Exhausted { attempts: u32, last: Box<BuildError> },
    #[error("seed attempt {attempt} does not fit in the chunk descriptor")]
    AttemptOverflow { attempt: u64 },
    #[error("{keys} keys but {values} values")]
    ValueCount { keys: usize, values: usize },
    #[error("value {value:#x} at index {index} does not fit in {bits} bits")]
    ValueTooWide { index: usize, value: u64, bits: u32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("stream truncated while reading {0}")]
    Truncated(&'static str),
    #[error("invalid header field {field}: {value}")]
    InvalidField { field: &'static str, value: u64 },
    #[error("trailing bytes after structure")]
    TrailingBytes,
    #[error(transparent)]
    Io(io::Error),
}
