//! Static functions, minimal perfect hash functions and approximate
//! dictionaries built from chunked random linear systems.
//!
//! Keys are hashed to 192-bit signatures, sharded into chunks of about a
//! thousand keys, and each chunk becomes a random hypergraph whose 2-core
//! is solved as a linear system over GF(2) (static functions) or GF(3)
//! (minimal perfect hash functions) by lazy Gaussian elimination.

pub mod bench;
pub mod bitops;
pub mod config;
pub mod error;
pub mod hypergraph;
pub mod linsolve;
pub mod sharder;
pub mod signatures;
pub mod structures;

pub use config::{Ablation, BuildConfig, Kind, Ratio};
pub use error::{BuildError, ParseError};
pub use structures::{deserialize, AnyStructure, ApproxDict, Mphf, StaticFunction, VerifyReport};
