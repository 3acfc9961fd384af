//! Build parameters.

use std::fmt;

use crate::error::BuildError;

/// An exact positive rational, used for the vertex/edge ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub const fn new(num: u32, den: u32) -> Self {
        Ratio { num, den }
    }

    /// `⌈self · x⌉`, exactly.
    #[inline]
    pub fn ceil_mul(self, x: u64) -> u64 {
        let num = u128::from(self.num) * u128::from(x);
        num.div_ceil(u128::from(self.den)) as u64
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Default ratio for degree-3 systems solved through the 2-core.
pub const RATIO_R3: Ratio = Ratio::new(11, 10);
/// Default ratio for degree-4 systems.
pub const RATIO_R4: Ratio = Ratio::new(103, 100);
/// Ratio at which random 3-hypergraphs are peelable with high probability.
pub const RATIO_PEEL_ONLY: Ratio = Ratio::new(123, 100);

/// Target log2 of the chunk size when `chunk_bits` is not given.
pub const DEFAULT_LOG2_CHUNK_SIZE: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    StaticFunction,
    Mphf,
    Dict,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::StaticFunction => 1,
            Kind::Mphf => 2,
            Kind::Dict => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Kind::StaticFunction),
            2 => Some(Kind::Mphf),
            3 => Some(Kind::Dict),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::StaticFunction => "sf",
            Kind::Mphf => "mphf",
            Kind::Dict => "dict",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Switches that disable parts of the construction pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Ablation {
    /// Feed every equation to the solver instead of peeling first.
    pub no_peel: bool,
    /// Solve the whole system by dense elimination.
    pub no_lazy: bool,
    /// Use the lane-by-lane reference kernels.
    pub no_broadword: bool,
    /// Peeling only (MWHC): a nonempty 2-core forces a new seed attempt.
    pub peel_only: bool,
}

impl Ablation {
    /// Short label such as `"P+B+G"` listing the enabled techniques.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.peel_only {
            return "peel-only".to_string();
        }
        if !self.no_peel {
            parts.push("P");
        }
        if !self.no_broadword {
            parts.push("B");
        }
        if !self.no_lazy {
            parts.push("G");
        }
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join("+")
        }
    }

    /// All eight combinations of peeling, broadword kernels and lazy
    /// elimination, full pipeline first.
    pub fn matrix() -> Vec<Ablation> {
        let mut out = Vec::with_capacity(8);
        for mask in 0..8u8 {
            out.push(Ablation {
                no_peel: mask & 1 != 0,
                no_broadword: mask & 2 != 0,
                no_lazy: mask & 4 != 0,
                peel_only: false,
            });
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildConfig {
    pub kind: Kind,
    /// Hyperedge degree, 3 or 4.
    pub degree: usize,
    pub ratio: Ratio,
    /// Value width in bits; 2 for MPHFs.
    pub value_bits: u32,
    /// Number of high signature bits selecting the chunk; `None` picks
    /// chunks of about 2^10 keys.
    pub chunk_bits: Option<u32>,
    pub max_chunk_attempts: u32,
    pub max_global_retries: u32,
    pub ablation: Ablation,
    /// In-memory signature count above which buckets spill to disk.
    pub spill_threshold: Option<usize>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl BuildConfig {
    fn base(kind: Kind, value_bits: u32) -> Self {
        BuildConfig {
            kind,
            degree: 3,
            ratio: RATIO_R3,
            value_bits,
            chunk_bits: None,
            max_chunk_attempts: 64,
            max_global_retries: 3,
            ablation: Ablation::default(),
            spill_threshold: None,
            threads: None,
        }
    }

    pub fn static_function(value_bits: u32) -> Self {
        Self::base(Kind::StaticFunction, value_bits)
    }

    pub fn mphf() -> Self {
        Self::base(Kind::Mphf, 2)
    }

    pub fn dict(value_bits: u32) -> Self {
        Self::base(Kind::Dict, value_bits)
    }

    /// Sets the degree and its default ratio.
    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self.ratio = if degree == 4 { RATIO_R4 } else { RATIO_R3 };
        self
    }

    pub fn with_chunk_bits(mut self, chunk_bits: u32) -> Self {
        self.chunk_bits = Some(chunk_bits);
        self
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablation = ablation;
        self
    }

    /// The ratio actually used: peel-only mode forces 1.23.
    pub fn effective_ratio(&self) -> Ratio {
        if self.ablation.peel_only {
            RATIO_PEEL_ONLY
        } else {
            self.ratio
        }
    }

    /// `chunk_bits`, or `max(0, ⌈log2 n⌉ − 10)`.
    pub fn effective_chunk_bits(&self, n: usize) -> u32 {
        self.chunk_bits.unwrap_or_else(|| default_chunk_bits(n, DEFAULT_LOG2_CHUNK_SIZE))
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let bad = |msg: String| Err(BuildError::InvalidConfig(msg));
        if !(3..=4).contains(&self.degree) {
            return bad(format!("degree must be 3 or 4, got {}", self.degree));
        }
        if self.kind == Kind::Mphf && self.degree != 3 {
            return bad("minimal perfect hash functions require degree 3".into());
        }
        if self.ablation.peel_only && self.degree != 3 {
            return bad("peel-only mode requires degree 3".into());
        }
        if self.kind == Kind::Mphf && self.value_bits != 2 {
            return bad("minimal perfect hash functions store 2 bits per vertex".into());
        }
        if !(1..=64).contains(&self.value_bits) {
            return bad(format!("value width must be in 1..=64, got {}", self.value_bits));
        }
        let ratio = self.effective_ratio();
        if ratio.den == 0 || ratio.num < ratio.den {
            return bad(format!("vertex/edge ratio must be at least 1, got {ratio}"));
        }
        if let Some(bits) = self.chunk_bits {
            if bits > 32 {
                return bad(format!("chunk bits must be at most 32, got {bits}"));
            }
        }
        if self.max_chunk_attempts == 0 || self.max_global_retries == 0 {
            return bad("attempt limits must be positive".into());
        }
        Ok(())
    }
}

/// `max(0, ⌈log2 n⌉ − log2_chunk_size)`, capped at 32.
pub fn default_chunk_bits(n: usize, log2_chunk_size: u32) -> u32 {
    let log2_n = if n <= 1 { 0 } else { usize::BITS - (n - 1).leading_zeros() };
    log2_n.saturating_sub(log2_chunk_size).min(32)
}
