//! Construction and lookup benchmarks over chunk sizes and ablations.
//!
//! A sweep value `v` asks for chunks of about `2^v` keys: the structure is
//! sharded on `max(0, ⌈log2 n⌉ − v)` signature bits. The `chunk_bits`
//! column of a record holds `v`.

use std::hint::black_box;
use std::ops::RangeInclusive;
use std::time::Instant;

use crate::config::{default_chunk_bits, Ablation, BuildConfig, Kind, DEFAULT_LOG2_CHUNK_SIZE};
use crate::error::BuildError;
use crate::signatures::mix64;
use crate::structures::{ApproxDict, BuildStats, Mphf, StaticFunction};

/// Column names of [`BenchRecord::to_csv`], in order.
pub const CSV_HEADER: &str =
    "kind,r,chunk_bits,n,bits_per_key,build_ns_per_key,lookup_ns_per_key,mean_attempts,active_fraction,flags";

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub kind: Kind,
    pub degree: usize,
    /// Value width. `None` means ordinals for static functions; required
    /// for dictionaries.
    pub value_bits: Option<u32>,
    /// Log2 chunk sizes to try; `None` tries the default only.
    pub sweep: Option<RangeInclusive<u32>>,
    /// Run the eight peel/broadword/lazy combinations per chunk size.
    pub ablation: bool,
    pub peel_only: bool,
    pub runs: usize,
    pub lookups: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl BenchOptions {
    pub fn new(kind: Kind) -> Self {
        BenchOptions {
            kind,
            degree: 3,
            value_bits: None,
            sweep: None,
            ablation: false,
            peel_only: false,
            runs: 3,
            lookups: 1_000_000,
            seed: 0,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub kind: Kind,
    pub degree: usize,
    /// Log2 of the target chunk size.
    pub chunk_bits: u32,
    pub n: usize,
    pub bits_per_key: f64,
    pub build_ns_per_key: f64,
    pub lookup_ns_per_key: f64,
    pub mean_attempts: f64,
    pub active_fraction: f64,
    pub flags: String,
}

impl BenchRecord {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.3},{:.3},{:.6},{:.6},{}",
            self.kind,
            self.degree,
            self.chunk_bits,
            self.n,
            self.bits_per_key,
            self.build_ns_per_key,
            self.lookup_ns_per_key,
            self.mean_attempts,
            self.active_fraction,
            self.flags
        )
    }
}

enum Built {
    Sf(StaticFunction),
    Mphf(Mphf),
    Dict(ApproxDict),
}

impl Built {
    fn stats(&self) -> &BuildStats {
        match self {
            Built::Sf(s) => s.build_stats(),
            Built::Mphf(m) => m.build_stats(),
            Built::Dict(d) => d.build_stats(),
        }
        .expect("fresh build")
    }

    fn bits_per_key(&self) -> f64 {
        match self {
            Built::Sf(s) => s.bits_per_key(),
            Built::Mphf(m) => m.bits_per_key(),
            Built::Dict(d) => d.bits_per_key(),
        }
    }

    fn lookup(&self, key: &[u8]) -> u64 {
        match self {
            Built::Sf(s) => s.get(key),
            Built::Mphf(m) => m.get(key),
            Built::Dict(d) => u64::from(d.contains(key)),
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn ordinal_bits(n: usize) -> u32 {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1)
}

/// Builds and times every configuration of `opts`. Static functions without
/// `values` map each key to its position.
pub fn run<K: AsRef<[u8]>>(keys: &[K], values: Option<&[u64]>, opts: &BenchOptions) -> Result<Vec<BenchRecord>, BuildError> {
    let n = keys.len();
    let ordinals: Vec<u64>;
    let (values, value_bits) = match (opts.kind, values) {
        (Kind::StaticFunction, Some(v)) => (v, opts.value_bits.unwrap_or(64)),
        (Kind::StaticFunction, None) => {
            ordinals = (0..n as u64).collect();
            (&ordinals[..], opts.value_bits.unwrap_or_else(|| ordinal_bits(n)))
        }
        (Kind::Mphf, _) => (&[][..], 2),
        (Kind::Dict, _) => (
            &[][..],
            opts.value_bits.ok_or_else(|| BuildError::InvalidConfig("dictionaries need a value width".into()))?,
        ),
    };
    let sweep: Vec<u32> = match &opts.sweep {
        Some(r) => r.clone().collect(),
        None => vec![DEFAULT_LOG2_CHUNK_SIZE],
    };
    let ablations = if opts.ablation {
        Ablation::matrix()
    } else {
        vec![Ablation {
            peel_only: opts.peel_only,
            ..Ablation::default()
        }]
    };
    let probes: Vec<usize> = if n == 0 { Vec::new() } else { (0..opts.lookups as u64).map(|i| (mix64(i ^ opts.seed) % n as u64) as usize).collect() };

    let mut records = Vec::new();
    for &log2_size in &sweep {
        for &ablation in &ablations {
            let mut cfg = match opts.kind {
                Kind::StaticFunction => BuildConfig::static_function(value_bits),
                Kind::Mphf => BuildConfig::mphf(),
                Kind::Dict => BuildConfig::dict(value_bits),
            }
            .with_degree(opts.degree)
            .with_chunk_bits(default_chunk_bits(n, log2_size))
            .with_ablation(ablation);
            cfg.threads = opts.threads;

            let mut build_times = Vec::new();
            let mut lookup_times = Vec::new();
            let mut last = None;
            for _ in 0..opts.runs.max(1) {
                let start = Instant::now();
                let built = match opts.kind {
                    Kind::StaticFunction => Built::Sf(StaticFunction::build(keys, values, &cfg, opts.seed)?),
                    Kind::Mphf => Built::Mphf(Mphf::build(keys, &cfg, opts.seed)?),
                    Kind::Dict => Built::Dict(ApproxDict::build(keys, &cfg, opts.seed)?),
                };
                build_times.push(start.elapsed().as_nanos() as f64 / n.max(1) as f64);

                let start = Instant::now();
                let mut acc = 0u64;
                for &i in &probes {
                    acc = acc.wrapping_add(built.lookup(keys[i].as_ref()));
                }
                black_box(acc);
                lookup_times.push(start.elapsed().as_nanos() as f64 / probes.len().max(1) as f64);
                last = Some(built);
            }
            let built = last.expect("at least one run");
            let stats = built.stats();
            records.push(BenchRecord {
                kind: opts.kind,
                degree: opts.degree,
                chunk_bits: log2_size,
                n,
                bits_per_key: built.bits_per_key(),
                build_ns_per_key: median(build_times),
                lookup_ns_per_key: median(lookup_times),
                mean_attempts: stats.mean_attempts(),
                active_fraction: stats.mean_active_fraction(),
                flags: ablation.label(),
            });
        }
    }
    Ok(records)
}
