use std::collections::BTreeMap;
use std::fmt;

use super::build::{mean, rebuild_chunk, BuildStats};
use super::{AnyStructure, ApproxDict, Layout, Mphf, StaticFunction};
use crate::config::{Ablation, Kind};
use crate::linsolve::SolveStats;
use crate::sharder::{ingest, vertex_span};

/// The first key that failed verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    /// Position of the key in the verified key sequence.
    pub index: usize,
    pub detail: String,
}

/// Outcome of checking a structure against its key set.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub kind: Kind,
    pub keys: usize,
    pub serialized_bytes: usize,
    pub bits_per_key: f64,
    /// Attempts used → number of chunks.
    pub attempt_histogram: BTreeMap<u64, usize>,
    pub mean_attempts: f64,
    pub max_attempts: u64,
    /// Mean fraction of core variables that became active, when known.
    pub active_fraction: Option<f64>,
    pub failure: Option<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => writeln!(f, "status: PASS")?,
            Some(m) => writeln!(f, "status: FAIL at key {}: {}", m.index, m.detail)?,
        }
        writeln!(f, "kind: {}", self.kind)?;
        writeln!(f, "keys: {}", self.keys)?;
        writeln!(f, "size: {} bytes, {:.4} bits/key", self.serialized_bytes, self.bits_per_key)?;
        writeln!(f, "attempts: mean {:.4}, max {}", self.mean_attempts, self.max_attempts)?;
        let hist: Vec<String> = self.attempt_histogram.iter().map(|(a, c)| format!("{a}:{c}")).collect();
        writeln!(f, "attempt histogram: {}", hist.join(" "))?;
        match self.active_fraction {
            Some(x) => write!(f, "active fraction: {x:.4}"),
            None => write!(f, "active fraction: n/a"),
        }
    }
}

fn base_report(layout: &Layout, keys: usize, stats: Option<&BuildStats>) -> VerifyReport {
    let mut hist = BTreeMap::new();
    let mut max = 0;
    for c in 0..layout.num_chunks() {
        let a = layout.geometry(c).attempt + 1;
        *hist.entry(a).or_insert(0) += 1;
        max = max.max(a);
    }
    VerifyReport {
        kind: layout.header.kind,
        keys,
        serialized_bytes: layout.serialized_len(),
        bits_per_key: layout.bits_per_key(),
        mean_attempts: mean(hist.iter().flat_map(|(&a, &c)| std::iter::repeat_n(a as f64, c))),
        attempt_histogram: hist,
        max_attempts: max,
        active_fraction: stats.map(BuildStats::mean_active_fraction),
        failure: None,
    }
}

fn count_mismatch(layout: &Layout, keys: usize) -> Option<Mismatch> {
    (keys as u64 != layout.header.n).then(|| Mismatch {
        index: keys.min(layout.header.n as usize),
        detail: format!("structure holds {} keys, {} given", layout.header.n, keys),
    })
}

/// Re-solves every chunk at its stored attempt to recover solver statistics.
fn replay_active_fraction<K: AsRef<[u8]>>(layout: &Layout, keys: &[K], values: Option<&[u64]>) -> Option<f64> {
    let h = &layout.header;
    let mut store = ingest(keys, values.map(|v| v.iter().copied()), h.global_seed, None).ok()?;
    store.finalize().ok()?;
    let mut solves: Vec<SolveStats> = Vec::new();
    for (chunk, sigs) in store.virtual_chunks(h.chunk_bits) {
        let g = layout.geometry(chunk);
        if g.size != sigs.len() as u64 {
            return None;
        }
        let (_, vertices) = vertex_span(g.prior, g.size, chunk, h.ratio, h.degree);
        let out = rebuild_chunk(h, Ablation::default(), sigs, vertices, g.attempt).ok()?;
        solves.extend(out.solve.filter(|s| s.num_vars > 0));
    }
    Some(mean(solves.iter().map(SolveStats::active_fraction)))
}

fn finish<K: AsRef<[u8]>>(mut report: VerifyReport, layout: &Layout, keys: &[K], values: Option<&[u64]>) -> VerifyReport {
    if report.failure.is_none() && report.active_fraction.is_none() {
        report.active_fraction = replay_active_fraction(layout, keys, values);
    }
    report
}

impl StaticFunction {
    /// Checks that every key maps to its value.
    pub fn verify<K: AsRef<[u8]>>(&self, keys: &[K], values: &[u64]) -> VerifyReport {
        let mut report = base_report(&self.layout, keys.len(), self.stats.as_ref());
        report.failure = count_mismatch(&self.layout, keys.len()).or_else(|| {
            if values.len() != keys.len() {
                return Some(Mismatch {
                    index: keys.len().min(values.len()),
                    detail: format!("{} keys but {} values", keys.len(), values.len()),
                });
            }
            keys.iter().zip(values).enumerate().find_map(|(i, (k, &v))| {
                let got = self.get(k.as_ref());
                (got != v).then(|| Mismatch {
                    index: i,
                    detail: format!("expected {v}, got {got}"),
                })
            })
        });
        finish(report, &self.layout, keys, Some(values))
    }
}

impl Mphf {
    /// Checks that the keys map bijectively onto `[0, n)`.
    pub fn verify<K: AsRef<[u8]>>(&self, keys: &[K]) -> VerifyReport {
        let mut report = base_report(&self.layout, keys.len(), self.stats.as_ref());
        report.failure = count_mismatch(&self.layout, keys.len()).or_else(|| {
            let n = keys.len() as u64;
            let mut seen = vec![0u64; keys.len().div_ceil(64)];
            keys.iter().enumerate().find_map(|(i, k)| {
                let x = self.get(k.as_ref());
                if x >= n {
                    return Some(Mismatch {
                        index: i,
                        detail: format!("index {x} out of range [0, {n})"),
                    });
                }
                let (w, b) = ((x / 64) as usize, x % 64);
                if seen[w] >> b & 1 != 0 {
                    return Some(Mismatch {
                        index: i,
                        detail: format!("index {x} already taken"),
                    });
                }
                seen[w] |= 1 << b;
                None
            })
        });
        finish(report, &self.layout, keys, None)
    }
}

impl ApproxDict {
    /// Checks that every key is reported as a member.
    pub fn verify<K: AsRef<[u8]>>(&self, keys: &[K]) -> VerifyReport {
        let layout = &self.sf.layout;
        let mut report = base_report(layout, keys.len(), self.sf.stats.as_ref());
        report.failure = count_mismatch(layout, keys.len()).or_else(|| {
            keys.iter().position(|k| !self.contains(k.as_ref())).map(|index| Mismatch {
                index,
                detail: "member reported absent".into(),
            })
        });
        finish(report, layout, keys, None)
    }
}

impl AnyStructure {
    /// Verifies against `keys`; `values` is required for static functions.
    pub fn verify<K: AsRef<[u8]>>(&self, keys: &[K], values: Option<&[u64]>) -> VerifyReport {
        match self {
            AnyStructure::StaticFunction(f) => match values {
                Some(v) => f.verify(keys, v),
                None => {
                    let mut r = base_report(&f.layout, keys.len(), None);
                    r.failure = Some(Mismatch {
                        index: 0,
                        detail: "static functions need values to verify".into(),
                    });
                    r
                }
            },
            AnyStructure::Mphf(m) => m.verify(keys),
            AnyStructure::Dict(d) => d.verify(keys),
        }
    }
}
