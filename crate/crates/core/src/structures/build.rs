//! Chunk solving and the retry ladder shared by every structure.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::sf::dict_fingerprint;
use super::{Header, Layout, PackedArray};
use crate::bitops::Kernels;
use crate::config::{Ablation, BuildConfig, Kind};
use crate::error::BuildError;
use crate::hypergraph::{orient_core, peel, Assignment};
use crate::linsolve::{lazy_solve, Field, Solution, SolveStats, SolverOptions, SparseEquation};
use crate::sharder::{self, pack_chunk_word, total_vertices, vertex_span, SigVal};
use crate::signatures::{edge_unchecked, mix64, seed_sequence, Edge, HASH_ID};

/// Why one attempt at a chunk failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChunkFailure {
    /// Peel-only mode and the hypergraph has a nonempty 2-core.
    NotPeelable,
    /// The 2-core admits no orientation (MPHF only).
    NotOrientable,
    /// The core system is inconsistent.
    Unsolvable,
}

/// A solved chunk: local vertex values, ready to be stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkOutcome {
    pub attempt: u64,
    pub values: Vec<u64>,
    /// Statistics of the core system, if one was solved.
    pub solve: Option<SolveStats>,
}

/// Statistics of a build, kept in memory only.
#[derive(Clone, Debug, Default)]
pub struct BuildStats {
    /// Attempts used by each chunk (successful one included).
    pub chunk_attempts: Vec<u32>,
    /// Core-system statistics of each chunk's successful attempt.
    pub chunk_solves: Vec<Option<SolveStats>>,
    /// Global reseeds before success.
    pub global_retries: u32,
    pub global_seed: u64,
    pub elapsed: Duration,
}

impl BuildStats {
    pub fn mean_attempts(&self) -> f64 {
        mean(self.chunk_attempts.iter().map(|&a| f64::from(a)))
    }

    pub fn max_attempts(&self) -> u32 {
        self.chunk_attempts.iter().copied().max().unwrap_or(0)
    }

    /// Mean over chunks with a nonempty core system of the fraction of its
    /// variables that became active.
    pub fn mean_active_fraction(&self) -> f64 {
        mean(self.chunk_solves.iter().flatten().filter(|s| s.num_vars > 0).map(SolveStats::active_fraction))
    }

    /// Number of chunks whose core system had at least one variable.
    pub fn core_systems(&self) -> usize {
        self.chunk_solves.iter().flatten().filter(|s| s.num_vars > 0).count()
    }
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// The value whose lookup a static function or dictionary must return.
#[inline]
fn target(kind: Kind, value_bits: u32, sv: &SigVal) -> u64 {
    match kind {
        Kind::Dict => dict_fingerprint(&sv.sig, value_bits),
        _ => sv.value,
    }
}

/// The edges of a chunk's signatures at `attempt`.
pub(crate) fn chunk_edges(sigs: &[SigVal], global_seed: u64, attempt: u64, vertices: usize, degree: usize) -> Vec<Edge> {
    let seed = seed_sequence(global_seed, attempt);
    sigs.iter().map(|sv| edge_unchecked(&sv.sig, seed, vertices, degree)).collect()
}

/// Solves one chunk at one attempt. For an MPHF the values are stored lanes
/// (1, 2 or 3 at assigned vertices, 0 elsewhere).
pub fn rebuild_chunk(
    header: &Header,
    ablation: Ablation,
    sigs: &[SigVal],
    vertices: usize,
    attempt: u64,
) -> Result<ChunkOutcome, ChunkFailure> {
    let edges = chunk_edges(sigs, header.global_seed, attempt, vertices, header.degree);
    let kernels = if ablation.no_broadword { Kernels::Scalar } else { Kernels::Broadword };
    let solve = match header.kind {
        Kind::Mphf => solve_mphf(&edges, vertices, ablation, kernels),
        kind => {
            let rhs: Vec<u64> = sigs.iter().map(|sv| target(kind, header.value_bits, sv)).collect();
            solve_sf(&edges, &rhs, vertices, ablation, kernels)
        }
    };
    solve.map(|(values, solve)| ChunkOutcome { attempt, values, solve })
}

fn options(field: Field, ablation: Ablation, kernels: Kernels) -> SolverOptions {
    SolverOptions {
        kernels,
        lazy: !ablation.no_lazy,
        ..SolverOptions::new(field)
    }
}

/// Edges to solve by peeling, in peel order, and edges left to the solver.
struct Split {
    peeled: Vec<(usize, usize)>,
    core: Vec<usize>,
}

fn split(edges: &[Edge], vertices: usize, ablation: Ablation) -> Result<Split, ChunkFailure> {
    if ablation.no_peel && !ablation.peel_only {
        return Ok(Split {
            peeled: Vec::new(),
            core: (0..edges.len()).collect(),
        });
    }
    let p = peel(edges, vertices);
    if ablation.peel_only && !p.is_peelable() {
        return Err(ChunkFailure::NotPeelable);
    }
    Ok(Split {
        peeled: p.peel_order.iter().map(|x| (x.edge, x.hinge)).collect(),
        core: p.core_edges,
    })
}

/// Compact ids for a set of vertices: `ids[v]` is `Some` for members.
fn compact(vertices: usize, members: impl IntoIterator<Item = usize>) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut ids = vec![None; vertices];
    let mut order = Vec::new();
    for v in members {
        if ids[v].is_none() {
            ids[v] = Some(order.len());
            order.push(v);
        }
    }
    (ids, order)
}

fn solve_sf(
    edges: &[Edge],
    rhs: &[u64],
    vertices: usize,
    ablation: Ablation,
    kernels: Kernels,
) -> Result<(Vec<u64>, Option<SolveStats>), ChunkFailure> {
    let Split { peeled, core } = split(edges, vertices, ablation)?;
    let mut values = vec![0u64; vertices];
    let mut stats = None;
    if !core.is_empty() {
        let (ids, order) = compact(vertices, core.iter().flat_map(|&e| edges[e].vertices().iter().copied()));
        let equations: Vec<SparseEquation> = core
            .iter()
            .map(|&e| {
                let vars: Vec<usize> = edges[e].vertices().iter().map(|&v| ids[v].unwrap()).collect();
                SparseEquation::gf2(&vars, rhs[e])
            })
            .collect();
        let sol = lazy_solve(&equations, order.len(), &options(Field::Gf2, ablation, kernels))
            .map_err(|_| ChunkFailure::Unsolvable)?;
        for (&v, &x) in order.iter().zip(&sol.values) {
            values[v] = x;
        }
        stats = Some(sol.stats);
    }
    for &(e, hinge) in peeled.iter().rev() {
        let others = edges[e].vertices().iter().filter(|&&v| v != hinge).fold(0, |acc, &v| acc ^ values[v]);
        values[hinge] = rhs[e] ^ others;
    }
    Ok((values, stats))
}

/// Orientations tried per seed before the MPHF core system is declared
/// unsolvable. The pinned system of one orientation is inconsistent about
/// half the time, roughly independently across orientations.
pub const ORIENTATION_TRIALS: u64 = 16;

/// The `trial`-th processing order of the core edges; trial 0 is the
/// natural order.
fn core_order(core: &[usize], trial: u64) -> Vec<usize> {
    let mut order = core.to_vec();
    if trial > 0 {
        order.sort_by_key(|&e| mix64(e as u64 ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    }
    order
}

/// Solves the GF(3) system of an oriented core: one unknown per assigned
/// vertex, every other core vertex pinned to 0.
fn solve_oriented_core(
    edges: &[Edge],
    core: &[usize],
    assign: &[Assignment],
    vertices: usize,
    opts: &SolverOptions,
) -> Option<(Vec<usize>, Solution)> {
    let (ids, order) = compact(vertices, assign.iter().map(|a| a.vertex));
    let equations: Vec<SparseEquation> = core
        .iter()
        .zip(assign)
        .map(|(&e, a)| {
            let terms: Vec<(usize, u8)> = edges[e].vertices().iter().filter_map(|&v| ids[v].map(|id| (id, 1))).collect();
            SparseEquation::gf3(&terms, a.index as u8)
        })
        .collect();
    lazy_solve(&equations, order.len(), opts).ok().map(|sol| (order, sol))
}

fn solve_mphf(
    edges: &[Edge],
    vertices: usize,
    ablation: Ablation,
    kernels: Kernels,
) -> Result<(Vec<u64>, Option<SolveStats>), ChunkFailure> {
    let Split { peeled, core } = split(edges, vertices, ablation)?;
    let mut values = vec![0u64; vertices];
    let mut assigned = vec![false; vertices];
    let mut stats = None;
    if !core.is_empty() {
        let opts = options(Field::Gf3, ablation, kernels);
        let mut solved = None;
        for trial in 0..ORIENTATION_TRIALS {
            let order = core_order(&core, trial);
            let assign = orient_core(edges, &order, vertices).map_err(|_| ChunkFailure::NotOrientable)?;
            if let Some(s) = solve_oriented_core(edges, &order, &assign, vertices, &opts) {
                solved = Some(s);
                break;
            }
        }
        let (order, sol) = solved.ok_or(ChunkFailure::Unsolvable)?;
        for (&v, &x) in order.iter().zip(&sol.values) {
            values[v] = x;
            assigned[v] = true;
        }
        stats = Some(sol.stats);
    }
    for &(e, hinge) in peeled.iter().rev() {
        let vs = edges[e].vertices();
        let index = vs.iter().position(|&v| v == hinge).unwrap() as u64;
        let others: u64 = vs.iter().filter(|&&v| v != hinge).map(|&v| values[v]).sum();
        values[hinge] = (index + 3 * 3 - others % 3) % 3;
        assigned[hinge] = true;
    }
    for (x, &a) in values.iter_mut().zip(&assigned) {
        if a && *x == 0 {
            *x = 3;
        }
    }
    Ok((values, stats))
}

/// Tries attempts `0..max` until the chunk solves.
fn build_chunk(header: &Header, cfg: &BuildConfig, chunk: usize, sigs: &[SigVal], vertices: usize) -> Result<(ChunkOutcome, u32), BuildError> {
    for attempt in 0..cfg.max_chunk_attempts {
        if let Ok(out) = rebuild_chunk(header, cfg.ablation, sigs, vertices, u64::from(attempt)) {
            return Ok((out, attempt + 1));
        }
    }
    Err(BuildError::ChunkExhausted {
        chunk,
        attempts: cfg.max_chunk_attempts,
    })
}

/// The global seed used by retry `retry`.
pub(crate) fn retry_seed(global_seed: u64, retry: u32) -> u64 {
    if retry == 0 {
        global_seed
    } else {
        mix64(global_seed.wrapping_add(u64::from(retry)))
    }
}

/// A layout with per-chunk attempt counts and solver statistics.
type BuiltLayout = (Layout, Vec<u32>, Vec<Option<SolveStats>>);

fn build_once<K: AsRef<[u8]>>(
    keys: &[K],
    values: Option<&[u64]>,
    cfg: &BuildConfig,
    global_seed: u64,
) -> Result<BuiltLayout, BuildError> {
    let mut store = sharder::ingest(keys, values.map(|v| v.iter().copied()), global_seed, cfg.spill_threshold)?;
    store.finalize()?;
    let n = keys.len() as u64;
    let chunk_bits = cfg.effective_chunk_bits(keys.len());
    let ratio = cfg.effective_ratio();
    let header = Header {
        kind: cfg.kind,
        degree: cfg.degree,
        hash_id: HASH_ID,
        chunk_bits,
        value_bits: cfg.value_bits,
        ratio,
        n,
        global_seed,
    };

    let mut chunks = Vec::with_capacity(1 << chunk_bits);
    let mut prior = 0u64;
    for (index, sigs) in store.virtual_chunks(chunk_bits) {
        let (offset, vertices) = vertex_span(prior, sigs.len() as u64, index, ratio, cfg.degree);
        chunks.push((index, prior, offset, vertices, sigs));
        prior += sigs.len() as u64;
    }

    let solve = || {
        chunks
            .par_iter()
            .map(|&(index, _, _, vertices, sigs)| build_chunk(&header, cfg, index, sigs, vertices))
            .collect::<Result<Vec<_>, _>>()
    };
    let outcomes = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| BuildError::InvalidConfig(e.to_string()))?
            .install(solve)?,
        None => solve()?,
    };

    let width = if cfg.kind == Kind::Mphf { 2 } else { cfg.value_bits };
    let mut array = PackedArray::new(total_vertices(n, chunks.len(), ratio, cfg.degree), width);
    let mut descriptors = Vec::with_capacity(chunks.len());
    let mut attempts = Vec::with_capacity(chunks.len());
    let mut solves = Vec::with_capacity(chunks.len());
    for (&(_, prior, offset, _, _), (out, used)) in chunks.iter().zip(outcomes) {
        descriptors.push(pack_chunk_word(prior, out.attempt, n)?);
        for (i, &x) in out.values.iter().enumerate() {
            if x != 0 {
                array.set(offset + i, x);
            }
        }
        attempts.push(used);
        solves.push(out.solve);
    }
    let layout = Layout {
        header,
        descriptors,
        values: array,
    };
    Ok((layout, attempts, solves))
}

/// Runs the whole retry ladder: chunk attempts inside each build, then up to
/// `max_global_retries` global seeds.
pub(crate) fn build_layout<K: AsRef<[u8]>>(
    keys: &[K],
    values: Option<&[u64]>,
    cfg: &BuildConfig,
    global_seed: u64,
) -> Result<(Layout, BuildStats), BuildError> {
    cfg.validate()?;
    if let Some(vs) = values {
        if vs.len() != keys.len() {
            return Err(BuildError::ValueCount {
                keys: keys.len(),
                values: vs.len(),
            });
        }
        if cfg.value_bits < 64 {
            if let Some((index, &value)) = vs.iter().enumerate().find(|(_, &v)| v >> cfg.value_bits != 0) {
                return Err(BuildError::ValueTooWide {
                    index,
                    value,
                    bits: cfg.value_bits,
                });
            }
        }
    }
    let start = Instant::now();
    let mut duplicates = 0;
    let mut last = None;
    for retry in 0..cfg.max_global_retries {
        let seed = retry_seed(global_seed, retry);
        match build_once(keys, values, cfg, seed) {
            Ok((layout, chunk_attempts, chunk_solves)) => {
                let stats = BuildStats {
                    chunk_attempts,
                    chunk_solves,
                    global_retries: retry,
                    global_seed: seed,
                    elapsed: start.elapsed(),
                };
                return Ok((layout, stats));
            }
            Err(e @ (BuildError::DuplicateSignature | BuildError::ChunkExhausted { .. } | BuildError::AttemptOverflow { .. })) => {
                if matches!(e, BuildError::DuplicateSignature) {
                    duplicates += 1;
                }
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if duplicates == cfg.max_global_retries {
        return Err(BuildError::LikelyDuplicateKeys { attempts: duplicates });
    }
    Err(BuildError::Exhausted {
        attempts: cfg.max_global_retries,
        last: Box::new(last.expect("at least one retry")),
    })
}
