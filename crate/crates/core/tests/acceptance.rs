//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the terminal; exits nonzero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use govfunc::bench::{self, BenchOptions};
use govfunc::bitops::{self, Kernels};
use govfunc::config::{Ablation, BuildConfig, Kind};
use govfunc::linsolve::{lazy_solve, Field, SolverOptions, SparseEquation};
use govfunc::{ApproxDict, Mphf, StaticFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances.
const MPHF_MAX_BITS_PER_KEY: f64 = 2.35;
const MPHF_MAX_BUILD: Duration = Duration::from_secs(60);
const SF_R3_MAX_BITS_PER_KEY: f64 = 1.12 * 16.0 + 0.15;
const SF_R4_MAX_BITS_PER_KEY: f64 = 1.05 * 16.0 + 0.15;
const MAX_ACTIVE_FRACTION: f64 = 0.10;
const MIN_CORE_SYSTEMS: usize = 200;
const MIN_ABLATION_SPEEDUP: f64 = 5.0;
const RANDOM_WORDS: usize = 100_000;
const SOLVER_SYSTEMS: usize = 10_000;
const SOLVER_MAX_VARS: usize = 12;
const MAX_MEAN_ATTEMPTS: f64 = 1.3;
const MAX_ATTEMPTS: u32 = 24;
const FP_LOW: f64 = 0.8;
const FP_HIGH: f64 = 1.2;
const TREND_NOISE: f64 = 0.02;

const BIG_N: usize = 1_000_000;
const MID_N: usize = 100_000;
const SEED: u64 = 0x0ACC_E97A_11CE;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_keys(n: usize, seed: u64) -> Vec<[u8; 16]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

fn single_thread(mut cfg: BuildConfig) -> BuildConfig {
    cfg.threads = Some(1);
    cfg
}

struct MphfRun {
    m: Mphf,
    elapsed: Duration,
}

fn mphf_space(run: &MphfRun) -> Outcome {
    let bpk = run.m.bits_per_key();
    outcome(
        bpk <= MPHF_MAX_BITS_PER_KEY && run.elapsed < MPHF_MAX_BUILD,
        format!(
            "{bpk:.4} bits/key (bound {MPHF_MAX_BITS_PER_KEY}), single-threaded build {:.2} s (bound {} s)",
            run.elapsed.as_secs_f64(),
            MPHF_MAX_BUILD.as_secs()
        ),
    )
}

fn mphf_bijection(run: &MphfRun, keys: &[[u8; 16]]) -> Outcome {
    let n = keys.len();
    let mut seen = vec![0u64; n.div_ceil(64)];
    let mut bad = None;
    for (i, k) in keys.iter().enumerate() {
        let x = run.m.get(k) as usize;
        if x >= n || seen[x / 64] >> (x % 64) & 1 != 0 {
            bad = Some((i, x));
            break;
        }
        seen[x / 64] |= 1 << (x % 64);
    }
    match bad {
        None => outcome(true, format!("{n} keys map onto [0, {n})")),
        Some((i, x)) => outcome(false, format!("key {i} maps to {x}, out of range or taken")),
    }
}

fn retry_economy(run: &MphfRun) -> Outcome {
    let s = run.m.build_stats().unwrap();
    let (mean, max) = (s.mean_attempts(), s.max_attempts());
    outcome(
        mean <= MAX_MEAN_ATTEMPTS && max <= MAX_ATTEMPTS && s.global_retries == 0,
        format!(
            "mean {mean:.4} (bound {MAX_MEAN_ATTEMPTS}), max {max} (bound {MAX_ATTEMPTS}) over {} chunks, {} global retries",
            s.chunk_attempts.len(),
            s.global_retries
        ),
    )
}

fn sf_space(keys: &[[u8; 16]]) -> (Outcome, Outcome) {
    let values: Vec<u64> = (0..keys.len() as u64).map(|i| (i * 0x9E37) & 0xFFFF).collect();
    let r3 = StaticFunction::build(keys, &values, &BuildConfig::static_function(16), SEED).unwrap();
    let r4 = StaticFunction::build(keys, &values, &BuildConfig::static_function(16).with_degree(4), SEED).unwrap();
    let ok = r3.verify(keys, &values).passed() && r4.verify(keys, &values).passed();
    let (b3, b4) = (r3.bits_per_key(), r4.bits_per_key());
    let space = outcome(
        ok && b3 <= SF_R3_MAX_BITS_PER_KEY && b4 <= SF_R4_MAX_BITS_PER_KEY,
        format!(
            "r=3 {b3:.4} bits/key (bound {SF_R3_MAX_BITS_PER_KEY:.2}), r=4 {b4:.4} bits/key (bound {SF_R4_MAX_BITS_PER_KEY:.2}), lookups exact: {ok}"
        ),
    );

    let s = r3.build_stats().unwrap();
    let systems = s.core_systems();
    let af = s.mean_active_fraction();
    let mean_chunk = keys.len() as f64 / r3.num_chunks() as f64;
    let lazy = outcome(
        systems >= MIN_CORE_SYSTEMS && af <= MAX_ACTIVE_FRACTION,
        format!("mean active fraction {af:.4} (bound {MAX_ACTIVE_FRACTION}) over {systems} core systems, {mean_chunk:.0} keys per chunk"),
    );
    (space, lazy)
}

fn sf_exactness(keys: &[[u8; 16]]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for bits in [1u32, 8, 16, 64] {
        for degree in [3, 4] {
            let mask = if bits == 64 { u64::MAX } else { (1 << bits) - 1 };
            let values: Vec<u64> = (0..keys.len()).map(|_| rng.gen::<u64>() & mask).collect();
            let sf = StaticFunction::build(keys, &values, &BuildConfig::static_function(bits).with_degree(degree), SEED).unwrap();
            let wrong = keys.iter().zip(&values).filter(|(k, &v)| sf.get(&k[..]) != v).count();
            if wrong > 0 {
                failures.push(format!("b={bits} r={degree}: {wrong} wrong"));
            }
        }
    }
    if failures.is_empty() {
        outcome(true, format!("8 configurations x {} keys, zero mismatches", keys.len()))
    } else {
        outcome(false, failures.join("; "))
    }
}

fn median_build(keys: &[[u8; 16]], values: &[u64], ablation: Ablation) -> Duration {
    let cfg = single_thread(BuildConfig::static_function(16).with_ablation(ablation));
    let mut times: Vec<Duration> = (0..3)
        .map(|_| {
            let start = Instant::now();
            StaticFunction::build(keys, values, &cfg, SEED).unwrap();
            start.elapsed()
        })
        .collect();
    times.sort();
    times[1]
}

fn ablation_speedup(keys: &[[u8; 16]]) -> Outcome {
    let values: Vec<u64> = (0..keys.len() as u64).map(|i| i & 0xFFFF).collect();
    let full = median_build(keys, &values, Ablation::default());
    let naive = median_build(
        keys,
        &values,
        Ablation {
            no_peel: true,
            no_lazy: true,
            no_broadword: true,
            peel_only: false,
        },
    );
    let ratio = naive.as_secs_f64() / full.as_secs_f64();
    outcome(
        ratio >= MIN_ABLATION_SPEEDUP,
        format!(
            "naive {:.3} s / full {:.3} s = {ratio:.1}x (bound {MIN_ABLATION_SPEEDUP}x)",
            naive.as_secs_f64(),
            full.as_secs_f64()
        ),
    )
}

// Lane-by-lane reference arithmetic.
fn lanes(x: u64) -> [u64; 32] {
    std::array::from_fn(|i| (x >> (2 * i)) & 3)
}

fn from_lanes(l: &[u64; 32]) -> u64 {
    l.iter().enumerate().fold(0, |acc, (i, &v)| acc | v << (2 * i))
}

fn oracle_add(x: u64, y: u64) -> u64 {
    let (a, b) = (lanes(x), lanes(y));
    from_lanes(&std::array::from_fn(|i| (a[i] + b[i]) % 3))
}

fn oracle_sub(x: u64, y: u64) -> u64 {
    let (a, b) = (lanes(x), lanes(y));
    from_lanes(&std::array::from_fn(|i| (a[i] + 3 - b[i]) % 3))
}

fn oracle_dot(x: u64, y: u64) -> u64 {
    let (a, b) = (lanes(x), lanes(y));
    (0..32).map(|i| a[i] * b[i]).sum::<u64>() % 3
}

fn oracle_nonzero(x: u64) -> u32 {
    lanes(x).iter().filter(|&&v| v != 0).count() as u32
}

fn random_canonical(rng: &mut impl Rng) -> u64 {
    from_lanes(&std::array::from_fn(|_| rng.gen_range(0..3)))
}

fn broadword_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0usize;
    let mut check = |ok: bool| mismatches += usize::from(!ok);

    // Every lane position and every canonical pair, over random backgrounds.
    let mut exhaustive = 0;
    for pos in 0..32 {
        for a in 0..3u64 {
            for b in 0..3u64 {
                for _ in 0..4 {
                    let clear = !(3u64 << (2 * pos));
                    let x = random_canonical(&mut rng) & clear | a << (2 * pos);
                    let y = random_canonical(&mut rng) & clear | b << (2 * pos);
                    check(bitops::add_mod3(x, y) == oracle_add(x, y));
                    check(bitops::sub_mod3(x, y) == oracle_sub(x, y));
                    check(u64::from(bitops::prod_mod3(x, y)) % 3 == oracle_dot(x, y));
                    exhaustive += 1;
                }
            }
        }
        for v in 0..4u64 {
            let x = v << (2 * pos);
            check(bitops::count_nonzero_pairs(x) == u32::from(v != 0));
        }
    }

    for _ in 0..RANDOM_WORDS {
        let (x, y) = (random_canonical(&mut rng), random_canonical(&mut rng));
        check(bitops::add_mod3(x, y) == oracle_add(x, y));
        check(bitops::sub_mod3(x, y) == oracle_sub(x, y));
        check(u64::from(bitops::prod_mod3(x, y)) % 3 == oracle_dot(x, y));
        let raw: u64 = rng.gen();
        check(bitops::count_nonzero_pairs(raw) == oracle_nonzero(raw));
        let ones: Vec<usize> = bitops::iterate_ones(&[raw]).collect();
        check(ones == (0..64).filter(|&b| raw >> b & 1 != 0).collect::<Vec<_>>());
        let mut d = [x, raw];
        Kernels::Broadword.xor(&mut d, &[y, x]);
        check(d == [x ^ y, raw ^ x]);
    }
    outcome(
        mismatches == 0,
        format!("{exhaustive} lane-pair cases and {RANDOM_WORDS} random words, {mismatches} mismatches"),
    )
}

/// Solvability by enumeration of every assignment, bit plane by bit plane
/// over GF(2).
fn brute_force(field: Field, eqs: &[SparseEquation], num_vars: usize, rhs_bits: u32) -> bool {
    match field {
        Field::Gf2 => (0..rhs_bits).all(|bit| {
            (0u32..1 << num_vars).any(|x| {
                eqs.iter()
                    .all(|e| e.terms.iter().fold(0, |acc, &(v, _)| acc ^ (x >> v & 1)) as u64 == e.rhs >> bit & 1)
            })
        }),
        Field::Gf3 => {
            let mut x = vec![0u64; num_vars];
            loop {
                if eqs.iter().all(|e| e.terms.iter().map(|&(v, c)| u64::from(c) * x[v]).sum::<u64>() % 3 == e.rhs) {
                    return true;
                }
                let mut i = 0;
                loop {
                    if i == num_vars {
                        return false;
                    }
                    x[i] += 1;
                    if x[i] < 3 {
                        break;
                    }
                    x[i] = 0;
                    i += 1;
                }
            }
        }
    }
}

fn solver_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut disagreements, mut bad_solutions, mut solvable) = (0, 0, 0);
    for t in 0..SOLVER_SYSTEMS {
        let field = if t % 2 == 0 { Field::Gf2 } else { Field::Gf3 };
        let num_vars = rng.gen_range(1..=SOLVER_MAX_VARS);
        let num_eqs = rng.gen_range(1..=num_vars + 3);
        let rhs_bits = if field == Field::Gf2 { rng.gen_range(1..=3) } else { 1 };
        let eqs: Vec<SparseEquation> = (0..num_eqs)
            .map(|_| {
                let size = rng.gen_range(1..=num_vars.min(4));
                let mut vars: Vec<usize> = (0..num_vars).collect();
                for i in 0..size {
                    let j = rng.gen_range(i..num_vars);
                    vars.swap(i, j);
                }
                match field {
                    Field::Gf2 => SparseEquation::gf2(&vars[..size], rng.gen_range(0..1 << rhs_bits)),
                    Field::Gf3 => {
                        let terms: Vec<(usize, u8)> = vars[..size].iter().map(|&v| (v, rng.gen_range(1..3))).collect();
                        SparseEquation::gf3(&terms, rng.gen_range(0..3))
                    }
                }
            })
            .collect();
        let mut opts = SolverOptions::new(field);
        if t % 4 >= 2 {
            opts.kernels = Kernels::Scalar;
        }
        let expected = brute_force(field, &eqs, num_vars, rhs_bits);
        let got = lazy_solve(&eqs, num_vars, &opts);
        if got.is_ok() != expected {
            disagreements += 1;
        }
        if let Ok(sol) = got {
            solvable += 1;
            if !eqs.iter().all(|e| e.holds(field, &sol.values)) {
                bad_solutions += 1;
            }
        }
    }
    outcome(
        disagreements == 0 && bad_solutions == 0,
        format!(
            "{SOLVER_SYSTEMS} systems ({solvable} solvable): {disagreements} verdict disagreements, {bad_solutions} invalid solutions"
        ),
    )
}

fn dictionary_fp() -> Outcome {
    let members = random_keys(MID_N, 10);
    let d = ApproxDict::build(&members, &BuildConfig::dict(8), SEED).unwrap();
    let all_members = members.iter().all(|k| d.contains(k));
    let probes = random_keys(BIG_N, 11);
    let hits = probes.iter().filter(|k| d.contains(&k[..])).count();
    let rate = hits as f64 / BIG_N as f64;
    let target = 1.0 / 256.0;
    outcome(
        all_members && (FP_LOW * target..=FP_HIGH * target).contains(&rate),
        format!(
            "false-positive rate {rate:.6} in [{:.6}, {:.6}], members all present: {all_members}",
            FP_LOW * target,
            FP_HIGH * target
        ),
    )
}

fn chunk_size_trend() -> Outcome {
    let keys = random_keys(MID_N, 12);
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [Kind::StaticFunction, Kind::Mphf] {
        let mut opts = BenchOptions::new(kind);
        opts.sweep = Some(8..=12);
        opts.seed = SEED;
        let records = bench::run(&keys, None, &opts).unwrap();
        let bpk: Vec<f64> = records.iter().map(|r| r.bits_per_key).collect();
        ok &= records.len() == 5 && bpk.windows(2).all(|w| w[1] <= w[0] * (1.0 + TREND_NOISE));
        lines.push(format!("{kind} [{}]", bpk.iter().map(|b| format!("{b:.4}")).collect::<Vec<_>>().join(", ")));
    }
    outcome(ok, format!("bits/key for log2 chunk size 8..12: {}", lines.join("; ")))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let big = random_keys(BIG_N, 1);
    let mid = random_keys(MID_N, 2);

    let t = Instant::now();
    let m = Mphf::build(&big, &single_thread(BuildConfig::mphf().with_chunk_bits(10)), SEED).unwrap();
    let mphf = MphfRun { m, elapsed: t.elapsed() };
    let (c3, c5) = sf_space(&big);

    let results = [
        ("1 MPHF space", mphf_space(&mphf)),
        ("2 MPHF bijection", mphf_bijection(&mphf, &big)),
        ("3 SF space", c3),
        ("4 SF exactness", sf_exactness(&mid)),
        ("5 lazy elimination", c5),
        ("6 ablation speedup", ablation_speedup(&mid)),
        ("7 broadword kernels", broadword_equivalence()),
        ("8 solver oracle", solver_equivalence()),
        ("9 retry economy", retry_economy(&mphf)),
        ("10 approximate dictionary", dictionary_fp()),
        ("11 chunk-size trend", chunk_size_trend()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
