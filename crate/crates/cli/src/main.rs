mod input;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use govfunc::bench::{self, BenchOptions, CSV_HEADER};
use govfunc::structures::BuildStats;
use govfunc::{Ablation, AnyStructure, ApproxDict, BuildConfig, BuildError, Kind, Mphf, ParseError, StaticFunction};

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 0x5EED_6F76_0000_0001;

#[derive(Parser)]
#[command(name = "govfunc", version, about = "Build, query, verify and benchmark static functions, MPHFs and approximate dictionaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a structure from a key file and write it to disk.
    Build(BuildArgs),
    /// Look up keys in a structure.
    Query(QueryArgs),
    /// Check a structure against its key (and value) file.
    Verify(VerifyArgs),
    /// Time construction and lookups, writing CSV records.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Sf,
    Mphf,
    Dict,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::Sf => Kind::StaticFunction,
            KindArg::Mphf => Kind::Mphf,
            KindArg::Dict => Kind::Dict,
        }
    }
}

#[derive(Args)]
struct KeyFormat {
    /// Key files hold (u32 little-endian length, bytes) records instead of lines.
    #[arg(long)]
    binary_keys: bool,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    keys: PathBuf,
    /// One value per line (decimal or 0x hex). Defaults to key ordinals.
    #[arg(long)]
    values: Option<PathBuf>,
    /// Value width; required for dictionaries.
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    r: u8,
    /// Number of signature bits selecting the chunk.
    #[arg(long)]
    chunk_bits: Option<u32>,
    /// Global seed in hexadecimal.
    #[arg(long, value_parser = parse_hex)]
    seed: Option<u64>,
    /// Peeling only at ratio 1.23; a nonempty 2-core forces a new seed.
    #[arg(long)]
    peel_only: bool,
    #[arg(long)]
    no_peel: bool,
    #[arg(long)]
    no_lazy: bool,
    #[arg(long)]
    no_broadword: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    format: KeyFormat,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["key", "keys"]))]
struct QueryArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    key: Option<String>,
    #[arg(long)]
    keys: Option<PathBuf>,
    #[command(flatten)]
    format: KeyFormat,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    keys: PathBuf,
    /// Expected values of a static function; defaults to key ordinals.
    #[arg(long)]
    values: Option<PathBuf>,
    #[command(flatten)]
    format: KeyFormat,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    values: Option<PathBuf>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    r: u8,
    /// Log2 chunk sizes to sweep, as `A..B` (inclusive).
    #[arg(long, value_parser = parse_range)]
    chunk_bits_sweep: Option<RangeInclusive<u32>>,
    /// Run all eight peel/broadword/lazy combinations.
    #[arg(long)]
    ablation: bool,
    #[arg(long)]
    peel_only: bool,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 1_000_000)]
    lookups: usize,
    #[arg(long, value_parser = parse_hex)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output file; standard output if absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    format: KeyFormat,
}

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| format!("invalid hex seed {s:?}: {e}"))
}

fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("invalid bound {x:?}: {e}"));
    let (a, b) = (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?);
    if a > b || b > 40 {
        return Err(format!("invalid sweep {a}..{b}"));
    }
    Ok(a..=b)
}

/// A failure with its exit status.
enum Failure {
    Usage(String),
    Verify,
    Build(BuildError),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify => 1,
            Failure::Usage(_) => 2,
            Failure::Build(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<BuildError> for Failure {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::ValueCount { .. } | BuildError::ValueTooWide { .. } | BuildError::InvalidConfig(_) => {
                Failure::Usage(e.to_string())
            }
            BuildError::Io(e) => Failure::Io(e.to_string()),
            e => Failure::Build(e),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn parse_error(path: &Path, e: ParseError) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn load_keys(path: &Path, format: &KeyFormat) -> Result<Vec<Vec<u8>>, Failure> {
    input::read_keys(path, format.binary_keys).map_err(|e| io_error(path, e))
}

fn load_values(path: &Path) -> Result<Vec<u64>, Failure> {
    input::read_values(path).map_err(|e| io_error(path, e))
}

fn load_structure(path: &Path) -> Result<AnyStructure, Failure> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    govfunc::deserialize(&bytes).map_err(|e| parse_error(path, e))
}

fn value_width(values: &[u64]) -> u32 {
    let max = values.iter().copied().max().unwrap_or(0);
    (64 - max.leading_zeros()).max(1)
}

fn ordinals(n: usize) -> Vec<u64> {
    (0..n as u64).collect()
}

fn summary(out: &mut impl Write, bits_per_key: f64, bytes: usize, stats: &BuildStats) -> io::Result<()> {
    writeln!(out, "size: {bytes} bytes, {bits_per_key:.4} bits/key")?;
    writeln!(out, "chunks: {}", stats.chunk_attempts.len())?;
    writeln!(out, "attempts: mean {:.4}, max {}", stats.mean_attempts(), stats.max_attempts())?;
    writeln!(out, "active fraction: {:.4}", stats.mean_active_fraction())?;
    writeln!(out, "global retries: {}", stats.global_retries)?;
    writeln!(out, "build time: {:.3} s", stats.elapsed.as_secs_f64())
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    let kind = Kind::from(args.kind);
    if kind == Kind::Mphf && args.r != 3 {
        return Err(Failure::Usage("mphf requires --r 3".into()));
    }
    if kind == Kind::Mphf && args.bits.is_some_and(|b| b != 2) {
        return Err(Failure::Usage("mphf stores 2 bits per vertex; omit --bits".into()));
    }
    if kind == Kind::Dict && args.bits.is_none() {
        return Err(Failure::Usage("dict requires --bits".into()));
    }
    if kind != Kind::StaticFunction && args.values.is_some() {
        return Err(Failure::Usage("--values applies to sf only".into()));
    }
    if args.peel_only && (args.no_peel || args.no_lazy) {
        return Err(Failure::Usage("--peel-only excludes --no-peel and --no-lazy".into()));
    }
    let keys = load_keys(&args.keys, &args.format)?;
    let values = match (&args.values, kind) {
        (Some(p), _) => Some(load_values(p)?),
        (None, Kind::StaticFunction) => Some(ordinals(keys.len())),
        _ => None,
    };
    let mut cfg = match kind {
        Kind::StaticFunction => BuildConfig::static_function(args.bits.unwrap_or_else(|| value_width(values.as_deref().unwrap_or(&[])))),
        Kind::Mphf => BuildConfig::mphf(),
        Kind::Dict => BuildConfig::dict(args.bits.unwrap_or(8)),
    }
    .with_degree(args.r.into())
    .with_ablation(Ablation {
        no_peel: args.no_peel,
        no_lazy: args.no_lazy,
        no_broadword: args.no_broadword,
        peel_only: args.peel_only,
    });
    cfg.chunk_bits = args.chunk_bits;
    cfg.threads = args.threads;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);

    let (bytes, bits_per_key, stats) = match kind {
        Kind::StaticFunction => {
            let f = StaticFunction::build(&keys, values.as_deref().unwrap(), &cfg, seed)?;
            (f.to_bytes(), f.bits_per_key(), f.build_stats().cloned())
        }
        Kind::Mphf => {
            let m = Mphf::build(&keys, &cfg, seed)?;
            (m.to_bytes(), m.bits_per_key(), m.build_stats().cloned())
        }
        Kind::Dict => {
            let d = ApproxDict::build(&keys, &cfg, seed)?;
            (d.to_bytes(), d.bits_per_key(), d.build_stats().cloned())
        }
    };
    fs::write(&args.output, &bytes).map_err(|e| io_error(&args.output, e))?;
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "built {} over {} keys -> {}", kind, keys.len(), args.output.display());
    let _ = summary(&mut out, bits_per_key, bytes.len(), &stats.expect("fresh build"));
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<(), Failure> {
    let structure = load_structure(&args.input)?;
    let keys = match (&args.key, &args.keys) {
        (Some(k), _) => vec![k.as_bytes().to_vec()],
        (None, Some(p)) => load_keys(p, &args.format)?,
        (None, None) => unreachable!("clap enforces one key source"),
    };
    let mut out = BufWriter::new(io::stdout().lock());
    let write = |out: &mut BufWriter<_>, line: std::fmt::Arguments| writeln!(out, "{line}").map_err(|e| Failure::Io(e.to_string()));
    for k in &keys {
        match &structure {
            AnyStructure::StaticFunction(f) => write(&mut out, format_args!("{}", f.get(k)))?,
            AnyStructure::Mphf(m) => write(&mut out, format_args!("{}", m.get(k)))?,
            AnyStructure::Dict(d) => write(&mut out, format_args!("{}", d.contains(k)))?,
        }
    }
    out.flush().map_err(|e| Failure::Io(e.to_string()))
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let structure = load_structure(&args.input)?;
    let keys = load_keys(&args.keys, &args.format)?;
    let values = match (&args.values, &structure) {
        (Some(p), _) => Some(load_values(p)?),
        (None, AnyStructure::StaticFunction(_)) => Some(ordinals(keys.len())),
        _ => None,
    };
    let report = structure.verify(&keys, values.as_deref());
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let kind = Kind::from(args.kind);
    if kind == Kind::Mphf && args.r != 3 {
        return Err(Failure::Usage("mphf requires --r 3".into()));
    }
    if kind == Kind::Dict && args.bits.is_none() {
        return Err(Failure::Usage("dict requires --bits".into()));
    }
    if args.ablation && args.peel_only {
        return Err(Failure::Usage("--ablation excludes --peel-only".into()));
    }
    let keys = load_keys(&args.keys, &args.format)?;
    let values = args.values.as_deref().map(load_values).transpose()?;
    let mut opts = BenchOptions::new(kind);
    opts.degree = args.r.into();
    opts.value_bits = args.bits.or_else(|| values.as_deref().map(value_width));
    opts.sweep = args.chunk_bits_sweep;
    opts.ablation = args.ablation;
    opts.peel_only = args.peel_only;
    opts.runs = args.runs;
    opts.lookups = args.lookups;
    opts.seed = args.seed.unwrap_or(DEFAULT_SEED);
    opts.threads = args.threads;
    let records = bench::run(&keys, values.as_deref(), &opts)?;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &records {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    match &args.csv {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| io_error(p, e))?;
            f.write_all(csv.as_bytes()).map_err(|e| io_error(p, e))?;
            eprintln!("wrote {} records to {}", records.len(), p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Verify => eprintln!("verification failed"),
                Failure::Build(e) => eprintln!("build failed: {e}"),
                Failure::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
