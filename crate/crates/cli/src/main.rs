//! `hptree`: tables, Monte Carlo checks and corpus encoding for prefix trees.

mod commands;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 0x0D0D_A203;

#[derive(Parser, Debug)]
#[command(name = "hptree", version, about = "Entropy-coded prefix trees as set representations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Table of entropies, depths, false-positive rates and Bloom sizes.
    Table(TableArgs),
    /// Exact values minus their smooth approximation over a geometric n grid.
    Oscillation(OscArgs),
    /// Build a tree from a corpus and write it as an HPT1 file.
    Encode(EncodeArgs),
    /// Summarize an HPT1 file, optionally re-serializing it.
    Decode(DecodeArgs),
    /// Membership verdict for every element of a corpus.
    Query(QueryArgs),
    /// Empirical against analytic false-positive rate.
    Fpsim(SimArgs),
    /// Encoded size of random trees against the analytic entropy.
    Rate(RateArgs),
    /// Prefix tree against Bloom filter at equal false-positive rate.
    Bloomcmp(BloomArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Significant digits in CSV output.
    #[arg(long)]
    pub digits: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Comma-separated element counts.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u64>,
    /// Geometric grid `lo:hi:factor`, added to --n.
    #[arg(long, value_name = "LO:HI:STEP")]
    pub n_range: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Minimal,
    Depth,
    Reduced,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Lines,
    #[value(name = "raw-u64")]
    RawU64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    #[value(name = "H")]
    H,
    #[value(name = "D")]
    D,
    #[value(name = "F")]
    F,
}

#[derive(Args, Debug, Clone)]
pub struct KindArgs {
    #[arg(long, value_enum, default_value = "minimal")]
    pub kind: KindArg,
    /// Minimum leaf depth for --kind depth.
    #[arg(long)]
    pub depth: Option<u32>,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Comma-separated minimum depths for the H^d, F^d and B columns.
    #[arg(long, value_delimiter = ',', default_value = "5,9,10,15,20,30")]
    pub depth: Vec<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct OscArgs {
    #[arg(long, value_enum)]
    pub quantity: QuantityArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    /// Stream key, hex with 0x prefix or decimal.
    #[arg(long, default_value = "0", value_parser = parse_u64)]
    pub key: u64,
    #[arg(long, value_enum, default_value = "lines")]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    /// Corpus files; `-` or nothing reads stdin.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub kind: KindArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 16)]
    pub scale_bits: u32,
    /// HPT1 output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    pub input: PathBuf,
    /// Re-serialize the decoded tree to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub digits: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// HPT1 file.
    pub tree: PathBuf,
    /// Candidate corpus files; `-` or nothing reads stdin.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[command(flatten)]
    pub kind: KindArgs,
    /// Random trees.
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// Probes in total, split evenly over the trees.
    #[arg(long, default_value_t = 100_000)]
    pub probes: u64,
    #[arg(long, default_value = "0x0D0DA203", value_parser = parse_u64)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub n: Vec<u64>,
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long, default_value_t = 500)]
    pub trials: u64,
    #[arg(long, default_value_t = 16)]
    pub scale_bits: u32,
    #[arg(long, default_value = "0x0D0DA203", value_parser = parse_u64)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BloomArgs {
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "15,20,30")]
    pub depth: Vec<u32>,
    /// Trees encoded per (n, d) for the measured size.
    #[arg(long, default_value_t = 4)]
    pub trials: u64,
    /// Bloom probes per (n, d), split over `trials` filters.
    #[arg(long, default_value_t = 100_000)]
    pub probes: u64,
    #[arg(long, default_value = "0x0D0DA203", value_parser = parse_u64)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn parse_u64(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let r = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => t.replace('_', "").parse(),
    };
    r.map_err(|e| format!("bad integer {s:?}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hptree: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
