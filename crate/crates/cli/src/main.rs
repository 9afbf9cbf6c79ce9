//! Command-line front end for the fiber sampling library: chain traces,
//! multilevel density estimates, discrepancy and coverage reports, and
//! exact enumeration of small fibers.

mod commands;
mod config;
mod instances;
mod manifest;
mod outfmt;

use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};
use fibersample::FiberError;

use commands::Ctx;

#[derive(Debug, Parser)]
#[command(
    name = "fibersample",
    version,
    about = "Random-walk samplers, multilevel density estimates, and quality scores for integer lattice fibers"
)]
struct Cli {
    /// Chain seed; a fresh one is drawn and recorded when omitted
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV files and the run manifest
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Settings file with one `key = value` per line; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for trial and pairwise-sum parallelism
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one sampler chain and record its statistic trace
    Sample(commands::SampleArgs),
    /// Multilevel density estimate of a statistic over the fiber
    Density(commands::DensityArgs),
    /// Squared discrepancy of fresh samples against a reference chain
    Mmd(commands::MmdArgs),
    /// Voronoi coverage scores over a sweep of center radii
    Fcs(commands::FcsArgs),
    /// Print every point of a small fiber
    Enumerate(commands::EnumerateArgs),
    /// Print the exact point count of a fiber
    Count(commands::CountArgs),
    /// Bundled benchmark fibers
    Bench(commands::BenchArgs),
}

fn exit_code(err: &FiberError) -> i32 {
    match err {
        FiberError::Overflow(_)
        | FiberError::NonConvergence { .. }
        | FiberError::UnboundedRange
        | FiberError::RejectionStall { .. }
        | FiberError::TooLarge { .. }
        | FiberError::Unbounded { .. } => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> fibersample::Result<()> {
    let values = config::load(cli.config.as_deref())?;
    let resolver = config::Resolver::new(values);
    if let Some(threads) = resolver.opt("threads", cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| FiberError::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let seed = match resolver.opt("seed", cli.seed)? {
        Some(seed) => seed,
        None => rand::random(),
    };
    let out = resolver.get("out", cli.out, PathBuf::from("out"))?;
    let ctx = Ctx {
        seed,
        out,
        resolver,
    };
    match &cli.command {
        Command::Sample(args) => commands::sample(&ctx, args),
        Command::Density(args) => commands::density(&ctx, args),
        Command::Mmd(args) => commands::mmd(&ctx, args),
        Command::Fcs(args) => commands::fcs_cmd(&ctx, args),
        Command::Enumerate(args) => commands::enumerate(&ctx, args),
        Command::Count(args) => commands::count(&ctx, args),
        Command::Bench(args) => commands::bench_cmd(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        process::exit(exit_code(&err));
    }
}
