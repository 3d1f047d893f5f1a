//! `trex` command line: pipeline stages over a snapshot file, queries and benchmarks.

mod bench;
mod commands;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trex::query::Algorithm;

#[derive(Parser)]
#[command(name = "trex", version, about = "Trip-Based routing with multi-level transfer overlays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a GTFS directory into a new snapshot.
    Ingest {
        #[arg(long)]
        gtfs: PathBuf,
        /// First service day, YYYY-MM-DD.
        #[arg(long)]
        day: chrono::NaiveDate,
        #[arg(long, default_value_t = 1)]
        days: u32,
        /// Buffer time in seconds subtracted from departures.
        #[arg(long, default_value_t = 0)]
        buffer: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate and prune the transfer set.
    Transfers(Stored),
    /// Nested bipartition of the layout graph.
    Partition {
        #[command(flatten)]
        io: Stored,
        #[arg(long)]
        levels: u8,
        #[arg(long, default_value_t = 0.25)]
        imbalance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Read `stopId cellId` lines instead of partitioning.
        #[arg(long = "import")]
        import: Option<PathBuf>,
    },
    /// Compute transfer ranks, overlays and the successor table.
    Customize {
        #[command(flatten)]
        io: Stored,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fixed-departure query.
    Query {
        #[arg(long = "in")]
        input: PathBuf,
        /// Stop index or exact stop name.
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// HH:MM:SS or seconds.
        #[arg(long, value_parser = format::parse_time)]
        dep: u32,
        #[arg(long, default_value = "trex-overlay")]
        algo: Algorithm,
        #[arg(long)]
        json: bool,
    },
    /// Profile query over a departure interval.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_parser = format::parse_time)]
        start: u32,
        #[arg(long, value_parser = format::parse_time)]
        end: u32,
        #[arg(long, default_value = "trex-overlay")]
        algo: Algorithm,
        #[arg(long)]
        json: bool,
    },
    /// Random or geo-rank query workload, one CSV row per query and algorithm.
    Bench(bench::BenchArgs),
    /// Write a synthetic clustered network as a new snapshot.
    Gen(GenArgs),
    /// Counts, rank histogram and overlay sizes.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Snapshot read by a stage and where to write the result (in place by default).
#[derive(Args)]
struct Stored {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Stored {
    fn output(&self) -> &PathBuf {
        self.out.as_ref().unwrap_or(&self.input)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 120)]
    stops: usize,
    #[arg(long, default_value_t = 30)]
    lines: usize,
    #[arg(long, default_value_t = 8)]
    trips_per_line: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 0.15)]
    inter_cluster: f64,
    #[arg(long, default_value_t = 0.4)]
    footpath_density: f64,
    /// Span of first departures in seconds.
    #[arg(long, default_value_t = 4 * 3600)]
    horizon: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
