use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vgaball::pipeline::{self, parse_limit, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "vgaball", version, about = "Visibility graph analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the visibility graph and save it as a VGACSR03 file.
    BuildGraph(Opts),
    /// Compute per-node metrics and write them as CSV.
    Analyze(Opts),
    /// Compare HyperBall estimates against exact BFS.
    Validate(Opts),
    /// Time HyperBall over a sweep of depth limits.
    Bench {
        #[command(flatten)]
        opts: Opts,
        /// Comma-separated depth limits, e.g. 3,5,10,unlimited.
        #[arg(long, value_delimiter = ',', default_value = "3,5,10,unlimited")]
        depths: Vec<String>,
    },
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    buildings: Option<PathBuf>,
    #[arg(long)]
    boundary: Option<PathBuf>,
    /// Grid spacing in metres.
    #[arg(long, default_value_t = 5.0)]
    spacing: f64,
    /// Visibility radius in metres, or "unlimited".
    #[arg(long, default_value = "unlimited", value_parser = limit::<f64>)]
    radius: Limit<f64>,
    /// Topological depth limit, or "unlimited".
    #[arg(long, default_value = "unlimited", value_parser = limit::<u32>)]
    depth: Limit<u32>,
    /// HLL precision p (2^p registers per node).
    #[arg(long, default_value_t = 10)]
    precision: u32,
    /// hyperball or exact.
    #[arg(long, default_value = "hyperball")]
    mode: Mode,
    /// Renumber nodes along a Hilbert curve.
    #[arg(long)]
    hilbert: bool,
    /// Graph cache file.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Memory-map the graph file instead of reading it.
    #[arg(long)]
    mmap: bool,
    #[arg(long)]
    threads: Option<usize>,
}

/// A number or `unlimited`; wrapped so clap does not read it as an optional flag.
#[derive(Clone, Copy)]
struct Limit<T>(Option<T>);

fn limit<T: std::str::FromStr>(s: &str) -> Result<Limit<T>, String> {
    parse_limit(s).map(Limit)
}

impl From<Opts> for RunConfig {
    fn from(o: Opts) -> Self {
        RunConfig {
            buildings: o.buildings,
            boundary: o.boundary,
            spacing: o.spacing,
            radius: o.radius.0,
            depth_limit: o.depth.0,
            precision: o.precision,
            mode: o.mode,
            hilbert: o.hilbert,
            graph: o.graph,
            out: o.out,
            mmap: o.mmap,
            threads: o.threads,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildGraph(o) => pipeline::cmd_build_graph(&o.into()).map(|r| {
            log::info!(
                "{} nodes, {} edges -> {}",
                r.nodes,
                r.edges,
                r.path.display()
            );
        }),
        Command::Analyze(o) => pipeline::cmd_analyze(&o.into()).map(|a| {
            log::info!("{} rows, {} iterations", a.rows.len(), a.iterations);
        }),
        Command::Validate(o) => pipeline::cmd_validate(&o.into()).map(drop),
        Command::Bench { opts, depths } => {
            match depths
                .iter()
                .map(|d| parse_limit::<u32>(d))
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(depths) => pipeline::cmd_bench(&opts.into(), &depths).map(drop),
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(2);
                }
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
