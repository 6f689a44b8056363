//! `bowtie`: decompose directed graphs into the eight-component bow-tie
//! macrostructure, with statistics, historical snapshots, and synthesis.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use bowtie_core::EdgeFormat;

#[derive(Parser)]
#[command(name = "bowtie", version, about = "Bow-tie macrostructure analysis of directed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    /// One `src dst` pair per line
    EdgeList,
    /// `src:dst1,dst2,...` per line
    Adjacency,
}

impl From<FormatArg> for EdgeFormat {
    fn from(f: FormatArg) -> EdgeFormat {
        match f {
            FormatArg::EdgeList => EdgeFormat::EdgeList,
            FormatArg::Adjacency => EdgeFormat::Adjacency,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Arc file
    #[arg(long, value_name = "PATH")]
    edges: PathBuf,
    /// Arc file encoding
    #[arg(long, value_enum, default_value_t = FormatArg::EdgeList)]
    format: FormatArg,
    /// Per-account metadata CSV; its ids become nodes even without arcs
    #[arg(long, value_name = "PATH")]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory, created if absent
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads (0 = one per core)
    #[arg(long, value_name = "N", default_value_t = 0)]
    threads: usize,
}

/// Component sizes and shape knobs for `generate`.
#[derive(Args)]
struct ShapeArgs {
    /// Accounts in the strongly connected core
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_lsc: u64,
    /// Accounts that reach the core
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_in: u64,
    /// Accounts the core reaches
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_out: u64,
    /// Accounts hanging forward off IN
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_in_tendrils: u64,
    /// Accounts hanging backward off OUT
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_out_tendrils: u64,
    /// Accounts on IN-to-OUT paths that avoid the core
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_bridges: u64,
    /// Accounts weakly attached to the labeled region
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_other: u64,
    /// Accounts in separate weak components
    #[arg(long, value_name = "N", default_value_t = 0)]
    n_disconnected: u64,
    /// Random arcs inside the core beyond its spanning cycle
    #[arg(long, value_name = "N", default_value_t = 0)]
    lsc_extra_arcs: u64,
    /// Longest chain on the IN side
    #[arg(long, value_name = "N", default_value_t = 1)]
    depth_in: u32,
    /// Longest chain on the OUT side
    #[arg(long, value_name = "N", default_value_t = 1)]
    depth_out: u32,
    /// Longest tendril chain
    #[arg(long, value_name = "N", default_value_t = 1)]
    depth_tendrils: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Label every account LSC, IN, OUT, IN_TENDRILS, OUT_TENDRILS, BRIDGES,
    /// OTHER, or DISCONNECTED
    Decompose {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutArgs,
    },
    /// Degree summaries, per-component activity profiles, distributions,
    /// outliers, and label cross-tabulations
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutArgs,
        /// Also rank the top-k accounts per outlier category
        #[arg(long, value_name = "N")]
        k: Option<u64>,
        /// File of external ids (one per line) to cross-tabulate
        #[arg(long, value_name = "PATH")]
        labels: Option<PathBuf>,
        /// Reference date for ages (default: newest creation date)
        #[arg(long, value_name = "YYYY-MM-DD")]
        reference_date: Option<NaiveDate>,
        /// Drop zero values from distribution populations
        #[arg(long)]
        filter_zeros: bool,
    },
    /// Classify the graph as it stood on a date
    Snapshot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutArgs,
        /// Keep accounts created on or before this date
        #[arg(long, value_name = "YYYY-MM-DD")]
        as_of: NaiveDate,
    },
    /// Component sizes along a date grid
    Evolve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutArgs,
        /// First snapshot date
        #[arg(long, value_name = "YYYY-MM-DD")]
        start: NaiveDate,
        /// Last snapshot date, appended even when off the grid
        #[arg(long, value_name = "YYYY-MM-DD")]
        end: NaiveDate,
        /// Months between snapshots
        #[arg(long, value_name = "N", default_value_t = 6)]
        step_months: u32,
    },
    /// Attribute accounts that appeared between two dates to the components
    /// they joined
    Diff {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutArgs,
        /// Earlier snapshot date
        #[arg(long, value_name = "YYYY-MM-DD")]
        older: NaiveDate,
        /// Later snapshot date
        #[arg(long, value_name = "YYYY-MM-DD")]
        newer: NaiveDate,
    },
    /// Reconcile metadata follower counts against degrees computed from arcs
    ValidateDegrees {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutArgs,
    },
    /// Write a synthetic dataset whose decomposition is known in advance
    Generate {
        #[command(flatten)]
        output: OutArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        /// Generator seed; equal seeds give identical datasets
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Differential-test the classifier against the exhaustive reference
    /// on seeded random graphs
    OracleCheck {
        /// Number of random graphs
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Largest graph size to draw
        #[arg(long, value_name = "N", default_value_t = 200)]
        max_n: u64,
        /// Base seed for the trial stream
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
