mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Chains, l^p minimal flows and hyperbolicity checks on Cayley balls and graph files.
#[derive(Debug, Parser)]
#[command(name = "hypquot", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sweeps (0 picks the machine default).
    #[arg(long, global = true, env = "HYPQUOT_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args, Clone)]
pub struct Input {
    /// Group for a Cayley ball: free:<rank>, grid2d, z2z3 or surface2.
    #[arg(long, requires = "radius", conflicts_with = "graph")]
    pub group: Option<String>,
    /// Ball radius for --group.
    #[arg(long)]
    pub radius: Option<u32>,
    /// Graph file: a line "n m" followed by m lines "u v".
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or load a graph and print its statistics.
    Graph {
        #[command(flatten)]
        input: Input,
        /// Also write the graph in file format.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Four-point hyperbolicity constant.
    Delta {
        #[command(flatten)]
        input: Input,
        /// Sample this many quadruples instead of scanning all of them.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Visual metric at a centre, or a suggested epsilon when none is given.
    Visual {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Centre: a word on Cayley balls, a vertex index otherwise.
        #[arg(long, default_value = "e")]
        center: String,
        /// Largest acceptable sandwich constant when suggesting epsilon.
        #[arg(long, default_value_t = 4.0)]
        c_cap: f64,
    },
    /// Quotient norm of delta_to - delta_from.
    Norm {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = hypquot::flow::DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Split a chain file ("u v coef" lines) into weighted paths and loops.
    Decompose {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        chain: PathBuf,
    },
    /// Run the certification harness for one statement or all of them.
    Certify {
        /// 2.4, 2.5, 2.6, 2.7, 2.9 or all.
        statement: String,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 60)]
        pairs: usize,
        #[arg(long, default_value_t = 4.0)]
        c_cap: f64,
    },
    /// Quotient norms of the cocycle over spheres around a base point.
    Profile {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Base point word.
        #[arg(long, default_value = "e")]
        from: String,
        /// Write radius,min_norm,max_norm,p rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Weighted sum along the rectangular detour in the grid.
    Counterexample {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(commands::run(cli))
}
