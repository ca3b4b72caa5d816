use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

/// Ancestral-branching tree chains and cut-and-paste partition chains.
#[derive(Debug, Parser)]
#[command(name = "abcp", version)]
pub struct Cli {
    /// Seed for every random draw; equal seeds give byte-identical output.
    #[arg(long, global = true, env = "ABCP_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every partition or tree of [n], one JSON record per line.
    Enumerate {
        #[arg(long, value_enum)]
        object: Level,
        #[arg(long)]
        n: usize,
        /// Bound on the number of blocks (or children); unbounded if absent.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Exact transition matrix as one JSON object.
    Kernel {
        #[arg(long, value_enum)]
        level: Level,
        #[command(flatten)]
        model: Model,
    },
    /// Discrete-time AB chain.
    Chain {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        start: Start,
    },
    /// Continuous-time AB chain with exponential holding times.
    CtChain {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        clock: Clock,
        #[command(flatten)]
        start: Start,
    },
    /// Poissonian construction: one record per atom of the driving process.
    PoissonChain {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        clock: Clock,
        #[command(flatten)]
        start: Start,
    },
    /// Mass fragmentation chain, truncated at a fixed depth.
    #[command(group(ArgGroup::new("length").required(true).args(["steps", "horizon"])))]
    MassChain {
        /// Largest number of masses per split.
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nu: Option<String>,
        #[arg(long, default_value_t = abcp::mass_frag::DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Jump rate, used with --horizon.
        #[arg(long, default_value_t = 1.0, requires = "horizon")]
        lambda: f64,
    },
    /// Weighted-tree chain.
    WeightedChain {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, value_enum, default_value_t = RateFormArg::PreviousTree)]
        rate_form: RateFormArg,
        #[command(flatten)]
        start: Start,
    },
    /// Exhaustive invariant suite; exits 0 on pass and 3 on failure.
    Check {
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        model: Model,
    },
    /// Stationary distribution of the exact kernel.
    Stationary {
        #[arg(long, value_enum)]
        level: Level,
        #[command(flatten)]
        model: Model,
    },
}

#[derive(Debug, Args)]
pub struct Model {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// JSON file with the mixing measure, or one of the built-in names
    /// uniform-half, mixture, dirichlet. Defaults to all mass on the uniform
    /// point of the k-simplex.
    #[arg(long)]
    pub nu: Option<String>,
}

#[derive(Debug, Args)]
pub struct Clock {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub horizon: f64,
}

#[derive(Debug, Args)]
pub struct Start {
    /// Initial tree as a JSON vertex list; defaults to the caterpillar.
    #[arg(long)]
    pub start: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Level {
    #[value(alias = "partitions")]
    Partition,
    #[value(alias = "trees")]
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Newick,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RateFormArg {
    PreviousTree,
    NextTree,
}
