use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "vlab", version, about = "Extremality, design and zeta analysis of lattices")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output format; text is a lossy summary.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Replay every emitted certificate independently.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Include wall-clock timing in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Maximum number of enumeration nodes.
    #[arg(long, global = true, env = "VLAB_NODE_BUDGET")]
    pub node_budget: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct FormSource {
    /// Named lattice from the catalog (see `vlab catalog`).
    #[arg(long)]
    pub catalog: Option<String>,
    /// Form JSON: {"dim": n, "gram": [[...]]}.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceArg {
    Classic,
    Invariant,
    Isodual,
    DualProduct,
    Exterior,
}

#[derive(Args, Debug, Clone)]
pub struct SpaceArgs {
    #[arg(long, value_enum, default_value_t = SpaceArg::Classic)]
    pub space: SpaceArg,
    /// Group generators JSON {"dim": n, "generators": [...]}; defaults to the catalog generators.
    #[arg(long)]
    pub generators: Option<PathBuf>,
    /// Isometry JSON [[...]] for the isodual family.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    /// Exterior degree.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Norm bound for the vectors spanning sublattices (defaults to the minimum).
    #[arg(long)]
    pub bound: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckArg {
    Delone,
    Coulangeon,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimal vectors.
    Minvec {
        #[command(flatten)]
        form: FormSource,
    },
    /// All layers up to a norm bound.
    Layers {
        #[command(flatten)]
        form: FormSource,
        #[arg(long)]
        bound: String,
    },
    /// Voronoi-type classification on the minimal points of a space.
    Extremality {
        #[command(flatten)]
        form: FormSource,
        #[command(flatten)]
        space: SpaceArgs,
        /// Largest point set for the exhaustive subset search.
        #[arg(long, default_value_t = vlab_core::extremality::DEFAULT_SUBSET_SEARCH_LIMIT)]
        subset_limit: usize,
    },
    /// Extremality in the duality product space.
    DualExtreme {
        #[command(flatten)]
        form: FormSource,
        #[arg(long, default_value_t = vlab_core::extremality::DEFAULT_SUBSET_SEARCH_LIMIT)]
        subset_limit: usize,
    },
    /// Design tests on layers (exact) or on exterior spaces (Monte Carlo).
    Design {
        #[command(flatten)]
        form: FormSource,
        /// 2, 2,2, {4} or 4.
        #[arg(long, default_value = "4")]
        strength: String,
        /// Layers up to this norm (defaults to the minimal layer).
        #[arg(long)]
        bound: Option<String>,
        /// Exterior degree; values above 1 use Monte Carlo averaging.
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Epstein zeta values, checkers and probes.
    Zeta {
        #[command(flatten)]
        form: FormSource,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value = "100")]
        bound: String,
        /// Run a layer-based zeta-extremality checker instead of summing.
        #[arg(long, value_enum)]
        check: Option<CheckArg>,
        /// Second-difference probe along random directions.
        #[arg(long)]
        probe: bool,
        #[arg(long, default_value_t = 8)]
        directions: usize,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Invariant polynomials of degree 2 and 4 under a group.
    Invariant {
        #[command(flatten)]
        form: FormSource,
        #[arg(long)]
        generators: Option<PathBuf>,
    },
    /// Minimal determinant of m-dimensional sublattices.
    Rankin {
        #[command(flatten)]
        form: FormSource,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        bound: Option<String>,
    },
    /// List the built-in lattices.
    Catalog,
    /// Standard analysis bundle, or replay of a saved report.
    Report {
        #[arg(long, conflicts_with_all = ["catalog", "file"])]
        input: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
}
