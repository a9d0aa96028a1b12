use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "densgrad", version, about = "Density and density-gradient experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Seed for the random sampling mode
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Sample count (vdp-line, vdp-loop) or base-curve size (mc-convergence)
    #[arg(long, global = true)]
    pub n: Option<usize>,

    /// Oscillation parameter(s) K, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,

    /// Time step
    #[arg(long, global = true)]
    pub dt: Option<f64>,

    /// Number of c nodes on the Lorenz seed line
    #[arg(long, global = true)]
    pub grid: Option<usize>,

    /// Last recursion step KMAX
    #[arg(long, global = true)]
    pub steps: Option<usize>,

    /// Recursion steps to record, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub record: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Van der Pol half-period chart: x, rho, g along xi
    VdpLine,
    /// Van der Pol loop: rho and g against finite differences
    VdpLoop,
    /// Convergence of the three estimators of the oscillatory integral
    McConvergence {
        /// Draw xi from a seeded generator instead of the equispaced grid
        #[arg(long)]
        random: bool,
    },
    /// Lorenz '63 surface: rho and g on the (c, t) grid, plus extracts
    LorenzSurface,
    /// Recursive g along the evolving Lorenz seed line
    LorenzRecursion,
    /// Internal consistency checks
    Selftest,
    /// Registered charts, systems, formulas and estimators
    List,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VdpLine => "vdp-line",
            Command::VdpLoop => "vdp-loop",
            Command::McConvergence { .. } => "mc-convergence",
            Command::LorenzSurface => "lorenz-surface",
            Command::LorenzRecursion => "lorenz-recursion",
            Command::Selftest => "selftest",
            Command::List => "list",
        }
    }
}

/// Fully resolved parameters of one run, written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub version: &'static str,
    pub format: Format,
    #[serde(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    VdpLine {
        a: f64,
        mu: f64,
        dt: f64,
        n: usize,
    },
    VdpLoop {
        a: f64,
        mu: f64,
        dt: f64,
        n: usize,
        fd_stencil: usize,
    },
    Mc {
        a: f64,
        mu: f64,
        dt: f64,
        n_base: usize,
        k: Vec<f64>,
        counts: Vec<usize>,
        n_reference: usize,
        slope_window: (f64, f64),
        sampling: &'static str,
        seed: Option<u64>,
    },
    LorenzSurface {
        dt: f64,
        c_range: (f64, f64),
        t_range: (f64, f64),
        grid: usize,
        extract_c: f64,
        extract_t: f64,
    },
    LorenzRecursion {
        dt: f64,
        c_range: (f64, f64),
        grid: usize,
        steps: usize,
        record: Vec<usize>,
    },
}
