//! Command-line driver: single-point analysis, sweeps, enumeration,
//! Monte-Carlo validation and error-rate tables.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use superscore::num::parse_decimal;
use superscore::{ModelParams, PolicyScope, Q};

mod commands;
pub mod sweep;

pub use commands::{analyze, enumerate, simulate, tables, ProfileSelector};
pub use sweep::{SweepGrid, SweepRow};

/// Version of every JSON document the CLI writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "superscore", version, about = "Equilibria of score-reporting policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Thresholds, regions, equilibria and fairness metrics at one point.
    Analyze {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Every equilibrium outcome over a parameter grid.
    Sweep {
        /// Comma-separated values or `start:stop:step`.
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        phi: String,
        #[arg(long, default_value = "2")]
        k: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lists equilibrium outcome classes with verified witnesses.
    Enumerate {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value = "report-all")]
        scope: PolicyScope,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulates a population playing a constructed equilibrium.
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        /// first-score, separating, reject-all or non-first-score-N.
        #[arg(long, default_value = "first-score")]
        profile: ProfileSelector,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// False negative and false positive rates of the canonical outcomes.
    Tables {
        #[arg(long, value_parser = parse_q)]
        alpha: Q,
        /// Comma-separated values or `start:stop:step`.
        #[arg(long, default_value = "2")]
        k: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long, value_parser = parse_q)]
    pub alpha: Q,
    #[arg(long, value_parser = parse_q)]
    pub p: Q,
    #[arg(long, value_parser = parse_q)]
    pub phi: Q,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
}

impl PointArgs {
    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.p.clone(), self.alpha.clone(), self.phi.clone(), self.k)?)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

pub fn parse_q(s: &str) -> Result<Q, String> {
    parse_decimal(s).ok_or_else(|| format!("`{s}` is not a decimal or fraction"))
}

/// Runs a command and returns what it printed, or `None` if it wrote a file.
pub fn run(cli: Cli) -> Result<Option<String>> {
    let (text, out) = match cli.command {
        Command::Analyze { point, output } => (analyze(&point.params()?, output.format)?, output.out),
        Command::Sweep { alpha, p, phi, k, format, out } => {
            let grid = SweepGrid::parse(&alpha, &p, &phi, &k)?;
            let rows = sweep::run(&grid)?;
            (sweep::render(&rows, format)?, Some(out))
        }
        Command::Enumerate { point, scope, output } => {
            (enumerate(&point.params()?, scope, output.format)?, output.out)
        }
        Command::Simulate { point, profile, n, seed, output } => {
            (simulate(&point.params()?, profile, n, seed, output.format)?, output.out)
        }
        Command::Tables { alpha, k, output } => {
            let ks = sweep::parse_ks(&k)?;
            (tables(&alpha, &ks, output.format)?, output.out)
        }
    };
    match out {
        Some(path) => {
            fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
