use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod plot;
mod potential;

use potential::PotentialArgs;

/// Flag or input problem: reported with exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "vibrelevel", version, about = "Vibrational levels near dissociation")]
pub struct Cli {
    /// Flat key = value file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Add a generation timestamp to output headers
    #[arg(long, global = true)]
    pub stamp: bool,
    /// Write the embedded reference level table as CSV and exit
    #[arg(long)]
    pub dump_reference: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for every bound level of a potential
    Spectrum(SpectrumArgs),
    /// Scaled energy differences of a level list
    Sed(SedArgs),
    /// LeRoy-Bernstein fit of the highest levels
    Lbfit(LbfitArgs),
    /// Level-by-level difference of two level lists
    Compare(CompareArgs),
    /// Run the built-in oracle checks
    Validate(ValidateArgs),
    /// First-order WKB levels and phase integrals
    Wkb(WkbArgs),
    /// SVG plot of SED or (-E)^kappa series
    Plot(PlotArgs),
}

#[derive(Debug, Args, Default)]
pub struct OutputArgs {
    /// Output file ("-" for stdout); defaults to $VIBRELEVEL_DATA_DIR/<name> or stdout
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    /// Reduced mass in unified atomic mass units
    #[arg(long)]
    pub mu: Option<f64>,
    /// Relative root tolerance in (-E)^kappa
    #[arg(long)]
    pub tol: Option<f64>,
    /// Phase advance per step on the coarsest grid
    #[arg(long)]
    pub phase_step: Option<f64>,
    /// Grid halvings in the accuracy ladder
    #[arg(long)]
    pub rungs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// cfm, numerov or both
    #[arg(long)]
    pub engine: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Default)]
pub struct LevelSource {
    /// Level list, CSV v,E (or index,E)
    #[arg(long)]
    pub levels: Option<PathBuf>,
    /// Use a column of the embedded table: reference or cfm
    #[arg(long)]
    pub column: Option<String>,
    /// Meaning of the first column of --levels: v or index (v + 1)
    #[arg(long)]
    pub first_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct SedArgs {
    #[command(flatten)]
    pub source: LevelSource,
    /// Exponent kappa, as a decimal or fraction like 1/6
    #[arg(long)]
    pub kappa: Option<String>,
    /// Tail power; sets kappa = (n - 2)/(2n) when --kappa is absent
    #[arg(long)]
    pub n: Option<u32>,
    /// Explicit normalisation H
    #[arg(long)]
    pub h: Option<f64>,
    /// Calibrate H so the entry at this index equals --target
    #[arg(long)]
    pub calibrate_row: Option<usize>,
    #[arg(long)]
    pub target: Option<f64>,
    /// Use the threshold slope of -Cn/r^n (needs --n, --cn, --mu)
    #[arg(long)]
    pub lb_slope: bool,
    #[arg(long)]
    pub cn: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LbfitArgs {
    #[command(flatten)]
    pub source: LevelSource,
    /// Tail power
    #[arg(long)]
    pub n: Option<u32>,
    /// last:K or FIRST-LAST (in v)
    #[arg(long)]
    pub window: Option<String>,
    /// Weight points by (-E)^(-kappa)
    #[arg(long)]
    pub weighted: bool,
    /// Levels to extrapolate beyond the window
    #[arg(long)]
    pub extrapolate: Option<usize>,
    /// Reduced mass, for the implied Cn
    #[arg(long)]
    pub mu: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: LevelSource,
    /// "reference" (embedded table) or a second level file
    #[arg(long)]
    pub against: Option<String>,
    /// Exponent kappa for the comparison
    #[arg(long)]
    pub kappa: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Also print timing for each check
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct WkbArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    /// Reduced mass in unified atomic mass units
    #[arg(long)]
    pub mu: Option<f64>,
    /// A single level; all bound levels when absent
    #[arg(long)]
    pub v: Option<i64>,
    /// Report the phase integral and its derivative at this energy instead
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Input CSV: index,E,sed for SED plots, v,E for LB plots (repeatable)
    #[arg(long, short)]
    pub input: Vec<PathBuf>,
    /// Plot both SED columns of the embedded table
    #[arg(long)]
    pub reference: bool,
    /// sed or lb
    #[arg(long)]
    pub kind: Option<String>,
    /// Tail power for LB plots
    #[arg(long)]
    pub n: Option<u32>,
    /// Overlay a LeRoy-Bernstein fit of the last eight levels (LB plots)
    #[arg(long)]
    pub fit: bool,
    #[arg(long)]
    pub title: Option<String>,
    /// Output file ("-" for stdout); defaults to $VIBRELEVEL_DATA_DIR/plot.svg or stdout
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        // reader went away (e.g. `| head`)
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>()
                    .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
