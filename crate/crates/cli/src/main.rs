mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use spinchain::{Boundary, KernelKind};

use crate::error::{CliError, CliResult};

/// Exact and Monte Carlo experiments on the irreversible Ising chain.
///
/// Every command writes CSV. The first lines are `# key=value` comments that
/// echo the resolved parameters. `--config FILE` reads `key=value` lines as
/// defaults for the flags. SPINCHAIN_THREADS caps the worker threads.
#[derive(Debug, Parser)]
#[command(name = "spinchain", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact stationary measure, optionally compared with another measure.
    Stationary(StationaryArgs),
    /// Probability currents and a Kolmogorov-loop search.
    Currents(CurrentsArgs),
    /// Expansion terms of the plus-boundary stationary measure.
    Expansion(ExpansionArgs),
    /// First-order error against the exact measure over a coupling scan.
    Theorem1(Theorem1Args),
    /// Normalised deficit of the single-block first-order weights.
    Theorem2(Theorem2Args),
    /// First-order against Gibbs mean number of minus spins at J = log L.
    Theorem3(Theorem3Args),
    /// Tunneling time from all-plus to all-minus by simulation.
    Tunnel(TunnelArgs),
    /// Catalan triangle, partial sums and random-walk first passage.
    Catalan(CatalanArgs),
}

/// Comma-separated list.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|e| format!("{x:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

impl<T: fmt::Display> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse().map_err(|e: spinchain::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: spinchain::Error| e.to_string())
}

#[derive(Debug, Args)]
struct Output {
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Chain {
    /// Chain length.
    #[arg(long = "L")]
    length: usize,
    /// Coupling J.
    #[arg(long = "J", conflicts_with = "c")]
    coupling: Option<f64>,
    /// Chilled regime: J = c log L.
    #[arg(long)]
    c: Option<f64>,
    /// Boundary condition: plus or empty.
    #[arg(long, default_value = "plus", value_parser = parse_boundary)]
    bc: Boundary,
}

impl Chain {
    fn coupling(&self, default: f64) -> f64 {
        match (self.coupling, self.c) {
            (Some(j), _) => j,
            (None, Some(c)) => c * (self.length as f64).ln(),
            (None, None) => default,
        }
    }
}

#[derive(Debug, Args)]
struct StationaryArgs {
    #[command(flatten)]
    chain: Chain,
    /// Kernel: irreversible or glauber.
    #[arg(long, default_value = "irreversible", value_parser = parse_kind)]
    kind: KernelKind,
    /// Second measure to compare with: gibbs, irreversible or glauber.
    #[arg(long)]
    compare: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct CurrentsArgs {
    #[command(flatten)]
    chain: Chain,
    #[arg(long, default_value = "irreversible", value_parser = parse_kind)]
    kind: KernelKind,
    /// Also search closed flip walks up to this length for a Kolmogorov violation.
    #[arg(long)]
    kolmogorov: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ExpansionArgs {
    #[command(flatten)]
    chain: Chain,
    /// Highest order.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct Theorem1Args {
    #[arg(long = "L", default_value_t = 8)]
    length: usize,
    /// Values of c, with J = c log L.
    #[arg(long, conflicts_with = "couplings")]
    c: Option<List<f64>>,
    /// Values of J; converted to c = J / log L.
    #[arg(long = "J")]
    couplings: Option<List<f64>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct Theorem2Args {
    /// Block lengths.
    #[arg(long, default_value = "1,2,3")]
    m: List<usize>,
    /// Block starts, increasing.
    #[arg(long, default_value = "1000,4000,10000,16000,40000")]
    i: List<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct Theorem3Args {
    /// Chain lengths.
    #[arg(long = "L", default_value = "50,100,200,400")]
    lengths: List<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TunnelArgs {
    /// Kernel: irreversible or glauber.
    #[arg(long, default_value = "irreversible", value_parser = parse_kind)]
    kind: KernelKind,
    /// Chain lengths.
    #[arg(long = "L", default_value = "8,16,32")]
    lengths: List<usize>,
    #[arg(long = "J", default_value_t = 2.5)]
    coupling: f64,
    #[arg(long, default_value = "empty", value_parser = parse_boundary)]
    bc: Boundary,
    #[arg(long, default_value_t = 50)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step budget per replica.
    #[arg(long, default_value_t = spinchain::montecarlo::DEFAULT_STEP_BUDGET)]
    budget: u64,
    /// Emit one `replica,steps` row per sample (single L only).
    #[arg(long)]
    samples: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct CatalanArgs {
    /// Print rows 0..=N of the Catalan triangle.
    #[arg(long, group = "table")]
    triangle: Option<usize>,
    /// Partial sums of the first-passage series for this level.
    #[arg(long, group = "table")]
    lemma: Option<usize>,
    /// Truncation points for --lemma.
    #[arg(long, default_value = "0,1,2,10,100,1000")]
    lmax: List<usize>,
    /// First-passage pmf of a simple random walk to this level.
    #[arg(long = "first-passage", group = "table")]
    first_passage: Option<usize>,
    /// Last step for --first-passage.
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    #[command(flatten)]
    output: Output,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("SPINCHAIN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SPINCHAIN_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(args: Vec<OsString>) -> CliResult<()> {
    let args = config::expand_config_args(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            // help and version go to stdout with status 0
            e.print().ok();
            if code == 0 {
                return Ok(());
            }
            return Err(CliError::Usage(String::new()));
        }
    };
    configure_threads()?;
    match cli.command {
        Command::Stationary(a) => commands::stationary(a),
        Command::Currents(a) => commands::currents(a),
        Command::Expansion(a) => commands::expansion(a),
        Command::Theorem1(a) => commands::theorem1(a),
        Command::Theorem2(a) => commands::theorem2(a),
        Command::Theorem3(a) => commands::theorem3(a),
        Command::Tunnel(a) => commands::tunnel(a),
        Command::Catalan(a) => commands::catalan(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("spinchain: {msg}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
