//! Command-line front end for the multi-copy observables.

mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multicopy_core::Error;

pub use report::{DistributionEntry, EntropyReport};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_GATE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "multicopy", version, about = "Entropic uncertainty observables on two and three copies of a bosonic mode")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distribution and entropy of the two-copy (lz) or three-copy (m) observable.
    Entropy(EntropyArgs),
    /// Shorthand for `entropy --observable lz`.
    LzEntropy(StateArgs),
    /// Shorthand for `entropy --observable m`.
    MEntropy(MEntropyArgs),
    /// Send copies of a state through a circuit and read a photon-number difference.
    CircuitRun(CircuitArgs),
    /// Entropy over a parameter grid next to its closed form (CSV by default).
    Sweep(SweepArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Closed-form entropy curves (CSV).
    Curves(CurveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Observable {
    Lz,
    M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also report entropies in bits.
    #[arg(long)]
    bits: bool,
}

#[derive(Debug, Args)]
struct StateArgs {
    /// State spec: a JSON file path or inline JSON.
    #[arg(long)]
    state: String,
    /// Per-mode photon-number cutoff.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    cutoff: u64,
    /// Largest accepted truncation error of the prepared state.
    #[arg(long, default_value_t = multicopy_core::states::DEFAULT_MAX_TAIL, value_parser = positive)]
    tail_max: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EntropyArgs {
    #[arg(long, value_enum, default_value_t = Observable::Lz)]
    observable: Observable,
    /// Displace the state by `re,im` before measuring.
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    displace: Option<multicopy_core::C64>,
    #[command(flatten)]
    state: StateArgs,
}

#[derive(Debug, Args)]
struct MEntropyArgs {
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    displace: Option<multicopy_core::C64>,
    #[command(flatten)]
    state: StateArgs,
}

#[derive(Debug, Args)]
struct CircuitArgs {
    /// Preset (fig1, fig3, fig4) or a JSON circuit file.
    #[arg(long)]
    circuit: String,
    /// Output modes to compare, 1-based, e.g. `2,3`.
    #[arg(long, value_parser = pair_arg)]
    readout: Option<[usize; 2]>,
    /// Draw this many simulated detector outcomes.
    #[arg(long, default_value_t = 0)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    state: StateArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Thermal,
    Squeezed,
    Mixture,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, value_enum, default_value_t = Observable::Lz)]
    observable: Observable,
    /// Comma list or `start:stop:step`.
    #[arg(long, value_parser = grid_arg)]
    grid: Option<Grid>,
    /// Fixed cutoff; chosen per point from the tail threshold when omitted.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, default_value_t = multicopy_core::states::DEFAULT_MAX_TAIL, value_parser = positive)]
    tail_max: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MutationArg {
    BsSign,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Cutoff for probe states.
    #[arg(long, default_value_t = 12)]
    cutoff: usize,
    /// Cutoff for operator identities.
    #[arg(long, default_value_t = 10)]
    operator_cutoff: usize,
    /// Probe state spec (file or inline JSON); repeatable. Defaults to a built-in set.
    #[arg(long)]
    state: Vec<String>,
    /// Tolerance for operator identities.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    distribution_tol: f64,
    #[arg(long, default_value_t = multicopy_core::states::DEFAULT_MAX_TAIL, value_parser = positive)]
    tail_max: f64,
    /// Inject a known defect to confirm that checks catch it.
    #[arg(long, value_enum)]
    mutate: Option<MutationArg>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    /// Entropies against the symplectic eigenvalue.
    Nu,
    /// Thermal entropies and E against the mean photon number.
    MeanPhoton,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long, value_enum, default_value_t = CurveKind::Nu)]
    kind: CurveKind,
    #[arg(long, value_parser = grid_arg)]
    grid: Option<Grid>,
    #[command(flatten)]
    output: OutputArgs,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

fn complex_arg(s: &str) -> Result<multicopy_core::C64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(multicopy_core::C64::new(num(re)?, 0.0)),
        [re, im] => Ok(multicopy_core::C64::new(num(re)?, num(im)?)),
        _ => Err("expected `re` or `re,im`".into()),
    }
}

fn pair_arg(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let label = |t: &str| match t.trim().parse::<usize>() {
        Ok(0) => Err("mode labels start at 1".to_string()),
        Ok(v) => Ok(v - 1),
        Err(e) => Err(format!("`{t}`: {e}")),
    };
    match parts.as_slice() {
        [a, b] => Ok([label(a)?, label(b)?]),
        _ => Err("expected two mode labels like `2,3`".into()),
    }
}

/// Parameter values from `--grid`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid)
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err("expected `start:stop:step`".into());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step <= 0.0 || stop < start {
            return Err("need step > 0 and stop ≥ start".into());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + k as f64 * step).collect());
    }
    s.split(',').map(num).collect()
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Tail or tolerance gate.
    Gate(String),
    /// Invariant check failed.
    Invariant(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::TailExceeded { .. } => Self::Gate(e.to_string()),
            other => Self::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Core(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(
                Error::Spec { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidMode { .. }
                | Error::InvalidModeSet(_)
                | Error::ModeCountMismatch { .. }
                | Error::Io(_),
            ) => EXIT_PARSE,
            Self::Core(_) => EXIT_FAILURE,
            Self::Gate(_) => EXIT_GATE,
            Self::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Core(e) => write!(f, "{e}"),
            Self::Gate(m) | Self::Invariant(m) => f.write_str(m),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Core(Error::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
