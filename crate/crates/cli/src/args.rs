use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tas", version, about = "Total action sensitivity analysis of power-system oscillations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the AC power flow.
    Pf(PfArgs),
    /// Eigenvalues of the linearized system, optionally with an actuator.
    Eigs(EigsArgs),
    /// Eigenvalue loci over a gain grid for each candidate bus.
    Sweep(SweepArgs),
    /// Rank candidate actuator buses by total action sensitivity.
    Tas(TasArgs),
    /// Nonlinear time-domain simulation with and without actuators.
    Simulate(SimulateArgs),
    /// Cross-check analytic results against independent oracles.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Case file, or a bundled case name (ieee9, ieee39).
    #[arg(value_name = "CASE")]
    pub case_pos: Option<String>,
    /// Same as the positional CASE.
    #[arg(long = "case", value_name = "CASE", conflicts_with = "case_pos")]
    pub case: Option<String>,
    /// Directory for output files; results go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl Common {
    pub fn case_name(&self) -> Option<&str> {
        self.case.as_deref().or(self.case_pos.as_deref())
    }
}

#[derive(Debug, Args)]
pub struct Disturbance {
    /// Initial speed deviations per generator, pu (comma separated).
    #[arg(long, value_name = "CSV", value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "fault")]
    pub domega: Option<Vec<f64>>,
    /// Three-phase fault at BUS cleared after SECONDS.
    #[arg(long, value_name = "BUS:SECONDS")]
    pub fault: Option<String>,
}

#[derive(Debug, Args)]
pub struct PfArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Actuator at BUS with gain THETA.
    #[arg(long, value_name = "BUS=THETA")]
    pub gain: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidate buses (default: all generator terminal buses).
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = 50.0)]
    pub to: f64,
    #[arg(long, default_value_t = 5.0)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct TasArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub disturbance: Disturbance,
    /// Candidate buses (default: all generator terminal buses).
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<usize>>,
    /// Integration step for the fault-on period, s.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub disturbance: Disturbance,
    /// Actuator runs, one per BUS=THETA (repeatable); a run without actuator is always included.
    #[arg(long, value_name = "BUS=THETA")]
    pub gain: Vec<String>,
    /// Horizon after the disturbance, s.
    #[arg(long = "T", default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub disturbance: Disturbance,
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Scale B by (1 + EPS) in the analytic path only (fault injection).
    #[arg(long, value_name = "EPS", default_value_t = 0.0, allow_hyphen_values = true)]
    pub perturb_b: f64,
}
