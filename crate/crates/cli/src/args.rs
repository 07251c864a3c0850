use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Compile Bayesian networks into arithmetic circuits and answer queries
/// from their partial derivatives.
#[derive(Debug, Parser)]
#[command(name = "acdiff", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a network file into a circuit file.
    Compile(CompileArgs),
    /// Probability of evidence, marginals, retraction and what-if values.
    Query(QueryArgs),
    /// Derivatives of Pr(y|e) with respect to network parameters.
    Sensitivity(SensitivityArgs),
    /// Smallest change to a binary parameter that flips a binary target.
    Tweak(TweakArgs),
    /// Size statistics for a network and its circuit.
    Stats(StatsArgs),
    /// Evidence probability and marginals by brute-force enumeration.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// Network file (JSON).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Circuit file to write; standard output if omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Elimination order as a comma-separated list of every variable.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct Session {
    /// Circuit file produced by `compile`.
    #[arg(short, long)]
    pub circuit: PathBuf,
    /// Network file supplying the parameter values.
    #[arg(short, long)]
    pub network: PathBuf,
    /// Evidence as `Var=value,Var=value`.
    #[arg(short, long, default_value = "")]
    pub evidence: String,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub session: Session,
    /// Print Pr(e).
    #[arg(long)]
    pub prob: bool,
    /// Print Pr(x|e) for every variable and value.
    #[arg(long)]
    pub marginals: bool,
    /// Print Pr(f|e) for every family instantiation.
    #[arg(long)]
    pub families: bool,
    /// Print Pr(e-X) and Pr(x|e-X) with X's evidence removed.
    #[arg(long, value_name = "VAR")]
    pub retract: Vec<String>,
    /// Print Pr(x, e-X), the evidence probability had X been x.
    #[arg(long, value_name = "VAR=VALUE")]
    pub what_if: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub session: Session,
    /// Target value `Y=v`.
    #[arg(long, required_unless_present = "all_targets")]
    pub target: Option<String>,
    /// Parameter `X=x|U=u,...`; a root parameter may be written `X=x`.
    #[arg(long, required_unless_present = "all_params")]
    pub param: Option<String>,
    /// One row per network parameter for the given target.
    #[arg(long, conflicts_with_all = ["param", "all_targets"])]
    pub all_params: bool,
    /// One row per unobserved target value for the given parameter.
    #[arg(long, requires = "param", conflicts_with = "target")]
    pub all_targets: bool,
}

#[derive(Debug, Args)]
pub struct TweakArgs {
    #[command(flatten)]
    pub session: Session,
    /// Binary target value `Y=v` whose probability must drop to at most
    /// that of its complement.
    #[arg(long)]
    pub target: String,
    /// Binary parameter `X=x|U=u,...` to change; its complement in the
    /// same column moves with it.
    #[arg(long)]
    pub param: String,
    /// Re-evaluate the tweaked network by enumeration.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Network file (JSON).
    #[arg(short, long)]
    pub network: PathBuf,
    /// Circuit file; the network is compiled if omitted.
    #[arg(short, long)]
    pub circuit: Option<PathBuf>,
    /// Elimination order used when compiling.
    #[arg(long, value_delimiter = ',', conflicts_with = "circuit")]
    pub order: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Network file (JSON).
    #[arg(short, long)]
    pub network: PathBuf,
    /// Evidence as `Var=value,Var=value`.
    #[arg(short, long, default_value = "")]
    pub evidence: String,
}
